"""Sectioned key/value run configuration.

Grammar (``configparser`` INI dialect)::

    [grid]         d, n, N
    [solver]       dt, horizon, p, M, scheme, seed, paths
    [noise]        variant, K, c0, beta, form
    [diagnostics]  dims, q_ladder, n_ladder, corpus_size, gn_fields, ns,
                   horizons, functional, u0, u0_amplitude, u0_kmax, u0_slope

Lists are comma separated.  ``N = auto`` picks the smallest dealiasing grid
and ``M = auto`` the level 2 sup_n ||S_n u0||_p + 1 over ``ns``.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field
from pathlib import Path

DEFAULTS: dict[str, dict[str, str]] = {
    "grid": {"d": "2", "n": "8", "N": "auto"},
    "solver": {
        "dt": "0.001",
        "horizon": "0.5",
        "p": "4",
        "M": "auto",
        "scheme": "exponential",
        "seed": "0",
        "paths": "8",
    },
    "noise": {"variant": "linear", "K": "16", "c0": "1.0", "beta": "1.0", "form": "scalar"},
    "diagnostics": {
        "dims": "1, 2",
        "q_ladder": "2, 4",
        "n_ladder": "4, 8, 16, 32, 64",
        "corpus_size": "8",
        "gn_fields": "100",
        "ns": "8, 16, 32",
        "horizons": "0.2, 0.1, 0.05",
        "u0": "random",
        "u0_amplitude": "1.0",
        "u0_kmax": "32",
        "u0_slope": "2.0",
    },
}

# command-line flag -> (section, key)
FLAG_KEYS = {
    "seed": ("solver", "seed"),
    "n": ("grid", "n"),
    "grid": ("grid", "N"),
    "dt": ("solver", "dt"),
    "horizon": ("solver", "horizon"),
    "p": ("solver", "p"),
    "cutoff_M": ("solver", "M"),
    "noise": ("noise", "variant"),
    "paths": ("solver", "paths"),
}


class ConfigError(ValueError):
    pass


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keep "N" and "M" distinct from "n" and "m"
    return cp


@dataclass
class RunConfig:
    values: dict[str, dict[str, str]] = field(default_factory=lambda: {s: dict(kv) for s, kv in DEFAULTS.items()})
    source: str | None = None

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: dict | None = None) -> "RunConfig":
        cfg = cls()
        if path is not None:
            cp = _parser()
            try:
                text = Path(path).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            try:
                cp.read_string(text, source=str(path))
            except configparser.Error as exc:
                raise ConfigError(f"malformed config {path}: {exc}") from exc
            for sec in cp.sections():
                if sec not in DEFAULTS:
                    raise ConfigError(f"unknown section [{sec}]")
                for key, val in cp[sec].items():
                    if key not in DEFAULTS[sec]:
                        raise ConfigError(f"unknown key {key!r} in [{sec}]")
                    cfg.values[sec][key] = val.strip()
            cfg.source = str(path)
        for flag, val in (overrides or {}).items():
            if val is None:
                continue
            sec, key = FLAG_KEYS[flag]
            cfg.values[sec][key] = str(val)
        return cfg

    def get(self, section: str, key: str) -> str:
        return self.values[section][key]

    def get_int(self, section: str, key: str) -> int:
        return int(self._conv(section, key, int))

    def get_float(self, section: str, key: str) -> float:
        return float(self._conv(section, key, float))

    def optional_int(self, section: str, key: str) -> int | None:
        return None if self.get(section, key).lower() == "auto" else self.get_int(section, key)

    def optional_float(self, section: str, key: str) -> float | None:
        return None if self.get(section, key).lower() == "auto" else self.get_float(section, key)

    def get_list(self, section: str, key: str, kind=float) -> list:
        raw = self.get(section, key)
        try:
            return [kind(x) for x in raw.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc

    def _conv(self, section, key, kind):
        raw = self.get(section, key)
        try:
            return kind(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {kind.__name__}") from exc

    def canonical(self) -> str:
        """Normalized text: sections and keys in the fixed default order."""
        cp = _parser()
        for sec in DEFAULTS:
            cp[sec] = {k: self.values[sec][k] for k in DEFAULTS[sec]}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @property
    def digest(self) -> str:
        """Git blob hash of the canonical text."""
        body = self.canonical().encode()
        return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()
