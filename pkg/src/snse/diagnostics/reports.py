"""Report containers and their JSON / CSV serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path

import numpy as np

from ..solver import SolverConfig, TrajectoryRecord


def jsonable(x):
    """Plain-Python copy of ``x`` with numpy scalars unwrapped and NaN/inf as None."""
    if isinstance(x, SolverConfig):
        return describe_config(x)
    if is_dataclass(x) and not isinstance(x, type):
        return jsonable(asdict(x))
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def describe_config(cfg: SolverConfig) -> dict:
    return {
        "d": cfg.d,
        "n": cfg.n,
        "N": cfg.N,
        "dt": cfg.dt,
        "horizon": cfg.horizon,
        "p": cfg.p,
        "M": cfg.M,
        "seed": cfg.seed,
        "seed_offset": cfg.seed_offset,
        "scheme": cfg.scheme,
        "nonlinear": cfg.nonlinear,
        "noise": cfg.noise.describe(),
    }


@dataclass
class VerificationReport:
    """Outcome of one study: parameters, measurements, predictions and verdicts.

    ``rows`` holds plot-ready (series, x, y, yerr) tuples.
    """

    study: str
    params: dict = field(default_factory=dict)
    measured: dict = field(default_factory=dict)
    predicted: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return jsonable(
            {
                "study": self.study,
                "params": self.params,
                "measured": self.measured,
                "predicted": self.predicted,
                "verdicts": self.verdicts,
                "passed": self.passed,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        return rows_to_csv(self.rows)

    def write(self, root: Path | str, stem: str | None = None) -> tuple[Path, Path]:
        """Write reports/<stem>.json and data/<stem>.csv under ``root``."""
        root = Path(root)
        stem = stem or self.study
        js = root / "reports" / f"{stem}.json"
        cs = root / "data" / f"{stem}.csv"
        js.parent.mkdir(parents=True, exist_ok=True)
        cs.parent.mkdir(parents=True, exist_ok=True)
        js.write_text(self.to_json())
        cs.write_text(self.to_csv())
        return js, cs


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("series", "x", "y", "yerr"))
    for series, x, y, err in rows:
        w.writerow([series, _fmt(x), _fmt(y), "" if err is None else _fmt(err)])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


@dataclass
class EnsembleStats:
    """Monte-Carlo summary of a per-path functional."""

    mean: float
    variance: float
    stderr: float | None  # undefined for a single path
    paths: int
    values: np.ndarray

    @classmethod
    def from_values(cls, values) -> "EnsembleStats":
        v = np.asarray(values, float)
        P = len(v)
        if P == 0:
            raise ValueError("no samples")
        var = float(np.var(v, ddof=1)) if P > 1 else 0.0
        se = math.sqrt(var / P) if P > 1 else None
        return cls(float(np.mean(v)), var, se, P, v)

    def to_dict(self) -> dict:
        return jsonable({"mean": self.mean, "variance": self.variance, "stderr": self.stderr, "paths": self.paths})


@dataclass
class ConvergenceReport:
    """Monte-Carlo estimate of E[sup ||u_n - u_m||_p^p + int ||u_n - u_m||_{3p}^p] for one pair."""

    pair: tuple[int, int]
    sup_part: np.ndarray
    int_part: np.ndarray
    stats: EnsembleStats

    @property
    def mean(self) -> float:
        return self.stats.mean

    @property
    def stderr(self) -> float | None:
        return self.stats.stderr

    def to_dict(self) -> dict:
        return jsonable(
            {
                "pair": list(self.pair),
                "mean": self.mean,
                "stderr": self.stderr,
                "sup_mean": float(np.mean(self.sup_part)),
                "integral_mean": float(np.mean(self.int_part)),
            }
        )


@dataclass
class EnergyReport:
    """Per-time ||u||_p^p and gradient term of one path, with running sup and time integral."""

    times: np.ndarray
    lp_power: np.ndarray
    grad_term: np.ndarray
    running_sup: np.ndarray
    running_integral: np.ndarray

    @classmethod
    def from_record(cls, rec: TrajectoryRecord, path: int = 0) -> "EnergyReport":
        J = int(rec.stop_index[path]) + 1
        lp = rec.lp[path, :J] ** rec.p
        g = rec.energy_grad_p[path, :J]
        integral = np.concatenate([[0.0], np.cumsum(g[:-1]) * rec.dt])  # left endpoint, as the monitor
        return cls(rec.times[:J], lp, g, np.maximum.accumulate(lp), integral)

    @property
    def total(self) -> float:
        return float(self.running_sup[-1] + self.running_integral[-1])
