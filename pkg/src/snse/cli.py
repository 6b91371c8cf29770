"""Command-line entry point: ``snse {verify,simulate,ensemble,cauchy,assumptions}``.

Outputs land in ``<out>/<config hash>/{reports,data,fields}``; the exit code
is 0 exactly when every verdict of every emitted report passes, 1 when some
verdict fails and 2 for unusable input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig
from .diagnostics import (
    VerificationReport,
    cancellation_check,
    cauchy_study,
    gn_corpus,
    gn_study,
    identity_suite,
    operator_decay_study,
    path_functional,
    run_ensemble,
    uniform_bound_study,
)
from .diagnostics.corpus import decay_corpus
from .diagnostics.reports import EnsembleStats, jsonable
from .fields import initial_field, random_field
from .fourier import AliasingError, Grid, SpectralField
from .noise import make_noise, verify_assumptions
from .snapshot import write_snapshot
from .solver import SolverConfig, default_cutoff, simulate

COMMANDS = ("verify", "simulate", "ensemble", "cauchy", "assumptions")


class Run:
    """Resolved configuration plus the output directory of one invocation."""

    def __init__(self, command: str, args: argparse.Namespace):
        overrides = {k: getattr(args, k) for k in ("seed", "n", "grid", "dt", "horizon", "p", "cutoff_M", "noise", "paths")}
        self.command = command
        self.rc = RunConfig.load(args.config, overrides)
        self.jobs = max(1, args.jobs)
        root = Path(args.out or os.environ.get("SNSE_OUT") or "out")
        self.out = root / self.rc.digest
        self.reports: list[VerificationReport] = []
        rc = self.rc
        self.d = rc.get_int("grid", "d")
        self.n = rc.get_int("grid", "n")
        self.seed = rc.get_int("solver", "seed")
        self.paths = rc.get_int("solver", "paths")
        self.ns = rc.get_list("diagnostics", "ns", int)
        self.solver = self._solver_config()

    def _solver_config(self) -> SolverConfig:
        rc = self.rc
        N = rc.optional_int("grid", "N")
        noise_grid = Grid.for_truncation(self.d, self.n)
        noise = make_noise(
            rc.get("noise", "variant"),
            noise_grid,
            K=rc.get_int("noise", "K"),
            c0=rc.get_float("noise", "c0"),
            beta=rc.get_float("noise", "beta"),
            form=rc.get("noise", "form"),
        )
        return SolverConfig(
            d=self.d,
            n=self.n,
            N=N,
            dt=rc.get_float("solver", "dt"),
            horizon=rc.get_float("solver", "horizon"),
            p=rc.get_float("solver", "p"),
            noise=noise,
            seed=self.seed,
            scheme=rc.get("solver", "scheme"),
        )

    def initial(self) -> SpectralField:
        rc = self.rc
        return initial_field(
            rc.get("diagnostics", "u0"),
            self.d,
            seed=self.seed,
            amplitude=rc.get_float("diagnostics", "u0_amplitude"),
            kmax=rc.get_int("diagnostics", "u0_kmax"),
            slope=rc.get_float("diagnostics", "u0_slope"),
        )

    def cutoff(self, u0: SpectralField, ns) -> float:
        M = self.rc.optional_float("solver", "M")
        return default_cutoff(u0, self.solver.p, ns) if M is None else M

    def write_manifest(self) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        manifest = {
            "command": self.command,
            "config_path": self.rc.source,
            "config_hash": self.rc.digest,
            "seeds": [self.seed],
            "output_directory": str(self.out),
            "version": __version__,
            "config": self.rc.canonical(),
        }
        (self.out / f"manifest-{self.command}.json").write_text(json.dumps(manifest, indent=2) + "\n")

    def emit(self, report: VerificationReport, stem: str | None = None) -> None:
        report.params.setdefault("config_hash", self.rc.digest)
        report.write(self.out, stem)
        self.reports.append(report)
        flag = "PASS" if report.passed else "FAIL"
        print(f"{flag} {stem or report.study}")


# ---------------------------------------------------------------- commands


def cmd_verify(run: Run) -> None:
    """Operator identities, cancellation, truncation decay, uniform bounds and the GN ratio."""
    rc = run.rc
    dims = rc.get_list("diagnostics", "dims", int)
    qs = rc.get_list("diagnostics", "q_ladder", float)
    ladder = rc.get_list("diagnostics", "n_ladder", int)
    size = rc.get_int("diagnostics", "corpus_size")
    for d in (1, 2, 3):
        run.emit(identity_suite(d, seed=run.seed))
    if run.d >= 2:
        run.emit(cancellation_check(n=run.n, d=run.d, seed=run.seed))
    alphas = {}
    for d in dims:
        for q in qs:
            rep = operator_decay_study(q, ladder, decay_corpus(d, q, size=size, seed=run.seed))
            run.emit(rep)
            alphas[f"q={q:g},d={d}"] = rep.measured["alpha_hat"]
            run.emit(uniform_bound_study(q, ladder, d=d))
    run.emit(gn_study(run.solver.p, gn_corpus(size=rc.get_int("diagnostics", "gn_fields"), seed=run.seed)))
    summary = VerificationReport(
        study="verify",
        params={"q_ladder": qs, "dims": dims, "n_ladder": ladder},
        measured={"alpha_hat": alphas, "reports": {r.study: r.passed for r in run.reports}},
        verdicts={r.study: r.passed for r in run.reports},
        rows=[("alpha_hat", k, v, None) for k, v in alphas.items()],
    )
    run.emit(summary)


def cmd_simulate(run: Run) -> None:
    """Galerkin trajectories with L^2 and L^p energy columns and final snapshots."""
    u0 = run.initial()
    cfg = run.solver.replace(M=run.cutoff(u0, [run.n]))
    rec = simulate(cfg, u0, paths=run.paths)
    data = run.out / "data"
    fields = run.out / "fields"
    data.mkdir(parents=True, exist_ok=True)
    fields.mkdir(parents=True, exist_ok=True)
    for k in range(rec.paths):
        stem = "trajectory" if k == 0 else f"trajectory_path{k}"
        (data / f"{stem}.csv").write_text(rec.to_csv(k))
        final = SpectralField(rec.final.coef[k], rec.final.grid)
        write_snapshot(fields / f"{stem}.bin", final, cfg.n, t=float(rec.tau[k]))
    report = VerificationReport(
        study="simulate",
        params={"config": cfg, "paths": rec.paths},
        measured={"tau": rec.tau, "fired": rec.fired, "blowup": rec.blowup},
        verdicts={"no_blowup": not bool(rec.blowup.any())},
        rows=[("tau", k, float(t), None) for k, t in enumerate(rec.tau)],
    )
    run.emit(report)


def cmd_ensemble(run: Run) -> None:
    """Monte-Carlo energy moments and the stopping tail at every ladder level."""
    u0 = run.initial()
    M = run.cutoff(u0, run.ns)
    cfg = run.solver.replace(M=M)
    measured: dict = {}
    rows = []
    means = []
    horizons = [S for S in run.rc.get_list("diagnostics", "horizons") if S < cfg.horizon]
    for n in run.ns:
        rec = run_ensemble(cfg.replace(n=n), u0, run.paths, run.jobs)
        for name in ("l2", "lp", "tail"):
            st = EnsembleStats.from_values(path_functional(rec, name, M=M))
            measured.setdefault(name, {})[str(n)] = st.to_dict()
            rows.append((name, n, st.mean, st.stderr))
            if name == "l2":
                means.append(st.mean)
        for S in horizons:
            st = EnsembleStats.from_values(path_functional(rec, "tail", S, M))
            measured.setdefault(f"tail_S={S:g}", {})[str(n)] = st.to_dict()
            rows.append((f"tail_S={S:g}", n, st.mean, st.stderr))
    verdicts = {"finite": bool(np.all(np.isfinite(means)))}
    if len(means) > 1 and min(means) > 0:
        verdicts["l2_n_uniform"] = max(means) <= 2.0 * min(means)
    run.emit(
        VerificationReport(
            study="ensemble",
            params={"config": cfg, "ns": run.ns, "paths": run.paths, "M": M},
            measured=measured,
            verdicts=verdicts,
            rows=rows,
        )
    )


def cmd_cauchy(run: Run) -> None:
    """Coupled refinement differences for consecutive truncation levels."""
    u0 = run.initial()
    M = run.cutoff(u0, run.ns)
    _, report = cauchy_study(run.solver, u0, run.ns, run.paths, M=M, jobs=run.jobs)
    run.emit(report)


def cmd_assumptions(run: Run) -> None:
    """Empirical check of the noise growth, Lipschitz and divergence conditions."""
    cfg = run.solver
    rng = np.random.default_rng(np.random.SeedSequence([run.seed, 0xA55]))
    size = max(2, run.rc.get_int("diagnostics", "corpus_size"))
    corpus = [random_field(cfg.grid, rng, ncomp=cfg.d, kmax=cfg.n, slope=float(i % 3), solenoidal=True) for i in range(size)]
    rep = verify_assumptions(cfg.noise, corpus, cfg.p)
    rows = [(f"growth_r={r:g}", a, v, None) for r, vals in rep.growth.items() for a, v in zip(rep.amplitudes, vals)]
    rows += [("gradient", a, v, None) for a, v in zip(rep.amplitudes, rep.gradient)]
    run.emit(
        VerificationReport(
            study="assumptions",
            params={"config": cfg, "corpus_size": size},
            measured=jsonable(rep.to_dict()),
            verdicts=dict(rep.verdicts),
            rows=rows,
        )
    )


HANDLERS = {
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "cauchy": cmd_cauchy,
    "assumptions": cmd_assumptions,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="sectioned key/value run configuration")
    common.add_argument("--seed", type=int, help="master seed (U64)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (default 1, fully serial)")
    common.add_argument("--out", metavar="DIR", help="output root (default $SNSE_OUT or ./out)")
    common.add_argument("--n", type=int, help="truncation level")
    common.add_argument("--grid", type=int, metavar="N", help="points per axis (must be >= 4n+2)")
    common.add_argument("--dt", type=float)
    common.add_argument("--horizon", type=float)
    common.add_argument("--p", type=float, help="integrability exponent")
    common.add_argument("--cutoff-M", dest="cutoff_M", type=float, help="stopping level M")
    common.add_argument("--noise", choices=("zero", "additive", "linear"))
    common.add_argument("--paths", type=int)
    parser = argparse.ArgumentParser(prog="snse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"snse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HANDLERS[name].__doc__.splitlines()[0])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = Run(args.command, args)
    except (ConfigError, AliasingError, ValueError) as exc:
        print(f"snse: error: {exc}", file=sys.stderr)
        return 2
    run.write_manifest()
    try:
        HANDLERS[args.command](run)
    except (ConfigError, AliasingError) as exc:
        print(f"snse: error: {exc}", file=sys.stderr)
        return 2
    return 0 if all(r.passed for r in run.reports) else 1


if __name__ == "__main__":
    sys.exit(main())
