"""Command-line front end.

Subcommands
-----------
recover   one trial, JSON report
bench     solver x noise x trial grid, CSV (or JSON) of per-trial rows
psweep    mean recovery error over a grid of ``p`` values, CSV (or JSON)
classify  synthetic occlusion classification, JSON confusion summary

Exit codes are 0 on success, 1 on a usage error and 2 on a runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .errors import PursuitError
from .experiments import (
    FULL_DIMS,
    SMALL_DIMS,
    ClassTask,
    NoiseSpec,
    aggregate,
    make_problem,
    p_sweep,
    recovery_error,
    run_benchmark,
    run_classification,
    trial_seed,
)
from .pursuit import PRESETS, PursuitConfig, pursuit_solve

SCHEMA_VERSION = 1
SEED_ENV = "ITL_PURSUIT_SEED"
BENCH_HEADER = ["solver", "noise", "trial", "recovery_error", "support_exact", "runtime_ms", "seed"]
PSWEEP_HEADER = ["p", "noise", "mean_error", "std_error", "trials"]

ALL_NOISES = "chi2,exp,tdist,missing,gaussian,wgn"
DEFAULT_P_VALUES = tuple(round(1.1 + 0.1 * i, 1) for i in range(10))

# Values a preset supplies when the matching flag is absent.
PRESET_DEFAULTS: Dict[str, Dict] = {
    "table2": dict(dims=FULL_DIMS, trials=20, noise=ALL_NOISES, snr_db=2.0, solvers="omp,cmp,inok"),
    "fig1": dict(dims=FULL_DIMS, trials=20, noise="wgn", snr_db=10.0, outliers=6, solvers="omp,cmp,inok"),
    "fig2": dict(dims=FULL_DIMS, trials=20, noise="chi2,exp,tdist", solvers="inok"),
    "small": dict(dims=SMALL_DIMS, trials=10, noise=ALL_NOISES, snr_db=2.0, solvers="omp,cmp,inok"),
}
BASE_DEFAULTS = dict(dims=FULL_DIMS, trials=20, noise="chi2", snr_db=2.0, outliers=0, solvers="omp,inok")


class UsageError(Exception):
    """Bad command line; reported with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunManifest:
    """Everything needed to replay a run."""

    command: str
    parameters: Dict
    seed: int
    tool_version: str = __version__
    started: str = ""
    finished: str = ""
    argv: List[str] = field(default_factory=list)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _common(parser):
    g = parser.add_argument_group("common options")
    g.add_argument("--seed", type=int, default=None, help=f"master seed (falls back to ${SEED_ENV}, then 0)")
    g.add_argument("--trials", type=int, default=None)
    g.add_argument("--m", type=int, default=None, help="signal length")
    g.add_argument("--n", type=int, default=None, help="number of atoms")
    g.add_argument("--sparsity", type=int, default=None, help="nonzeros in x and support size L")
    g.add_argument("--noise", default=None, help="comma list of chi2,exp,tdist,gaussian,wgn,missing,none")
    g.add_argument("--snr-db", type=float, default=None, help="SNR of wgn noise in dB")
    g.add_argument("--missing-frac", type=float, default=None, help="share of zeroed entries for missing")
    g.add_argument("--outliers", type=int, default=None, help="spikes added per signal")
    g.add_argument("--outlier-mag", type=float, default=30.0, help="spike size in units of sigma_g")
    g.add_argument("--solver", "--solvers", dest="solvers", default=None, help=f"comma list of {','.join(PRESETS)}")
    g.add_argument("--p", type=float, default=1.7, help="NOK power")
    g.add_argument("--eps", type=float, default=0.0, help="residual-norm stopping tolerance")
    g.add_argument("--out", default=None, help="output file (stdout if omitted)")
    g.add_argument("--format", choices=("csv", "json"), default=None)
    g.add_argument("--preset", choices=tuple(PRESET_DEFAULTS), default=None)
    g.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    g.add_argument("--raw-atoms", action="store_true", help="skip unit-norm scaling of the random atoms")
    g.add_argument("--timing", action="store_true", help="fill runtime_ms (makes CSV output run-dependent)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="itl-pursuit", description="Robust greedy sparse recovery experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    _common(sub.add_parser("recover", help="single recovery trial, JSON report"))
    _common(sub.add_parser("bench", help="benchmark grid, CSV of per-trial rows"))
    ps = sub.add_parser("psweep", help="mean error over a grid of p values")
    _common(ps)
    ps.add_argument("--p-values", default=None, help="comma list (default 1.1,1.2,...,2.0)")
    cl = sub.add_parser("classify", help="synthetic occlusion classification")
    _common(cl)
    cl.add_argument("--scorer", choices=("auto", "nok", "euclidean"), default="auto",
                    help="auto pairs omp with euclidean and the NOK solvers with nok")
    cl.add_argument("--classes", type=int, default=3)
    cl.add_argument("--occlusion", type=float, default=0.2, help="occluded share of pixels")
    return parser


def _split(text: str) -> List[str]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise UsageError(f"empty list {text!r}")
    return items


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None


def _settings(args) -> Dict:
    """Merge preset and base defaults with explicit flags."""
    s = dict(BASE_DEFAULTS)
    if args.preset:
        s.update(PRESET_DEFAULTS[args.preset])
    m, n, k = s["dims"]
    dims = (args.m or m, args.n or n, args.sparsity or k)
    if min(dims) < 1 or dims[2] > dims[1]:
        raise UsageError(f"need positive m, n, sparsity with sparsity <= n, got {dims}")
    trials = args.trials if args.trials is not None else s["trials"]
    if trials < 1:
        raise UsageError("--trials must be >= 1")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    return dict(
        dims=dims,
        trials=trials,
        noise=args.noise or s["noise"],
        snr_db=args.snr_db if args.snr_db is not None else s["snr_db"],
        outliers=args.outliers if args.outliers is not None else s.get("outliers", 0),
        solvers=args.solvers or s["solvers"],
    )


def _noises(args, s) -> List[NoiseSpec]:
    kinds = _split(s["noise"])
    if args.snr_db is not None and "wgn" not in kinds:
        raise UsageError("--snr-db needs wgn among --noise")
    if args.missing_frac is not None and "missing" not in kinds:
        raise UsageError("--missing-frac needs missing among --noise")
    frac = 0.1 if args.missing_frac is None else args.missing_frac
    try:
        return [NoiseSpec(k, s["snr_db"], frac, s["outliers"], args.outlier_mag) for k in kinds]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _solvers(args, s) -> List[PursuitConfig]:
    k = s["dims"][2]
    try:
        return [PursuitConfig.preset(name, k, p=args.p, residual_eps=args.eps) for name in _split(s["solvers"])]
    except (PursuitError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _parameters(args, s) -> Dict:
    params = {k: v for k, v in vars(args).items() if k not in ("command",)}
    params.update(m=s["dims"][0], n=s["dims"][1], sparsity=s["dims"][2], trials=s["trials"],
                  noise=s["noise"], snr_db=s["snr_db"], outliers=s["outliers"], solvers=s["solvers"])
    return params


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _check_writable(path: Optional[str]):
    if path is None:
        return
    parent = os.path.dirname(os.path.abspath(path)) or "."
    if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
        raise OSError(f"cannot write to {path!r}")
    if os.path.isdir(path):
        raise OSError(f"{path!r} is a directory")


def _emit(text: str, path: Optional[str], stdout):
    if path is None:
        stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _cmd_recover(args, s, seed):
    if args.solvers is None:
        s = dict(s, solvers="inok")
    noises = _noises(args, s)
    solvers = _solvers(args, s)
    if len(noises) != 1 or len(solvers) != 1:
        raise UsageError("recover takes exactly one --noise and one --solver")
    cfg, noise = solvers[0], noises[0]
    D, x, b = make_problem(s["dims"], noise, trial_seed(seed, 0, 0), not args.raw_atoms)
    sol = pursuit_solve(b, D, cfg)
    truth = sorted(np.flatnonzero(x).tolist())
    return {
        "solver": cfg.name,
        "noise": noise.label,
        "recovery_error": recovery_error(sol.x, x),
        "support": [int(i) for i in sol.support],
        "true_support": truth,
        "support_exact": sorted(sol.support) == truth,
        "residual_norm": sol.residual_norm,
        "converged": sol.converged,
        "per_iteration_loss": [float(v) for v in sol.per_iteration_loss],
    }


def _cmd_bench(args, s, seed):
    reports = run_benchmark(_solvers(args, s), _noises(args, s), s["trials"], s["dims"], seed,
                            args.threads, not args.raw_atoms)
    rows = [
        [r.solver_name, r.noise_kind, r.trial_index, float(r.recovery_error), r.support_exact,
         float(r.runtime_ms) if args.timing else "", r.seed]
        for r in reports
    ]
    return BENCH_HEADER, rows, {"summary": aggregate(reports)}


def _cmd_psweep(args, s, seed):
    if args.p_values:
        try:
            ps = [float(v) for v in _split(args.p_values)]
        except ValueError:
            raise UsageError(f"bad --p-values {args.p_values!r}") from None
    else:
        ps = list(DEFAULT_P_VALUES)
    if args.solvers and "," in args.solvers:
        raise UsageError("psweep takes a single --solver")
    solver = args.solvers or "inok"
    if solver not in ("kns", "inok"):
        raise UsageError("psweep needs a solver with a free p (kns or inok)")
    try:
        rows = p_sweep(ps, _noises(args, s), s["trials"], s["dims"], seed, args.threads, solver, not args.raw_atoms)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    body = [[r["p"], r["noise"], r["mean_error"], r["std_error"], r["trials"]] for r in rows]
    return PSWEEP_HEADER, body, {}


def _cmd_classify(args, s, seed):
    if args.noise or args.snr_db is not None or args.missing_frac is not None:
        raise UsageError("classify does not take noise flags")
    task = ClassTask(n_classes=args.classes, occlusion=args.occlusion,
                     sparsity=args.sparsity or ClassTask.sparsity)
    if task.n_classes < 2 or not 0.0 <= task.occlusion <= 1.0:
        raise UsageError("need --classes >= 2 and --occlusion in [0, 1]")
    trials = args.trials if args.trials is not None else 50
    pipelines = []
    for name in _split(args.solvers or "omp,inok"):
        try:
            cfg = PursuitConfig.preset(name, task.sparsity, p=args.p, residual_eps=args.eps)
        except PursuitError as exc:
            raise UsageError(str(exc)) from None
        scorer = args.scorer
        if scorer == "auto":
            scorer = "euclidean" if cfg.is_omp else "nok"
        pipelines.append((cfg, scorer))
    results = run_classification(pipelines, trials, task, seed)
    return {"task": asdict(task), "trials": trials, "results": results}


def run_cli(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    """Run one command; returns the process exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            # --help and --version
            return int(exc.code or 0)
        seed = _resolve_seed(args)
        s = _settings(args)
        fmt = args.format
        if args.command in ("recover", "classify"):
            if fmt == "csv":
                raise UsageError(f"{args.command} only writes json")
            fmt = "json"
        fmt = fmt or "csv"
        if args.command != "psweep" and getattr(args, "p_values", None):
            raise UsageError("--p-values belongs to psweep")
    except UsageError as exc:
        print(str(exc), file=stderr)
        return 1

    manifest = RunManifest(args.command, _parameters(args, s), seed, started=_now(),
                           argv=list(argv) if argv is not None else sys.argv[1:])
    try:
        _check_writable(args.out)
        if args.command == "recover":
            payload = _cmd_recover(args, s, seed)
        elif args.command == "classify":
            payload = _cmd_classify(args, s, seed)
        else:
            handler = _cmd_bench if args.command == "bench" else _cmd_psweep
            header, rows, extra = handler(args, s, seed)
        manifest.finished = _now()

        if args.command in ("recover", "classify"):
            payload.update(schema_version=SCHEMA_VERSION, manifest=asdict(manifest))
            _emit(_json_text(payload), args.out, stdout)
        elif fmt == "json":
            payload = {
                "schema_version": SCHEMA_VERSION,
                "manifest": asdict(manifest),
                "columns": header,
                "rows": rows,
                **extra,
            }
            _emit(_json_text(payload), args.out, stdout)
        else:
            _emit(_csv_text(header, rows), args.out, stdout)
            if args.out is not None:
                side = {"schema_version": SCHEMA_VERSION, "manifest": asdict(manifest)}
                _emit(_json_text(side), args.out + ".manifest.json", stdout)
    except UsageError as exc:
        print(str(exc), file=stderr)
        return 1
    except (PursuitError, np.linalg.LinAlgError, OSError, ValueError) as exc:
        print(f"itl-pursuit: {exc}", file=stderr)
        return 2
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    code = run_cli(argv)
    sys.exit(code)


if __name__ == "__main__":
    main()
