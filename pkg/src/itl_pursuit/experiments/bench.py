"""Seeded benchmark grids: recovery trials, p-sweeps and a classification study.

Problem instances depend only on ``(seed, noise index, trial index)`` so
every solver in a grid is scored on the same ``(A, x, b)`` draws. Results
come back in canonical ``(solver, noise, trial)`` order whatever the thread
count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..classifier import class_residuals, euclidean_class_residuals, pick_class
from ..core import Dictionary
from ..errors import InvalidParameterError, PursuitError
from ..pursuit import PursuitConfig, pursuit_solve
from .data import (
    NoiseSpec,
    corrupt,
    gen_dictionary,
    gen_sparse_vector,
    occlusion_block,
    recovery_error,
)

FULL_DIMS = (200, 400, 10)
SMALL_DIMS = (50, 100, 5)


@dataclass(frozen=True)
class TrialReport:
    """Outcome of one solver on one problem instance.

    ``recovery_error`` is NaN and ``error`` holds the message when the solver
    raised.
    """

    solver_name: str
    noise_kind: str
    trial_index: int
    recovery_error: float
    support_exact: bool
    runtime_ms: float
    seed: int
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def trial_seed(seed: int, noise_index: int, trial_index: int) -> int:
    """32-bit seed of one problem instance, mixed with ``SeedSequence``."""
    ss = np.random.SeedSequence([seed, noise_index, trial_index])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def make_problem(dims, noise: NoiseSpec, seed: int, normalize_atoms: bool = True):
    """Draw ``(dictionary, x_true, b)`` for one trial.

    ``dims`` is ``(m, n, k)``. With ``normalize_atoms`` the Gaussian atoms
    are scaled to unit norm before the observation is formed.
    """
    m, n, k = dims
    s_dict, s_x, s_noise = np.random.SeedSequence(seed).generate_state(3, dtype=np.uint32)
    D = gen_dictionary(m, n, int(s_dict))
    if normalize_atoms:
        D = D.normalized()
    x = gen_sparse_vector(n, k, int(s_x))
    b = corrupt(D.atoms @ x, noise, int(s_noise))
    return D, x, b


def _run_cell(solvers, noise, dims, seed, normalize_atoms):
    D, x, b = make_problem(dims, noise, seed, normalize_atoms)
    truth = set(np.flatnonzero(x).tolist())
    out = []
    for cfg in solvers:
        t0 = time.perf_counter()
        try:
            sol = pursuit_solve(b, D, cfg)
        except (PursuitError, np.linalg.LinAlgError) as exc:
            out.append((math.nan, False, (time.perf_counter() - t0) * 1e3, str(exc)))
            continue
        ms = (time.perf_counter() - t0) * 1e3
        out.append((recovery_error(sol.x, x), set(sol.support) == truth, ms, None))
    return out


def run_benchmark(
    solvers: Sequence[PursuitConfig],
    noises: Sequence[NoiseSpec],
    trials: int,
    dims: Tuple[int, int, int] = FULL_DIMS,
    seed: int = 0,
    threads: int = 1,
    normalize_atoms: bool = True,
) -> List[TrialReport]:
    """Run every solver on ``trials`` instances of every noise model."""
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    cells = [(ni, t, trial_seed(seed, ni, t)) for ni in range(len(noises)) for t in range(trials)]

    def work(cell):
        ni, _, s = cell
        return _run_cell(solvers, noises[ni], dims, s, normalize_atoms)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, cells))
    else:
        results = [work(c) for c in cells]

    by_cell = {(ni, t): (s, res) for (ni, t, s), res in zip(cells, results)}
    reports = []
    for si, cfg in enumerate(solvers):
        for ni, noise in enumerate(noises):
            for t in range(trials):
                s, res = by_cell[(ni, t)]
                err, exact, ms, msg = res[si]
                reports.append(TrialReport(cfg.name, noise.label, t, err, exact, ms, s, msg))
    return reports


def aggregate(reports: Sequence[TrialReport]) -> List[Dict]:
    """Per ``(solver, noise)`` mean and unbiased std of the recovery error.

    Failed trials are counted in ``failures`` and left out of the statistics.
    """
    groups: Dict[Tuple[str, str], List[TrialReport]] = {}
    for r in reports:
        groups.setdefault((r.solver_name, r.noise_kind), []).append(r)
    rows = []
    for (solver, noise), rs in groups.items():
        errs = np.array([r.recovery_error for r in rs if not r.failed])
        rows.append(
            {
                "solver": solver,
                "noise": noise,
                "trials": len(rs),
                "failures": sum(r.failed for r in rs),
                "mean_error": float(errs.mean()) if errs.size else math.nan,
                "std_error": float(errs.std(ddof=1)) if errs.size > 1 else math.nan,
                "support_exact_rate": sum(r.support_exact for r in rs) / len(rs),
            }
        )
    return rows


def p_sweep(
    p_values: Sequence[float],
    noises: Sequence[NoiseSpec],
    trials: int,
    dims: Tuple[int, int, int] = FULL_DIMS,
    seed: int = 0,
    threads: int = 1,
    solver: str = "inok",
    normalize_atoms: bool = True,
) -> List[Dict]:
    """Mean recovery error of ``solver`` for each ``p`` and noise model."""
    k = dims[2]
    solvers = [replace(PursuitConfig.preset(solver, k, p=p), name=f"{solver}@{p:g}") for p in p_values]
    reports = run_benchmark(solvers, noises, trials, dims, seed, threads, normalize_atoms)
    stats = {(row["solver"], row["noise"]): row for row in aggregate(reports)}
    rows = []
    for p, cfg in zip(p_values, solvers):
        for noise in noises:
            row = stats[(cfg.name, noise.label)]
            rows.append(
                {
                    "p": float(p),
                    "noise": noise.label,
                    "mean_error": row["mean_error"],
                    "std_error": row["std_error"],
                    "trials": row["trials"],
                }
            )
    return rows


def best_p(rows: Sequence[Dict]) -> Dict[str, float]:
    """For each noise label, the ``p`` with the lowest mean error (lowest ``p`` on ties)."""
    best: Dict[str, Tuple[float, float]] = {}
    for row in rows:
        cur = best.get(row["noise"])
        key = (row["mean_error"], row["p"])
        if cur is None or key < cur:
            best[row["noise"]] = key
    return {noise: p for noise, (_, p) in best.items()}


# -- synthetic occlusion classification ---------------------------------------


@dataclass(frozen=True)
class ClassTask:
    """Layout of the synthetic multi-class occlusion task.

    All classes share a random base image; each class prototype adds its own
    Gaussian deviation of size ``separation``. Atoms and test samples are a
    prototype under a random gain plus iid Gaussian texture of size
    ``spread``. Test samples then get a contiguous constant block over
    ``occlusion`` of the pixels.
    """

    n_classes: int = 3
    separation: float = 0.1
    atoms_per_class: int = 8
    rows: int = 12
    cols: int = 10
    spread: float = 0.15
    occlusion: float = 0.2
    fill: float = 1.0
    sparsity: int = 5

    @property
    def m(self) -> int:
        return self.rows * self.cols

    def block_shape(self) -> Tuple[int, int]:
        """Most square block with ``round(occlusion * m)`` pixels that fits the grid."""
        target = int(round(self.occlusion * self.m))
        best = None
        for h in range(1, self.rows + 1):
            w = int(round(target / h))
            if 1 <= w <= self.cols:
                key = (abs(h * w - target), abs(h - w))
                if best is None or key < best[0]:
                    best = (key, (h, w))
        return best[1] if best else (0, 0)


def make_class_dictionary(task: ClassTask, seed: int):
    """Labelled dictionary plus the class prototypes it was drawn from."""
    rng = np.random.default_rng(seed)
    base = rng.uniform(0.0, 1.0, size=task.m)
    protos = base + task.separation * rng.standard_normal((task.n_classes, task.m))
    cols, labels = [], []
    for c in range(task.n_classes):
        for _ in range(task.atoms_per_class):
            gain = rng.uniform(0.8, 1.2)
            cols.append(gain * protos[c] + task.spread * rng.standard_normal(task.m))
            labels.append(c)
    return Dictionary(np.array(cols).T, labels), protos


def make_class_sample(task: ClassTask, protos, label: int, seed: int) -> np.ndarray:
    """Occluded test image of class ``label``."""
    rng = np.random.default_rng(seed)
    clean = rng.uniform(0.8, 1.2) * protos[label] + task.spread * rng.standard_normal(task.m)
    h, w = task.block_shape()
    return occlusion_block(clean, task.rows, task.cols, (h, w, task.fill), int(rng.integers(2**32)))


def run_classification(
    pipelines: Sequence[Tuple[PursuitConfig, str]],
    trials: int,
    task: ClassTask = ClassTask(),
    seed: int = 0,
) -> List[Dict]:
    """Accuracy and confusion matrix of each ``(solver, scorer)`` pipeline.

    Every pipeline classifies the same ``trials`` samples; the true class of
    trial ``t`` is ``t mod n_classes``.
    """
    D, protos = make_class_dictionary(task, trial_seed(seed, 0, 0))
    samples = []
    for t in range(trials):
        label = t % task.n_classes
        samples.append((label, make_class_sample(task, protos, label, trial_seed(seed, 1, t))))
    out = []
    for cfg, scorer in pipelines:
        confusion = np.zeros((task.n_classes, task.n_classes), dtype=int)
        for label, b in samples:
            sol = pursuit_solve(b, D, cfg)
            if scorer == "euclidean":
                scores = euclidean_class_residuals(b, D, sol.x)
            else:
                p = cfg.nok.p if cfg.nok is not None else 2.0
                scores = class_residuals(b, D, sol.x, p)
            confusion[label, pick_class(scores)] += 1
        out.append(
            {
                "solver": cfg.name,
                "scorer": scorer,
                "accuracy": float(np.trace(confusion)) / trials,
                "confusion": confusion.tolist(),
            }
        )
    return out
