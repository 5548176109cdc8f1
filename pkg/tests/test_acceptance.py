"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py``; the verdicts are printed in the
terminal summary.
"""

import io
import json
import math
import time

import numpy as np
import pytest

from itl_pursuit import (
    Dictionary,
    InvalidSignalError,
    NokConfig,
    PursuitConfig,
    beta_star,
    irls_fit,
    itl_correlation,
    itl_correlation_normalized,
    ls_solve,
    nok_weights,
    pursuit_solve,
    sweep_select,
    weighted_ls_step,
)
from itl_pursuit.classifier import class_residuals, euclidean_class_residuals
from itl_pursuit.cli import run_cli
from itl_pursuit.experiments import (
    FULL_DIMS,
    ClassTask,
    NoiseSpec,
    aggregate,
    best_p,
    p_sweep,
    run_benchmark,
    run_classification,
)

LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
SEED = 0


def golden_section(f, lo, hi, tol=1e-12):
    g = (math.sqrt(5) - 1) / 2
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    while abs(hi - lo) > tol * (1 + abs(lo) + abs(hi)):
        if f(c) < f(d):
            hi, d = d, c
            c = hi - g * (hi - lo)
        else:
            lo, c = c, d
            d = lo + g * (hi - lo)
    return 0.5 * (lo + hi)


def test_criterion_1_correlation_properties(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst_a1 = worst_a2 = worst_b = 0.0
    ok = True
    for i in range(200):
        m = (2, 10, 100)[i % 3]
        b, a = rng.standard_normal(m), rng.standard_normal(m)
        sigma = float(rng.uniform(0.5, 2.0))
        log_peak = -LOG_SQRT_2PI - math.log(sigma)

        # zero vector, maximum at self, bound
        ok &= itl_correlation(np.zeros(m), a, sigma).value == 0.0
        ok &= itl_correlation(a, a, sigma).log_value == log_peak == itl_correlation(b, b, sigma).log_value
        lv = itl_correlation(b, a, sigma).log_value
        ok &= -math.inf < lv <= log_peak
        ok &= itl_correlation_normalized(a, a, sigma).log_value == log_peak
        lvn = itl_correlation_normalized(b, a, sigma).log_value
        ok &= -math.inf < lvn <= log_peak
        try:
            itl_correlation_normalized(np.zeros(m), a, sigma)
            ok = False
        except InvalidSignalError:
            pass

        for tau in (0.5, 2.0, -3.0):
            lhs = itl_correlation(tau * b, a, sigma).log_value
            rhs = (1 - tau**2) * log_peak + tau**2 * lv
            worst_a1 = max(worst_a1, abs(lhs - rhs))
            worst_a2 = max(worst_a2, abs(itl_correlation(b, tau * a, sigma).log_value - lv) / abs(lv))
            for vn in (itl_correlation_normalized(tau * b, a, sigma).log_value,
                       itl_correlation_normalized(b, tau * a, sigma).log_value):
                ok &= math.isclose(vn, lvn, rel_tol=1e-12)

        bs = beta_star(b, a)
        best = float(np.sum((b - bs * a) ** 2))
        for beta in rng.uniform(bs - 5, bs + 5, 100):
            gap = float(np.sum((b - beta * a) ** 2)) - best
            expected = (beta - bs) ** 2 * float(a @ a)
            ok &= gap >= -1e-10 * best
            worst_b = max(worst_b, abs(gap - expected) / max(best, 1.0))
    elapsed = time.perf_counter() - t0
    # |d log V| bounds the relative error of V itself
    passed = bool(ok) and worst_a1 <= 1e-9 and worst_a2 <= 1e-12 and worst_b <= 1e-10 and elapsed < 5.0
    verdict(1, passed, f"identity A1 max |dlogV|={worst_a1:.1e}, A2={worst_a2:.1e}, "
                       f"B gap err={worst_b:.1e}, {elapsed:.2f}s")
    assert passed


def test_criterion_2_oracle_equivalence(verdict):
    rng = np.random.default_rng(SEED + 1)
    err_beta = err_wls = err_collapse = 0.0
    for _ in range(50):
        m = int(rng.choice([2, 10, 100]))
        b, a = rng.standard_normal(m), rng.standard_normal(m)
        bs = beta_star(b, a)
        f = lambda t: float(np.sum((b - t * a) ** 2))
        err_beta = max(err_beta, abs(golden_section(f, -100.0, 100.0) - bs))

        r = b - bs * a
        collapse = math.sqrt(2 * m) / (math.sqrt(2 * math.pi) * np.linalg.norm(r)) * math.exp(-m)
        err_collapse = max(err_collapse, abs(itl_correlation(b, a).value - collapse) / collapse)

        A, y, w = rng.standard_normal((30, 4)), rng.standard_normal(30), rng.uniform(0.01, 1.0, 30)
        oracle = np.linalg.solve(A.T @ (w[:, None] * A), A.T @ (w * y))
        err_wls = max(err_wls, np.linalg.norm(weighted_ls_step(y, A, w) - oracle) / np.linalg.norm(oracle))

    mismatches = 0
    for _ in range(100):
        D = rng.standard_normal((20, 8))
        r = rng.standard_normal(20)
        norms = [np.linalg.norm(r - beta_star(r, D[:, i]) * D[:, i]) for i in range(8)]
        mismatches += sweep_select(r, D, rule="itl") != int(np.argmin(norms))
    passed = err_beta <= 1e-6 and err_wls <= 1e-8 and err_collapse <= 1e-9 and mismatches == 0
    verdict(2, passed, f"beta {err_beta:.1e}, weighted LS {err_wls:.1e}, collapse {err_collapse:.1e}, "
                       f"sweep mismatches {mismatches}/100")
    assert passed


def test_criterion_3_weight_formula(verdict):
    sigma = 1.3
    worst = 0.0
    for p in (1.3, 1.7, 2.0, 2.5):
        e = np.linspace(-4.0, 4.0, 50)
        if p < 2:
            e = e[np.abs(e) > 1e-3]
        rho = lambda v: (-np.expm1(-(v**2) / (2 * sigma**2))) ** (p / 2)
        h = 1e-5 * np.maximum(1.0, np.abs(e))
        fd = (rho(e + h) - rho(e - h)) / (2 * h) / e
        worst = max(worst, float(np.max(np.abs(nok_weights(e, sigma, p) - fd) / np.abs(fd))))
    passed = worst <= 1e-5
    verdict(3, passed, f"max relative error {worst:.1e} over 4 p values x 50 points")
    assert passed


@pytest.mark.slow
def test_criterion_4_heavy_tail_and_missing_data(verdict):
    t0 = time.perf_counter()
    solvers = [PursuitConfig.preset("omp", 10), PursuitConfig.preset("inok", 10, p=1.7)]
    noises = [NoiseSpec("chi2"), NoiseSpec("exp"), NoiseSpec("tdist"), NoiseSpec("missing", fraction=0.1)]
    stats = {(r["solver"], r["noise"]): r["mean_error"]
             for r in aggregate(run_benchmark(solvers, noises, 20, FULL_DIMS, SEED, threads=1))}
    elapsed = time.perf_counter() - t0
    ratios = {n: stats[("omp", n)] / stats[("inok", n)] for n in ("chi2", "exp", "tdist")}
    missing = stats[("inok", "missing0.1")]

    out = io.StringIO()
    run_cli(["recover", "--noise", "missing", "--missing-frac", "0.1", "--solver", "inok",
             "--p", "1.7", "--seed", "1"], stdout=out, stderr=io.StringIO())
    cli_err = json.loads(out.getvalue())["recovery_error"]

    passed = all(v >= 3.0 for v in ratios.values()) and missing < 1e-4 and cli_err < 1e-4 and elapsed < 300
    detail = ", ".join(f"{n} omp/inok={v:.2f}" for n, v in ratios.items())
    verdict(4, passed, f"{detail} (need >= 3); missing inok mean={missing:.2e}, "
                       f"recover --seed 1 = {cli_err:.2e} (need < 1e-4); {elapsed:.0f}s")
    assert passed


@pytest.mark.slow
def test_criterion_5_outlier_support(verdict):
    solvers = [PursuitConfig.preset("omp", 10), PursuitConfig.preset("inok", 10, p=1.7)]
    noise = NoiseSpec("wgn", snr_db=10.0, outlier_count=6, outlier_magnitude_sigmas=30.0)
    rows = {r["solver"]: r for r in aggregate(run_benchmark(solvers, [noise], 20, FULL_DIMS, SEED))}
    inok, omp = (round(rows[s]["support_exact_rate"] * 20) for s in ("inok", "omp"))
    passed = inok >= 16 and omp < inok
    verdict(5, passed, f"exact support inok {inok}/20, omp {omp}/20")
    assert passed


@pytest.mark.slow
def test_criterion_6_p_sweep(verdict):
    ps = [round(1.1 + 0.1 * i, 1) for i in range(10)]
    noises = [NoiseSpec("chi2"), NoiseSpec("exp"), NoiseSpec("tdist"), NoiseSpec("missing", fraction=0.1)]
    best = best_p(p_sweep(ps, noises, 20, FULL_DIMS, SEED))
    passed = all(p < 2.0 for p in best.values())
    verdict(6, passed, "best p " + ", ".join(f"{n}={p:g}" for n, p in best.items()))
    assert passed


def test_criterion_7_irls_robustness(verdict):
    rng = np.random.default_rng(SEED + 7)
    A = rng.standard_normal((40, 3))
    b = A @ rng.uniform(1, 2, 3) + 0.01 * rng.standard_normal(40)
    b[11] += 30.0
    state = irls_fit(b, A, NokConfig(p=2.0))
    clean = np.delete(state.weights, 11)
    ratio = state.weights[11] / np.median(clean)
    mask = np.arange(40) != 11
    coef_err = float(np.max(np.abs(state.coefficients - ls_solve(A[mask], b[mask]))))
    passed = ratio < 0.01 and coef_err < 1e-3
    verdict(7, passed, f"corrupted/median weight {ratio:.1e}, coefficient gap {coef_err:.1e}")
    assert passed


def test_criterion_8_classifier(verdict):
    rng = np.random.default_rng(SEED + 8)
    agree = 0
    for _ in range(100):
        centers = rng.standard_normal((3, 30))
        atoms = np.concatenate([c + 0.3 * rng.standard_normal((5, 30)) for c in centers]).T
        D = Dictionary(atoms, np.repeat([0, 1, 2], 5))
        b = atoms[:, 5:10] @ rng.uniform(0.5, 1, 5) + 0.05 * rng.standard_normal(30)
        x = pursuit_solve(b, D, PursuitConfig.preset("inok", 5)).x
        nok = class_residuals(b, D, x, 1.7)
        euc = euclidean_class_residuals(b, D, x)
        agree += sorted(range(3), key=lambda i: nok[i].rank_key) == sorted(range(3), key=lambda i: euc[i].residual_score)

    task = ClassTask()
    res = run_classification([(PursuitConfig.preset("inok", task.sparsity), "nok"),
                              (PursuitConfig.preset("omp", task.sparsity), "euclidean")], 50, task, SEED)
    acc_inok, acc_omp = res[0]["accuracy"], res[1]["accuracy"]
    passed = agree == 100 and acc_inok >= acc_omp
    verdict(8, passed, f"ranking agreement {agree}/100; accuracy inok+NOK {acc_inok:.2f} vs omp+euclidean {acc_omp:.2f}")
    assert passed


def test_criterion_9_determinism(verdict):
    argv = ["bench", "--preset", "small", "--solvers", "omp,cmp,inok", "--seed", "42"]
    outs = []
    for threads in ("1", "4", "1", "4"):
        buf = io.StringIO()
        assert run_cli(argv + ["--threads", threads], stdout=buf, stderr=io.StringIO()) == 0
        outs.append(buf.getvalue().encode("utf-8"))
    passed = len(set(outs)) == 1 and outs[0].count(b"\n") == 1 + 3 * 6 * 10
    verdict(9, passed, f"{len(outs)} runs over threads 1/4, {len(set(outs))} distinct outputs, {len(outs[0])} bytes")
    assert passed
