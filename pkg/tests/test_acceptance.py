"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the summary block at the end lists
all criteria) or ``python3 tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from amo_toolkit import (
    SELF_ADJOINT,
    AmoParams,
    BandSet,
    Perturbation,
    Rational,
    StepMeasure,
    bands_fixed_theta,
    bands_union_theta,
    chambers_decompose,
    equilibrium_measure,
    golden_convergents,
    hausdorff_distance,
    hdelta_cloud,
    ids_measure,
    level_curves,
    log_potential,
    lyapunov_finite,
    potential_field,
    robin_capacity,
    sturm_eigenvalues,
    truncation_matrix,
)
from amo_toolkit.nonhermitian import monodromy_residual
from amo_toolkit.verify import check_duality, check_equilibrium, check_localization, check_theorem1, check_thouless

RESULTS = {}


def record(number, title, checks, runtime, budget):
    """Register one criterion: ``checks`` maps a label to (value, ok)."""
    checks = dict(checks)
    checks["runtime"] = (f"{runtime:.1f}s <= {budget}s", runtime <= budget)
    ok = all(flag for _, flag in checks.values())
    parts = "; ".join(f"{k}={v if isinstance(v, str) else f'{v:.3g}'}" for k, (v, _) in checks.items())
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {parts}"
    RESULTS[number] = line
    print(line)
    failed = [k for k, (_, flag) in checks.items() if not flag]
    assert ok, f"criterion {number} failed: {failed}"


GOLDEN_5_8_13 = [a for a in golden_convergents(13) if a.q >= 5]


def test_criterion_01_free_case():
    t0 = time.perf_counter()
    alphas = [Rational(1, 1), Rational(1, 2), Rational(3, 8), Rational(8, 13), Rational(21, 34)]
    band_err = max(np.abs(bands_union_theta(a, 0.0).intervals - [[-2.0, 2.0]]).max() for a in alphas)
    arcsine = ids_measure(Rational(8, 13), 0.0, 4000)
    pot_err = abs(log_potential(3.0, arcsine) - math.log((3 + math.sqrt(5)) / 2))
    golden = (math.sqrt(5) - 1) / 2
    lyap_err = abs(lyapunov_finite(5.0, AmoParams(golden, 0.0), N=100_000) - math.log((5 + math.sqrt(21)) / 2))
    record(1, "free case", {
        "band_edges": (band_err, band_err <= 1e-10),
        "potential_at_3": (pot_err, pot_err <= 1e-4),
        "lyapunov_at_5": (lyap_err, lyap_err <= 1e-3),
    }, time.perf_counter() - t0, 10)


def test_criterion_02_sturm_floquet():
    t0 = time.perf_counter()
    worst, empty = 0.0, 0
    for alpha in [Rational(1, 2), Rational(2, 3), Rational(3, 5), Rational(5, 8), Rational(8, 13)]:
        N = 40 * alpha.q
        for beta in [0.5, 1.0, 2.0]:
            for theta in [0.0, 0.7]:
                # ring truncation: N is a multiple of q, so it is one period-N Floquet fiber
                op = truncation_matrix(AmoParams(alpha, beta, theta), N, boundary="periodic")
                ev = sturm_eigenvalues(op)
                bands = bands_fixed_theta(alpha, beta, theta)
                worst = max(worst, float(bands.distance(ev).max()) * N)
                for lo, hi in bands.intervals:
                    empty += not np.any((ev >= lo - 5.0 / N) & (ev <= hi + 5.0 / N))
    record(2, "Sturm-Floquet", {
        "max_distance_times_N": (worst, worst <= 5.0),
        "empty_bands": (f"{empty}", empty == 0),
    }, time.perf_counter() - t0, 30)


def test_criterion_03_chambers():
    t0 = time.perf_counter()
    worst_res = worst_c = 0.0
    for alpha in [Rational(1, 1), Rational(1, 2), Rational(2, 3), Rational(3, 5)]:
        for beta in [0.5, 1.0, 2.0]:
            ch = chambers_decompose(alpha, beta, theta_grid_size=64)
            worst_res = max(worst_res, ch.residual)
            target = 2.0 * beta**alpha.q
            worst_c = max(worst_c, abs(abs(ch.c) - target) / target)
    # hand oracles: q=1 gives A(z) = z, c = 2 beta; q=2 gives A(z) = z^2 - 2 - 2 beta^2, c = 2 beta^2
    q1 = chambers_decompose(Rational(1, 1), 2.0, theta_grid_size=64)
    q2 = chambers_decompose(Rational(1, 2), 2.0, theta_grid_size=64)
    hand = max(np.abs(q1.coefficients - [0, 1]).max(), abs(q1.c - 4),
               np.abs(q2.coefficients - [-10, 0, 1]).max(), abs(q2.c - 8))
    record(3, "Chambers form", {
        "residual": (worst_res, worst_res < 1e-9),
        "c_relative": (worst_c, worst_c <= 1e-8),
        "hand_oracle": (hand, hand < 1e-12),
    }, time.perf_counter() - t0, 5)


def test_criterion_04_duality():
    t0 = time.perf_counter()
    devs = [check_duality(a, b).deviations["edge_mismatch"]
            for a, b in [(Rational(1, 2), 2.0), (Rational(2, 5), 3.0), (Rational(13, 21), 2.0)]]
    record(4, "duality", {"edge_mismatch": (max(devs), max(devs) < 1e-8)}, time.perf_counter() - t0, 10)


def test_criterion_05_capacity():
    t0 = time.perf_counter()
    exact = (1 + 2.0**21) ** (1 / 21)
    cap_ids = robin_capacity(ids_measure(Rational(13, 21), 2.0, 2000)).capacity
    cap_int = robin_capacity(equilibrium_measure(BandSet([(-2.0, 2.0)]), 2000)).capacity
    r1, r2 = abs(cap_ids / exact - 1), abs(cap_int - 1)
    record(5, "capacity", {
        "ids_13/21_rel": (r1, r1 <= 0.02),
        "interval_rel": (r2, r2 <= 0.01),
    }, time.perf_counter() - t0, 30)


def test_criterion_06_thouless():
    t0 = time.perf_counter()
    d500 = check_thouless(Rational(34, 55), 2.0, N=100_000, M=500).deviations["max_abs_diff"]
    d4000 = check_thouless(Rational(34, 55), 2.0, N=100_000, M=4000).deviations["max_abs_diff"]
    record(6, "Thouless", {
        "deviation_M4000": (d4000, d4000 < 0.02),
        "deviation_M500": (d500, d4000 < d500),
    }, time.perf_counter() - t0, 120)


def test_criterion_07_localization():
    t0 = time.perf_counter()
    rep = check_localization(Rational(34, 55), 3.0, samples=5, N=2000)
    a, b = rep.deviations["rate_vs_log_beta"], rep.deviations["rate_vs_lyapunov"]
    record(7, "localization", {
        "rate_vs_log_beta": (a, a < 0.15),
        "rate_vs_lyapunov": (b, b <= 0.1),
    }, time.perf_counter() - t0, 120)


def test_criterion_08_equilibrium():
    t0 = time.perf_counter()
    d1 = check_equilibrium(Rational(1, 2), 1.0, 512).deviations["quantile_sup"]
    d2 = check_equilibrium(Rational(13, 21), 2.0, 512).deviations["quantile_sup"]
    record(8, "equilibrium distribution", {
        "quantile_1/2": (d1, d1 < 0.05),
        "quantile_13/21": (d2, d2 < 0.05),
    }, time.perf_counter() - t0, 120)


def test_criterion_09_level_set():
    t0 = time.perf_counter()
    rep = check_theorem1(GOLDEN_5_8_13, 2.0, 1.5, grid=400, M=2000)
    inv = check_theorem1(GOLDEN_5_8_13, 2.0, 1 / 1.5, grid=400, M=2000)
    devs = [r["deviation"] for r in rep.details["per_q"]]
    devs_inv = [r["deviation"] for r in inv.details["per_q"]]
    sym = float(np.max(np.abs(np.subtract(devs, devs_inv))))
    ratio = rep.deviations["worst_step_ratio"]
    record(9, "level-set characterisation", {
        "deviation_q13": (devs[-1], devs[-1] < 0.15),
        "worst_step_ratio": (ratio, ratio <= 1.2),
        "delta_inversion": (sym, sym <= 1e-8),
    }, time.perf_counter() - t0, 300)


def test_criterion_10_nonhermitian():
    t0 = time.perf_counter()
    imag = outside = conj = resid = 0.0
    for alpha in GOLDEN_5_8_13:
        for delta in [1.0, 1.5]:
            pert = Perturbation(delta)
            cloud = hdelta_cloud(alpha, 2.0, pert)
            pts = cloud.points
            if delta == 1.0:
                imag = max(imag, float(np.abs(pts.imag).max()))
                outside = max(outside, float(bands_union_theta(alpha, 2.0).distance(pts.real).max()))
            conj = max(conj, hausdorff_distance(pts, np.conj(pts)).d_max)
            resid = max(resid, float(monodromy_residual(cloud, alpha, 2.0, pert).max()))
    record(10, "non-Hermitian sanity", {
        "imag_delta1": (imag, imag <= 1e-9),
        "outside_bands": (outside, outside <= 1e-6),
        "conjugation": (conj, conj <= 1e-9),
        "monodromy_residual": (resid, resid <= 1e-7),
    }, time.perf_counter() - t0, 60)


def test_criterion_11_level_curve():
    t0 = time.perf_counter()
    mu = StepMeasure(np.array([0.0]), np.array([1.0]))
    r = 1.3
    errs, cells, single = [], [], True
    for n in [51, 101, 201, 401]:
        fld = potential_field(mu, (-2.0, 2.0, -2.0, 2.0), n, n)
        curves = level_curves(fld, math.log(r))
        single &= len(curves) == 1 and curves[0].closed
        errs.append(float(np.abs(np.abs(curves[0].points) - r).max()))
        cells.append(fld.cell_diagonal)
    within = max(e / c for e, c in zip(errs, cells))
    halving = max(b / a for a, b in zip(errs, errs[1:]))
    record(11, "level-curve extraction", {
        "one_closed_curve": (f"{single}", single),
        "error_over_cell": (within, within <= 1.0),
        "refinement_ratio": (halving, halving <= 0.5),
    }, time.perf_counter() - t0, 10)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
