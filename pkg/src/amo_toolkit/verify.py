"""Numerical probes of the structural claims, each returning a report.

Every gate lives in ``THRESHOLDS``; a report passes exactly when each measured
deviation is at most the threshold stored under the same key.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cocycle import lyapunov_theta_average
from .errors import DomainError, ProbeFailed
from .hermitian import BandSet, bands_union_theta, ids_measure, localization_probe
from .nonhermitian import hausdorff_distance, hdelta_cloud, points_of
from .operator import AmoParams, Perturbation
from .potential import equilibrium_measure, level_curves, log_potential_many, potential_field
from .rational import Rational

THRESHOLDS_VERSION = "1"
THRESHOLDS = {
    "duality": {"edge_mismatch": 1e-8},
    "thouless": {"max_abs_diff": 0.02},
    "thouless_free": {"max_abs_diff": 5e-3},
    "equilibrium": {"quantile_sup": 0.05},
    "equilibrium_free": {"quantile_sup": 0.02},
    "theorem1": {"deviation_last": 0.15, "worst_step_ratio": 1.2},
    "theorem1_selfadjoint": {"deviation_last": 0.1},
    "localization": {"rate_vs_log_beta": 0.15, "rate_vs_lyapunov": 0.1},
    "localization_control": {"max_rate": 0.05},
    "localization_dual": {"max_rate": 0.1},
}


@dataclass
class VerificationReport:
    claim: str
    params: dict
    deviations: dict
    thresholds: dict
    details: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.deviations[k] <= v for k, v in self.thresholds.items())

    def to_dict(self, include_runtime: bool = False) -> dict:
        out = {
            "claim": self.claim,
            "params": self.params,
            "deviations": self.deviations,
            "thresholds": self.thresholds,
            "thresholds_version": THRESHOLDS_VERSION,
            "details": self.details,
            "pass": self.passed,
        }
        if include_runtime:
            out["runtime"] = self.runtime
        return out


def _report(claim, key, params, deviations, details, t0):
    return VerificationReport(claim, params, deviations, dict(THRESHOLDS[key]), details, time.perf_counter() - t0)


def _edges_mismatch(a: BandSet, b: BandSet) -> float:
    if len(a) != len(b):
        return math.inf
    return float(np.abs(a.intervals - b.intervals).max())


def check_duality(alpha: Rational, beta: float) -> VerificationReport:
    if not beta > 1:
        if beta != 1:
            raise DomainError("check_duality needs beta >= 1")
    t0 = time.perf_counter()
    direct = bands_union_theta(alpha, beta)
    dual = bands_union_theta(alpha, 1.0 / beta).scaled(beta)
    dev = _edges_mismatch(direct, dual)
    details = {"band_count": len(direct), "dual_band_count": len(dual)}
    return _report("duality", "duality", {"alpha": str(alpha), "beta": beta}, {"edge_mismatch": dev}, details, t0)


THOULESS_PHASES = 8


def default_thouless_samples(n: int = 10, radius: float = 8.0) -> np.ndarray:
    return radius * np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)


def check_thouless(
    alpha: Rational, beta: float, z_samples=None, N: int = 100_000, M: int = 4000
) -> VerificationReport:
    t0 = time.perf_counter()
    z = default_thouless_samples() if z_samples is None else np.asarray(z_samples, dtype=complex)
    bands = bands_union_theta(alpha, beta)
    off = np.array([bands.distance(zz.real)[0] if abs(zz.imag) < 0.1 else math.inf for zz in z])
    if np.any(off < 0.1):
        raise DomainError("check_thouless samples must lie at least 0.1 away from the bands")
    params = AmoParams(alpha, beta, 0.0)
    zz = z.real if not np.any(z.imag) else z
    # off the spectrum a periodic exponent depends on theta; the IDS is a phase average
    lyap = lyapunov_theta_average(zz, params, THOULESS_PHASES, N)
    pot, _ = log_potential_many(z, ids_measure(alpha, beta, M))
    diff = np.abs(lyap - pot)
    key = "thouless_free" if beta == 0 else "thouless"
    details = {"z": [[float(w.real), float(w.imag)] for w in z], "lyapunov": lyap.tolist(), "potential": pot.tolist()}
    p = {"alpha": str(alpha), "beta": beta, "N": N, "M": M}
    return _report("thouless", key, p, {"max_abs_diff": float(diff.max())}, details, t0)


QUANTILE_LEVELS = np.arange(1, 100) / 100.0


def check_equilibrium(alpha: Rational, beta: float, M: int = 512) -> VerificationReport:
    t0 = time.perf_counter()
    ids = ids_measure(alpha, beta, M)
    eq = equilibrium_measure(bands_union_theta(alpha, beta), M)
    diff = np.abs(ids.quantile(QUANTILE_LEVELS) - eq.quantile(QUANTILE_LEVELS))
    key = "equilibrium_free" if beta == 0 else "equilibrium"
    worst = int(np.argmax(diff))
    details = {"worst_level": float(QUANTILE_LEVELS[worst])}
    p = {"alpha": str(alpha), "beta": beta, "M": M}
    return _report("equilibrium", key, p, {"quantile_sup": float(diff.max())}, details, t0)


def _cloud_rect(points: np.ndarray, ny: int, pad: float = 0.5):
    """Padded bounding box whose node rows include the real axis.

    The clouds are conjugation symmetric, so the box is symmetric up to the
    last row; for the self-adjoint case the level set lives on the axis itself.
    """
    xr = (points.real.min(), points.real.max())
    ytop = float(np.abs(points.imag).max())
    m = pad + 0.1 * max(xr[1] - xr[0], 2.0 * ytop)
    half = ny // 2
    ymin = -(ytop + m)
    ymax = ymin + (ny - 1) * (-ymin / half)
    return (xr[0] - m, xr[1] + m, ymin, ymax)


def theorem1_deviation(alpha: Rational, beta: float, delta: float, grid: int = 400, M: int = 2000) -> dict:
    """Hausdorff distance between the approximant cloud and the level set."""
    # the delta <-> 1/delta equivalence: compute with delta >= 1 so both give bit-identical numbers
    delta = max(delta, 1.0 / delta)
    pert = Perturbation(delta)
    cloud = hdelta_cloud(alpha, beta, pert)
    pts = cloud.points
    # conjugation closes the cloud into a symmetric set (canonical, order-free)
    pts = np.concatenate([pts, np.conj(pts)])
    rect = _cloud_rect(pts, grid)
    fld = potential_field(ids_measure(alpha, beta, M), rect, grid, grid)
    level = math.log(abs(beta)) + math.log(delta)
    curves = level_curves(fld, level)
    lp = points_of(curves)
    if lp.size == 0:
        return {"q": alpha.q, "deviation": math.inf, "curves": 0, "cloud_points": int(pts.size), "failed_roots": cloud.failed}
    h = hausdorff_distance(pts, lp)
    return {
        "q": alpha.q,
        "deviation": h.d_max,
        "cloud_to_level": h.d_ab,
        "level_to_cloud": h.d_ba,
        "curves": len(curves),
        "cloud_points": int(pts.size),
        "failed_roots": cloud.failed,
    }


def check_theorem1(convergents, beta: float, delta: float, grid: int = 400, M: int = 2000) -> VerificationReport:
    if not beta > 1:
        raise DomainError("check_theorem1 needs beta > 1")
    if not delta > 0:
        raise DomainError("check_theorem1 needs delta > 0")
    t0 = time.perf_counter()
    convergents = list(convergents)
    rows = [theorem1_deviation(a, beta, delta, grid, M) for a in convergents]
    devs = [r["deviation"] for r in rows]
    params = {"convergents": [str(a) for a in convergents], "beta": beta, "delta": delta, "grid": grid, "M": M}
    details = {"per_q": rows}
    if delta == 1.0:
        return _report("theorem1", "theorem1_selfadjoint", params, {"deviation_last": devs[-1]}, details, t0)
    ratios = [b / a if a > 0 else math.inf for a, b in zip(devs, devs[1:])]
    worst = max(ratios) if ratios else 0.0
    return _report("theorem1", "theorem1", params, {"deviation_last": devs[-1], "worst_step_ratio": worst}, details, t0)


def localization_energies(alpha: Rational, beta: float, samples: int) -> np.ndarray:
    """Centres of ``samples`` union bands spread evenly by band index.

    The outermost bands are skipped; with fewer bands than samples, the
    equal-mass IDS quantiles are used instead.
    """
    bands = bands_union_theta(alpha, beta)
    iv = bands.intervals
    if len(iv) >= samples + 2:
        idx = np.round(np.linspace(0, len(iv) - 1, samples + 2)[1:-1]).astype(int)
        return iv[idx].mean(axis=1)
    return ids_measure(alpha, beta, samples).points


def check_localization(alpha: Rational, beta: float, samples: int = 5, N: int = 2000) -> VerificationReport:
    if beta < 0:
        raise DomainError("check_localization needs beta >= 0")
    t0 = time.perf_counter()
    # a quarter-step phase: generic, away from the reflection-symmetric phases
    params = AmoParams(alpha, beta, math.pi / (2 * alpha.q))
    energies = localization_energies(alpha, beta, samples)
    rates, eigs, fails = [], [], 0
    for E in energies:
        try:
            res = localization_probe(params, float(E), N)
        except ProbeFailed as exc:
            fails += 1
            res = exc.result
        rates.append(res.decay_rate)
        eigs.append(res.eigenvalue)
    rates, eigs = np.array(rates), np.array(eigs)
    lyap = lyapunov_theta_average(eigs, params, 8, 100_000)
    details = {
        "energies": energies.tolist(),
        "eigenvalues": eigs.tolist(),
        "decay_rates": rates.tolist(),
        "lyapunov": lyap.tolist(),
        "probe_failures": fails,
        "theta": params.theta,
    }
    p = {"alpha": str(alpha), "beta": beta, "samples": samples, "N": N}
    if beta > 1:
        devs = {
            "rate_vs_log_beta": float(np.abs(rates - math.log(beta)).max()),
            "rate_vs_lyapunov": float(np.abs(rates - lyap).max()),
        }
        return _report("localization", "localization", p, devs, details, t0)
    details["applicable"] = False
    key = "localization_control" if beta == 0 else "localization_dual"
    return _report("localization", key, p, {"max_rate": float(np.abs(rates).max())}, details, t0)


CLAIMS = {
    "duality": check_duality,
    "thouless": check_thouless,
    "equilibrium": check_equilibrium,
    "theorem1": check_theorem1,
    "localization": check_localization,
}
