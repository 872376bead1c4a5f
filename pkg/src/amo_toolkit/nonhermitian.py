"""Spectra of the non-self-adjoint perturbation for periodic approximants.

The spectrum of the period-q operator is the set of z solving
``Delta_delta(z, theta) = 2 cos kappa`` over quasi-momenta kappa; for each
(theta, kappa) pair that is a degree-q polynomial equation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .cocycle import _require_rational, discriminant_poly, period_potential, transfer_trace
from .errors import DomainError, RootsFailed, SizeError
from .operator import SELF_ADJOINT, Perturbation
from .rational import Rational

NONHERMITIAN_QMAX = 60
GRID_DEFAULT = 64
CHUNK_ENTRIES = 1 << 21
EPS = np.finfo(float).eps


def _horner(coeffs: np.ndarray, z: np.ndarray):
    """r(z), r'(z) and sum_k |c_k| |z|^k for batched ascending coefficients.

    coeffs has shape (B, n+1); z has shape (B, n).
    """
    p = np.broadcast_to(coeffs[:, -1:], z.shape).astype(complex)
    dp = np.zeros_like(p)
    scale = np.broadcast_to(np.abs(coeffs[:, -1:]), z.shape).astype(float)
    az = np.abs(z)
    for k in range(coeffs.shape[1] - 2, -1, -1):
        dp = dp * z + p
        p = p * z + coeffs[:, k : k + 1]
        scale = scale * az + np.abs(coeffs[:, k : k + 1])
    return p, dp, scale


def _newton_ratio(coeffs: np.ndarray, z: np.ndarray):
    """p(z)/p'(z) and a rounding-floor flag, without overflow for large |z|.

    Outside the unit disc the reversed polynomial r(w) = w^n p(1/w) is used:
    p/p' = z r / (n r - w r').
    """
    n = coeffs.shape[1] - 1
    outer = np.abs(z) > 1.0
    zi = np.where(outer, 0.0, z)
    w = np.where(outer, 1.0 / np.where(outer, z, 1.0), 0.0)
    p, dp, sc = _horner(coeffs, zi)
    r, dr, sr = _horner(coeffs[:, ::-1], w)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(outer, z * r / (n * r - w * dr), p / dp)
    floor = np.where(outer, np.abs(r) <= 16.0 * EPS * sr, np.abs(p) <= 16.0 * EPS * sc)
    return ratio, floor


def _aberth(coeffs: np.ndarray, tol: float, max_iters: int):
    coeffs = np.asarray(coeffs, dtype=complex)
    B, n = coeffs.shape[0], coeffs.shape[1] - 1
    lead = coeffs[:, -1:]
    radius = 1.0 + np.abs(coeffs[:, :-1] / lead).max(axis=1, keepdims=True)
    # fixed, non-symmetric phase offsets keep the start off any symmetry axis
    angles = 2.0 * np.pi * np.arange(n) / n + 0.4
    z = radius * np.exp(1j * angles)[None, :]
    done = np.zeros((B, n), dtype=bool)
    update = np.full((B, n), np.inf)
    idx = np.arange(n)
    for _ in range(max_iters):
        rows = np.nonzero(~done.all(axis=1))[0]
        if rows.size == 0:
            return z, True, 0.0
        zr = z[rows]
        ratio, at_floor = _newton_ratio(coeffs[rows], zr)
        with np.errstate(divide="ignore", invalid="ignore"):
            diff = zr[:, :, None] - zr[:, None, :]
            diff[:, idx, idx] = np.inf
            s = (1.0 / diff).sum(axis=2)
            step = ratio / (1.0 - ratio * s)
        step = np.where(np.isfinite(step), step, 0.0)
        step[at_floor | done[rows]] = 0.0
        z[rows] = zr - step
        update[rows] = np.abs(step)
        done[rows] |= at_floor | (update[rows] < tol)
    if done.all():
        return z, True, 0.0
    return z, False, float(update[~done].max())


def poly_roots(coeffs, tol: float = 1e-12, max_iters: int = 2000) -> np.ndarray:
    """All roots of sum_k coeffs[k] z^k by simultaneous Aberth iteration.

    A root stops moving once its update drops below ``tol`` or the residual
    reaches the rounding floor of the evaluation.
    """
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or c.size < 2:
        raise DomainError("poly_roots needs degree >= 1")
    if c[-1] == 0:
        raise DomainError("leading coefficient must be nonzero")
    z, ok, upd = _aberth(c[None, :], tol, max_iters)
    if not ok:
        raise RootsFailed(f"Aberth iteration did not converge (last update {upd:.3g})", z[0], upd)
    return z[0]


def _polish(z: np.ndarray, v: np.ndarray, target: float, steps: int = 3) -> np.ndarray:
    """Newton steps on the transfer-product form of the Floquet equation.

    The monomial coefficients lose digits like beta^q; the product does not.
    A step is kept only where it lowers the residual.
    """
    f, df = transfer_trace(z, v, derivative=True)
    f = f - target
    for _ in range(steps):
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = z - f / df
        ok = np.isfinite(cand)
        cand = np.where(ok, cand, z)
        fc, dfc = transfer_trace(cand, v, derivative=True)
        fc = fc - target
        better = np.abs(fc) < np.abs(f)
        z = np.where(better, cand, z)
        f = np.where(better, fc, f)
        df = np.where(better, dfc, df)
    return z


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray  # complex
    theta_index: np.ndarray
    kappa_index: np.ndarray
    failed: int = 0

    def __len__(self):
        return self.points.size


def default_theta_grid(q: int, n: int = GRID_DEFAULT) -> np.ndarray:
    """n phases spread over one period [0, 2 pi / q).

    The Floquet polynomial depends on theta only through e^{i q theta}; a grid
    over [0, 2 pi) would alias to gcd(n, q)-fold repeats whenever q divides n.
    """
    return 2.0 * np.pi * np.arange(n) / (n * q)


def default_kappa_grid(n: int = GRID_DEFAULT) -> np.ndarray:
    # midpoints of [0, pi]: 2 cos kappa stays strictly inside (-2, 2), so the
    # band-edge double roots of the self-adjoint case never appear
    return np.pi * (np.arange(n) + 0.5) / n


def hdelta_cloud(
    alpha: Rational,
    beta: float,
    pert: Perturbation = SELF_ADJOINT,
    theta_grid=None,
    kappa_grid=None,
    tol: float = 1e-12,
    max_iters: int = 2000,
) -> PointCloud:
    alpha = _require_rational(alpha)
    if not pert.hermitian and alpha.q > NONHERMITIAN_QMAX:
        raise SizeError(f"q = {alpha.q} exceeds the cap {NONHERMITIAN_QMAX} for delta != 1")
    thetas = default_theta_grid(alpha.q) if theta_grid is None else np.asarray(theta_grid, dtype=float)
    kappas = default_kappa_grid() if kappa_grid is None else np.asarray(kappa_grid, dtype=float)
    if thetas.size == 0 or kappas.size == 0:
        raise DomainError("theta and kappa grids must be nonempty")
    rhs = 2.0 * np.cos(kappas)
    nt, nk, q = thetas.size, kappas.size, alpha.q
    coeffs = np.empty((nt, nk, q + 1), dtype=complex)
    for it, th in enumerate(thetas):
        coeffs[it] = discriminant_poly(alpha, beta, th, pert).coefficients
        coeffs[it, :, 0] -= rhs
    coeffs = coeffs.reshape(nt * nk, q + 1)
    roots = np.empty((nt * nk, q), dtype=complex)
    ok = np.ones(nt * nk, dtype=bool)
    chunk = max(1, CHUNK_ENTRIES // (q * q))
    for lo in range(0, nt * nk, chunk):
        z, conv, _ = _aberth(coeffs[lo : lo + chunk], tol, max_iters)
        roots[lo : lo + chunk] = z
        if not conv:
            # redo row by row so one stubborn fiber does not sink the chunk
            for r in range(lo, min(lo + chunk, nt * nk)):
                try:
                    roots[r] = poly_roots(coeffs[r], tol, max_iters)
                except RootsFailed:
                    ok[r] = False
    roots = roots.reshape(nt, nk, q)
    ok = ok.reshape(nt, nk)
    for it, th in enumerate(thetas):
        v = period_potential(alpha, beta, th, pert).astype(complex)
        roots[it] = _polish(roots[it], v, rhs[:, None])
    pts = np.empty_like(roots)
    for it in range(nt):
        for k in range(nk):
            r = roots[it, k]
            pts[it, k] = r[np.lexsort((r.imag, r.real))]
    ti = np.broadcast_to(np.arange(nt)[:, None, None], pts.shape)
    ki = np.broadcast_to(np.arange(nk)[None, :, None], pts.shape)
    keep = np.broadcast_to(ok[:, :, None], pts.shape)
    return PointCloud(pts[keep], ti[keep].copy(), ki[keep].copy(), int((~ok).sum()))


def monodromy_residual(cloud: PointCloud, alpha: Rational, beta: float, pert: Perturbation, theta_grid=None, kappa_grid=None):
    """|Delta(z, theta) - 2 cos kappa| / (1 + |z|^q) via the transfer product."""
    thetas = default_theta_grid(alpha.q) if theta_grid is None else np.asarray(theta_grid, dtype=float)
    kappas = default_kappa_grid() if kappa_grid is None else np.asarray(kappa_grid, dtype=float)
    out = np.empty(cloud.points.size)
    for it in np.unique(cloud.theta_index):
        sel = cloud.theta_index == it
        v = period_potential(alpha, beta, thetas[it], pert).astype(complex)
        z = cloud.points[sel]
        resid = np.abs(transfer_trace(z, v) - 2.0 * np.cos(kappas[cloud.kappa_index[sel]]))
        with np.errstate(over="ignore"):
            out[sel] = resid / (1.0 + np.abs(z) ** alpha.q)
    return out


@dataclass(frozen=True)
class Hausdorff:
    d_ab: float
    d_ba: float
    d_max: float


def _as_xy(a) -> np.ndarray:
    if isinstance(a, PointCloud):
        a = a.points
    elif hasattr(a, "points"):
        a = a.points
    elif isinstance(a, (list, tuple)) and a and all(hasattr(p, "points") for p in a):
        a = points_of(a)
    a = np.asarray(a).ravel()
    if a.size == 0:
        raise DomainError("hausdorff_distance needs nonempty point sets")
    a = a.astype(complex)
    return np.column_stack([a.real, a.imag])


def hausdorff_distance(a, b) -> Hausdorff:
    """Directed sup-min distances both ways (complex arrays, clouds or polylines)."""
    A, B = _as_xy(a), _as_xy(b)
    d_ab = float(cKDTree(B).query(A)[0].max())
    d_ba = float(cKDTree(A).query(B)[0].max())
    return Hausdorff(d_ab, d_ba, max(d_ab, d_ba))


def points_of(polylines) -> np.ndarray:
    if not polylines:
        return np.empty(0, complex)
    return np.concatenate([pl.points for pl in polylines])
