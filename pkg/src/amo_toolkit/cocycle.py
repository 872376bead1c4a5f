"""Transfer-matrix cocycle, Floquet discriminant and Lyapunov exponents.

The eigenvalue equation ``xi_{n+1} + xi_{n-1} + v_n xi_n = z xi_n`` is
propagated by ``(xi_{n+1}, xi_n) = T_n (xi_n, xi_{n-1})`` with
``T_n = [[z - v_n, -1], [1, 0]]``.  For ``alpha = p/q`` the trace of the
period map is a monic degree-q polynomial in ``z``, the discriminant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DecompositionFailed, DomainError, SizeError, UnsupportedError
from .operator import SELF_ADJOINT, AmoParams, Perturbation, potential
from .rational import Rational

DISCRIMINANT_QMAX = 200
CHAMBERS_TOL = 1e-6


def step_matrix(z: complex, v: complex) -> np.ndarray:
    return np.array([[z - v, -1.0], [1.0, 0.0]], dtype=complex)


def period_potential(alpha: Rational, beta: float, theta: float, pert: Perturbation) -> np.ndarray:
    return potential(AmoParams(alpha, beta, theta), pert, np.arange(alpha.q))


def _require_rational(alpha) -> Rational:
    if not isinstance(alpha, Rational):
        raise DomainError("this operation needs a rational alpha = p/q")
    return alpha


def monodromy(z: complex, params: AmoParams, pert: Perturbation, q: int) -> np.ndarray:
    """Ordered product T_{q-1} ... T_0 over one period."""
    alpha = _require_rational(params.alpha)
    if q != alpha.q:
        raise DomainError(f"period {q} does not match alpha = {alpha}")
    v = potential(params, pert, np.arange(q))
    m = np.eye(2, dtype=complex)
    for vn in v:
        m = step_matrix(z, vn) @ m
    return m


def transfer_trace(z, v, derivative=False):
    """Trace of T_{len(v)-1} ... T_0 at every entry of ``z`` (vectorised).

    With ``derivative=True`` also returns d(trace)/dz, carried through the
    product rule alongside the entries.
    """
    z = np.asarray(z)
    dtype = np.result_type(z.dtype, np.asarray(v).dtype, float)
    a = np.ones(z.shape, dtype)
    b = np.zeros(z.shape, dtype)
    c = np.zeros(z.shape, dtype)
    d = np.ones(z.shape, dtype)
    if derivative:
        da, db = np.zeros(z.shape, dtype), np.zeros(z.shape, dtype)
        dc, dd = np.zeros(z.shape, dtype), np.zeros(z.shape, dtype)
    for vn in v:
        w = z - vn
        if derivative:
            da, db, dc, dd = a + w * da - dc, b + w * db - dd, da, db
        a, b, c, d = w * a - c, w * b - d, a, b
    if derivative:
        return a + d, da + dd
    return a + d


@dataclass(frozen=True)
class DiscriminantPoly:
    """Monic degree-q polynomial, coefficients in ascending order."""

    coefficients: np.ndarray
    alpha: Rational
    beta: float
    theta: float
    delta: float

    @property
    def degree(self) -> int:
        return self.coefficients.size - 1

    def __call__(self, z):
        return P.polyval(z, self.coefficients)

    def derivative(self):
        return P.polyder(self.coefficients)


def _poly_product(v: np.ndarray) -> np.ndarray:
    """Trace polynomial of the period product, entries carried exactly."""
    q = v.size
    dtype = np.result_type(v.dtype, float)
    a = np.zeros(q + 1, dtype)
    b = np.zeros(q + 1, dtype)
    c = np.zeros(q + 1, dtype)
    d = np.zeros(q + 1, dtype)
    a[0] = d[0] = 1.0
    for vn in v:
        # (z - v) * p  ->  shift-by-one minus v * p
        na = -vn * a - c
        na[1:] += a[:-1]
        nb = -vn * b - d
        nb[1:] += b[:-1]
        a, b, c, d = na, nb, a, b
    return a + d


def discriminant_poly(
    alpha: Rational, beta: float, theta: float, pert: Perturbation = SELF_ADJOINT
) -> DiscriminantPoly:
    alpha = _require_rational(alpha)
    if alpha.q > DISCRIMINANT_QMAX:
        raise SizeError(f"q = {alpha.q} exceeds the discriminant cap {DISCRIMINANT_QMAX}")
    v = period_potential(alpha, beta, theta, pert)
    coeffs = _poly_product(v)
    coeffs[-1] = 1.0
    return DiscriminantPoly(coeffs, alpha, beta, theta, pert.delta)


@dataclass(frozen=True)
class ChambersForm:
    """Delta(z, theta) = A(z) - c cos(q theta) for the self-adjoint family.

    ``residual`` is the fit mismatch scaled by the rounding magnitude
    ``1 + |c| + sum_k |a_k| |z|^k``; ``abs_residual`` is the raw maximum.
    """

    coefficients: np.ndarray
    c: float
    residual: float
    abs_residual: float
    alpha: Rational
    beta: float

    @property
    def q(self) -> int:
        return self.alpha.q

    @property
    def threshold(self) -> float:
        return 2.0 + abs(self.c)

    def A(self, E, derivative=False):
        """Evaluate A (and A') through the transfer product.

        At theta* = pi/(2q) the cosine term nearly vanishes; adding it back
        explicitly gives A to the accuracy of the product itself, which stays
        usable for q where the monomial form has lost all digits.
        """
        theta_star = math.pi / (2 * self.q)
        v = period_potential(self.alpha, self.beta, theta_star, SELF_ADJOINT)
        shift = self.c * math.cos(self.q * theta_star)
        out = transfer_trace(np.asarray(E, dtype=float), v, derivative)
        if derivative:
            return out[0] + shift, out[1]
        return out + shift

    def poly(self, E):
        return P.polyval(E, self.coefficients)


def default_theta_grid_size(q: int) -> int:
    # an equispaced grid whose size divides q sees a constant cos(q theta)
    return 65 if q % 64 == 0 else 64


def chambers_decompose(
    alpha: Rational, beta: float, pert: Perturbation = SELF_ADJOINT, theta_grid_size: int | None = None
) -> ChambersForm:
    alpha = _require_rational(alpha)
    if not pert.hermitian:
        raise UnsupportedError("Chambers decomposition is fitted for delta = 1 only")
    q = alpha.q
    T = default_theta_grid_size(q) if theta_grid_size is None else theta_grid_size
    if T < 4:
        raise DomainError("theta_grid_size must be >= 4")
    if q % T == 0:
        raise DomainError(f"theta grid of size {T} cannot resolve cos({q} theta)")
    thetas = 2.0 * np.pi * np.arange(T) / T
    coeffs = np.array([discriminant_poly(alpha, beta, t, pert).coefficients for t in thetas])
    cosq = np.cos(q * thetas)

    a = coeffs.mean(axis=0)
    design = np.column_stack([np.ones(T), -cosq])
    (a0, c), *_ = np.linalg.lstsq(design, coeffs[:, 0], rcond=None)
    a[0] = a0
    a[-1] = 1.0

    R = 2.0 + 2.0 * abs(beta) + 0.5
    k = np.arange(20)
    zs = R * np.cos(np.pi * (k + 0.5) / 20)
    worst = worst_abs = 0.0
    model = P.polyval(zs, a)
    scale = 1.0 + abs(c) + P.polyval(np.abs(zs), np.abs(a))
    for t, cq in zip(thetas, cosq):
        v = period_potential(alpha, beta, t, pert)
        diff = np.abs(transfer_trace(zs, v) - (model - c * cq))
        worst_abs = max(worst_abs, float(diff.max()))
        worst = max(worst, float((diff / scale).max()))
    if worst > CHAMBERS_TOL:
        raise DecompositionFailed(f"Chambers fit residual {worst:.3g} for alpha={alpha}, beta={beta}", worst)
    return ChambersForm(a, float(c), worst, worst_abs, alpha, beta)


def _lyapunov_core(z: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Norm-growth rate of the cocycle; v has shape (N, B), z shape (B,).

    The product is rescaled by its max-entry norm after every step and the
    logarithms of the scale factors are summed in step order.
    """
    N = v.shape[0]
    dtype = np.result_type(z.dtype, v.dtype, float)
    a = np.ones(z.shape, dtype)
    b = np.zeros(z.shape, dtype)
    c = np.zeros(z.shape, dtype)
    d = np.ones(z.shape, dtype)
    acc = np.zeros(z.shape, float)
    for n in range(N):
        w = z - v[n]
        a, b, c, d = w * a - c, w * b - d, a, b
        s = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.maximum(np.abs(c), np.abs(d)))
        a /= s
        b /= s
        c /= s
        d /= s
        acc += np.log(s)
    return acc / N


def lyapunov_many(z, params_list, pert: Perturbation = SELF_ADJOINT, N: int = 100_000) -> np.ndarray:
    """Batched ``lyapunov_finite`` over paired z values and parameter sets."""
    if N < 100:
        raise DomainError("lyapunov_finite needs N >= 100")
    z = np.atleast_1d(np.asarray(z))
    params_list = list(params_list)
    if len(params_list) != z.size:
        raise DomainError("need one parameter set per z value")
    n = np.arange(N)
    v = np.stack([potential(p, pert, n) for p in params_list], axis=1)
    if np.iscomplexobj(z) and not np.any(z.imag):
        z = z.real
    return _lyapunov_core(z, v)


def lyapunov_finite(z: complex, params: AmoParams, pert: Perturbation = SELF_ADJOINT, N: int = 100_000) -> float:
    return float(lyapunov_many([z], [params], pert, N)[0])


def lyapunov_theta_average(
    z, params: AmoParams, n_theta: int = 8, N: int = 100_000, pert: Perturbation = SELF_ADJOINT
) -> np.ndarray:
    """Lyapunov exponent averaged over a phase grid offset from ``params.theta``.

    For rational alpha a single phase can sit exactly on a (possibly
    exponentially thin) band of the periodic operator; averaging over phases
    recovers the phase-independent exponent of the approximant.
    """
    z = np.atleast_1d(np.asarray(z))
    thetas = params.theta + 2.0 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    zz = np.repeat(z, n_theta)
    plist = [params.with_theta(t) for _ in z for t in thetas]
    return lyapunov_many(zz, plist, pert, N).reshape(z.size, n_theta).mean(axis=1)
