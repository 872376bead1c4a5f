"""Self-adjoint spectra: Sturm counts, Floquet band sets, IDS, localization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .cocycle import ChambersForm, chambers_decompose, period_potential, transfer_trace
from .errors import DomainError, ProbeFailed
from .operator import SELF_ADJOINT, AmoParams, TridiagonalOperator, truncation_matrix
from .rational import Rational

PIVMIN = 1e-300
PAIR_TOL = 1e-4
# a critical value within this relative distance of the band threshold is a closed gap
CLOSED_GAP_RTOL = 1e-9
MULTIPLET_GAP = 1e-12
POLISH_STEPS = 2


@dataclass(frozen=True)
class BandSet:
    intervals: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self):
        iv = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        if np.any(iv[:, 0] > iv[:, 1]) or np.any(iv[1:, 0] <= iv[:-1, 1]):
            raise DomainError("band intervals must be sorted, disjoint and closed")
        object.__setattr__(self, "intervals", iv)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(map(tuple, self.intervals))

    @property
    def edges(self) -> np.ndarray:
        return self.intervals.ravel()

    @property
    def measure(self) -> float:
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))

    def distance(self, x) -> np.ndarray:
        """Distance from each point of ``x`` to the nearest band (0 inside)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.intervals[:, 0], self.intervals[:, 1]
        d = np.maximum(lo[None, :] - x[:, None], x[:, None] - hi[None, :])
        return np.maximum(d, 0.0).min(axis=1)

    def scaled(self, s: float) -> "BandSet":
        iv = self.intervals * s
        if s < 0:
            iv = iv[::-1, ::-1]
        return BandSet(iv)


@dataclass(frozen=True)
class StepMeasure:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.shape != w.shape or pts.ndim != 1 or pts.size == 0:
            raise DomainError("points and weights must be matching nonempty 1-d arrays")
        if np.any(np.diff(pts) <= 0):
            raise DomainError("support points must be strictly increasing")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("weights must be nonnegative with unit total mass")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.points.size

    def cdf(self, x):
        cw = np.concatenate([[0.0], np.cumsum(self.weights)])
        return cw[np.searchsorted(self.points, x, side="right")]

    def quantile(self, t):
        """Left-continuous inverse of the CDF."""
        cw = np.cumsum(self.weights)
        cw[-1] = 1.0
        idx = np.searchsorted(cw, np.asarray(t) - 1e-15, side="left")
        return self.points[np.minimum(idx, self.points.size - 1)]


# -- Sturm counts ---------------------------------------------------------

def sturm_count(op: TridiagonalOperator, x) -> np.ndarray:
    """Number of eigenvalues strictly below each shift in ``x``.

    Dirichlet chains use the LDL^T pivot recursion.  For the ring the last
    row and column are split off and Haynsworth inertia additivity adds the
    sign of the Schur complement.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a = op.diagonal
    ring = op.boundary == "periodic"
    n = a.size - 1 if ring else a.size
    d = _clamp(a[0] - x)
    count = (d < 0).astype(np.int64)
    if not ring:
        for i in range(1, n):
            d = _clamp(a[i] - x - 1.0 / d)
            count += d < 0
        return count
    # forward solve of L y = u with u = e_0 + e_{n-1}; schur accumulates u^T (H_11 - x)^{-1} u
    y = np.ones_like(x)
    schur = np.zeros_like(x)
    consumed = np.zeros(x.shape, dtype=bool)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        for i in range(1, n):
            e = 1.0 if i == n - 1 else 0.0
            ai = a[i] - x
            # a tiny pivot and its huge successor form a 2x2 block; summing their
            # two huge Schur terms separately would cancel away every digit
            pair = ~consumed & (np.abs(d) * (1.0 + np.abs(ai)) < PAIR_TOL)
            paired = (y * y * ai + e * e * d - 2.0 * e * y) / (ai * d - 1.0)
            single = np.where(consumed, 0.0, y * y / d)
            schur += np.where(pair, paired, single)
            consumed = pair
            y = e - y / d
            d = _clamp(ai - 1.0 / d)
            count += d < 0
        schur += np.where(consumed, 0.0, y * y / d)
        s = a[n] - x - schur
    count += s < 0
    return count


def _clamp(d):
    return np.where(np.abs(d) < PIVMIN, -PIVMIN, d)


def gershgorin(op: TridiagonalOperator) -> tuple[float, float]:
    return float(op.diagonal.min()) - 2.0, float(op.diagonal.max()) + 2.0


def sturm_eigenvalues(op: TridiagonalOperator, tol: float = 1e-12, indices=None) -> np.ndarray:
    """Eigenvalues (ascending) by simultaneous bisection on the Sturm count."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    k = np.arange(op.size) if indices is None else np.asarray(indices)
    lo_b, hi_b = gershgorin(op)
    lo = np.full(k.shape, lo_b - tol)
    hi = np.full(k.shape, hi_b + tol)
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        below = sturm_count(op, mid) > k
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
    return 0.5 * (lo + hi)


def multiplets(eigenvalues, gap: float = MULTIPLET_GAP) -> list[tuple[float, int]]:
    """Group sorted eigenvalues closer than ``gap`` into (value, multiplicity)."""
    out = []
    for e in np.sort(np.asarray(eigenvalues)):
        if out and e - out[-1][0] < gap:
            v, m = out[-1]
            out[-1] = (v, m + 1)
        else:
            out.append((float(e), 1))
    return out


# -- band sets --------------------------------------------------------------

def _bisect(f, lo, hi, target, iters=200):
    """Vectorised bisection for f(x) = target on brackets where f is increasing."""
    lo, hi, target = np.array(lo, float), np.array(hi, float), np.asarray(target, float)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        up = f(mid) >= target
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    return 0.5 * (lo + hi)


def critical_points(fprime, lo: float, hi: float, expected: int, samples: int) -> np.ndarray:
    """Sign changes of f' on a uniform grid, refined by bisection.

    The grid is doubled (up to 256x) until ``expected`` brackets are seen.
    """
    if expected <= 0:
        return np.empty(0)
    n = samples
    for _ in range(9):
        grid = np.linspace(lo, hi, n + 1)
        g = fprime(grid)
        s = np.sign(g)
        idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
        exact = np.nonzero(s == 0)[0]
        if idx.size + exact.size >= expected:
            break
        n *= 2
    a, b = grid[idx], grid[idx + 1]
    rising = g[idx] < 0
    roots = _bisect(lambda x: np.where(rising, fprime(x), -fprime(x)), a, b, 0.0)
    return np.unique(np.concatenate([roots, grid[exact]]))


def sublevel_intervals(f, fprime, degree: int, level: float, lo: float, hi: float) -> np.ndarray:
    """Closed set {x in [lo, hi] : |f(x)| <= level} for a real-rooted polynomial f.

    Between consecutive critical points f is monotone; on each such piece the
    set is one interval whose ends solve f = +-level.
    """
    crit = critical_points(fprime, lo, hi, degree - 1, 64 * degree)
    brk = np.concatenate([[lo], crit, [hi]])
    fb = f(brk)
    touching = np.abs(fb) <= level * (1.0 + CLOSED_GAP_RTOL)
    touching[[0, -1]] = np.abs(fb[[0, -1]]) <= level
    pieces = []
    for i in range(brk.size - 1):
        a, b = brk[i], brk[i + 1]
        sgn = 1.0 if fb[i + 1] >= fb[i] else -1.0
        ga, gb = sgn * fb[i], sgn * fb[i + 1]
        if touching[i]:
            ga = max(min(ga, level), -level)
        if touching[i + 1]:
            gb = max(min(gb, level), -level)
        if gb < -level or ga > level:
            continue
        g = lambda x, s=sgn: s * f(x)
        left = a if ga >= -level else float(_bisect(g, a, b, -level))
        right = b if gb <= level else float(_bisect(g, a, b, level))
        pieces.append([left, right])
    merged = []
    for l, r in pieces:
        if merged and l <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], r)
        else:
            merged.append([l, r])
    return np.array(merged).reshape(-1, 2)


def spectral_radius_bound(beta: float) -> float:
    return 2.0 + 2.0 * abs(beta)


def bands_fixed_theta(alpha: Rational, beta: float, theta: float) -> BandSet:
    """Delta^{-1}([-2, 2]) for the period-q operator at phase theta."""
    v = period_potential(alpha, beta, theta, SELF_ADJOINT)
    R = spectral_radius_bound(beta) + 0.25
    f = lambda E: transfer_trace(E, v)
    fp = lambda E: transfer_trace(E, v, derivative=True)[1]
    return BandSet(sublevel_intervals(f, fp, alpha.q, 2.0, -R, R))


def bands_union_theta(alpha: Rational, beta: float, chambers: ChambersForm | None = None) -> BandSet:
    """{E : |A(E)| <= 2 + |c|}, the union over theta of the fixed-phase bands."""
    ch = chambers or chambers_decompose(alpha, beta)
    R = spectral_radius_bound(beta) + 0.25
    f = lambda E: ch.A(E)
    fp = lambda E: ch.A(E, derivative=True)[1]
    return BandSet(sublevel_intervals(f, fp, alpha.q, ch.threshold, -R, R))


# -- integrated density of states ---------------------------------------------

def ids_curve(params: AmoParams, energies, N: int = 2000, theta_samples: int = 8) -> np.ndarray:
    """Phase-averaged normalized eigenvalue counts of Dirichlet truncations."""
    if N < 100:
        raise DomainError("ids_estimate needs N >= 100")
    if theta_samples < 1:
        raise DomainError("theta_samples must be >= 1")
    E = np.atleast_1d(np.asarray(energies, dtype=float))
    # for period q the counts depend on theta only through cos(q theta), so
    # the phases are spread over one period at midpoints
    period = params.period or 1
    thetas = params.theta + 2.0 * np.pi * (np.arange(theta_samples) + 0.5) / (theta_samples * period)
    diag = np.stack([truncation_matrix(params.with_theta(t), N).diagonal for t in thetas])
    # one column per (theta, E) pair
    a = np.repeat(diag, E.size, axis=0).T
    x = np.tile(E, theta_samples)
    d = a[0] - x
    d = np.where(np.abs(d) < PIVMIN, -PIVMIN, d)
    count = (d < 0).astype(np.int64)
    for i in range(1, N):
        d = a[i] - x - 1.0 / d
        d = np.where(np.abs(d) < PIVMIN, -PIVMIN, d)
        count += d < 0
    return count.reshape(theta_samples, E.size).mean(axis=0) / N


def ids_estimate(params: AmoParams, E: float, N: int = 2000, theta_samples: int = 8) -> float:
    return float(ids_curve(params, [E], N, theta_samples)[0])


def _arcsine_cdf(y, T):
    return 0.5 + np.arcsin(np.clip(y / T, -1.0, 1.0)) / np.pi


def ids_measure(alpha: Rational, beta: float, M: int, chambers: ChambersForm | None = None) -> StepMeasure:
    """Equal-mass M-point quantile discretization of the pullback-arcsine law.

    Each monotone branch of A carries mass (1/q) times the arcsine mass of its
    image inside [-T, T], T = 2 + |c|; the j-th point is the quantile at level
    (j + 1/2)/M, found by bisection on its branch.
    """
    if M < 2:
        raise DomainError("ids_measure needs M >= 2")
    ch = chambers or chambers_decompose(alpha, beta)
    q, T = alpha.q, ch.threshold
    R = spectral_radius_bound(beta) + 0.25
    f = lambda E: ch.A(E)
    crit = critical_points(lambda E: ch.A(E, derivative=True)[1], -R, R, q - 1, 64 * q)
    brk = np.concatenate([[-R], crit, [R]])
    Fb = _arcsine_cdf(f(brk), T)
    mass = np.abs(np.diff(Fb)) / q
    cum = np.concatenate([[0.0], np.cumsum(mass)])
    total = cum[-1]

    t = (np.arange(M) + 0.5) / M * total
    seg = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, mass.size - 1)
    sgn = np.sign(Fb[seg + 1] - Fb[seg])
    sgn[sgn == 0] = 1.0
    Ftarget = Fb[seg] + sgn * q * (t - cum[seg])
    y = T * np.sin(np.pi * (np.clip(Ftarget, 0.0, 1.0) - 0.5))
    pts = _bisect(lambda E: sgn * f(E), brk[seg], brk[seg + 1], sgn * y)
    return StepMeasure(pts, np.full(M, 1.0 / M))


# -- localization probe ---------------------------------------------------------

@dataclass
class LocalizationResult:
    eigenvalue: float
    decay_rate: float
    fit_residual: float
    iterations: int
    residual: float
    peak: int
    converged: bool = True


def _nearest_eigenvalue(op: TridiagonalOperator, E: float) -> float:
    k = int(sturm_count(op, E)[0])
    idx = [i for i in (k - 1, k) if 0 <= i < op.size]
    eigs = sturm_eigenvalues(op, 1e-14, idx)
    return float(eigs[np.argmin(np.abs(eigs - E))])


def decay_fit(xi: np.ndarray, floor: float = 1e-12) -> tuple[float, float, int]:
    """Exponential decay rate of |xi| away from its peak.

    Uses the outward running maximum of |xi| on each side (so nodes of
    extended states do not count as decay), keeps distances where that
    envelope is above ``floor`` times the peak, and fits a line to its log
    over the middle 60% of that range.
    """
    amp = np.abs(xi)
    peak = int(np.argmax(amp))
    ds, ls = [], []
    for side in (amp[peak + 1:], amp[:peak][::-1]):
        if side.size < 2:
            continue
        env = np.maximum.accumulate(side[::-1])[::-1] / amp[peak]
        above = np.nonzero(env < floor)[0]
        end = above[0] if above.size else side.size
        d = np.arange(1, end + 1)
        keep = (d >= 0.2 * end) & (d <= 0.8 * end)
        ds.append(d[keep])
        ls.append(np.log(env[:end][keep]))
    d = np.concatenate(ds)
    logs = np.concatenate(ls)
    if d.size < 2:
        return 0.0, 0.0, peak
    slope, icpt = np.polyfit(d, logs, 1)
    rms = float(np.sqrt(np.mean((logs - (slope * d + icpt)) ** 2)))
    return float(-slope), rms, peak


def _inverse_iteration(op, ab, x, tol, max_iters):
    lam, res, polish = float("nan"), np.inf, 0
    for it in range(1, max_iters + 1):
        y = solve_banded((1, 1), ab, x)
        x = y / np.linalg.norm(y)
        hx = op.diagonal * x
        hx[1:] += x[:-1]
        hx[:-1] += x[1:]
        lam = float(x @ hx)
        res = float(np.linalg.norm(hx - lam * x))
        # residual alone leaves ~tol contamination from nearby states in the tails
        if res < tol:
            polish += 1
            if polish > POLISH_STEPS:
                break
    return x, lam, res, it


def localization_probe(
    params: AmoParams, E_target: float, N: int = 2000, max_iters: int = 500, tol: float = 1e-10
) -> LocalizationResult:
    """Inverse iteration near ``E_target`` followed by an exponential decay fit.

    The shift is snapped to the truncation eigenvalue nearest ``E_target``
    (Sturm bisection).  A second pass restarts from a unit vector at the peak
    of the first: for periodic data every level has translated copies that are
    degenerate to machine precision, and only a start vector concentrated on
    one copy keeps the others out of the tails.
    """
    if N < 200:
        raise DomainError("localization_probe needs N >= 200")
    op = truncation_matrix(params, N)
    lam0 = _nearest_eigenvalue(op, E_target)
    shift = lam0 + 1e-11 * max(1.0, abs(lam0))
    ab = np.zeros((3, N))
    ab[0, 1:] = 1.0
    ab[2, :-1] = 1.0
    ab[1] = op.diagonal - shift
    n = np.arange(N)
    x = np.exp(-np.abs(n - N // 2).astype(float))
    x, lam, res, it1 = _inverse_iteration(op, ab, x / np.linalg.norm(x), tol, max_iters)
    x0 = np.zeros(N)
    x0[int(np.argmax(np.abs(x)))] = 1.0
    x, lam, res, it2 = _inverse_iteration(op, ab, x0, tol, max_iters)
    rate, rms, peak = decay_fit(x)
    result = LocalizationResult(lam, rate, rms, it1 + it2, res, peak, res < tol)
    if not result.converged:
        raise ProbeFailed(f"inverse iteration did not converge (residual {res:.3g})", result)
    return result


# -- gap statistics -------------------------------------------------------------

@dataclass
class GapReport:
    total_measure: float
    band_count: int
    gaps: list
    exploratory: bool = True


def gap_report(bands: BandSet) -> GapReport:
    iv = bands.intervals
    gaps = [(float(l), float(r), float(r - l)) for l, r in zip(iv[:-1, 1], iv[1:, 0])]
    return GapReport(bands.measure, len(bands), gaps)
