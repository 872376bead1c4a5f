"""Logarithmic potentials of discrete measures on the real line.

Equilibrium measures are computed on a fixed support grid by maximising a
discrete logarithmic energy over the probability simplex.  Capacities are read
off the off-diagonal energy ``sum_{i != j} w_i w_j log|s_i - s_j|``, which
biases the Robin constant by roughly ``(log(M/4) + 1.5) / M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityZeroError, DomainError
from .hermitian import BandSet, StepMeasure

SINGULAR_RADIUS = 1e-14
WEIGHT_TOL = 1e-10
FIELD_CHUNK = 1 << 15


def _log_sums(z: np.ndarray, mu: StepMeasure) -> tuple[np.ndarray, np.ndarray]:
    z = np.asarray(z, dtype=complex).ravel()
    vals = np.empty(z.size)
    sing = np.zeros(z.size, dtype=bool)
    step = max(1, FIELD_CHUNK // max(1, mu.points.size))
    for k in range(0, z.size, step):
        dist = np.abs(z[k : k + step, None] - mu.points[None, :])
        hit = (dist < SINGULAR_RADIUS).any(axis=1)
        vals[k : k + step] = np.log(np.maximum(dist, SINGULAR_RADIUS)) @ mu.weights
        sing[k : k + step] = hit
    vals[sing] = -np.inf
    return vals, sing


def log_potential(z: complex, mu: StepMeasure) -> float:
    """sum_j w_j log|z - s_j|; ``-inf`` when z sits on a support point."""
    return float(_log_sums(np.array([z]), mu)[0][0])


def log_potential_many(z, mu: StepMeasure) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``log_potential``: values (same shape as z) and a singular mask."""
    z = np.asarray(z)
    vals, sing = _log_sums(z, mu)
    return vals.reshape(z.shape), sing.reshape(z.shape)


# -- equilibrium measure ---------------------------------------------------


def band_support(bands: BandSet, M: int) -> tuple[np.ndarray, np.ndarray]:
    """M midpoint-rule nodes spread over the bands in proportion to length.

    Returns the nodes and the width of the cell each one represents.

    Every band of positive length gets at least one node while M allows it;
    the remainder is split by largest fractional share.
    """
    iv = np.asarray(bands.intervals, dtype=float)
    lengths = iv[:, 1] - iv[:, 0]
    total = lengths.sum()
    if total <= 0.0:
        raise CapacityZeroError("band set has zero length; its capacity vanishes")
    share = M * lengths / total
    counts = np.floor(share).astype(int)
    positive = lengths > 0
    if positive.sum() <= M:
        counts[positive & (counts == 0)] = 1
    while counts.sum() > M:
        k = int(np.argmax(np.where(counts > 1, counts - share, -np.inf)))
        counts[k] -= 1
    order = np.argsort(-(share - counts), kind="stable")
    for k in order[: M - counts.sum()]:
        counts[k] += 1
    pts = [lo + (np.arange(m) + 0.5) * (hi - lo) / m for (lo, hi), m in zip(iv, counts) if m > 0]
    widths = [np.full(m, (hi - lo) / m) for (lo, hi), m in zip(iv, counts) if m > 0]
    return np.concatenate(pts), np.concatenate(widths)


def project_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1} (sort-based)."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    tau = css[rho] / (rho + 1)
    return np.maximum(y - tau, 0.0)


def _log_kernel(s: np.ndarray) -> np.ndarray:
    d = np.abs(s[:, None] - s[None, :])
    np.fill_diagonal(d, 1.0)
    return np.log(d)


@dataclass
class EquilibriumTrace:
    """Per-iteration record of the optimiser (objective values, final step)."""

    objective: list = field(default_factory=list)
    iterations: int = 0
    last_change: float = math.inf


def equilibrium_measure(
    bands: BandSet, M: int = 512, max_iters: int = 5000, trace: EquilibriumTrace | None = None
) -> StepMeasure:
    """Discrete equilibrium measure of a band set on a fixed support grid.

    Projected gradient ascent with backtracking and a momentum extrapolation
    that is dropped (and restarted) whenever it would lower the objective, so
    accepted iterates never decrease the energy functional.
    """
    if M < 32:
        raise DomainError("equilibrium_measure needs M >= 32")
    if len(bands) == 0:
        raise DomainError("empty band set")
    s, h = band_support(bands, M)
    if np.unique(s).size < 2:
        raise CapacityZeroError("single-point support has zero capacity")
    K = _log_kernel(s)
    # Without a diagonal the functional rewards piling mass on one node; the
    # self-energy of a uniform cell of width h, log h - 3/2, restores concavity.
    # robin_capacity still reports the diagonal-free energy.
    np.fill_diagonal(K, np.log(h) - 1.5)

    def energy(w):
        return float(w @ (K @ w))

    w = np.full(s.size, 1.0 / s.size)
    f = energy(w)
    y, t_mom, w_prev = w, 1.0, w
    step = 1.0 / (2.0 * s.size * max(1.0, np.abs(K).max()))
    rec = trace if trace is not None else EquilibriumTrace()
    rec.objective.append(f)
    for it in range(1, max_iters + 1):
        grad = 2.0 * (K @ y)
        fy = energy(y)
        while True:
            cand = project_simplex(y + step * grad)
            d = cand - y
            fc = energy(cand)
            # concave objective: accept when above the linear model minus the proximal term
            if fc >= fy + grad @ d - (d @ d) / (2.0 * step) - 1e-15 * abs(fy):
                break
            step *= 0.5
        if fc < f:
            if y is w:
                # a plain step from the accepted iterate no longer gains: rounding floor
                break
            # extrapolation overshot: restart from the last accepted iterate
            y, t_mom = w, 1.0
            continue
        change = float(np.abs(cand - w).max())
        w_prev, w, f = w, cand, fc
        rec.objective.append(f)
        rec.iterations, rec.last_change = it, change
        if change < WEIGHT_TOL:
            break
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
        y = w + ((t_mom - 1.0) / t_next) * (w - w_prev)
        t_mom = t_next
        step *= 1.25
    keep = w > 0
    wk = w[keep] / w[keep].sum()
    return StepMeasure(s[keep], wk)


@dataclass(frozen=True)
class Capacity:
    robin_constant: float
    capacity: float


def robin_capacity(mu: StepMeasure) -> Capacity:
    s = np.asarray(mu.points, dtype=float)
    if s.size < 32:
        raise DomainError("robin_capacity needs at least 32 support points")
    if np.unique(s).size != s.size:
        raise DomainError("robin_capacity: duplicate support points")
    w = mu.weights
    I = -float(w @ (_log_kernel(s) @ w))
    return Capacity(I, math.exp(-I))


# -- fields and level curves -----------------------------------------------


@dataclass(frozen=True)
class ScalarField:
    """Values on a node grid; ``values[iy, ix]`` sits at ``(x[ix], y[iy])``."""

    rect: tuple[float, float, float, float]
    nx: int
    ny: int
    values: np.ndarray
    singular: np.ndarray

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise DomainError("field resolution must be >= 2 on each axis")
        if self.values.shape != (self.ny, self.nx) or self.singular.shape != (self.ny, self.nx):
            raise DomainError("field arrays must have shape (ny, nx)")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.rect[0], self.rect[1], self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(self.rect[2], self.rect[3], self.ny)

    @property
    def cell_diagonal(self) -> float:
        hx = (self.rect[1] - self.rect[0]) / (self.nx - 1)
        hy = (self.rect[3] - self.rect[2]) / (self.ny - 1)
        return math.hypot(hx, hy)

    def nodes(self) -> np.ndarray:
        X, Y = np.meshgrid(self.x, self.y)
        return X + 1j * Y


def _check_rect(rect):
    xmin, xmax, ymin, ymax = map(float, rect)
    if not (xmin < xmax and ymin < ymax):
        raise DomainError(f"degenerate rectangle {rect!r}")
    return xmin, xmax, ymin, ymax


def potential_field(mu: StepMeasure, rect, nx: int, ny: int) -> ScalarField:
    if nx < 2 or ny < 2:
        raise DomainError("field resolution must be >= 2 on each axis")
    rect = _check_rect(rect)
    X, Y = np.meshgrid(np.linspace(rect[0], rect[1], nx), np.linspace(rect[2], rect[3], ny))
    vals, sing = log_potential_many(X + 1j * Y, mu)
    return ScalarField(rect, nx, ny, vals, sing)


@dataclass(frozen=True)
class Polyline:
    points: np.ndarray  # complex
    closed: bool

    def __post_init__(self):
        if self.closed and self.points.size < 3:
            raise DomainError("closed polyline needs >= 3 points")


# marching-squares table: corner bits (bit0 = (i,j), bit1 = (i,j+1),
# bit2 = (i+1,j+1), bit3 = (i+1,j)); edges 0 bottom, 1 right, 2 top, 3 left
_SEGMENTS = {
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)], 6: [(0, 2)], 7: [(3, 2)],
    8: [(2, 3)], 9: [(2, 0)], 11: [(2, 1)], 12: [(1, 3)], 13: [(1, 0)], 14: [(0, 3)],
}


def _edge_key(i, j, e):
    # canonical id shared by the two cells adjacent to an edge
    if e == 0:
        return ("h", i, j)
    if e == 2:
        return ("h", i + 1, j)
    if e == 3:
        return ("v", i, j)
    return ("v", i, j + 1)


def level_curves(field: ScalarField, c: float) -> list[Polyline]:
    """Marching squares at level ``c``; cells touching a singular node are skipped.

    Saddle cells are resolved by comparing the mean of the four corners with
    ``c``.  Segment endpoints are keyed by grid edge, so stitching is exact.
    """
    V = field.values
    x, y = field.x, field.y
    above = V >= c
    valid = ~field.singular
    cell_ok = valid[:-1, :-1] & valid[:-1, 1:] & valid[1:, 1:] & valid[1:, :-1]
    code = (
        above[:-1, :-1].astype(int)
        | (above[:-1, 1:].astype(int) << 1)
        | (above[1:, 1:].astype(int) << 2)
        | (above[1:, :-1].astype(int) << 3)
    )
    active = cell_ok & (code != 0) & (code != 15)

    points: dict = {}

    def crossing(key):
        if key in points:
            return
        kind, i, j = key
        if kind == "h":
            v0, v1 = V[i, j], V[i, j + 1]
            t = (c - v0) / (v1 - v0)
            points[key] = complex(x[j] + t * (x[j + 1] - x[j]), y[i])
        else:
            v0, v1 = V[i, j], V[i + 1, j]
            t = (c - v0) / (v1 - v0)
            points[key] = complex(x[j], y[i] + t * (y[i + 1] - y[i]))

    adj: dict = {}
    for i, j in zip(*np.nonzero(active)):
        k = int(code[i, j])
        if k in (5, 10):
            centre = 0.25 * (V[i, j] + V[i, j + 1] + V[i + 1, j + 1] + V[i + 1, j])
            # centre above joins the two high corners, isolating the low ones
            if (centre >= c) == (k == 5):
                segs = [(0, 1), (2, 3)]
            else:
                segs = [(3, 0), (1, 2)]
        else:
            segs = _SEGMENTS[k]
        for e0, e1 in segs:
            a, b = _edge_key(i, j, e0), _edge_key(i, j, e1)
            crossing(a)
            crossing(b)
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)

    diag = field.cell_diagonal
    used = set()
    curves = []

    def walk(start):
        chain = [start]
        used.add(start)
        prev, cur = None, start
        while True:
            nxt = [n for n in adj[cur] if n != prev and n not in used]
            if not nxt:
                if len(chain) > 2 and start in adj[cur] and prev != start:
                    chain.append(start)
                return chain
            prev, cur = cur, nxt[0]
            used.add(cur)
            chain.append(cur)

    # open chains first (start at degree-1 keys), then loops
    starts = sorted((k for k, n in adj.items() if len(n) == 1), key=str)
    starts += sorted((k for k, n in adj.items() if len(n) != 1), key=str)
    for key in starts:
        if key in used:
            continue
        chain = walk(key)
        pts = [points[k] for k in chain]
        dedup = [pts[0]]
        for p in pts[1:]:
            if p != dedup[-1]:
                dedup.append(p)
        pts = np.array(dedup)
        loop = chain[0] == chain[-1] and len(chain) > 1
        if loop:
            pts = pts[:-1] if pts.size > 1 and pts[0] == pts[-1] else pts
        closed = bool(pts.size >= 3 and (loop or abs(pts[0] - pts[-1]) <= diag))
        if pts.size >= 2 or closed:
            curves.append(Polyline(pts, closed))
    return curves
