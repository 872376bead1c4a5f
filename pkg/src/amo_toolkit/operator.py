"""Operator family: potentials and finite-volume truncations.

The self-adjoint operator acts as

    (H xi)_n = xi_{n+1} + xi_{n-1} + v_n xi_n,   v_n = 2 beta cos(2 pi alpha n + theta)

and the perturbed operator replaces the potential by
``beta (delta e^{i phi_n} + delta^{-1} e^{-i phi_n})`` with the same phase
``phi_n``.  ``delta = 1`` gives back the self-adjoint case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, UnsupportedError
from .rational import Rational

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class AmoParams:
    alpha: Union[Rational, float]
    beta: float
    theta: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.beta):
            raise DomainError("beta must be finite")
        if not math.isfinite(self.theta):
            raise DomainError("theta must be finite")
        if not isinstance(self.alpha, Rational) and not math.isfinite(self.alpha):
            raise DomainError("alpha must be finite")

    @property
    def canonical_theta(self) -> float:
        return math.fmod(self.theta, TWO_PI) % TWO_PI

    @property
    def period(self) -> int | None:
        return self.alpha.q if isinstance(self.alpha, Rational) else None

    def with_theta(self, theta: float) -> "AmoParams":
        return AmoParams(self.alpha, self.beta, theta)


@dataclass(frozen=True)
class Perturbation:
    delta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise DomainError(f"delta must be a positive real, got {self.delta!r}")

    @property
    def hermitian(self) -> bool:
        return self.delta == 1.0


SELF_ADJOINT = Perturbation(1.0)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Jacobi matrix with unit off-diagonals.

    ``boundary`` is ``"dirichlet"`` (hard cut) or ``"periodic"`` (the two corner
    entries are also 1, turning the chain into a ring).
    """

    diagonal: np.ndarray
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.diagonal.ndim != 1 or self.diagonal.size < 2:
            raise DomainError("truncation needs N >= 2")
        if self.boundary not in ("dirichlet", "periodic"):
            raise DomainError(f"unknown boundary {self.boundary!r}")
        if self.boundary == "periodic" and self.diagonal.size < 3:
            raise DomainError("periodic truncation needs N >= 3")

    @property
    def size(self) -> int:
        return self.diagonal.size

    def dense(self) -> np.ndarray:
        n = self.size
        h = np.diag(self.diagonal.astype(float))
        idx = np.arange(n - 1)
        h[idx, idx + 1] = h[idx + 1, idx] = 1.0
        if self.boundary == "periodic":
            h[0, n - 1] = h[n - 1, 0] = 1.0
        return h


def phases(alpha, theta, n):
    """phi_n = 2 pi alpha n + theta; exact residues mod q for rational alpha."""
    n = np.asarray(n)
    if isinstance(alpha, Rational):
        return TWO_PI * ((alpha.p * n) % alpha.q) / alpha.q + theta
    return TWO_PI * alpha * n + theta


def potential(params: AmoParams, pert: Perturbation, n) -> np.ndarray:
    """Vectorised potential; real dtype when delta = 1."""
    phi = phases(params.alpha, params.theta, n)
    if pert.hermitian:
        return 2.0 * params.beta * np.cos(phi)
    d = pert.delta
    return params.beta * (d * np.exp(1j * phi) + np.exp(-1j * phi) / d)


def potential_sample(params: AmoParams, pert: Perturbation, n: int) -> complex:
    return complex(potential(params, pert, n))


def truncation_matrix(
    params: AmoParams,
    N: int,
    pert: Perturbation = SELF_ADJOINT,
    boundary: str = "dirichlet",
) -> TridiagonalOperator:
    if not pert.hermitian:
        raise UnsupportedError(
            "truncation_matrix is self-adjoint only; use the discriminant path for delta != 1"
        )
    if N < 2:
        raise DomainError("truncation needs N >= 2")
    return TridiagonalOperator(potential(params, pert, np.arange(N)), boundary)
