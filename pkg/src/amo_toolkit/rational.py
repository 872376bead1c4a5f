"""Continued fractions and rational approximants of the frequency."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

QMAX = 10**6
CF_TOL = 1e-12


@dataclass(frozen=True)
class Rational:
    p: int
    q: int

    def __post_init__(self):
        if not isinstance(self.p, int) or not isinstance(self.q, int):
            raise DomainError("alpha: numerator and denominator must be integers")
        if self.q < 1:
            raise DomainError(f"alpha: denominator must be >= 1, got {self.q}")
        if math.gcd(abs(self.p), self.q) != 1:
            raise DomainError(f"alpha: {self.p}/{self.q} is not in lowest terms")

    @classmethod
    def reduced(cls, p: int, q: int) -> "Rational":
        if q == 0:
            raise DomainError("alpha: denominator must be >= 1, got 0")
        if q < 0:
            p, q = -p, -q
        g = math.gcd(abs(p), q)
        return cls(p // g, q // g)

    @classmethod
    def parse(cls, text: str) -> "Rational":
        try:
            num, den = text.split("/")
            p, q = int(num), int(den)
        except ValueError:
            raise DomainError(f"alpha: cannot parse {text!r} as p/q") from None
        if q < 1:
            raise DomainError(f"alpha: denominator must be >= 1, got {q}")
        return cls.reduced(p, q)

    def __float__(self):
        return self.p / self.q

    def __str__(self):
        return f"{self.p}/{self.q}"


@dataclass(frozen=True)
class ContinuedFraction:
    quotients: tuple[int, ...]

    def __post_init__(self):
        if not self.quotients:
            raise DomainError("continued fraction needs at least one quotient")
        if any(a < 1 for a in self.quotients):
            raise DomainError("partial quotients must be positive")

    def value(self) -> float:
        """Evaluate 1/(a_1 + 1/(a_2 + ...)) from the innermost quotient out."""
        x = 0.0
        for a in reversed(self.quotients):
            x = 1.0 / (a + x)
        return x


def cf_expand(x: float, depth: int) -> ContinuedFraction:
    """Partial quotients of ``x`` in (0, 1), at most ``depth`` of them.

    The expansion stops early once the remaining fractional part falls below
    ``CF_TOL``; beyond that point the quotients are rounding noise.
    """
    if not 0.0 < x < 1.0:
        raise DomainError(f"cf_expand needs x in (0, 1), got {x!r}")
    if depth < 1:
        raise DomainError("depth must be >= 1")
    quotients = []
    frac = x
    for _ in range(depth):
        y = 1.0 / frac
        a = math.floor(y)
        frac = y - a
        if 1.0 - frac < CF_TOL:
            a, frac = a + 1, 0.0
        quotients.append(int(a))
        if frac < CF_TOL:
            break
    return ContinuedFraction(tuple(quotients))


def convergents(cf: ContinuedFraction, qmax: int = QMAX) -> list[Rational]:
    """Convergents p_k/q_k of ``cf``, stopping before q_k would exceed ``qmax``."""
    out = []
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    for a in cf.quotients:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        if q > qmax:
            break
        out.append(Rational(p, q))
    return out


GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
# sum_{k=1}^{4} 10^(-k!); the k=4 term sits below double precision
LIOUVILLE4 = math.fsum(10.0 ** -math.factorial(k) for k in range(1, 5))

PRESETS = {
    "golden": GOLDEN,
    "liouville4": LIOUVILLE4,
}


def preset(name: str) -> float:
    try:
        return PRESETS[name]
    except KeyError:
        raise DomainError(f"alpha: unknown preset {name!r}") from None


def golden_convergents(qmax: int = QMAX) -> list[Rational]:
    return convergents(cf_expand(GOLDEN, 40), qmax)
