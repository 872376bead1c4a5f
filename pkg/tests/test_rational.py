import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from amo_toolkit.errors import DomainError
from amo_toolkit.rational import (
    GOLDEN,
    LIOUVILLE4,
    ContinuedFraction,
    Rational,
    cf_expand,
    convergents,
    golden_convergents,
    preset,
)


def test_golden_quotients():
    assert cf_expand(GOLDEN, 5).quotients == (1, 1, 1, 1, 1)


def test_two_sevenths_terminates():
    assert cf_expand(2 / 7, 5).quotients == (3, 2)


def test_sqrt2_reconstruction():
    x = math.sqrt(2) - 1
    assert abs(cf_expand(x, 20).value() - x) < 1e-12


def test_fibonacci_convergents():
    conv = convergents(ContinuedFraction((1, 1, 1, 1, 1)))
    assert [(c.p, c.q) for c in conv] == [(1, 1), (1, 2), (2, 3), (3, 5), (5, 8)]


def test_convergents_of_two_sevenths():
    assert [(c.p, c.q) for c in convergents(ContinuedFraction((3, 2)))] == [(1, 3), (2, 7)]


def test_golden_convergents_reach_34_55():
    qs = [c.q for c in golden_convergents(100)]
    assert qs[-2:] == [55, 89]
    assert Rational(34, 55) in golden_convergents(100)


def test_domain_errors():
    with pytest.raises(DomainError):
        cf_expand(1.5, 3)
    with pytest.raises(DomainError):
        cf_expand(0.3, 0)
    with pytest.raises(DomainError, match="alpha"):
        Rational.parse("1/0")
    with pytest.raises(DomainError):
        Rational(2, 4)
    with pytest.raises(DomainError):
        preset("pi")


def test_parse_reduces():
    assert Rational.parse("4/6") == Rational(2, 3)
    assert Rational.parse("-3/5") == Rational(-3, 5)
    with pytest.raises(DomainError):
        Rational.parse("3/-5")
    assert str(Rational(13, 21)) == "13/21"


def test_liouville_preset():
    # the k=4 term is 1e-24, far below the spacing of doubles near 0.11
    assert preset("liouville4") == LIOUVILLE4
    assert abs(LIOUVILLE4 - 0.110001) < 1e-15


irrationals = st.floats(min_value=1e-3, max_value=1 - 1e-3).filter(
    lambda x: Fraction(x).limit_denominator(10**4) != Fraction(x)
)


@given(irrationals)
def test_determinant_identity(x):
    conv = convergents(cf_expand(x, 12))
    for k in range(1, len(conv)):
        a, b = conv[k - 1], conv[k]
        assert abs(b.p * a.q - a.p * b.q) == 1


@given(irrationals)
def test_strictly_increasing_denominators_and_error_bound(x):
    conv = convergents(cf_expand(x, 10))
    qs = [c.q for c in conv]
    assert all(b > a for a, b in zip(qs, qs[1:])) or len(qs) == 1 or qs[:2] == [1, 1]
    for a, b in zip(conv, conv[1:]):
        # first-order bound; float x is itself exact so only the CF cutoff limits this
        assert abs(x - a.p / a.q) <= 1.0 / (a.q * b.q) + 1e-12


@given(irrationals)
def test_convergents_alternate(x):
    conv = convergents(cf_expand(x, 10))
    signs = [math.copysign(1, float(c) - x) for c in conv if float(c) != x]
    assert all(s != t for s, t in zip(signs, signs[1:]))


@given(irrationals, st.integers(1, 30))
def test_deterministic(x, depth):
    assert cf_expand(x, depth) == cf_expand(x, depth)


@given(st.integers(1, 200), st.integers(1, 200))
def test_rational_input_terminates(p, q):
    if p >= q:
        return
    r = Rational.reduced(p, q)
    cf = cf_expand(p / q, 40)
    assert convergents(cf)[-1] == r
