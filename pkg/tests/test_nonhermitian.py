import math

import numpy as np
import pytest

from amo_toolkit.errors import DomainError, RootsFailed, SizeError
from amo_toolkit.hermitian import bands_union_theta
from amo_toolkit.nonhermitian import (
    default_kappa_grid,
    default_theta_grid,
    hausdorff_distance,
    hdelta_cloud,
    monodromy_residual,
    poly_roots,
)
from amo_toolkit.operator import SELF_ADJOINT, Perturbation
from amo_toolkit.potential import Polyline
from amo_toolkit.rational import Rational


def _match(a, b):
    return hausdorff_distance(np.asarray(a), np.asarray(b)).d_max


def test_roots_by_hand():
    assert _match(poly_roots([1, 0, 1]), [1j, -1j]) < 1e-14
    assert _match(poly_roots([-6, 11, -6, 1]), [1, 2, 3]) < 1e-12


def test_triple_root_accuracy():
    # a triple root is only determined to about eps^(1/3)
    r = poly_roots([-1, 3, -3, 1])
    assert np.abs(r - 1).max() < 1e-4


def test_round_trip_degree_10():
    target = 2 * np.cos(np.linspace(0.1, 3, 10)) + 0.5j * np.sin(np.linspace(0.1, 3, 10))
    coeffs = np.poly(target)[::-1]
    assert _match(poly_roots(coeffs), target) < 1e-8


def test_roots_errors():
    with pytest.raises(DomainError):
        poly_roots([1.0])
    with pytest.raises(DomainError):
        poly_roots([1.0, 2.0, 0.0])
    with pytest.raises(RootsFailed) as info:
        poly_roots(np.poly(np.arange(1, 21))[::-1], tol=1e-300, max_iters=3)
    assert info.value.best.size == 20


def test_grids():
    assert np.allclose(default_theta_grid(3, 4), 2 * np.pi * np.arange(4) / 12)
    k = default_kappa_grid(4)
    assert k.min() > 0 and k.max() < np.pi


def test_period_one_cloud_by_hand():
    beta, delta = 1.3, 1.7
    th, ka = np.array([0.4]), np.array([0.3, 1.1])
    cloud = hdelta_cloud(Rational(1, 1), beta, Perturbation(delta), th, ka)
    v = beta * (delta * np.exp(1j * (2 * np.pi + 0.4)) + np.exp(-1j * (2 * np.pi + 0.4)) / delta)
    assert _match(cloud.points, v + 2 * np.cos(ka)) < 1e-12


@pytest.mark.parametrize("alpha", [Rational(2, 5), Rational(5, 13)])
def test_self_adjoint_cloud_is_real_inside_bands(alpha):
    cloud = hdelta_cloud(alpha, 2.0, SELF_ADJOINT)
    assert np.abs(cloud.points.imag).max() < 1e-8
    assert bands_union_theta(alpha, 2.0).distance(cloud.points.real).max() < 1e-8
    assert cloud.failed == 0 and len(cloud) == 64 * 64 * alpha.q


@pytest.mark.parametrize("alpha", [Rational(2, 5), Rational(3, 8)])
def test_cloud_symmetries(alpha):
    base = hdelta_cloud(alpha, 1.5, Perturbation(1.4)).points
    inv = hdelta_cloud(alpha, 1.5, Perturbation(1 / 1.4)).points
    neg = hdelta_cloud(alpha, -1.5, Perturbation(1.4)).points
    assert _match(base, inv) < 1e-8
    assert _match(base, neg) < 1e-8
    assert _match(base, np.conj(base)) < 1e-8


def test_monodromy_residual_small():
    alpha, pert = Rational(8, 13), Perturbation(1.5)
    cloud = hdelta_cloud(alpha, 2.0, pert)
    assert monodromy_residual(cloud, alpha, 2.0, pert).max() < 1e-8


def test_cloud_size_cap():
    with pytest.raises(SizeError):
        hdelta_cloud(Rational(1, 61), 2.0, Perturbation(1.5))
    with pytest.raises(DomainError):
        hdelta_cloud(Rational(1, 2), 2.0, SELF_ADJOINT, np.array([]))


def test_hausdorff_by_hand():
    h = hausdorff_distance(np.array([0.0, 1.0]), np.array([0.0, 1.0, 3.0]))
    assert (h.d_ab, h.d_ba, h.d_max) == (0.0, 2.0, 2.0)
    pl = Polyline(np.array([0j, 1j, 1 + 1j]), closed=True)
    assert hausdorff_distance([pl], np.array([0j])).d_max == pytest.approx(math.sqrt(2))
    with pytest.raises(DomainError):
        hausdorff_distance(np.array([]), np.array([1.0]))
