import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from yamabe_volume.expansion.eikonal import MAX_ORDER, eikonal_expand, eikonal_residual
from yamabe_volume.fiber import constant, fiber_space, from_function, linear


def test_zero_omega_gives_identity():
    space = fiber_space(2)
    s = eikonal_expand([constant(space, 0.0)] * 3, 3)
    assert s.psi[0].average() == 1.0
    assert all(f.norm() < 1e-15 for f in s.psi[1:])


@given(st.floats(-2, 2))
def test_constant_omega_is_a_scaling(c):
    space = fiber_space(3)
    s = eikonal_expand([constant(space, c)], 4)
    assert s.psi[0].average() == pytest.approx(math.exp(c), rel=1e-14)
    assert all(f.norm() < 1e-12 for f in s.psi[1:])


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
def test_radial_omega_matches_averaged_integral(a):
    # Psi(t) = (1/t) int_0^t exp(omega); compare values at small t
    space = fiber_space(2)
    s = eikonal_expand([constant(space, x) for x in a], 3)
    coeffs = [f.average() for f in s.psi]
    t = 0.05
    exact = quad(lambda x: math.exp(np.polyval(a[::-1], x)), 0, t, epsabs=1e-15)[0] / t
    series = np.polyval(coeffs[::-1], t)
    # |a_i| <= 1: the t^4 coefficient of exp(omega - a_0) is at most that of
    # exp(t / (1 - t)), i.e. 73/24, so the truncation error is below t^4
    assert abs(series - exact) < math.exp(a[0]) * t ** 4


def _mobius_jets(b, order):
    """Taylor data of the special conformal map x -> (x + b|x|^2) / (1 + 2 b.x + |b|^2 |x|^2).

    Writing ``1 + 2 t b.c + t^2 |b|^2 = (1 - t z1)(1 - t z2)``:
    omega = -log(...) and Psi = (...)^(-1/2).
    """
    b = np.asarray(b, dtype=float)
    bb = float(b @ b)

    def roots(c):
        beta = c @ b
        im = np.sqrt(np.maximum(bb - beta ** 2, 0.0))
        return -beta + 1j * im, -beta - 1j * im

    def omega_m(m):
        return lambda c: np.real(sum(z ** m for z in roots(c))) / m

    binom = [math.comb(2 * m, m) / 4 ** m for m in range(order + 1)]

    def psi_m(m):
        def f(c):
            z1, z2 = roots(c)
            return np.real(sum(binom[i] * binom[m - i] * z1 ** i * z2 ** (m - i)
                               for i in range(m + 1)))
        return f

    return omega_m, psi_m


@pytest.mark.parametrize("k", [2, 3])
@pytest.mark.parametrize("b", [(0.4, -0.3, 0.0), (1.0, 0.5, 0.2)])
def test_non_radial_mobius_oracle(k, b):
    b = np.asarray(b[:k])
    space = fiber_space(k)
    omega_m, psi_m = _mobius_jets(b, MAX_ORDER)
    omega = [constant(space, 0.0)] + [from_function(space, omega_m(m), degree=m) for m in range(1, MAX_ORDER + 1)]
    assert (omega[1] - linear(space, -2 * b)).norm() < 1e-12
    s = eikonal_expand(omega, MAX_ORDER)
    for m in range(MAX_ORDER + 1):
        ref = from_function(space, psi_m(m), degree=m)
        assert (s.psi[m] - ref).norm() < 1e-11
    assert s.parity_report(1e-10)


def test_residual_vanishes(rng):
    space = fiber_space(2)
    omega = [constant(space, 0.3)] + [from_function(space, lambda c, a=rng.normal(size=2): c @ a, degree=1)
                                      for _ in range(3)]
    s = eikonal_expand(omega, 3)
    assert max(r.norm() for r in eikonal_residual(s)) < 1e-12


def test_order_cap_and_nonconstant_leading_term():
    space = fiber_space(2)
    with pytest.raises(ValueError):
        eikonal_expand([constant(space, 0.0)], MAX_ORDER + 1)
    with pytest.raises(ValueError):
        eikonal_expand([linear(space, [1.0, 0.0])], 2)


def test_to_dict_reports_averages():
    space = fiber_space(2)
    d = eikonal_expand([constant(space, 0.0), constant(space, 1.0)], 2).to_dict()
    assert d["order"] == 2
    assert d["psi_averages"] == pytest.approx([1.0, 0.5, 1 / 6])
