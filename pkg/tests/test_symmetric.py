import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from yamabe_volume.expansion.series import JetSeries, ObstructionHit
from yamabe_volume.expansion.symmetric import (ORDER_CAP_EXTRA, expand_symmetric, polynomial_u,
                                               residual_slope, two_L_coefficients,
                                               two_L_numeric)
from yamabe_volume.geometry.models import model_catalog
from yamabe_volume.indicial import exceptional_sets

SIN_OVER_T = [1.0, 0.0, -1 / 6, 0.0, 1 / 120, 0.0, -1 / 5040]


def warped(n, k, phi, psi, R_sigma=0.0):
    return model_catalog("warped", {"n": n, "k": k, "phi": phi, "psi": psi, "R_sigma": R_sigma})


@pytest.mark.parametrize("n,k", [(2, 2), (3, 5), (1, 2), (4, 7)])
def test_flat_profile_gives_constant(n, k):
    s = expand_symmetric(n, k, model_catalog("flat", {"n": n, "k": k}), n + 1)
    assert np.allclose(s.scalar_coefficients(), [1.0] + [0.0] * (n + 1), atol=1e-15)


@pytest.mark.parametrize("n,k", [(2, 2), (2, 3), (3, 2), (4, 3), (1, 2), (5, 2), (3, 4), (6, 2)])
def test_equatorial_reproduces_sin_over_t(n, k):
    N = min(n + ORDER_CAP_EXTRA, 6)
    s = expand_symmetric(n, k, model_catalog("equatorial", {"n": n, "k": k}), N)
    assert np.allclose(s.scalar_coefficients(), SIN_OVER_T[: N + 1], atol=1e-12)
    assert s.log_terms == []


def test_equatorial_k4_has_no_obstruction():
    # the exact solution exists, so pi0(F_2) = 0 and v_2 is fixed by normalisation
    s = expand_symmetric(2, 4, model_catalog("equatorial", {"n": 2, "k": 4}), 3)
    assert s.log_terms == [] and s.scalar_coefficients()[2] == 0.0
    assert any("v_2" in note for note in s.notes)


def _fd_order2(profile):
    """Coefficient of t^2 in 2 L[t] by Richardson extrapolation on a t-grid."""
    one = (lambda t: t, lambda t: np.ones_like(t), lambda t: np.zeros_like(t))
    hs = np.array([0.04, 0.02, 0.01])
    r = two_L_numeric(profile, hs, one) / hs ** 2
    # r = c + d t^2 + ...; two Richardson steps in h^2
    r1 = (4 * r[1:] - r[:-1]) / 3
    return (16 * r1[1] - r1[0]) / 15


def test_k4_obstruction_matches_finite_differences():
    prof = warped(2, 4, "1 + t**2/3", "t", 2.0)
    with pytest.raises(ObstructionHit) as exc:
        expand_symmetric(2, 4, prof, 2)
    F = exc.value.value
    assert exc.value.nu == 2
    assert F == pytest.approx(7 / 15, abs=1e-12)
    assert 2 * F == pytest.approx(_fd_order2(prof), abs=1e-6)


def test_k4_obstruction_allow_log():
    prof = warped(2, 4, "1 + t**2/3", "t", 2.0)
    s = expand_symmetric(2, 4, prof, 2, allow_log=True)
    (log,) = s.log_terms
    assert (log.order, log.power) == (2, 1)
    # A = -pi0(F_nu) / (2 nu - n)
    assert log.coeff.average() == pytest.approx(-7 / 30, abs=1e-12)
    assert s.residual_order == 2 and s.classification == "LogObstructed"


def test_two_L_coefficients_match_numeric(rng):
    prof = warped(3, 2, "1 - t**2/5 + t**4/7", "t + t**3/4", 1.5)
    v = np.array([1.0, 0.0, 0.3, 0.0, -0.2])
    coef = two_L_coefficients(prof, v, 4)
    t = np.array([0.01, 0.02, 0.03])
    u = np.polynomial.Polynomial(np.concatenate([[0.0], v]))
    direct = two_L_numeric(prof, t, (u, u.deriv(1), u.deriv(2)))
    series = np.polynomial.polynomial.polyval(t, coef)
    assert np.allclose(direct, series, atol=5e-9)


@pytest.mark.parametrize("n,k,phi,psi,R", [
    (2, 3, "1 + 3*t**2/10", "t + t**3/5", 1.0),
    (3, 2, "cos(t)**2", "sin(t) + t**3/7", 6.0),
    (2, 2, "cosh(t)", "sinh(t)", -2.0),
    (4, 3, "1 - t**2/3", "t", 3.0),
])
def test_residual_decays_at_certified_order(n, k, phi, psi, R):
    prof = warped(n, k, phi, psi, R)
    s = expand_symmetric(n, k, prof, n + 1)
    check = residual_slope(prof, s)
    assert check.slope >= s.residual_order - 0.1
    assert check.coeff_mismatch < 1e-13


def test_residual_slope_resolves_near_cancellation():
    # the t^6 residual coefficient is 100 times smaller than the t^8 one, so
    # the asymptotic regime sits below double-precision round-off
    prof = warped(4, 2, "1 - 0.40625*t**2", "t + 0.1875*t**3 + 0.07421875*t**5", 12.0)
    s = expand_symmetric(4, 2, prof, 5)
    c = two_L_coefficients(prof, s.scalar_coefficients(), 8)
    assert abs(c[6]) < 0.01 * abs(c[8])
    check = residual_slope(prof, s)
    assert check.slope == pytest.approx(6.0, abs=1e-3)


def test_residual_slope_of_log_truncated_series():
    prof = warped(2, 4, "1 + t**2/3", "t", 2.0)
    s = expand_symmetric(2, 4, prof, 2, allow_log=True)
    check = residual_slope(prof, s)
    assert check.slope == pytest.approx(s.residual_order, abs=0.05)
    assert check.coeff_mismatch < 1e-13


def test_residual_slope_of_exact_solution():
    prof = model_catalog("flat", {"n": 3, "k": 2})
    assert residual_slope(prof, expand_symmetric(3, 2, prof, 3)).slope == float("inf")


def _profile_strategy():
    c = st.floats(-0.5, 0.5)
    return st.tuples(c, c, c, c)


@given(st.sampled_from([(2, 2), (2, 3), (3, 2), (3, 3), (4, 2), (5, 3)]), _profile_strategy())
def test_random_profiles_parity_and_residual(nk, c):
    n, k = nk
    assert k not in exceptional_sets(n)[0]
    prof = warped(n, k, f"1 + ({c[0]})*t**2 + ({c[1]})*t**4", f"t + ({c[2]})*t**3 + ({c[3]})*t**5",
                  float(n * (n - 1)))
    s = expand_symmetric(n, k, prof, n + 1)
    v = s.scalar_coefficients()
    # fibre-constant coefficients lie in Y_j only if odd orders vanish
    assert np.all(np.abs(v[1::2]) < 1e-12)
    assert s.parity_report(1e-8)
    check = residual_slope(prof, s)
    assert check.coeff_mismatch < 1e-13
    assert check.slope >= s.residual_order - 0.1


def test_validation_errors():
    prof = model_catalog("equatorial", {"n": 2, "k": 2})
    with pytest.raises(ValueError):
        expand_symmetric(2, 3, prof, 2)
    with pytest.raises(ValueError):
        expand_symmetric(2, 2, prof, 2 + ORDER_CAP_EXTRA + 1)


def test_polynomial_u_and_json():
    s = expand_symmetric(2, 2, model_catalog("equatorial", {"n": 2, "k": 2}), 4)
    u, du, ddu = polynomial_u(s)
    assert u(0.3) == pytest.approx(math.sin(0.3), abs=1e-5)
    d = s.to_dict()
    assert d["order"] == 4 and d["v"][2]["by_degree"][0][0] == pytest.approx(-1 / 6)
    assert isinstance(s, JetSeries) and '"classification"' in s.to_json()
