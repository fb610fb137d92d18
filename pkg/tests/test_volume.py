import csv
import json
import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from yamabe_volume.geometry.models import model_catalog
from yamabe_volume.renorm.volume import (EPS_WINDOW, IllConditioned, closed_form_equatorial,
                                         design_matrix, expected_coefficients, export_curve_csv,
                                         fit_expansion, volume_curve)

EPS = np.geomspace(*EPS_WINDOW, 40)


def _synthetic(n, c, E, V, tail):
    cols = design_matrix(EPS, n, len(tail))
    return cols @ np.concatenate([c, [E, V], tail])


def _split(n, x):
    c, E, V, tail = x[:n], x[n], x[n + 1], x[n + 2: n + 6]
    return c, E, V, tail + [0.0] * (4 - len(tail))


@given(st.integers(1, 2), st.lists(st.floats(-5, 5), min_size=8, max_size=8))
def test_synthetic_round_trip(n, x):
    c, E, V, tail = _split(n, x)
    fit = fit_expansion(EPS, _synthetic(n, c, E, V, tail), n)
    tol = 1e-8 * (1 + max(map(abs, x)))
    assert np.allclose(fit.c, c, atol=tol)
    assert fit.energy == pytest.approx(E, abs=tol)
    assert fit.V == pytest.approx(V, abs=tol)


@given(st.integers(3, 4), st.lists(st.floats(-5, 5), min_size=8, max_size=8))
def test_synthetic_round_trip_high_n(n, x):
    # eps^{-n} reaches 1e12 here, so absolute accuracy of the O(1) terms is
    # limited by rounding of the data; compare each column's contribution
    c, E, V, tail = _split(n, x)
    vol = _synthetic(n, c, E, V, tail)
    fit = fit_expansion(EPS, vol, n)
    got = np.concatenate([fit.c, [fit.energy, fit.V], fit.nuisance])
    ref = np.concatenate([c, [E, V], tail])
    col = np.abs(design_matrix(EPS, n)).max(axis=0)
    assert np.all(np.abs(got - ref) * col <= 1e-8 * max(np.abs(vol).max(), 1.0))


def test_narrow_window_is_ill_conditioned():
    eps = np.geomspace(0.05, 0.0501, 40)
    with pytest.raises(IllConditioned):
        fit_expansion(eps, eps ** -2, 2)


def test_too_few_samples():
    with pytest.raises(ValueError):
        fit_expansion(EPS[:5], EPS[:5] ** -2, 2)


def test_closed_form_anchors():
    assert closed_form_equatorial(2, 2)["energy"] == pytest.approx(-4 * math.pi ** 2, rel=1e-15)
    assert closed_form_equatorial(1, 2)["volume"] == pytest.approx(-4 * math.pi ** 2, rel=1e-15)
    assert closed_form_equatorial(3, 2)["volume"] == pytest.approx(8 / 3 * math.pi ** 3, rel=1e-15)
    with pytest.raises(ValueError):
        closed_form_equatorial(0, 2)


@pytest.mark.parametrize("n,k", [(2, 2), (2, 3), (4, 3), (2, 5)])
def test_energy_formula_matches_theta(n, k):
    prof = model_catalog("equatorial", {"n": n, "k": k})
    assert expected_coefficients(prof)["energy"] == pytest.approx(
        closed_form_equatorial(n, k)["energy"], rel=1e-12)


def test_curve_matches_symbolic_integral():
    # equatorial S^2 in S^4: theta = cos^2 / sin^3, C = 4 pi * 2 pi
    t = sp.symbols("t")
    F = -sp.cos(t) / (2 * sp.sin(t) ** 2) - sp.log(sp.tan(t / 2)) / 2
    assert sp.simplify(sp.diff(F, t) - sp.cos(t) ** 2 / sp.sin(t) ** 3) == 0
    prim = sp.lambdify(t, F)
    prof = model_catalog("equatorial", {"n": 2, "k": 2})
    eps = np.array([1e-3, 1e-2, 0.1, 0.3])
    curve = volume_curve(prof, eps)
    exact = 8 * math.pi ** 2 * (prim(math.pi / 2) - prim(eps))
    assert np.allclose(curve.volume, exact, rtol=1e-12)


def test_subtraction_does_not_change_values():
    prof = model_catalog("equatorial", {"n": 3, "k": 2})
    eps = np.array([2e-3, 2e-2, 0.2])
    a = volume_curve(prof, eps).volume
    b = volume_curve(prof, eps, subtract=False).volume
    assert np.allclose(a, b, rtol=1e-10)


@pytest.mark.parametrize("n,k", [(2, 2), (3, 2), (1, 2)])
def test_fit_coefficients_of_equatorial(n, k):
    prof = model_catalog("equatorial", {"n": n, "k": k})
    curve = volume_curve(prof)
    fit = fit_expansion(curve.eps, curve.volume, n, k)
    exp = expected_coefficients(prof)
    assert np.allclose(fit.c, exp["c"], rtol=1e-6, atol=1e-6)
    # theta_j = 0 for odd j: c_{n-1} vanishes when n is even, the energy when n is odd
    if n % 2 == 0:
        assert abs(fit.c[n - 1]) < 1e-6
        assert fit.energy == pytest.approx(closed_form_equatorial(n, k)["energy"], rel=1e-4)
    else:
        assert abs(fit.energy) < 1e-5
        assert fit.V == pytest.approx(closed_form_equatorial(n, k)["volume"], rel=1e-4)
    assert fit.condition_number < 1e10 and set(fit.errors) >= {"energy", "V"}


def test_formal_only_flag():
    prof = model_catalog("equatorial", {"n": 1, "k": 3})
    curve = volume_curve(prof)
    assert fit_expansion(curve.eps, curve.volume, 1, 3).formal_only
    assert not fit_expansion(curve.eps, curve.volume, 1, 2).formal_only
    assert not fit_expansion(curve.eps, curve.volume, 1).formal_only


def test_volume_curve_validation():
    with pytest.raises(ValueError):
        volume_curve(model_catalog("warped", {"n": 2, "k": 2, "phi": "1 + t**2"}))
    with pytest.raises(ValueError):
        volume_curve(model_catalog("equatorial", {"n": 2, "k": 2}), [0.0, 0.1])


def test_exports(tmp_path):
    prof = model_catalog("equatorial", {"n": 2, "k": 2})
    curve = volume_curve(prof, np.geomspace(1e-2, 1e-1, 12))
    path = tmp_path / "curve.csv"
    export_curve_csv(curve, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["eps", "volume"] and len(rows) == 13
    assert float(rows[5][1]) == pytest.approx(curve.volume[4], rel=1e-11)
    fit = fit_expansion(curve.eps, curve.volume, 2, 2, nuisance=2)
    d = json.loads(fit.to_json())
    assert d["n"] == 2 and d["energy"] == pytest.approx(fit.energy, rel=1e-11)
    assert d["eps_window"] == pytest.approx([1e-2, 1e-1])
