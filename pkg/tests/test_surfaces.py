import math

import numpy as np
import pytest

from yamabe_volume.geometry.models import model_catalog
from yamabe_volume.geometry.surfaces import (DegenerateMetric, SurfaceGrid, export_invariants_csv,
                                             fejer_weights, inverse_stereographic, load_surface,
                                             save_surface, stereographic_log_factor,
                                             stereographic_to_flat, surface_fields,
                                             surface_invariants)
from yamabe_volume.renorm.energy import energy_codim1


def graph_patch(N, amp=0.3):
    """Graph z = amp sin(x) cos(y) over [0, 1]^2 with closed-form curvature."""
    x = np.linspace(0.0, 1.0, N)
    X, Y = np.meshgrid(x, x, indexing="ij")
    Z = amp * np.sin(X) * np.cos(Y)
    fx, fy = amp * np.cos(X) * np.cos(Y), -amp * np.sin(X) * np.sin(Y)
    fxx, fyy, fxy = -Z, -Z, -amp * np.cos(X) * np.sin(Y)
    K = (fxx * fyy - fxy ** 2) / (1 + fx ** 2 + fy ** 2) ** 2
    pts = np.stack([X, Y, Z], -1)
    h = x[1] - x[0]
    return SurfaceGrid(pts, topology="patch", ambient="flat", periodic=(False, False),
                       spacing=(h, h)), 2 * K


@pytest.mark.parametrize("k", [1, 2])
def test_clifford_torus_invariants(k):
    f = surface_fields(model_catalog("clifford_torus", {"nu": 32, "nv": 32, "k": k}))
    assert f.area == pytest.approx(2 * math.pi ** 2, rel=1e-13)
    assert np.allclose(f.H_norm2, 0.0, atol=1e-12)
    assert np.allclose(f.Lo_norm2, 2.0, atol=1e-12)
    assert np.allclose(f.R_h, 0.0, atol=1e-11)
    assert np.allclose(f.R_h_intrinsic, 0.0, atol=1e-11)
    assert np.allclose(f.trP_tan, 1.0)


def test_equatorial_sphere_invariants():
    f = surface_fields(model_catalog("equatorial_sphere", {"k": 2, "nu": 24, "nv": 48}))
    assert f.area == pytest.approx(4 * math.pi, rel=1e-13)
    assert np.allclose(f.H_norm2, 0.0, atol=1e-11)
    assert np.allclose(f.Lo_norm2, 0.0, atol=1e-11)
    assert np.allclose(f.R_h, 2.0, atol=1e-10)
    assert np.allclose(f.R_h_intrinsic, 2.0, atol=1e-9)
    assert np.allclose(f.trP_tan, 1.0)


def test_equatorial_sphere_codim1_energy():
    surf = model_catalog("equatorial_sphere", {"k": 1, "nu": 24, "nv": 48})
    assert energy_codim1(surf) == pytest.approx(-4 * math.pi, rel=1e-12)


def test_torus_of_revolution_principal_curvatures():
    r, R = 0.7, 2.0
    surf = model_catalog("torus_of_revolution", {"r": r, "R": R, "nu": 32, "nv": 32})
    f = surface_fields(surf)
    v = 2 * np.pi * np.arange(32) / 32
    ref = np.sort(np.stack(np.broadcast_arrays(1.0 / r, (np.cos(v) / (R + r * np.cos(v)))[None, :]
                                               * np.ones((32, 1))), -1), axis=-1)
    S = np.linalg.solve(f.h0, f.L[:, :, 0])
    kappas = np.linalg.eigvals(S).real
    # the SVD normal has an arbitrary orientation at each sample; fix it so
    # that the tube curvature (the larger one in modulus) is positive
    big = np.take_along_axis(kappas, np.abs(kappas).argmax(-1)[..., None], -1)
    got = np.sort(np.sign(big) * kappas, axis=-1)
    assert np.allclose(got, ref, atol=1e-10)
    assert f.area == pytest.approx(4 * math.pi ** 2 * r * R, rel=1e-12)


def test_gauss_vs_brioschi_converges_on_patches():
    errs = []
    for N in (21, 41, 81):
        surf, exact = graph_patch(N)
        f = surface_fields(surf)
        inner = (slice(4, -4), slice(4, -4))
        errs.append(max(np.abs(f.R_h[inner] - exact[inner]).max(),
                        np.abs(f.R_h_intrinsic[inner] - exact[inner]).max(),
                        np.abs(f.R_h[inner] - f.R_h_intrinsic[inner]).max()))
    # at least second-order convergence
    assert errs[1] < errs[0] / 4 and errs[2] < errs[1] / 4


def test_spectral_gauss_vs_brioschi_on_perturbed_torus():
    surf = model_catalog("graph_perturbation", {"base": "torus_of_revolution", "k": 1,
                                                "amplitude": 0.05, "nu": 48, "nv": 48})
    f = surface_fields(surf)
    assert np.abs(f.R_h - f.R_h_intrinsic).max() < 1e-8
    # Gauss-Bonnet on a torus
    assert abs(f.integrate(f.R_h)) < 1e-9


def test_degenerate_metric_raises():
    pts = np.zeros((8, 8, 3))
    pts[..., 0] = np.cos(2 * np.pi * np.arange(8) / 8)[:, None]
    with pytest.raises(DegenerateMetric):
        surface_fields(SurfaceGrid(pts, topology="torus", ambient="flat"))


def test_invalid_grids_rejected():
    with pytest.raises(ValueError):
        SurfaceGrid(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        SurfaceGrid(np.zeros((4, 5, 3)), topology="sphere")
    with pytest.raises(ValueError):
        SurfaceGrid(np.zeros((4, 4, 3)), topology="klein")


def test_file_round_trip(tmp_path):
    surf = model_catalog("clifford_torus", {"nu": 8, "nv": 6, "k": 2})
    path = tmp_path / "s.json"
    save_surface(surf, path)
    back = load_surface(path)
    assert np.array_equal(back.points, surf.points)
    assert (back.topology, back.ambient, back.periodic) == (surf.topology, surf.ambient,
                                                           surf.periodic)
    assert back.meta == surf.meta


def test_load_surface_rejects_bad_shape(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"nu": 2, "nv": 2, "dim": 3, "topology": "torus", "ambient": "flat", '
                    '"points": [[0, 0, 0]]}')
    with pytest.raises(ValueError):
        load_surface(path)


def test_invariants_csv(tmp_path):
    f = surface_fields(model_catalog("clifford_torus", {"nu": 4, "nv": 4}))
    path = tmp_path / "inv.csv"
    export_invariants_csv(f, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 17 and lines[0].startswith("i,j,")


def test_stereographic_round_trip():
    surf = model_catalog("clifford_torus", {"nu": 16, "nv": 16})
    back = inverse_stereographic(stereographic_to_flat(surf))
    assert np.allclose(back.points, surf.points, atol=1e-13)


def test_stereographic_conformal_factor_converges_spectrally():
    errs = []
    for N in (32, 64, 96):
        surf = model_catalog("clifford_torus", {"nu": N, "nv": N})
        flat = stereographic_to_flat(surf)
        fs, ff = surface_fields(surf), surface_fields(flat)
        w = stereographic_log_factor(flat.points)
        # area elements differ by e^{2 omega}; |Lo|^2 dA is pointwise invariant
        errs.append(max(np.abs(fs.area_weight / (np.exp(2 * w) * ff.area_weight) - 1).max(),
                        np.abs(fs.Lo_norm2 * fs.area_weight
                               / (ff.Lo_norm2 * ff.area_weight) - 1).max()))
    assert errs[1] < 1e-7 and errs[2] < 1e-10
    assert errs[2] < errs[1] < errs[0]


def test_fejer_weights_integrate_polynomials():
    n = 12
    x = np.cos((np.arange(n) + 0.5) * np.pi / n)
    w = fejer_weights(n)
    for p in range(n):
        ref = 0.0 if p % 2 else 2.0 / (p + 1)
        assert np.sum(w * x ** p) == pytest.approx(ref, abs=1e-13)


def test_surface_invariants_list():
    surf = model_catalog("clifford_torus", {"nu": 4, "nv": 4, "k": 2})
    pts = surface_invariants(surf)
    assert len(pts) == 16
    assert sum(p.area_weight for p in pts) == pytest.approx(2 * math.pi ** 2)
    assert all(abs(p.Lo_norm2 - 2.0) < 1e-12 for p in pts)
