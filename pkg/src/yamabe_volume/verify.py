"""Acceptance checks, shared by the test suite and ``yamabe-volume verify``.

Each check returns a :class:`CheckResult` holding the measured error
against its tolerance, along with the wall time.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .expansion.eikonal import eikonal_expand
from .expansion.n2 import expand_n2
from .expansion.symmetric import expand_symmetric
from .fiber import FiberFunction, constant, fiber_space, multiply
from .geometry.jets import conformal_jet, fermi_point, random_jet
from .geometry.models import model_catalog
from .indicial import exceptional_sets, exceptional_sets_bruteforce
from .renorm.energy import energy_codim1, energy_n2
from .renorm.theta import theta_n2
from .renorm.volume import closed_form_equatorial, fit_expansion, volume_curve

__all__ = ["CheckResult", "CHECKS", "run_checks", "DEFAULT_SEED"]

DEFAULT_SEED = 20240917


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    error: float
    tolerance: float
    seconds: float
    budget: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] criterion {self.criterion} {self.name}: error {self.error:.3e} "
                f"(tol {self.tolerance:.0e}), {self.seconds:.2f}s (budget {self.budget:g}s)")

    def to_dict(self) -> dict:
        return asdict(self)


def _result(criterion, name, error, tol, t0, budget, **details) -> CheckResult:
    dt = time.perf_counter() - t0
    error = float(error)
    ok = bool(np.isfinite(error) and error <= tol and dt <= budget)
    return CheckResult(criterion, name, ok, error, tol, dt, budget, details)


def check_exceptional_sets(seed: int = DEFAULT_SEED) -> CheckResult:
    t0 = time.perf_counter()
    mismatches = [n for n in range(2, 13) if exceptional_sets(n) != exceptional_sets_bruteforce(n)]
    return _result(1, "exceptional sets vs brute force", len(mismatches), 0, t0, 1.0,
                   mismatches=mismatches)


def check_equatorial_series(seed: int = DEFAULT_SEED) -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    for n, k in [(2, 2), (2, 3), (3, 2), (4, 3)]:
        prof = model_catalog("equatorial", {"n": n, "k": k})
        v = expand_symmetric(n, k, prof, 4).scalar_coefficients()
        worst = max(worst, abs(v[2] + 1.0 / 6.0), abs(v[4] - 1.0 / 120.0))
    return _result(2, "equatorial expansion v2, v4", worst, 1e-10, t0, 1.0)


def check_energy_anchor(seed: int = DEFAULT_SEED) -> CheckResult:
    t0 = time.perf_counter()
    surf = model_catalog("equatorial_sphere", {"k": 2, "nu": 32, "nv": 64})
    target = -4.0 * math.pi ** 2
    val = energy_n2(surf)
    return _result(3, "energy of equatorial S^2 in S^4", abs(val / target - 1.0), 1e-6, t0, 5.0,
                   value=val, target=target)


def _fit_model(n: int, k: int):
    prof = model_catalog("equatorial", {"n": n, "k": k})
    curve = volume_curve(prof)
    return fit_expansion(curve.eps, curve.volume, n, k)


def check_volume_anchors(seed: int = DEFAULT_SEED) -> CheckResult:
    t0 = time.perf_counter()
    target = -4.0 * math.pi ** 2
    f22 = _fit_model(2, 2)
    f12 = _fit_model(1, 2)
    e22 = abs(f22.energy / target - 1.0) / 1e-4
    v12 = abs(f12.V / target - 1.0) / 1e-5
    c1 = abs(f22.c[1]) / 1e-6
    # normalised so that 1 is the threshold of every sub-check
    err = max(e22, v12, c1)
    return _result(4, "volume-fit anchors, worst error over threshold", err, 1.0, t0, 30.0,
                   energy_22=f22.energy, V_12=f12.V, c1_22=f22.c[1])


def check_closed_form_fits(seed: int = DEFAULT_SEED) -> CheckResult:
    t0 = time.perf_counter()
    f23 = _fit_model(2, 3)
    f32 = _fit_model(3, 2)
    e23 = closed_form_equatorial(2, 3)["energy"]
    v32 = closed_form_equatorial(3, 2)["volume"]
    err = max(abs(f23.energy / e23 - 1.0), abs(f32.V / v32 - 1.0))
    return _result(5, "fits vs closed forms (2,3), (3,2)", err, 1e-4, t0, 30.0,
                   energy_23=f23.energy, formula_23=e23, V_32=f32.V, formula_32=v32)


def check_conformal_invariance(seed: int = DEFAULT_SEED) -> CheckResult:
    t0 = time.perf_counter()
    target = 2.0 * math.pi ** 2
    e_sphere = energy_codim1(model_catalog("clifford_torus", {"nu": 64, "nv": 64}))
    e_flat = energy_codim1(model_catalog("stereographic_clifford", {"nu": 64, "nv": 64}))
    err = max(abs(e_flat / e_sphere - 1.0), abs(e_sphere / target - 1.0))
    return _result(6, "Clifford torus vs stereographic image", err, 1e-3, t0, 60.0,
                   sphere=e_sphere, flat=e_flat, target=target)


def _random_harmonic(rng, space, j: int) -> FiberFunction:
    c = np.zeros(space.size_to(j))
    c[space.block(j)] = rng.normal(size=space.dims[j])
    return FiberFunction(space, c)


def check_parity(seed: int = DEFAULT_SEED) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst_series, worst_theta, worst_product = 0.0, 0.0, 0.0
    for i in range(20):
        k = (1, 2, 3, 4, 5, 6)[i % 6]
        pt = fermi_point(random_jet(rng, k))
        series = expand_n2(pt)
        worst_series = max(worst_series, series.parity_report(1e-8).worst)
        worst_theta = max(worst_theta, theta_n2(pt, series).parity_report(1e-8).worst)
    for i in range(100):
        k = (2, 3, 4, 5)[i % 4]
        space = fiber_space(k, cap=6)
        p, q = rng.integers(0, 4, size=2)
        f, g = _random_harmonic(rng, space, p), _random_harmonic(rng, space, q)
        fg = multiply(f, g)
        norms = fg.degree_norms()
        bad = [norms[j] for j in range(len(norms)) if j > p + q or (p + q - j) % 2]
        worst_product = max([worst_product] + [float(b) for b in bad])
    # series and theta at 1e-8, products at 1e-10; report relative to each
    err = max(worst_series / 1e-8, worst_theta / 1e-8, worst_product / 1e-10)
    return _result(7, "parity suite, worst violation over threshold", err, 1.0, t0, 60.0,
                   series=worst_series, theta=worst_theta, product=worst_product)


def check_anomaly_covariance(seed: int = DEFAULT_SEED) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed + 8)
    worst = 0.0
    for _ in range(20):
        jet = random_jet(rng, 4)
        A = expand_n2(fermi_point(jet)).diagnostics["anomaly"]
        w = 0.5 * rng.normal()
        hat = conformal_jet(jet, w, grad=rng.normal(size=2), hess=rng.normal(size=(2, 2)),
                            hess_normal=rng.normal())
        A_hat = expand_n2(fermi_point(hat)).diagnostics["anomaly"]
        worst = max(worst, abs(A_hat - math.exp(-2 * w) * A) / max(abs(A), 1.0))
    return _result(8, "k=4 anomaly weight under conformal change", worst, 1e-6, t0, 30.0)


def _cauchy_taylor(fn, order: int, radius: float = 0.5, m: int = 64) -> np.ndarray:
    """Taylor coefficients of an entire function from samples on a circle."""
    z = radius * np.exp(2j * np.pi * np.arange(m) / m)
    c = np.fft.fft(fn(z)) / m
    return (c[: order + 1] / radius ** np.arange(order + 1)).real


def check_eikonal(seed: int = DEFAULT_SEED) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed + 9)
    space = fiber_space(2)
    order = 3
    worst = 0.0
    for _ in range(5):
        a = rng.normal(size=order + 1)
        e = _cauchy_taylor(lambda z: np.exp(np.polyval(a[::-1], z)), order)
        ref = e / np.arange(1, order + 2)
        ser = eikonal_expand([constant(space, float(c)) for c in a], order)
        worst = max(worst, max(abs(ser.psi[j].average() - ref[j]) for j in range(order + 1)))
        worst = max(worst, max(f.norm() - abs(f.average()) for f in ser.psi))
    return _result(9, "radial eikonal vs (1/t) int e^omega", worst, 1e-10, t0, 1.0)


CHECKS = {
    1: check_exceptional_sets,
    2: check_equatorial_series,
    3: check_energy_anchor,
    4: check_volume_anchors,
    5: check_closed_form_fits,
    6: check_conformal_invariance,
    7: check_parity,
    8: check_anomaly_covariance,
    9: check_eikonal,
}


def run_checks(criteria=None, seed: int = DEFAULT_SEED) -> list:
    """Run the selected criteria (all by default) in order."""
    selected = sorted(CHECKS) if criteria is None else sorted(criteria)
    return [CHECKS[c](seed) for c in selected]
