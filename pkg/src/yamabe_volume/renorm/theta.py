"""The volume density ``theta`` of the singular Yamabe metric in Fermi coordinates.

``dV_{g+} = theta dt dV_{h0} dV_b`` with

    t^{n+1} theta = v^{-(n+k)} sqrt(det h det alpha / det h0 det b),

so ``theta = t^{-n-1} (theta_0 + t theta_1 + ...)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..expansion.series import JetSeries, ps_mul, ps_pow
from ..fiber import FiberFunction, constant, parity_degree_check
from ..geometry.jets import FermiPointData, gamma2
from ..geometry.models import WarpedProfile, _taylor

__all__ = [
    "ThetaProfile",
    "theta_profile",
    "theta_symmetric",
    "theta_n2",
    "theta2_closed_form",
    "pi0_theta2_closed_form",
]


@dataclass
class ThetaProfile:
    """Coefficients ``theta_j`` and, for exact models, the density itself.

    ``func`` is None for pointwise (jet) data.  ``closed_form`` holds
    reference values from the displayed closed-form expressions when
    available, and ``crosscheck`` the largest discrepancy against them.
    """

    n: int
    k: int
    coeffs: list
    func: object = None
    closed_form: dict = field(default_factory=dict)
    crosscheck: float = 0.0

    def averages(self) -> np.ndarray:
        return np.array([c.average() if isinstance(c, FiberFunction) else float(c)
                         for c in self.coeffs])

    def parity_report(self, tol: float = 1e-8):
        return parity_degree_check([c for c in self.coeffs], tol)

    def __call__(self, t):
        if self.func is None:
            raise TypeError("this theta profile has no closed-form density")
        return self.func(t)


def theta_symmetric(profile: WarpedProfile, series: JetSeries | None = None,
                    order: int | None = None) -> ThetaProfile:
    """Density of a warped-product model.

    Coefficients come from series composition with ``v`` (or the exact
    solution's Taylor series when no series is given); the callable uses
    the exact solution when the model has one and the truncated series
    otherwise.
    """
    n, k = profile.n, profile.k
    if series is None:
        if profile.exact_u is None:
            raise ValueError("model has no exact solution; pass a JetSeries")
        order = n if order is None else order
        v = list(_taylor(profile.exact_u, order, shift=1))
    else:
        v = list(series.scalar_coefficients())
        order = series.order if order is None else min(order, series.order)
    phi, q = profile.taylor(order)
    comp = ps_mul(ps_mul(ps_pow(v, -(n + k), order), ps_pow(list(phi), n, order), order),
                  ps_pow(list(q), k - 1, order), order)
    space_consts = [float(c) for c in comp]

    fns = profile.functions()
    uf = profile.exact_u_functions()
    if uf is None:
        cpoly = np.polynomial.Polynomial(np.concatenate([[0.0], v]))
        ufun = cpoly
    else:
        ufun = uf[0]

    def density(t):
        t = np.asarray(t, dtype=float)
        return ufun(t) ** (-(n + k)) * fns[0](t) ** n * fns[3](t) ** (k - 1)

    def scaled(t):
        """``t^{n+1} theta(t)``, evaluated without forming large powers."""
        t = np.asarray(t, dtype=float)
        return ((ufun(t) / t) ** (-(n + k)) * fns[0](t) ** n
                * (fns[3](t) / t) ** (k - 1))

    prof = ThetaProfile(n=n, k=k, coeffs=space_consts, func=density)
    prof.closed_form["scaled"] = scaled
    return prof


def theta_n2(point: FermiPointData, series: JetSeries) -> ThetaProfile:
    """``theta_0, theta_1, theta_2`` at one point of a surface.

    Composed from ``v^{-(k+2)} (1 + t gamma_1 + t^2 gamma_2)^{1/2}`` and
    checked against the closed-form ``theta_2`` and ``pi0(theta_2)``.
    """
    k = point.k
    g1 = point.gamma1
    space = g1.space
    one = constant(space, 1.0)
    det = [one, g1, gamma2(point.jet, space)]
    v = series.v[:3]
    comp = ps_mul(ps_pow(v, -(k + 2.0), 2), ps_pow(det, 0.5, 2), 2)
    comp = [c if isinstance(c, FiberFunction) else constant(space, float(c)) for c in comp]
    closed2 = theta2_closed_form(point, series)
    prof = ThetaProfile(n=2, k=k, coeffs=comp)
    prof.closed_form["theta2"] = closed2
    diff = comp[2] - closed2
    err = diff.norm()
    if k != 4:
        pi0 = pi0_theta2_closed_form(point)
        prof.closed_form["pi0_theta2"] = pi0
        err = max(err, abs(pi0 - comp[2].average()))
    prof.crosscheck = float(err)
    return prof


def theta2_closed_form(point: FermiPointData, series: JetSeries) -> FiberFunction:
    """``theta_2`` from ``v_1, v_2`` and the determinant jets (``v_0 = 1``)."""
    k = point.k
    g1 = point.gamma1
    v1, v2 = series.v[1], series.v[2]
    g2 = gamma2(point.jet, g1.space)
    return (4.0 * g2 - 2.0 * (g1 * g1) + g1 * g1 - 4.0 * (k + 2) * (g1 * v1 + 2.0 * v2)
            + 4.0 * (k + 2) * (k + 3) * (v1 * v1)) / 8.0


def pi0_theta2_closed_form(point: FermiPointData) -> float:
    """Fibre average of ``theta_2`` from curvature invariants (``k != 4``)."""
    j = point.jet
    k = j.k
    normal_ricci_trace = float(np.trace(j.ricci_normal))
    inner = normal_ricci_trace + j.L_norm2 - 2.0 / 3.0 * j.normal_sectional_sum
    return ((k - 10) * j.H_norm2 + 12.0 * inner
            - 4.0 * (k + 2) / (k + 1) * point.R_g_point) / (8.0 * (4 - k))


def theta_profile(series: JetSeries, geometry) -> ThetaProfile:
    """Dispatch on the geometry: a :class:`WarpedProfile` or a surface point."""
    if isinstance(geometry, WarpedProfile):
        return theta_symmetric(geometry, series)
    if isinstance(geometry, FermiPointData):
        return theta_n2(geometry, series)
    raise TypeError(f"unsupported geometry {type(geometry).__name__}")
