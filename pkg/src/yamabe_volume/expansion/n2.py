"""Second-order singular Yamabe jet for surfaces (n = 2), pointwise on Sigma.

With ``v_0 = 1`` and ``G = 2 gamma_2 - gamma_1^2`` the expansion of
``2 L[t v]`` has

    t^1:  2 I_1 v_1 + gamma_1,
    t^2:  2 I_2 v_2 - 8 v_1^2 + 3 gamma_1 v_1 + 2 v_1 Delta v_1
          + <dv_1, d(gamma_1 - (k + 2) v_1)> + G + R_g / (k + 1),

where ``I_s = Delta + s^2 - 2 s - (4 - k)``.
"""

from __future__ import annotations

from ..fiber import FiberFunction, constant
from ..indicial import Obstruction, classify, indicial_solve
from ..geometry.jets import FermiPointData
from .series import JetSeries, LogTerm

__all__ = ["expand_n2", "second_order_source", "pi0_v2_closed_form", "residual_coefficients"]

NORMALIZATION_NOTE = "pi0(v_2) set to 0: normalization, not conformally invariant"


def second_order_source(point: FermiPointData, v1: FiberFunction) -> FiberFunction:
    """All of the ``t^2`` coefficient of ``2 L[t v]`` except ``2 I_2 v_2``."""
    g1 = point.gamma1
    k = point.k
    out = (-8.0 * (v1 * v1) + 3.0 * (g1 * v1) + 2.0 * (v1 * v1.laplacian())
           + v1.grad_dot(g1) - (k + 2.0) * v1.grad_dot(v1)
           + point.gamma2_combo)
    return out + point.R_g_point / (k + 1.0)


def pi0_v2_closed_form(point: FermiPointData) -> float:
    """Fibre average of ``v_2`` from jet invariants (``k != 4``)."""
    k = point.k
    pi0_g1sq = 4.0 * point.H_norm2 / k
    rhs = ((12 + 5 * k - k * k) / 64.0 * pi0_g1sq + point.gamma2_combo_average()
           + point.R_g_point / (k + 1.0))
    return 0.5 * rhs / (4.0 - k)


def expand_n2(point: FermiPointData, k: int | None = None, tol: float = 1e-10) -> JetSeries:
    """Jet ``v_0, v_1, v_2`` at one point of a surface.

    For ``k = 4`` the degree-0 part of the order-2 equation is resonant:
    the series carries a log term with fibre-constant coefficient
    ``A = -pi0(F_2) / 2`` and ``pi0(v_2)`` is set to zero.
    """
    k = point.k if k is None else k
    if k != point.k:
        raise ValueError(f"point data has k={point.k}, requested k={k}")
    if point.jet.n != 2:
        raise ValueError("expand_n2 needs a surface jet (n = 2)")
    g1 = point.gamma1
    space = g1.space
    v0 = constant(space, 1.0)
    v1 = indicial_solve(2, k, 1, -0.5 * g1, tol=tol)
    if isinstance(v1, Obstruction):
        # k = 5: only degree 0 is resonant and gamma_1 has none
        raise RuntimeError("unexpected first-order obstruction")
    F2 = 0.5 * second_order_source(point, v1)
    sol = indicial_solve(2, k, 2, -F2, tol=tol)
    logs, notes, diag = [], [], {}
    if isinstance(sol, Obstruction):
        # sol.source is the degree-0 part of -F_2
        A = sol.source.average() / 2.0
        logs.append(LogTerm(order=2, power=1, coeff=constant(space, A)))
        notes.append(NORMALIZATION_NOTE)
        rest = F2 + sol.source
        v2 = indicial_solve(2, k, 2, -rest, tol=tol)
        diag["anomaly"] = A
    else:
        v2 = sol
        if k != 4:
            closed = pi0_v2_closed_form(point)
            diag["pi0_v2_closed_form"] = float(closed)
            diag["pi0_v2_mismatch"] = float(abs(closed - v2.average()))
    if k == 4 and not logs:
        # vanishing obstruction: the average is still free
        notes.append(NORMALIZATION_NOTE)
        logs.append(LogTerm(order=2, power=1, coeff=constant(space, 0.0)))
        diag["anomaly"] = 0.0
    report = classify(2, k)
    return JetSeries(n=2, k=k, v=[v0, v1, v2], log_terms=logs, residual_order=3 if not logs else 2,
                     classification=report.classification.name, notes=notes, diagnostics=diag)


def residual_coefficients(point: FermiPointData, series: JetSeries) -> list:
    """Coefficients of ``2 L[u]`` at orders 0, 1, 2.

    A log term ``A t^3 log t`` adds ``2 (2 nu - n) A`` at order ``nu = 2``;
    its ``log t`` multiple ``2 I_2 A`` vanishes by resonance.
    """
    v0, v1, v2 = series.v[:3]
    k = point.k
    c0 = (4.0 - k) - (4.0 - k) * (v0 * v0)
    c1 = 2.0 * (v1.laplacian() + (k - 5.0) * v1) + point.gamma1
    c2 = 2.0 * (v2.laplacian() + (k - 4.0) * v2) + second_order_source(point, v1)
    for term in series.log_terms:
        c2 = c2 + 4.0 * term.coeff
    return [c0, c1, c2]
