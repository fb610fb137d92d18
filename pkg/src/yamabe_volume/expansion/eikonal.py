"""Expansion of the distance ratio ``Psi = t_hat / t`` under ``g_hat = e^{2 omega} g``.

The eikonal identity ``|d t_hat|^2_{g_hat} = 1`` with ``t_hat = t Psi`` reads
``E[Psi] = 0`` where, along one fibre of the normal bundle,

    E[f] = f^2 + 2 t f f_t + t^2 f_t^2 + |d f|^2_b - e^{2 omega}.

This is the model operator of a normal space that is flat and an ``omega``
that only varies in the normal directions; tangential derivatives along
Sigma are not represented.  Order by order ``E[Psi_{<s} + t^s Psi_s]`` changes
at ``t^s`` by ``2 (1 + s) Psi_0 Psi_s``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fiber import FiberFunction, constant, parity_degree_check
from .series import ps_exp, ps_mul

__all__ = ["EikonalSeries", "eikonal_expand", "eikonal_residual", "MAX_ORDER"]

MAX_ORDER = 4


@dataclass
class EikonalSeries:
    psi: list
    omega: list

    @property
    def order(self) -> int:
        return len(self.psi) - 1

    def parity_report(self, tol: float = 1e-8):
        return parity_degree_check(self.psi, tol)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "psi": [[[float(x) for x in f.component(j)] for j in range(f.max_degree + 1)]
                    for f in self.psi],
            "psi_averages": [f.average() for f in self.psi],
        }


def _coefficients(psi: list, omega: list, order: int) -> list:
    tft = [p * float(s) for s, p in enumerate(psi)]
    sq = ps_mul(psi, psi, order)
    cross = ps_mul(psi, tft, order)
    tsq = ps_mul(tft, tft, order)
    grad = []
    for m in range(order + 1):
        acc = 0.0
        for i in range(max(0, m - len(psi) + 1), min(m, len(psi) - 1) + 1):
            acc = acc + psi[i].grad_dot(psi[m - i])
        grad.append(acc)
    e2w = ps_exp([2.0 * w for w in omega] + [0.0] * max(0, order + 1 - len(omega)), order)
    return [sq[m] + 2.0 * cross[m] + tsq[m] + grad[m] - e2w[m] for m in range(order + 1)]


def eikonal_expand(omega_jets: list, N: int) -> EikonalSeries:
    """Coefficients ``Psi_0, ..., Psi_N``.

    Parameters
    ----------
    omega_jets : Taylor coefficients ``omega_0, omega_1, ...`` in ``t``, as
        fibre functions; ``omega_0`` must be fibre-constant.
    N : highest order, at most :data:`MAX_ORDER`.
    """
    if N > MAX_ORDER:
        raise ValueError(f"eikonal expansion is capped at order {MAX_ORDER}")
    omega = list(omega_jets)
    w0 = omega[0]
    if isinstance(w0, FiberFunction):
        if np.linalg.norm(w0.coeffs[1:]) > 1e-12:
            raise ValueError("omega_0 must be constant on fibres")
        space = w0.space
        w0 = w0.average()
    else:
        space = next(w.space for w in omega if isinstance(w, FiberFunction))
    omega = [constant(space, float(w)) if not isinstance(w, FiberFunction) else w
             for w in omega]
    p0 = float(np.exp(w0))
    psi = [constant(space, p0)]
    for s in range(1, N + 1):
        F = _coefficients(psi + [constant(space, 0.0)], omega, s)[s]
        psi.append(F * (-1.0 / (2.0 * (1.0 + s) * p0)))
    return EikonalSeries(psi=psi, omega=omega)


def eikonal_residual(series: EikonalSeries) -> list:
    """Coefficients of ``E[Psi]`` through the series order (all ~0)."""
    return _coefficients(series.psi, series.omega, series.order)
