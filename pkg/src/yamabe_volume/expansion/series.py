"""Jet series containers and truncated power-series arithmetic.

Coefficient lists may hold scalars (floats or arrays) or fibre functions; the
helpers only need ``+`` and ``*`` between coefficients and scalars.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..fiber import FiberFunction, constant, fiber_space, parity_degree_check

__all__ = [
    "ObstructionHit",
    "LogTerm",
    "JetSeries",
    "ps_mul",
    "ps_pow",
    "ps_exp",
    "ps_div",
    "ps_deriv",
]


class ObstructionHit(ArithmeticError):
    """A nonzero fibre average at an even resonant order.

    Attributes
    ----------
    nu : resonant order.
    value : fibre average of the normalised residual ``F_nu``.
    """

    def __init__(self, nu: int, value: float):
        super().__init__(f"log obstruction at order {nu}: pi0(F) = {value:.6g}")
        self.nu = nu
        self.value = value


@dataclass
class LogTerm:
    """``t^{order + 1} (log t)^power * coeff`` in ``u``."""

    order: int
    power: int
    coeff: FiberFunction


@dataclass
class JetSeries:
    """Formal expansion ``u = t (v_0 + t v_1 + ... + t^N v_N) + log terms``."""

    n: int
    k: int
    v: list
    log_terms: list = field(default_factory=list)
    residual_order: int = 0
    classification: str = "Regular"
    notes: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return len(self.v) - 1

    def scalar_coefficients(self) -> np.ndarray:
        """Fibre averages of ``v_j``."""
        return np.array([f.average() for f in self.v])

    def parity_report(self, tol: float = 1e-8):
        return parity_degree_check(self.v, tol)

    def to_dict(self) -> dict:
        def ff(f: FiberFunction) -> dict:
            norms = f.degree_norms()
            return {
                "basis": f.basis_kind,
                "by_degree": [[float(x) for x in f.component(j)] for j in range(len(norms))],
            }

        return {
            "n": self.n,
            "k": self.k,
            "order": self.order,
            "classification": self.classification,
            "residual_order": self.residual_order,
            "v": [ff(f) for f in self.v],
            "log_terms": [{"order": t.order, "power": t.power, "coeff": ff(t.coeff)}
                          for t in self.log_terms],
            "notes": list(self.notes),
            "diagnostics": {k: float(v) for k, v in self.diagnostics.items()},
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def constant_series(cls, n: int, k: int, values, **kw) -> "JetSeries":
        space = fiber_space(k, kind="constant")
        return cls(n=n, k=k, v=[constant(space, float(x)) for x in values], **kw)


def ps_mul(a, b, order: int) -> list:
    """Cauchy product truncated after ``t^order``."""
    out = []
    for m in range(order + 1):
        acc = None
        for i in range(max(0, m - len(b) + 1), min(m, len(a) - 1) + 1):
            term = a[i] * b[m - i]
            acc = term if acc is None else acc + term
        out.append(0.0 if acc is None else acc)
    return out


def ps_pow(a, alpha: float, order: int) -> list:
    """``a^alpha`` for a series whose constant term is a positive scalar.

    Miller's recurrence ``b_m = sum_i ((alpha + 1) i - m) a_i b_{m-i} / (m a_0)``.
    """
    a0 = _scalar(a[0])
    b = [a0 ** alpha]
    for m in range(1, order + 1):
        acc = 0.0
        for i in range(1, min(m, len(a) - 1) + 1):
            acc = acc + a[i] * b[m - i] * ((alpha + 1.0) * i - m)
        b.append(acc * (1.0 / (m * a0)))
    return b


def ps_exp(a, order: int) -> list:
    """``exp(a)`` for a series with scalar constant term."""
    b = [float(np.exp(_scalar(a[0])))]
    for m in range(1, order + 1):
        acc = 0.0
        for i in range(1, min(m, len(a) - 1) + 1):
            acc = acc + a[i] * b[m - i] * float(i)
        b.append(acc * (1.0 / m))
    return b


def ps_div(a, b, order: int) -> list:
    """``a / b`` for ``b`` with scalar constant term."""
    return ps_mul(a, ps_pow(b, -1.0, order), order)


def ps_deriv(a) -> list:
    return [a[i] * float(i) for i in range(1, len(a))] or [0.0]


def _scalar(x) -> float:
    if isinstance(x, FiberFunction):
        if np.linalg.norm(x.coeffs[1:]) > 1e-14 * max(1.0, abs(x.coeffs[0])):
            raise ValueError("series constant term must be fibre-constant")
        return float(x.average())
    return float(x)
