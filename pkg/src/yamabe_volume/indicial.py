"""The indicial operator and the exceptional codimensions it determines.

For a submanifold of dimension ``n`` and codimension ``k`` the indicial
operator at order ``s`` acts on fibre functions as

    I_s[phi] = Delta phi + (s^2 - n s - (n - k + 2)) phi,

so it is diagonal in harmonic degree with scalar
``mu(s) - j(j + k - 2)`` on degree ``j``.  Only degree 0 can be resonant
for ``0 <= s <= n``; integral resonant orders of even type produce
logarithms, odd ones only a normalisation constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .fiber import FiberFunction, laplace_eigenvalue

__all__ = [
    "Regular",
    "OddConstrained",
    "LogObstructed",
    "IndicialReport",
    "Obstruction",
    "indicial_roots",
    "indicial_scalar",
    "exceptional_sets",
    "exceptional_sets_bruteforce",
    "classify",
    "resonant_degree",
    "indicial_apply",
    "indicial_solve",
]


@dataclass(frozen=True)
class Regular:
    name: str = field(default="Regular", init=False)


@dataclass(frozen=True)
class OddConstrained:
    resonant_orders: tuple
    name: str = field(default="OddConstrained", init=False)


@dataclass(frozen=True)
class LogObstructed:
    nu: int
    log_power: int
    resonant_orders: tuple = ()
    name: str = field(default="LogObstructed", init=False)


@dataclass(frozen=True)
class IndicialReport:
    n: int
    k: int
    roots: tuple | None
    e_set: frozenset
    o_set: frozenset
    classification: Regular | OddConstrained | LogObstructed

    def to_dict(self) -> dict:
        c = self.classification
        out = {
            "n": self.n,
            "k": self.k,
            "roots": list(self.roots) if self.roots is not None else None,
            "E_n": sorted(self.e_set),
            "O_n": sorted(self.o_set),
            "classification": c.name,
        }
        if isinstance(c, OddConstrained):
            out["resonant_orders"] = list(c.resonant_orders)
        if isinstance(c, LogObstructed):
            out["nu"] = c.nu
            out["log_power"] = c.log_power
            out["resonant_orders"] = list(c.resonant_orders)
        return out


@dataclass
class Obstruction:
    """Resonant right-hand side that the indicial operator cannot absorb.

    ``source`` is the degree-``degree`` part of the right-hand side; at an
    even resonant order it is what a log term must cancel.
    """

    order: float
    degree: int
    source: FiberFunction


def indicial_scalar(n: int, k: int, s):
    """``s^2 - n s - (n - k + 2)``; exact for integer or Fraction ``s``."""
    return s * s - n * s - (n - k + 2)


def indicial_roots(n: int, k: int):
    """Real roots of ``s^2 - n s - (n - k + 2)`` in increasing order, or None."""
    disc = n * n + 4 * n - 4 * k + 8
    if disc < 0:
        return None
    r = math.isqrt(disc)
    if r * r == disc and (n + r) % 2 == 0:
        return ((n - r) // 2, (n + r) // 2)
    sq = math.sqrt(disc)
    return ((n - sq) / 2.0, (n + sq) / 2.0)


def _integer_roots(n: int, k: int) -> list:
    roots = indicial_roots(n, k)
    if roots is None or not all(isinstance(r, int) for r in roots):
        return []
    return sorted(set(roots))


def exceptional_sets(n: int):
    """The sets (E_n, O_n) of log-obstructed and odd-constrained codimensions."""
    if n < 1:
        raise ValueError(f"exceptional sets need n >= 1, got {n}")

    def p_n(p):
        return n + 2 + 2 * n * p - 4 * p * p

    def q_n(p):
        return 2 * n + 1 + 2 * (n - 2) * p - 4 * p * p

    if n % 2 == 0:
        e_set = {p_n(p) for p in range(0, n // 4 + 1)}
        o_set = {q_n(p) for p in range(0, n // 4 + 1)}
    else:
        e_set = {p_n(p) for p in range(1, n // 2 + 1)}
        o_set = e_set | {n + 2}
    return frozenset(e_set), frozenset(o_set)


def exceptional_sets_bruteforce(n: int, kmax: int | None = None):
    """Integer scan of ``s^2 - n s - (n - k + 2) = 0`` over ``s in 1..n``.

    ``k`` with an even root goes to E_n, with an odd root to O_n.
    """
    kmax = n * n + n + 2 if kmax is None else kmax
    e_set, o_set = set(), set()
    for k in range(2, kmax + 1):
        for s in range(1, n + 1):
            if s * s - n * s - (n - k + 2) == 0:
                (e_set if s % 2 == 0 else o_set).add(k)
    return frozenset(e_set), frozenset(o_set)


def classify(n: int, k: int) -> IndicialReport:
    """Classify the pair (n, k) by the structure of its indicial roots.

    ``LogObstructed`` carries the first even positive resonant order ``nu``
    (where a fibre average may fail to be absorbed) and ``log_power`` 2 when
    ``nu = n/2``.  Odd positive resonant orders are listed in
    ``resonant_orders``; order 0 is fixed by the normalisation ``v_0 = 1``.
    """
    e_set, o_set = exceptional_sets(n)
    roots = indicial_roots(n, k)
    ints = [r for r in _integer_roots(n, k) if 0 < r <= n]
    odd = tuple(r for r in ints if r % 2 == 1)
    if k in e_set:
        nu = min(r for r in ints if r % 2 == 0)
        cls = LogObstructed(nu=nu, log_power=2 if 2 * nu == n else 1, resonant_orders=odd)
    elif k in o_set:
        cls = OddConstrained(resonant_orders=odd)
    else:
        cls = Regular()
    return IndicialReport(n=n, k=k, roots=roots, e_set=e_set, o_set=o_set, classification=cls)


def _is_integral(s) -> bool:
    return isinstance(s, (int, np.integer, Fraction)) or float(s).is_integer()


def resonant_degree(n: int, k: int, s, max_degree: int):
    """Harmonic degree ``p <= max_degree`` killed by I_s, or None.

    Integral ``s`` is handled in exact integer arithmetic.
    """
    if _is_integral(s):
        mu = indicial_scalar(n, k, int(s))
        for p in range(max_degree + 1):
            if -laplace_eigenvalue(k, p) == mu:
                return p
        return None
    mu = indicial_scalar(n, k, float(s))
    for p in range(max_degree + 1):
        if abs(-laplace_eigenvalue(k, p) - mu) < 1e-12 * max(1.0, abs(mu)):
            return p
    return None


def _diagonal(n: int, k: int, s, phi: FiberFunction) -> np.ndarray:
    mu = float(indicial_scalar(n, k, s))
    return phi.space.eigenvalues(phi.max_degree) + mu


def indicial_apply(n: int, k: int, s, phi: FiberFunction) -> FiberFunction:
    """``Delta phi + (s^2 - n s - (n - k + 2)) phi``, applied spectrally."""
    if phi.k != k:
        raise ValueError(f"fibre function has k={phi.k}, expected {k}")
    return FiberFunction(phi.space, phi.coeffs * _diagonal(n, k, s, phi))


def indicial_solve(n: int, k: int, s, rhs: FiberFunction, tol: float = 1e-10):
    """Solve ``I_s w = rhs`` degree by degree.

    At a resonant degree ``p`` the component of ``w`` is set to zero if the
    matching component of ``rhs`` is below ``tol``; otherwise an
    :class:`Obstruction` holding that component is returned instead.
    """
    if rhs.k != k:
        raise ValueError(f"fibre function has k={rhs.k}, expected {k}")
    diag = _diagonal(n, k, s, rhs)
    p = resonant_degree(n, k, s, rhs.max_degree)
    coeffs = np.zeros_like(rhs.coeffs)
    mask = np.ones(len(diag), dtype=bool)
    if p is not None and rhs.space.dims[p] > 0:
        blk = rhs.space.block(p)
        src = rhs.coeffs[blk]
        if np.linalg.norm(src) > tol:
            c = np.zeros(rhs.space.size_to(p))
            c[blk] = src
            return Obstruction(order=s, degree=p, source=FiberFunction(rhs.space, c))
        mask[blk] = False
    coeffs[mask] = rhs.coeffs[mask] / diag[mask]
    return FiberFunction(rhs.space, coeffs)
