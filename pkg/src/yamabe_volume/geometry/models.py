"""Catalog of model geometries.

Symmetric models are warped products ``dt^2 + phi(t)^2 g_Sigma + psi(t)^2 b``
over a tube around Sigma, with ``b`` the round metric of S^{k-1}; they are
returned as :class:`WarpedProfile`.  Surface models are returned as
:class:`~yamabe_volume.geometry.surfaces.SurfaceGrid`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
import sympy as sp

from ..fiber import sphere_area
from .jets import MetricJet, kulkarni_nomizu
from .surfaces import SurfaceGrid, stereographic_to_flat

__all__ = [
    "UnknownModel",
    "WarpedProfile",
    "model_catalog",
    "warped_point_jet",
    "MODEL_NAMES",
    "T",
]

T = sp.Symbol("t", real=True)


class UnknownModel(KeyError):
    """Requested model name is not in the catalog."""


@dataclass
class WarpedProfile:
    """Warped-product tube model.

    Attributes
    ----------
    n, k : dimension and codimension of Sigma.
    phi, psi : sympy expressions in :data:`T`; ``phi`` even with
        ``phi(0) > 0`` and ``psi`` odd with ``psi'(0) = 1``.
    R_sigma : scalar curvature of ``g_Sigma`` (taken constant).
    vol_sigma : volume of ``(Sigma, g_Sigma)``, or None if not compact.
    t_max : end of the tube, where the volume integral stops.
    exact_u : closed-form singular Yamabe function, if known.
    """

    n: int
    k: int
    phi: sp.Expr
    psi: sp.Expr
    R_sigma: float = 0.0
    vol_sigma: float | None = None
    t_max: float | None = None
    exact_u: sp.Expr | None = None
    name: str = "warped"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def taylor(self, order: int):
        """Taylor coefficients of ``phi`` and ``psi / t`` through ``t^order``."""
        key = ("taylor", order)
        if key not in self._cache:
            self._cache[key] = (_taylor(self.phi, order), _taylor(self.psi, order, shift=1))
        return self._cache[key]

    def taylor_mp(self, order: int, dps: int):
        """As :meth:`taylor`, as object arrays of ``dps``-digit mpf values."""
        key = ("taylor_mp", order, dps)
        if key not in self._cache:
            with mpmath.workdps(dps):
                conv = [np.array([mpmath.mpf(sp.N(c, dps + 5)) for c in
                                  _taylor_exact(_exact_floats(e), order, shift)], dtype=object)
                        for e, shift in ((self.phi, 0), (self.psi, 1))]
            self._cache[key] = tuple(conv)
        return self._cache[key]

    def functions(self):
        """Numeric callables ``phi, phi', phi'', psi, psi', psi''``."""
        if "fns" not in self._cache:
            exprs = [self.phi, sp.diff(self.phi, T), sp.diff(self.phi, T, 2),
                     self.psi, sp.diff(self.psi, T), sp.diff(self.psi, T, 2)]
            self._cache["fns"] = [_vectorised(e) for e in exprs]
        return self._cache["fns"]

    def exact_u_functions(self):
        """``u, u', u''`` as callables, or None."""
        if self.exact_u is None:
            return None
        if "u" not in self._cache:
            self._cache["u"] = [_vectorised(sp.diff(self.exact_u, T, m)) for m in range(3)]
        return self._cache["u"]

    def mp_functions(self):
        """``phi, phi', phi'', psi, psi', psi''`` as mpmath callables."""
        if "mpfns" not in self._cache:
            phi, psi = _exact_floats(self.phi), _exact_floats(self.psi)
            exprs = [phi, sp.diff(phi, T), sp.diff(phi, T, 2),
                     psi, sp.diff(psi, T), sp.diff(psi, T, 2)]
            self._cache["mpfns"] = [sp.lambdify(T, e, "mpmath") for e in exprs]
        return self._cache["mpfns"]

    def curvature_from_values(self, p, dp, ddp, q, dq, ddq):
        """Scalar curvature from profile values; works for floats, arrays and mpf."""
        n, k = self.n, self.k
        R2 = (k - 1) * (k - 2)
        return (self.R_sigma / p ** 2 + R2 / q ** 2 - 2 * n * ddp / p - 2 * (k - 1) * ddq / q
                - n * (n - 1) * (dp / p) ** 2 - (k - 1) * (k - 2) * (dq / q) ** 2
                - 2 * n * (k - 1) * dp * dq / (p * q))

    def scalar_curvature(self, t):
        """Scalar curvature of the warped product at ``t`` (numeric)."""
        return self.curvature_from_values(*(f(t) for f in self.functions()))


def warped_point_jet(profile: WarpedProfile) -> MetricJet:
    """Fermi jet at a point of Sigma for a warped-product model.

    Sigma is totally geodesic (``phi`` is even) and the curvature at
    ``t = 0`` has three constant blocks: the intrinsic curvature of
    ``phi(0)^2 g_Sigma`` (taken to be a space form), the mixed sectional
    curvature ``-2 phi_2 / phi_0`` and the normal sectional curvature
    ``-6 psi_3`` of ``dt^2 + psi^2 b``, with ``phi_j, psi_j`` Taylor
    coefficients.
    """
    n, k = profile.n, profile.k
    phi, q = profile.taylor(2)
    d = n + k
    h0 = phi[0] ** 2 * np.eye(n)
    gT = np.zeros((d, d))
    gT[:n, :n] = h0
    gN = np.zeros((d, d))
    gN[n:, n:] = np.eye(k)
    K_T = profile.R_sigma / (n * (n - 1) * phi[0] ** 2) if n > 1 else 0.0
    K_M = -2.0 * phi[2] / phi[0]
    K_N = -6.0 * q[2]
    R = (0.5 * K_T * kulkarni_nomizu(gT, gT) + K_M * kulkarni_nomizu(gT, gN)
         + 0.5 * K_N * kulkarni_nomizu(gN, gN))
    return MetricJet(h0=h0, L=np.zeros((k, n, n)), curvature=R)


def _exact_floats(expr: sp.Expr) -> sp.Expr:
    """Replace float literals by the rationals equal to their binary values."""
    return expr.xreplace({a: sp.Rational(float(a)) for a in expr.atoms(sp.Float)})


def _taylor_exact(expr: sp.Expr, order: int, shift: int = 0) -> list:
    """Taylor coefficients of ``expr / t^shift`` through ``t^order`` as sympy numbers.

    ``expr`` must vanish to order ``shift`` at 0.  Derivatives at 0 are much
    cheaper than ``sympy.series``; the series is the fallback when a
    derivative does not evaluate to a finite number.
    """
    out = []
    d = expr
    for j in range(order + shift + 1):
        val = d.subs(T, 0)
        if not val.is_finite:
            ser = sp.series(expr, T, 0, order + shift + 1).removeO()
            return [ser.coeff(T, m + shift) for m in range(order + 1)]
        out.append(val / sp.factorial(j))
        d = sp.diff(d, T)
    return out[shift:]


def _taylor(expr: sp.Expr, order: int, shift: int = 0) -> np.ndarray:
    """Float Taylor coefficients of ``expr / t^shift`` through ``t^order``."""
    return np.array([float(c) for c in _taylor_exact(expr, order, shift)])


def _vectorised(expr: sp.Expr):
    f = sp.lambdify(T, expr, "numpy")

    def call(t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(f(t), t.shape).astype(float)

    return call


def _equatorial(n: int, k: int, **_) -> WarpedProfile:
    return WarpedProfile(n=n, k=k, phi=sp.cos(T), psi=sp.sin(T), R_sigma=float(n * (n - 1)),
                         vol_sigma=sphere_area(n + 1), t_max=math.pi / 2, exact_u=sp.sin(T),
                         name="equatorial")


def _flat(n: int, k: int, **_) -> WarpedProfile:
    return WarpedProfile(n=n, k=k, phi=sp.Integer(1), psi=T, R_sigma=0.0, exact_u=T, name="flat")


def _warped(n: int, k: int, phi="1", psi="t", R_sigma=0.0, vol_sigma=None, t_max=None,
            exact_u=None, **_) -> WarpedProfile:
    loc = {"t": T}
    return WarpedProfile(
        n=n, k=k, phi=sp.sympify(phi, locals=loc), psi=sp.sympify(psi, locals=loc),
        R_sigma=float(R_sigma), vol_sigma=vol_sigma, t_max=t_max,
        exact_u=None if exact_u is None else sp.sympify(exact_u, locals=loc), name="warped")


def _pad(points: np.ndarray, dim: int) -> np.ndarray:
    extra = dim - points.shape[-1]
    if extra < 0:
        raise ValueError("target dimension is too small")
    return np.concatenate([points, np.zeros(points.shape[:-1] + (extra,))], axis=-1)


def _torus_grid(nu: int, nv: int):
    u = 2.0 * np.pi * np.arange(nu) / nu
    v = 2.0 * np.pi * np.arange(nv) / nv
    return np.meshgrid(u, v, indexing="ij")


def _clifford_torus(nu=64, nv=64, k=1, **_) -> SurfaceGrid:
    u, v = _torus_grid(nu, nv)
    X = np.stack([np.cos(u), np.sin(u), np.cos(v), np.sin(v)], -1) / math.sqrt(2.0)
    meta = {"model": "clifford_torus", "area": 2 * math.pi ** 2, "Lo_norm2": 2.0, "R_h": 0.0}
    if k == 1:
        meta["energy_codim1"] = 2 * math.pi ** 2
    return SurfaceGrid(_pad(X, k + 3), topology="torus", ambient="sphere", meta=meta)


def _torus_of_revolution(r=1.0, R=2.0, nu=64, nv=64, k=1, **_) -> SurfaceGrid:
    """Tube radius ``r`` around a circle of radius ``R``; ``u`` runs along the
    core circle, ``v`` around the tube.  Principal curvatures are ``1/r`` and
    ``cos v / (R + r cos v)``."""
    if not 0 < r < R:
        raise ValueError("torus of revolution needs 0 < r < R")
    u, v = _torus_grid(nu, nv)
    rho = R + r * np.cos(v)
    X = np.stack([rho * np.cos(u), rho * np.sin(u), r * np.sin(v)], -1)
    meta = {"model": "torus_of_revolution", "r": r, "R": R,
            "area": 4 * math.pi ** 2 * r * R}
    return SurfaceGrid(_pad(X, k + 2), topology="torus", ambient="flat", meta=meta)


def _stereographic_clifford(nu=64, nv=64, **_) -> SurfaceGrid:
    return stereographic_to_flat(_clifford_torus(nu=nu, nv=nv, k=1))


def _equatorial_sphere(k=2, nu=32, nv=64, **_) -> SurfaceGrid:
    theta = (np.arange(nu) + 0.5) * np.pi / nu
    phi = 2.0 * np.pi * np.arange(nv) / nv
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    X = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], -1)
    meta = {"model": "equatorial_sphere", "area": 4 * math.pi}
    return SurfaceGrid(_pad(X, k + 3), topology="sphere", ambient="sphere", meta=meta)


def _graph_perturbation(base="clifford_torus", k=1, amplitude=0.05, modes=3, seed=0,
                        nu=48, nv=48, **kw) -> SurfaceGrid:
    """Smooth random normal-ish perturbation of a base torus.

    Every ambient coordinate is perturbed by a random trigonometric
    polynomial of degree ``modes``; in the round ambient the result is
    projected back to the unit sphere.
    """
    rng = np.random.default_rng(seed)
    if base == "clifford_torus":
        surf = _clifford_torus(nu=nu, nv=nv, k=k)
    elif base == "torus_of_revolution":
        surf = _torus_of_revolution(nu=nu, nv=nv, k=k, **kw)
    elif base == "flat_torus":
        if k < 2:
            raise ValueError("the flat torus lies in R^4 and needs k >= 2")
        u, v = _torus_grid(nu, nv)
        X = np.stack([np.cos(u), np.sin(u), np.cos(v), np.sin(v)], -1)
        surf = SurfaceGrid(_pad(X, k + 2), topology="torus", ambient="flat")
    else:
        raise UnknownModel(f"unknown perturbation base {base!r}")
    u, v = _torus_grid(nu, nv)
    X = surf.points.copy()
    for c in range(X.shape[-1]):
        for a in range(-modes, modes + 1):
            for b in range(0, modes + 1):
                amp = amplitude * rng.normal() / (1.0 + a * a + b * b)
                X[..., c] += amp * np.cos(a * u + b * v + rng.uniform(0, 2 * np.pi))
    if surf.ambient == "sphere":
        X /= np.linalg.norm(X, axis=-1, keepdims=True)
    meta = {"model": "graph_perturbation", "base": base, "amplitude": amplitude,
            "modes": modes, "seed": seed}
    return SurfaceGrid(X, topology="torus", ambient=surf.ambient, meta=meta)


_CATALOG = {
    "equatorial": _equatorial,
    "flat": _flat,
    "warped": _warped,
    "clifford_torus": _clifford_torus,
    "torus_of_revolution": _torus_of_revolution,
    "stereographic_clifford": _stereographic_clifford,
    "equatorial_sphere": _equatorial_sphere,
    "graph_perturbation": _graph_perturbation,
}

MODEL_NAMES = tuple(_CATALOG)


def model_catalog(name: str, params: dict | None = None):
    """Build a model by name.

    Symmetric models (``equatorial``, ``flat``, ``warped``) need ``n`` and
    ``k`` and return a :class:`WarpedProfile`; surface models return a
    :class:`SurfaceGrid`.

    Raises
    ------
    UnknownModel
        If ``name`` is not in :data:`MODEL_NAMES`.
    """
    try:
        builder = _CATALOG[name]
    except KeyError:
        raise UnknownModel(f"unknown model {name!r}; known: {', '.join(MODEL_NAMES)}") from None
    return builder(**(params or {}))
