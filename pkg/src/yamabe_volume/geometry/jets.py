"""Fermi-coordinate jets of a submanifold at a point.

Index layout: the adapted frame has ``n`` coordinate tangent directions
(metric ``h0``) followed by ``k`` orthonormal normal directions.  The
ambient curvature tensor is stored with all indices down in that frame,
with the convention ``Ric_AB = g^{CD} R_{ACDB}``; the unit round sphere then
has ``R_ABCD = g_AD g_BC - g_AC g_BD``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..fiber import FiberFunction, FiberSpace, fiber_space, linear, quadratic

__all__ = [
    "MetricJet",
    "FermiPointData",
    "constant_curvature_tensor",
    "kulkarni_nomizu",
    "gamma1",
    "gamma2_combo",
    "gamma2_combo_from_blocks",
    "gamma2",
    "fermi_point",
    "random_jet",
    "rescale_jet",
    "conformal_jet",
]


def kulkarni_nomizu(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``(a o b)_ABCD = a_AD b_BC + a_BC b_AD - a_AC b_BD - a_BD b_AC``.

    With this sign ``(g o g)/2`` is the unit sphere curvature in the
    convention of the module docstring.
    """
    return (np.einsum("ad,bc->abcd", a, b) + np.einsum("bc,ad->abcd", a, b)
            - np.einsum("ac,bd->abcd", a, b) - np.einsum("bd,ac->abcd", a, b))


def constant_curvature_tensor(g: np.ndarray, kappa: float) -> np.ndarray:
    return 0.5 * kappa * kulkarni_nomizu(g, g)


@dataclass
class MetricJet:
    """Jet data of ``(M, Sigma)`` at one point of Sigma.

    Attributes
    ----------
    h0 : (n, n) induced metric.
    L : (k, n, n) second fundamental form, ``L[a, i, j]`` against the
        orthonormal normal ``a``.
    curvature : (d, d, d, d) ambient curvature in the adapted frame.
    normal_connection : (n, k, k) mixed Christoffel symbols ``Gamma_{iab}``
        (antisymmetric in ``a, b``); only enters through the blocks ``h2``
        and ``a0`` and cancels from every determinant combination.
    """

    h0: np.ndarray
    L: np.ndarray
    curvature: np.ndarray
    normal_connection: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.h0 = np.asarray(self.h0, dtype=float)
        self.L = np.asarray(self.L, dtype=float)
        self.curvature = np.asarray(self.curvature, dtype=float)
        if self.normal_connection is None:
            self.normal_connection = np.zeros((self.n, self.k, self.k))

    @property
    def n(self) -> int:
        return self.h0.shape[0]

    @property
    def k(self) -> int:
        return self.L.shape[0]

    @property
    def d(self) -> int:
        return self.n + self.k

    @property
    def h0_inv(self) -> np.ndarray:
        return np.linalg.inv(self.h0)

    @property
    def g(self) -> np.ndarray:
        g = np.zeros((self.d, self.d))
        g[: self.n, : self.n] = self.h0
        g[self.n:, self.n:] = np.eye(self.k)
        return g

    @property
    def g_inv(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    # -- extrinsic quantities --------------------------------------------
    @property
    def H(self) -> np.ndarray:
        """Mean curvature vector ``h0^{ij} L^a_ij``."""
        return np.einsum("ij,aij->a", self.h0_inv, self.L)

    @property
    def L_inner(self) -> np.ndarray:
        """``<L^a, L^b>_{h0}`` as a k x k matrix."""
        hi = self.h0_inv
        return np.einsum("ik,jl,aij,bkl->ab", hi, hi, self.L, self.L)

    @property
    def L_norm2(self) -> float:
        return float(np.trace(self.L_inner))

    @property
    def H_norm2(self) -> float:
        return float(self.H @ self.H)

    @property
    def Lo_norm2(self) -> float:
        """Squared norm of the trace-free part, ``|L|^2 - |H|^2 / n``."""
        return self.L_norm2 - self.H_norm2 / self.n

    # -- ambient curvature -----------------------------------------------
    @property
    def ricci(self) -> np.ndarray:
        return np.einsum("cd,acdb->ab", self.g_inv, self.curvature)

    @property
    def scalar(self) -> float:
        return float(np.einsum("ab,ab->", self.g_inv, self.ricci))

    @property
    def ricci_normal(self) -> np.ndarray:
        """Ambient Ricci on the normal block, ``R_ab``."""
        return self.ricci[self.n:, self.n:]

    @property
    def normal_partial_ricci(self) -> np.ndarray:
        """``N_ab = sum_c R_{a c c b}`` over normal ``c``."""
        nn = slice(self.n, self.d)
        return np.einsum("acdb,cd->ab", self.curvature[nn, nn, nn, nn], np.eye(self.k))

    @property
    def normal_sectional_sum(self) -> float:
        """``R_ab^{ba} = sum_{a,b} R_{abba}`` over normal indices."""
        return float(np.trace(self.normal_partial_ricci))

    @property
    def schouten(self) -> np.ndarray:
        d = self.d
        return (self.ricci - self.scalar * self.g / (2.0 * (d - 1))) / (d - 2)

    @property
    def trP_tangent(self) -> float:
        return float(np.einsum("ij,ij->", self.h0_inv, self.schouten[: self.n, : self.n]))

    @property
    def tangential_sectional_sum(self) -> float:
        """``h^{il} h^{jk} R_ijkl`` (ambient curvature on tangent planes)."""
        hi = self.h0_inv
        t = slice(0, self.n)
        return float(np.einsum("il,jk,ijkl->", hi, hi, self.curvature[t, t, t, t]))

    @property
    def R_h(self) -> float:
        """Intrinsic scalar curvature of Sigma by the Gauss equation."""
        return self.tangential_sectional_sum + self.H_norm2 - self.L_norm2

    # -- Fermi blocks as fibre functions ---------------------------------
    def h1(self, space: FiberSpace) -> list:
        """``h1_ij = -2 c_a L^a_ij`` (matrix of degree-1 fibre functions)."""
        n = self.n
        return [[linear(space, -2.0 * self.L[:, i, j]) for j in range(n)] for i in range(n)]

    def h2(self, space: FiberSpace) -> list:
        """``h2_ij = c^a c^b (-R_iabj + L_ail L_bj^l + Gamma_ia^c Gamma_jbc)``."""
        n = self.n
        nn = slice(n, self.d)
        r_iabj = self.curvature[:n, nn, nn, :n]
        ll = np.einsum("ail,lm,bmj->ijab", self.L, self.h0_inv, self.L)
        gg = np.einsum("iac,jbc->ijab", self.normal_connection, self.normal_connection)
        return [[quadratic(space, 0.5 * (m + m.T))
                 for m in (-r_iabj[i, :, :, j] + ll[i, j] + gg[i, j] for j in range(n))]
                for i in range(n)]

    def b2_trace(self, space: FiberSpace) -> FiberFunction:
        """``tr_b b2 = -(1/3) <dc^a, dc^b> c^c c^d R_acdb``."""
        return quadratic(space, -self.normal_partial_ricci / 3.0)

    def a0_trace(self, space: FiberSpace) -> FiberFunction:
        """``tr(a0^T h0^{-1} a0)`` with ``a0_{i nu} = c^a c^b_nu Gamma_iab``."""
        gam = self.normal_connection
        m = np.einsum("ij,iac,jbc->ab", self.h0_inv, gam, gam)
        # <dc^c, dc^d> = delta^cd - c^c c^d; the quartic part vanishes by antisymmetry
        return quadratic(space, 0.5 * (m + m.T))


def _trace_blocks(hi: np.ndarray, blocks: list) -> FiberFunction:
    n = len(blocks)
    out = None
    for i in range(n):
        for j in range(n):
            if hi[i, j] == 0.0:
                continue
            term = blocks[i][j] * hi[i, j]
            out = term if out is None else out + term
    return out


def gamma1(jet: MetricJet, space: FiberSpace | None = None) -> FiberFunction:
    """First determinant coefficient ``gamma_1 = -2 c_a H^a``."""
    space = space or fiber_space(jet.k)
    return linear(space, -2.0 * jet.H)


def gamma2_combo(jet: MetricJet, space: FiberSpace | None = None) -> FiberFunction:
    """``2 gamma_2 - gamma_1^2`` in closed form.

    ``-2 c^a c^b R_ab + (4/3) c^c c^d N_cd - 2 c_a c_b <L^a, L^b>`` with
    ``N`` the normal partial Ricci tensor.
    """
    space = space or fiber_space(jet.k)
    mat = -2.0 * jet.ricci_normal + (4.0 / 3.0) * jet.normal_partial_ricci - 2.0 * jet.L_inner
    return quadratic(space, 0.5 * (mat + mat.T))


def gamma2_combo_from_blocks(jet: MetricJet, space: FiberSpace | None = None) -> FiberFunction:
    """``2 gamma_2 - gamma_1^2`` assembled from the Fermi blocks.

    Uses the determinant expansion
    ``2 gamma_2 = 2 tr h2 + (tr h1)^2 - tr(h1 h0^-1 h1) + 2 tr b2 - 2 tr(a0^T h0^-1 a0)``.
    Independent of :func:`gamma2_combo`; the two must agree.
    """
    space = space or fiber_space(jet.k)
    hi = jet.h0_inv
    h1 = jet.h1(space)
    h2 = jet.h2(space)
    n = jet.n
    tr_h1 = _trace_blocks(hi, h1)
    tr_h2 = _trace_blocks(hi, h2)
    # tr(h1 h0^-1 h1) = h^{il} h^{jm} h1_ij h1_ml
    tr_sq = None
    for i in range(n):
        for j in range(n):
            for l in range(n):
                for m in range(n):
                    c = hi[i, l] * hi[j, m]
                    if c == 0.0:
                        continue
                    term = (h1[i][j] * h1[m][l]) * c
                    tr_sq = term if tr_sq is None else tr_sq + term
    two_g2 = (2.0 * tr_h2 + tr_h1 * tr_h1 - tr_sq + 2.0 * jet.b2_trace(space)
              - 2.0 * jet.a0_trace(space))
    return two_g2 - tr_h1 * tr_h1


def gamma2(jet: MetricJet, space: FiberSpace | None = None) -> FiberFunction:
    space = space or fiber_space(jet.k)
    g1 = gamma1(jet, space)
    return 0.5 * (gamma2_combo(jet, space) + g1 * g1)


@dataclass
class FermiPointData:
    """Per-point input of the n = 2 pipeline."""

    jet: MetricJet
    gamma1: FiberFunction
    gamma2_combo: FiberFunction
    R_g_point: float
    trP_tan: float
    R_h: float
    area_weight: float = 1.0

    @property
    def k(self) -> int:
        return self.jet.k

    @property
    def H_norm2(self) -> float:
        return self.jet.H_norm2

    @property
    def Lo_norm2(self) -> float:
        return self.jet.Lo_norm2

    def gamma2_combo_average(self) -> float:
        """Fibre average of ``2 gamma_2 - gamma_1^2`` from jet invariants."""
        j = self.jet
        k = j.k
        return (-2.0 / k * np.trace(j.ricci_normal) + 4.0 / (3.0 * k) * j.normal_sectional_sum
                - 2.0 / k * j.L_norm2)


def fermi_point(jet: MetricJet, space: FiberSpace | None = None,
                area_weight: float = 1.0, R_h: float | None = None) -> FermiPointData:
    space = space or fiber_space(jet.k, cap=4 if jet.k >= 2 else 1)
    return FermiPointData(
        jet=jet,
        gamma1=gamma1(jet, space),
        gamma2_combo=gamma2_combo(jet, space),
        R_g_point=jet.scalar,
        trP_tan=jet.trP_tangent,
        R_h=jet.R_h if R_h is None else R_h,
        area_weight=area_weight,
    )


def random_jet(rng: np.random.Generator, k: int, n: int = 2, kappa: float = 1.0,
               curvature_scale: float = 0.3, L_scale: float = 1.0,
               with_connection: bool = True) -> MetricJet:
    """A random jet with SPD ``h0`` and random ``L``.  The curvature tensor is a
    constant-curvature background plus random Kulkarni-Nomizu products
    (so all algebraic curvature identities hold)."""
    d = n + k
    a = rng.normal(size=(n, n))
    h0 = np.eye(n) + 0.3 * (a @ a.T)
    L = rng.normal(size=(k, n, n)) * L_scale
    L = 0.5 * (L + np.swapaxes(L, 1, 2))
    g = np.eye(d)
    g[:n, :n] = h0
    R = constant_curvature_tensor(g, kappa)
    for _ in range(3):
        s1 = rng.normal(size=(d, d))
        s2 = rng.normal(size=(d, d))
        R = R + curvature_scale * kulkarni_nomizu(0.5 * (s1 + s1.T), 0.5 * (s2 + s2.T))
    gam = None
    if with_connection:
        gam = rng.normal(size=(n, k, k))
        gam = 0.5 * (gam - np.swapaxes(gam, 1, 2))
    return MetricJet(h0=h0, L=L, curvature=R, normal_connection=gam)


def rescale_jet(jet: MetricJet, omega: float) -> MetricJet:
    """Jet of the same point for the constantly rescaled metric ``e^{2 omega} g``.

    Tangent indices stay coordinate indices, normal frames are renormalised,
    so a component with ``m`` normal slots picks up ``e^{(2 - m) omega}``.
    """
    n, k = jet.n, jet.k
    normal = np.array([0] * n + [1] * k)
    m = (normal[:, None, None, None] + normal[None, :, None, None]
         + normal[None, None, :, None] + normal[None, None, None, :])
    R = jet.curvature * np.exp((2 - m) * omega)
    return MetricJet(
        h0=jet.h0 * math.exp(2 * omega),
        L=jet.L * math.exp(omega),
        curvature=R,
        normal_connection=jet.normal_connection,
    )


def conformal_jet(jet: MetricJet, omega: float, grad=None, hess=None,
                  hess_normal: float = 0.0) -> MetricJet:
    """Jet of the same point for ``e^{2 omega} g`` with ``omega`` constant on fibres.

    ``omega`` is even in the normal variable, so its normal gradient
    vanishes on Sigma and its normal Hessian block is ``hess_normal``
    times the identity.  ``grad`` and ``hess`` are the tangential gradient
    and covariant Hessian in the coordinate tangent basis.  The mixed
    Hessian block ``-(nabla_X nu) omega`` comes from the Weingarten map.

    Uses ``R_hat = e^{2 omega} (R - g o T)`` with
    ``T = Hess omega - d omega d omega + |d omega|^2 g / 2``; the second
    fundamental form only rescales because ``d omega`` is tangential.
    """
    n, k = jet.n, jet.k
    d = n + k
    grad = np.zeros(n) if grad is None else np.asarray(grad, dtype=float)
    hess = np.zeros((n, n)) if hess is None else np.asarray(hess, dtype=float)
    up = jet.h0_inv @ grad
    dw = np.concatenate([grad, np.zeros(k)])
    Hs = np.zeros((d, d))
    Hs[:n, :n] = 0.5 * (hess + hess.T)
    Hs[n:, n:] = hess_normal * np.eye(k)
    mixed = np.einsum("aij,j->ia", jet.L, up)
    Hs[:n, n:] = mixed
    Hs[n:, :n] = mixed.T
    g = jet.g
    T = Hs - np.outer(dw, dw) + 0.5 * float(grad @ up) * g
    R = math.exp(2 * omega) * (jet.curvature - kulkarni_nomizu(g, T))
    normal = np.array([0] * n + [1] * k)
    m = (normal[:, None, None, None] + normal[None, :, None, None]
         + normal[None, None, :, None] + normal[None, None, None, :])
    return MetricJet(
        h0=jet.h0 * math.exp(2 * omega),
        L=jet.L * math.exp(omega),
        curvature=R * np.exp(-m * omega),
        normal_connection=jet.normal_connection,
    )
