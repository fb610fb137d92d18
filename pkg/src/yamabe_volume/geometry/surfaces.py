"""Sampled surfaces in flat or round ambient space and their invariants.

A :class:`SurfaceGrid` stores ambient coordinates of an immersed surface on
a rectangular parameter grid.  Periodic parameter axes have period ``2 pi``
and are differentiated spectrally.  ``sphere`` topology uses the polar grid
``theta_i = (i + 1/2) pi / Nu``, ``phi_j = 2 pi j / Nv`` and the double
Fourier sphere extension for theta derivatives.  Non-periodic (``patch``)
axes use fourth-order finite differences with the given spacing.

For ``ambient="sphere"`` the points lie on the unit sphere of R^D, so the
ambient dimension is ``D - 1``; for ``ambient="flat"`` it is ``D``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..fiber import FiberSpace, fiber_space
from .jets import FermiPointData, MetricJet, constant_curvature_tensor, fermi_point

__all__ = [
    "DegenerateMetric",
    "SurfaceGrid",
    "SurfaceFields",
    "surface_fields",
    "surface_invariants",
    "fejer_weights",
    "stereographic_to_flat",
    "inverse_stereographic",
    "stereographic_log_factor",
    "load_surface",
    "save_surface",
    "export_invariants_csv",
]

DET_FLOOR = 1e-12


class DegenerateMetric(ValueError):
    """The induced metric is (numerically) singular at some sample."""


@dataclass
class SurfaceGrid:
    """Ambient coordinates of a surface on a parameter grid.

    Attributes
    ----------
    points : (Nu, Nv, D) array.
    topology : ``"torus"``, ``"sphere"`` or ``"patch"``.
    ambient : ``"flat"`` or ``"sphere"`` (unit sphere in R^D).
    periodic : per-axis periodicity; fixed by ``topology`` except for patches.
    spacing : parameter step for non-periodic axes.
    meta : free-form description (model name, closed-form values).
    """

    points: np.ndarray
    topology: str = "torus"
    ambient: str = "flat"
    periodic: tuple = (True, True)
    spacing: tuple = (1.0, 1.0)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 3:
            raise ValueError("points must have shape (Nu, Nv, D)")
        if self.topology == "torus":
            self.periodic = (True, True)
        elif self.topology == "sphere":
            self.periodic = (False, True)
            if self.shape[1] % 2:
                raise ValueError("sphere grids need an even number of azimuthal samples")
        elif self.topology != "patch":
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.ambient not in ("flat", "sphere"):
            raise ValueError(f"unknown ambient {self.ambient!r}")
        self.periodic = tuple(bool(p) for p in self.periodic)
        self.spacing = tuple(float(s) for s in self.spacing)

    @property
    def shape(self) -> tuple:
        return self.points.shape[:2]

    @property
    def embed_dim(self) -> int:
        return self.points.shape[2]

    @property
    def ambient_dim(self) -> int:
        return self.embed_dim - (1 if self.ambient == "sphere" else 0)

    @property
    def k(self) -> int:
        return self.ambient_dim - 2

    @property
    def kappa(self) -> float:
        return 1.0 if self.ambient == "sphere" else 0.0

    # -- differentiation ---------------------------------------------------
    def deriv(self, f: np.ndarray, axis: int, parity: int = 1) -> np.ndarray:
        """First parameter derivative of a grid field along ``axis``.

        ``parity`` is the sign the field picks up under the double Fourier
        sphere reflection (only used for theta on sphere grids).
        """
        if self.topology == "sphere" and axis == 0:
            return _dfs_deriv(f, parity)
        if self.periodic[axis]:
            return _fft_deriv(f, axis)
        return _fd4_deriv(f, axis, self.spacing[axis])

    def quadrature_weights(self) -> np.ndarray:
        """Parameter-space weights ``w`` with ``sum w f ~ int f du dv``."""
        nu, nv = self.shape
        wu = self._axis_weights(0, nu)
        wv = self._axis_weights(1, nv)
        return np.outer(wu, wv)

    def _axis_weights(self, axis: int, npts: int) -> np.ndarray:
        if self.topology == "sphere" and axis == 0:
            theta = (np.arange(npts) + 0.5) * np.pi / npts
            # Fejer weights are for dx = sin(theta) d(theta)
            return fejer_weights(npts) / np.sin(theta)
        if self.periodic[axis]:
            return np.full(npts, 2.0 * np.pi / npts)
        w = np.full(npts, self.spacing[axis])
        w[0] = w[-1] = 0.5 * self.spacing[axis]
        return w


def fejer_weights(n: int) -> np.ndarray:
    """Fejer's first rule on ``x = cos(theta_i)``, ``theta_i = (i + 1/2) pi / n``."""
    theta = (np.arange(n) + 0.5) * np.pi / n
    m = np.arange(1, n // 2 + 1)
    s = np.cos(2.0 * np.outer(theta, m)) / (4.0 * m * m - 1.0)
    return (2.0 / n) * (1.0 - 2.0 * s.sum(axis=1))


def _fft_deriv(f: np.ndarray, axis: int) -> np.ndarray:
    npts = f.shape[axis]
    m = np.fft.fftfreq(npts, d=1.0 / npts)
    if npts % 2 == 0:
        m[npts // 2] = 0.0
    shape = [1] * f.ndim
    shape[axis] = npts
    fh = np.fft.fft(f, axis=axis) * (1j * m).reshape(shape)
    return np.fft.ifft(fh, axis=axis).real


def _dfs_deriv(f: np.ndarray, parity: int) -> np.ndarray:
    nu, nv = f.shape[:2]
    refl = parity * np.roll(f[::-1], -nv // 2, axis=1)
    ext = np.concatenate([f, refl], axis=0)
    # the extended theta grid has step pi / nu over a 2 pi period
    return _fft_deriv(ext, 0)[:nu]


_FD4_INTERIOR = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_FD4_LEFT = [np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0,
             np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0]


def _fd4_deriv(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    g = np.moveaxis(f, axis, 0)
    npts = g.shape[0]
    if npts < 5:
        raise ValueError("fourth-order differences need at least 5 samples")
    out = np.empty_like(g)
    out[2:-2] = sum(c * g[i:npts - 4 + i] for i, c in enumerate(_FD4_INTERIOR))
    for r, st in enumerate(_FD4_LEFT):
        out[r] = sum(c * g[i] for i, c in enumerate(st))
        out[npts - 1 - r] = -sum(c * g[npts - 1 - i] for i, c in enumerate(st))
    return np.moveaxis(out / h, 0, axis)


@dataclass
class SurfaceFields:
    """Per-sample invariants of a sampled surface (arrays of grid shape)."""

    surface: SurfaceGrid
    h0: np.ndarray
    L: np.ndarray
    H_norm2: np.ndarray
    L_norm2: np.ndarray
    Lo_norm2: np.ndarray
    R_h: np.ndarray
    R_h_intrinsic: np.ndarray
    trP_tan: np.ndarray
    R_g: float
    area_weight: np.ndarray

    @property
    def k(self) -> int:
        return self.surface.k

    @property
    def area(self) -> float:
        return float(self.area_weight.sum())

    def integrate(self, field_values: np.ndarray) -> float:
        return float(np.sum(self.area_weight * field_values))

    def jet(self, i: int, j: int) -> MetricJet:
        k = self.k
        g = np.eye(2 + k)
        g[:2, :2] = self.h0[i, j]
        return MetricJet(h0=self.h0[i, j], L=self.L[i, j],
                         curvature=constant_curvature_tensor(g, self.surface.kappa))


def surface_fields(surface: SurfaceGrid) -> SurfaceFields:
    """Induced metric and second fundamental form, with derived curvature scalars.

    Raises
    ------
    DegenerateMetric
        If ``det h0 < 1e-12`` at any sample.
    """
    X = surface.points
    d = surface.deriv
    Xu = d(X, 0, 1)
    Xv = d(X, 1)
    Xuu = d(Xu, 0, -1)
    Xuv = d(Xv, 0, 1)
    Xvv = d(Xv, 1)

    E = np.einsum("...i,...i->...", Xu, Xu)
    F = np.einsum("...i,...i->...", Xu, Xv)
    G = np.einsum("...i,...i->...", Xv, Xv)
    det = E * G - F * F
    if not np.all(det >= DET_FLOOR):
        bad = np.unravel_index(np.argmin(det), det.shape)
        raise DegenerateMetric(f"det h0 = {det[bad]:.3e} at sample {tuple(int(b) for b in bad)}")
    h0 = np.stack([np.stack([E, F], -1), np.stack([F, G], -1)], -2)
    hinv = np.linalg.inv(h0)

    span = [Xu, Xv] + ([X] if surface.ambient == "sphere" else [])
    A = np.stack(span, axis=-1)
    U = np.linalg.svd(A, full_matrices=True)[0]
    normals = U[..., len(span):]  # (Nu, Nv, D, k)
    second = np.stack([np.stack([Xuu, Xuv], -2), np.stack([Xuv, Xvv], -2)], -3)
    L = np.einsum("...ijD,...Da->...aij", second, normals)

    H = np.einsum("...ij,...aij->...a", hinv, L)
    H2 = np.einsum("...a,...a->...", H, H)
    L2 = np.einsum("...ik,...jl,...aij,...akl->...", hinv, hinv, L, L)
    kap = surface.kappa
    D = surface.ambient_dim
    R_h = 2.0 * kap + H2 - L2

    # Brioschi formula for the intrinsic curvature
    Eu, Ev = d(E, 0, 1), d(E, 1)
    Fu, Fv = d(F, 0, -1), d(F, 1)
    Gu, Gv = d(G, 0, 1), d(G, 1)
    Evv = d(Ev, 1)
    Fuv = d(Fv, 0, -1)
    Guu = d(Gu, 0, -1)
    m1 = np.stack([
        np.stack([-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev], -1),
        np.stack([Fv - 0.5 * Gu, E, F], -1),
        np.stack([0.5 * Gv, F, G], -1)], -2)
    z = np.zeros_like(E)
    m2 = np.stack([
        np.stack([z, 0.5 * Ev, 0.5 * Gu], -1),
        np.stack([0.5 * Ev, E, F], -1),
        np.stack([0.5 * Gu, F, G], -1)], -2)
    K = (np.linalg.det(m1) - np.linalg.det(m2)) / det ** 2

    area = np.sqrt(det) * surface.quadrature_weights()
    return SurfaceFields(
        surface=surface,
        h0=h0,
        L=L,
        H_norm2=H2,
        L_norm2=L2,
        Lo_norm2=L2 - 0.5 * H2,
        R_h=R_h,
        R_h_intrinsic=2.0 * K,
        # Schouten of constant curvature kappa is kappa g / 2
        trP_tan=np.full(E.shape, kap),
        R_g=kap * D * (D - 1),
        area_weight=area,
    )


def surface_invariants(surface: SurfaceGrid, space: FiberSpace | None = None,
                       fields: SurfaceFields | None = None) -> list:
    """Per-sample :class:`FermiPointData`, row-major over the grid."""
    fields = fields or surface_fields(surface)
    k = surface.k
    space = space or fiber_space(k, cap=4 if k >= 2 else None)
    out: list[FermiPointData] = []
    nu, nv = surface.shape
    for i in range(nu):
        for j in range(nv):
            out.append(fermi_point(fields.jet(i, j), space,
                                   area_weight=float(fields.area_weight[i, j])))
    return out


# -- conformal maps ---------------------------------------------------------

def stereographic_to_flat(surface: SurfaceGrid) -> SurfaceGrid:
    """Project a surface in the unit sphere of R^D to R^{D-1} from the last pole."""
    if surface.ambient != "sphere":
        raise ValueError("stereographic projection needs a surface in the round sphere")
    X = surface.points
    y = X[..., :-1] / (1.0 - X[..., -1:])
    meta = dict(surface.meta, conformal_image_of=surface.meta.get("model", "surface"))
    return SurfaceGrid(y, topology=surface.topology, ambient="flat",
                       periodic=surface.periodic, spacing=surface.spacing, meta=meta)


def inverse_stereographic(surface: SurfaceGrid) -> SurfaceGrid:
    """Map a surface in R^D into the unit sphere of R^{D+1}.

    The round metric pulls back to ``e^{2 omega}`` times the flat one with
    ``omega = log(2 / (1 + |y|^2))``.
    """
    if surface.ambient != "flat":
        raise ValueError("inverse stereographic projection needs a flat-ambient surface")
    y = surface.points
    r2 = np.sum(y * y, axis=-1, keepdims=True)
    x = np.concatenate([2.0 * y, r2 - 1.0], axis=-1) / (1.0 + r2)
    meta = dict(surface.meta, conformal_image_of=surface.meta.get("model", "surface"))
    return SurfaceGrid(x, topology=surface.topology, ambient="sphere",
                       periodic=surface.periodic, spacing=surface.spacing, meta=meta)


def stereographic_log_factor(flat_points: np.ndarray) -> np.ndarray:
    """``omega(y) = log(2 / (1 + |y|^2))`` with ``g_round = e^{2 omega} g_flat``."""
    return np.log(2.0 / (1.0 + np.sum(flat_points ** 2, axis=-1)))


# -- file formats -------------------------------------------------------------

def save_surface(surface: SurfaceGrid, path) -> None:
    """Write the JSON surface schema.

    Keys: ``nu``, ``nv``, ``dim``, ``topology``, ``ambient``, ``periodic``
    (two booleans), ``spacing`` (two floats), ``points`` (``nu * nv`` rows of
    ``dim`` coordinates, row-major with ``v`` fastest) and ``meta``.
    """
    nu, nv = surface.shape
    doc = {
        "nu": nu,
        "nv": nv,
        "dim": surface.embed_dim,
        "topology": surface.topology,
        "ambient": surface.ambient,
        "periodic": list(surface.periodic),
        "spacing": list(surface.spacing),
        "points": surface.points.reshape(nu * nv, -1).tolist(),
        "meta": _jsonable(surface.meta),
    }
    Path(path).write_text(json.dumps(doc))


def load_surface(path) -> SurfaceGrid:
    doc = json.loads(Path(path).read_text())
    try:
        nu, nv, dim = int(doc["nu"]), int(doc["nv"]), int(doc["dim"])
        pts = np.asarray(doc["points"], dtype=float)
    except KeyError as exc:
        raise ValueError(f"surface file is missing key {exc}") from None
    if pts.shape != (nu * nv, dim):
        raise ValueError(f"points have shape {pts.shape}, expected {(nu * nv, dim)}")
    return SurfaceGrid(
        pts.reshape(nu, nv, dim),
        topology=doc.get("topology", "torus"),
        ambient=doc.get("ambient", "flat"),
        periodic=tuple(doc.get("periodic", (True, True))),
        spacing=tuple(doc.get("spacing", (1.0, 1.0))),
        meta=doc.get("meta", {}),
    )


def export_invariants_csv(fields: SurfaceFields, path) -> None:
    cols = ["i", "j", "H_norm2", "Lo_norm2", "R_h_gauss", "R_h_intrinsic", "trP_tan",
            "area_weight"]
    nu, nv = fields.surface.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i in range(nu):
            for j in range(nv):
                w.writerow([i, j] + [f"{x:.12g}" for x in (
                    fields.H_norm2[i, j], fields.Lo_norm2[i, j], fields.R_h[i, j],
                    fields.R_h_intrinsic[i, j], fields.trP_tan[i, j], fields.area_weight[i, j])])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj
