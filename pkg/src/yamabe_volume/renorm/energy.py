"""Renormalized-volume energy of surfaces and the codimension-four anomaly."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..expansion.n2 import expand_n2
from ..fiber import sphere_area
from ..geometry.surfaces import SurfaceFields, SurfaceGrid, surface_fields, surface_invariants
from .theta import theta_n2

__all__ = [
    "CriticalCodimension",
    "energy_integrand",
    "energy_n2",
    "energy_codim1",
    "anomaly_k4",
    "energy_via_theta",
]


class CriticalCodimension(ValueError):
    """The energy formula has a pole at ``k = 4``; use :func:`anomaly_k4`."""


def _fields(surface) -> SurfaceFields:
    if isinstance(surface, SurfaceFields):
        return surface
    if isinstance(surface, SurfaceGrid):
        return surface_fields(surface)
    raise TypeError(f"expected SurfaceGrid or SurfaceFields, got {type(surface).__name__}")


def energy_integrand(fields: SurfaceFields, k: int | None = None) -> np.ndarray:
    """``k (|H|^2 + 4 tr P) + 4 |L o|^2 - 8 R_h`` at every sample."""
    k = fields.k if k is None else k
    return (k * (fields.H_norm2 + 4.0 * fields.trP_tan) + 4.0 * fields.Lo_norm2
            - 8.0 * fields.R_h)


def energy_n2(surface, k: int | None = None) -> float:
    """Energy of a closed surface of codimension ``k != 4``.

    ``vol(S^{k-1}) / (8 (4 - k))`` times the integral of :func:`energy_integrand`.

    Raises
    ------
    CriticalCodimension
        For ``k = 4``.
    """
    fields = _fields(surface)
    k = fields.k if k is None else k
    if k != fields.k:
        raise ValueError(f"surface has codimension {fields.k}, requested {k}")
    if k == 4:
        raise CriticalCodimension("k = 4 is log-obstructed; use anomaly_k4")
    return sphere_area(k) / (8.0 * (4 - k)) * fields.integrate(energy_integrand(fields, k))


def energy_codim1(surface) -> float:
    """``(1/2) int (|L o|^2 - R_h) dA`` for a hypersurface (``k = 1``)."""
    fields = _fields(surface)
    if fields.k != 1:
        raise ValueError(f"surface has codimension {fields.k}, expected 1")
    return 0.5 * fields.integrate(fields.Lo_norm2 - fields.R_h)


def anomaly_k4(surface) -> np.ndarray:
    """Per-sample log coefficient ``A`` for ``k = 4``.

    Equals the energy integrand divided by 96; in flat or round ambients the
    integrand reduces to ``12 |L o|^2``.
    """
    fields = _fields(surface)
    if fields.k != 4:
        raise ValueError(f"surface has codimension {fields.k}, expected 4")
    return energy_integrand(fields, 4) / 96.0


def _theta2_average(pt) -> float:
    return pt.area_weight * theta_n2(pt, expand_n2(pt)).coeffs[2].average()


def energy_via_theta(surface, workers: int = 1) -> float:
    """Energy from the fibre average of ``theta_2`` at every sample.

    Runs the pointwise jet expansion and integrates ``pi0(theta_2)`` against
    ``vol(S^{k-1}) dA``.  Samples are independent; ``workers > 1`` maps them
    over a thread pool.
    """
    fields = _fields(surface)
    if fields.k == 4:
        raise CriticalCodimension("k = 4 is log-obstructed; use anomaly_k4")
    points = surface_invariants(fields.surface, fields=fields)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            terms = list(pool.map(_theta2_average, points))
    else:
        terms = [_theta2_average(pt) for pt in points]
    return sphere_area(fields.k) * math.fsum(terms)
