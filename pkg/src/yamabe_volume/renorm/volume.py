"""Tube-complement volumes and the fit of their small-``eps`` expansion.

For a warped-product model with compact Sigma

    vol({t > eps}) = C int_eps^{t_max} theta(t) dt,   C = vol(Sigma) vol(S^{k-1}),

and the expansion is

    c_0 eps^{-n} + ... + c_{n-1} eps^{-1} + E log(1/eps) + V + o(1).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from ..fiber import sphere_area
from ..geometry.models import WarpedProfile
from .theta import ThetaProfile, theta_symmetric

__all__ = [
    "IllConditioned",
    "VolumeExpansion",
    "VolumeCurve",
    "volume_curve",
    "fit_expansion",
    "design_matrix",
    "closed_form_equatorial",
    "expected_coefficients",
    "export_curve_csv",
    "COND_LIMIT",
    "EPS_WINDOW",
]

COND_LIMIT = 1e10
EPS_WINDOW = (1e-3, 1e-1)
N_SAMPLES = 40
NUISANCE = 4


class IllConditioned(ArithmeticError):
    """The least-squares design matrix is too close to singular."""


@dataclass
class VolumeCurve:
    eps: np.ndarray
    volume: np.ndarray
    n: int
    k: int
    model: str = ""
    quad_error: float = 0.0


@dataclass
class VolumeExpansion:
    """Fitted expansion coefficients and fit diagnostics.

    ``errors`` holds the largest change of each fitted quantity when the fit
    is repeated on the lower and upper two-thirds of the sample window.
    """

    n: int
    k: int | None
    c: list
    energy: float
    V: float
    fit_residual: float
    condition_number: float
    eps_window: tuple
    errors: dict = field(default_factory=dict)
    nuisance: list = field(default_factory=list)
    formal_only: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eps_window"] = list(self.eps_window)
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(_round(self.to_dict()), **kw)


def _round(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.floating):
        return _round(float(obj))
    return obj


def _geometric_quad(f, a: float, b: float, ratio: float = 2.0, epsabs: float = 1e-12,
                    epsrel: float = 1e-12) -> tuple:
    """Integrate over ``[a, b]`` split at geometrically spaced points.

    Returns ``(value, error_estimate)``.
    """
    if b <= a:
        return 0.0, 0.0
    edges = [a]
    while edges[-1] * ratio < b:
        edges.append(edges[-1] * ratio)
    edges.append(b)
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            # roundoff near the singular end is reported through the estimate
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, e = integrate.quad(f, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=200)
        total += val
        err += e
    return total, err


def volume_curve(profile: WarpedProfile, eps=None, t0: float = 0.5,
                 subtract: bool = True, theta: ThetaProfile | None = None) -> VolumeCurve:
    """Tail volumes ``vol({t > eps})`` of an exact warped-product model.

    The interior ``int_{t0}^{t_max}`` is computed once.  With ``subtract``
    the singular part ``sum_{j<n} theta_j t^{j-n-1}`` is integrated in closed
    form and only the bounded remainder is handed to quadrature.
    """
    if profile.exact_u is None or profile.vol_sigma is None or profile.t_max is None:
        raise ValueError("volume curves need a compact model with an exact solution")
    n, k = profile.n, profile.k
    eps = np.geomspace(*EPS_WINDOW, N_SAMPLES) if eps is None else np.asarray(eps, dtype=float)
    theta = theta or theta_symmetric(profile, order=n)
    scaled = theta.closed_form["scaled"]
    C = profile.vol_sigma * sphere_area(k)
    t0 = min(t0, 0.5 * profile.t_max)
    interior, qerr = _geometric_quad(lambda t: float(theta(t)), t0, profile.t_max)
    tc = np.asarray(theta.coeffs[:n], dtype=float) if subtract else np.zeros(0)

    def remainder(t):
        poly = sum(c * t ** j for j, c in enumerate(tc))
        return float((scaled(t) - poly) / t ** (n + 1))

    if np.any(eps <= 0) or np.any(eps >= t0):
        raise ValueError(f"eps samples must lie in (0, {t0})")
    # accumulate the remainder integral from t0 down through the sorted samples
    order = np.argsort(eps)[::-1]
    rem = np.empty(len(eps))
    acc, err, upper = 0.0, qerr, t0
    for i in order:
        val, e = _geometric_quad(remainder, eps[i], upper)
        acc += val
        err += e
        rem[i] = acc
        upper = eps[i]
    vols = [C * (sum(c * (e ** (j - n) - t0 ** (j - n)) / (n - j) for j, c in enumerate(tc))
                 + r + interior) for e, r in zip(eps, rem)]
    return VolumeCurve(eps=eps, volume=np.array(vols), n=n, k=k, model=profile.name,
                       quad_error=C * err)


def design_matrix(eps: np.ndarray, n: int, nuisance: int = NUISANCE):
    """Columns ``eps^{j-n}`` (j < n), ``log(1/eps)``, ``1``, ``eps^1..eps^nuisance``."""
    cols = [eps ** (j - n) for j in range(n)] + [np.log(1.0 / eps), np.ones_like(eps)]
    cols += [eps ** p for p in range(1, nuisance + 1)]
    return np.stack(cols, axis=1)


def _solve(eps, vol, n, nuisance):
    A = design_matrix(eps, n, nuisance)
    w = eps ** n  # relative weighting: rows of size O(1)
    Aw = A * w[:, None]
    scale = np.abs(Aw).max(axis=0)
    As = Aw / scale
    cond = float(np.linalg.cond(As))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditioned(f"condition number {cond:.3e} exceeds {COND_LIMIT:.0e}; "
                             "widen the eps window or reduce nuisance terms")
    coef, *_ = np.linalg.lstsq(As, vol * w, rcond=None)
    coef = coef / scale
    resid = float(np.linalg.norm(A @ coef - vol) / max(np.linalg.norm(vol), 1e-300))
    return coef, cond, resid


def fit_expansion(eps, vol, n: int, k: int | None = None, nuisance: int = NUISANCE,
                  window_test: bool = True) -> VolumeExpansion:
    """Least-squares fit of the volume expansion.

    Raises
    ------
    IllConditioned
        If the scaled design matrix has condition number above 1e10.
    """
    eps = np.asarray(eps, dtype=float)
    vol = np.asarray(vol, dtype=float)
    order = np.argsort(eps)
    eps, vol = eps[order], vol[order]
    need = n + 2 + nuisance
    if len(eps) < need:
        raise ValueError(f"need at least {need} samples, got {len(eps)}")
    coef, cond, resid = _solve(eps, vol, n, nuisance)
    errors = {}
    if window_test and len(eps) >= 3 * need // 2 + 2:
        m = (2 * len(eps)) // 3
        diffs = []
        for sl in (slice(0, m), slice(len(eps) - m, len(eps))):
            try:
                sub, _, _ = _solve(eps[sl], vol[sl], n, nuisance)
                diffs.append(np.abs(sub - coef))
            except IllConditioned:
                diffs.append(np.full_like(coef, np.inf))
        spread = np.max(diffs, axis=0)
        errors = {f"c{j}": float(spread[j]) for j in range(n)}
        errors["energy"] = float(spread[n])
        errors["V"] = float(spread[n + 1])
    formal = k is not None and n % 2 == 1 and k >= n + 2
    return VolumeExpansion(
        n=n, k=k, c=[float(x) for x in coef[:n]], energy=float(coef[n]), V=float(coef[n + 1]),
        fit_residual=resid, condition_number=cond, eps_window=(float(eps[0]), float(eps[-1])),
        errors=errors, nuisance=[float(x) for x in coef[n + 2:]], formal_only=formal)


def closed_form_equatorial(n: int, k: int) -> dict:
    """Energy (even ``n``) or renormalized volume (odd ``n``) of equatorial S^n in S^{n+k}."""
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    if n % 2 == 0:
        val = (-1) ** (n // 2) * 4 * math.pi ** ((n + k) / 2) / (math.factorial(n // 2)
                                                                * math.gamma(k / 2))
        return {"energy": val}
    val = ((-1) ** ((n + 1) // 2) * 2 * math.pi ** (1 + (n + k) / 2)
           / (math.gamma((n + 2) / 2) * math.gamma(k / 2)))
    return {"volume": val}


def expected_coefficients(profile: WarpedProfile, theta: ThetaProfile | None = None) -> dict:
    """``c_j`` and energy implied by the theta coefficients of a compact model."""
    n, k = profile.n, profile.k
    theta = theta or theta_symmetric(profile, order=n)
    C = profile.vol_sigma * sphere_area(k)
    tc = theta.coeffs
    return {"c": [C * tc[j] / (n - j) for j in range(n)], "energy": C * tc[n]}


def export_curve_csv(curve: VolumeCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps", "volume"])
        for e, v in zip(curve.eps, curve.volume):
            w.writerow([f"{e:.12g}", f"{v:.12g}"])
