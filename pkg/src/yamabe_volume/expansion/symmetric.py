"""Singular Yamabe expansion on warped-product tube models.

For ``g = dt^2 + phi^2 g_Sigma + psi^2 b`` the solution is fibre-constant
and the recursion is scalar.  Every coefficient of ``2 L[t V]`` is computed
exactly from Taylor coefficients of the profile, with ``psi = t psi~`` so
that only regular series appear.  Here

    2 L[u] = (n + 2 - k) - (n + k) |du|^2 + 2 u Delta u + R_g u^2 / (n + k - 1).
"""

from __future__ import annotations

from typing import NamedTuple

import mpmath
import numpy as np

from ..fiber import constant, fiber_space
from ..indicial import classify, indicial_scalar
from ..geometry.models import WarpedProfile
from .series import JetSeries, LogTerm, ObstructionHit

__all__ = ["two_L_coefficients", "expand_symmetric", "two_L_numeric", "two_L_mp",
           "residual_slope", "ResidualCheck", "ORDER_CAP_EXTRA"]

ORDER_CAP_EXTRA = 3


def _zeros(m: int, like) -> np.ndarray:
    return np.zeros(m + 1, dtype=object if np.asarray(like).dtype == object else float)


def _mul(a: np.ndarray, b: np.ndarray, m: int) -> np.ndarray:
    return np.convolve(a[: m + 1], b[: m + 1])[: m + 1]


def _inv(a: np.ndarray, m: int) -> np.ndarray:
    b = _zeros(m, a)
    b[0] = 1 / a[0]
    for j in range(1, m + 1):
        b[j] = -np.dot(a[1: j + 1], b[j - 1::-1][:j]) / a[0]
    return b


def _d(a: np.ndarray) -> np.ndarray:
    return np.arange(1, len(a)) * a[1:]


def _shift(a: np.ndarray) -> np.ndarray:
    """Multiply by t."""
    out = _zeros(len(a) - 1, a)
    out[1:] = a[:-1]
    return out


def _pad(a: np.ndarray, m: int) -> np.ndarray:
    out = _zeros(m, a)
    out[: min(len(a), m + 1)] = a[: m + 1]
    return out


def two_L_coefficients(profile: WarpedProfile, v, order: int, taylor=None) -> np.ndarray:
    """Taylor coefficients of ``2 L[t v(t)]`` through ``t^order``.

    ``v`` holds the Taylor coefficients of the (fibre-constant) ``v``.
    ``taylor`` overrides ``profile.taylor(order + 3)``; passing mpf object
    arrays runs the whole computation in extended precision.
    """
    n, k = profile.n, profile.k
    m = order
    phi, q = profile.taylor(m + 3) if taylor is None else taylor
    phi, q = _pad(phi, m + 2), _pad(q, m + 2)
    dphi, ddphi = _pad(_d(phi), m), _pad(_d(_d(phi)), m)
    dq, ddq = _pad(_d(q), m), _pad(_d(_d(q)), m)
    iphi, iq = _inv(phi, m), _inv(q, m)
    A = _mul(dphi, iphi, m)
    B = _mul(dq, iq, m)
    one_tB = _shift(B)
    one_tB[0] += 1

    v = np.asarray(v)
    v = _pad(v if v.dtype == object else v.astype(float), m + 1)
    j = np.arange(m + 2)
    up = _pad((j + 1) * v, m)           # u'
    tupp = _pad((j + 1) * j * v, m)     # t u''
    vv = _pad(v, m)

    u_lap_u = (_mul(vv, tupp, m) + _shift(_mul(_mul(vv, n * A + (k - 1) * B, m), up, m))
               + (k - 1) * _mul(vv, up, m))

    W = _shift(_shift(profile.R_sigma * _mul(iphi, iphi, m) - 2 * n * _mul(ddphi, iphi, m)
                      - n * (n - 1) * _mul(A, A, m)))
    W = W + (k - 1) * (k - 2) * (_mul(iq, iq, m) - _mul(one_tB, one_tB, m))
    W = W - 2 * (k - 1) * _shift(_mul(2 * dq + _shift(ddq), iq, m))
    W = W - 2 * n * (k - 1) * _shift(_mul(A, one_tB, m))

    out = -(n + k) * _mul(up, up, m) + 2 * u_lap_u + _mul(W, _mul(vv, vv, m), m) / (n + k - 1)
    out[0] += n + 2 - k
    return out


def _recursion(profile: WarpedProfile, N: int, taylor=None, stop=None) -> tuple:
    """Solve for ``v_1..v_N`` order by order with ``v_0 = 1``.

    ``taylor`` as in :func:`two_L_coefficients`.  At each resonant order
    ``j``, ``stop(j, F)`` decides whether to truncate the series there.
    Returns ``(v, truncated_at)``.
    """
    n, k = profile.n, profile.k
    dtype = float if taylor is None else object
    v = [1.0 if taylor is None else taylor[0][0] / taylor[0][0]]
    for j in range(1, N + 1):
        tay = None if taylor is None else tuple(x[: j + 4] for x in taylor)
        F = two_L_coefficients(profile, np.array(v, dtype=dtype), j, tay)[j] / 2
        mu = indicial_scalar(n, k, j)
        if mu == 0:
            if stop is not None and stop(j, F):
                return v, j
            v.append(0 * F)
        else:
            v.append(-F / mu)
    return v, None


def expand_symmetric(n: int, k: int, profile: WarpedProfile, N: int,
                     allow_log: bool = False, tol: float = 1e-10) -> JetSeries:
    """Fibre-constant expansion ``v_0, ..., v_N`` on a warped-product model.

    Parameters
    ----------
    n, k : must match ``profile``.
    N : highest order, at most ``n + ORDER_CAP_EXTRA``.
    allow_log : at an obstructed even order return the series truncated there
        with its log coefficient instead of raising.

    Raises
    ------
    ObstructionHit
        If an even resonant order carries a nonzero residual average and
        ``allow_log`` is false.
    """
    if (profile.n, profile.k) != (n, k):
        raise ValueError(f"profile is for (n, k) = {(profile.n, profile.k)}")
    if N > n + ORDER_CAP_EXTRA:
        raise ValueError(f"order cap is n + {ORDER_CAP_EXTRA} = {n + ORDER_CAP_EXTRA}")
    report = classify(n, k)
    notes, logs = [], []

    def stop(j, F):
        if abs(F) <= tol * max(1.0, abs(F)):
            notes.append(f"order {j} resonant: v_{j} set to 0")
            return False
        if j % 2 == 1 or not allow_log:
            raise ObstructionHit(j, F)
        space = fiber_space(k, kind="constant")
        logs.append(LogTerm(order=j, power=2 if 2 * j == n else 1,
                            coeff=constant(space, -F / (2 * j - n))))
        notes.append(f"pi0(v_{j}) set to 0: normalization, not conformally invariant")
        return True

    v, cut = _recursion(profile, N, stop=stop)
    if cut is not None:
        v = v + [0.0]
    residual_order = N + 1 if cut is None else cut
    return JetSeries.constant_series(n, k, np.array(v, dtype=float), log_terms=logs,
                                     residual_order=residual_order,
                                     classification=report.classification.name, notes=notes)


def two_L_numeric(profile: WarpedProfile, t, u_fns) -> np.ndarray:
    """Direct evaluation of ``2 L[u]`` from closed-form profile functions.

    ``u_fns`` is ``(u, u', u'')`` as callables of ``t``.
    """
    n, k = profile.n, profile.k
    t = np.asarray(t, dtype=float)
    p, dp, _, q, dq, _ = (f(t) for f in profile.functions())
    u, du, ddu = (f(t) for f in u_fns)
    lap = ddu + (n * dp / p + (k - 1) * dq / q) * du
    R = profile.scalar_curvature(t)
    return (n + 2 - k) - (n + k) * du ** 2 + 2 * u * lap + R * u ** 2 / (n + k - 1)


def polynomial_u(series: JetSeries):
    """Callables ``u, u', u''`` for ``u = t sum v_j t^j`` (log terms ignored)."""
    c = np.concatenate([[0.0], series.scalar_coefficients()])
    P = np.polynomial.Polynomial(c)
    return P, P.deriv(1), P.deriv(2)


def two_L_mp(profile: WarpedProfile, t, coeffs, dps: int = 40) -> np.ndarray:
    """``|2 L[t v]|`` at the points ``t`` in ``dps``-digit arithmetic.

    ``coeffs`` are the Taylor coefficients of ``v`` (floats or mpf); the
    profile is evaluated from its closed form.
    """
    n, k = profile.n, profile.k
    fns = profile.mp_functions()
    out = []
    with mpmath.workdps(dps):
        c = [mpmath.mpf(0)] + [mpmath.mpf(x) for x in coeffs]
        dc = [j * a for j, a in enumerate(c)][1:]
        ddc = [j * a for j, a in enumerate(dc)][1:]
        for x in np.asarray(t, dtype=float):
            x = mpmath.mpf(x)
            u, du, ddu = (mpmath.polyval(p[::-1], x) for p in (c, dc, ddc))
            vals = [f(x) for f in fns]
            p, dp, _, q, dq, _ = vals
            lap = ddu + (n * dp / p + (k - 1) * dq / q) * du
            R = profile.curvature_from_values(*vals)
            r = (n + 2 - k) - (n + k) * du ** 2 + 2 * u * lap + R * u ** 2 / (n + k - 1)
            out.append(float(abs(r)))
    return np.array(out)


class ResidualCheck(NamedTuple):
    slope: float
    max_residual: float
    coeff_mismatch: float


def residual_slope(profile: WarpedProfile, series: JetSeries, t=None,
                   dps: int = 40, floor: float | None = None) -> ResidualCheck:
    """Leading decay exponent of ``|2 L[t v]|`` as ``t -> 0``.

    The coefficients are recomputed by the same recursion in ``dps``-digit
    arithmetic and ``coeff_mismatch`` reports their largest relative
    difference from ``series``.  The residual of the extended-precision
    series is then evaluated directly from the profile (:func:`two_L_mp`),
    so neither cancellation between its O(1) terms nor rounding of the
    coefficients hides the asymptotic regime.  ``log r = log a + p log t +
    b t + c t^2`` is fitted on the samples above ``floor``, the correction
    terms absorbing the next orders.  ``floor`` defaults to ``10^(5 - dps)``;
    ``slope`` is ``inf`` when fewer than five samples clear it (exact
    solutions).
    """
    t = np.geomspace(1e-4, 1e-2, 40) if t is None else np.asarray(t, dtype=float)
    cut = series.residual_order if series.log_terms else None
    with mpmath.workdps(dps):
        v, got = _recursion(profile, series.order, taylor=profile.taylor_mp(series.order + 3, dps),
                            stop=lambda j, F: j == cut)
        if got is not None:
            v = v + [0 * v[0]]
        ref = series.scalar_coefficients()
        mismatch = max(float(abs(a - b)) / max(1.0, abs(float(a))) for a, b in zip(v, ref))
    r = two_L_mp(profile, t, v, dps)
    keep = r > (10.0 ** (5 - dps) if floor is None else floor)
    if keep.sum() < 5:
        return ResidualCheck(float("inf"), float(r.max()), mismatch)
    tk = t[keep]
    A = np.stack([np.ones_like(tk), np.log(tk), tk, tk ** 2], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(r[keep]), rcond=None)
    return ResidualCheck(float(coef[1]), float(r.max()), mismatch)
