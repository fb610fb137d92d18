"""Functions on the normal fibre sphere S^{k-1}.

A :class:`FiberFunction` is stored spectrally: one coefficient block per
harmonic degree ``j`` in a real basis that is orthonormal for the
*normalised* measure on the sphere (total mass one).  With that choice the
degree-0 coefficient is the fibre average and the coefficient norm equals
the averaged L^2 norm.

Supported bases (``kind``):

``constant``
    degree 0 only, any k.
``zonal``
    functions of the last coordinate ``c_k`` only (Gegenbauer harmonics),
    any k; Gauss-Jacobi quadrature in ``c_k``.
``fourier``
    k = 2, ``1, sqrt(2) cos(j theta), sqrt(2) sin(j theta)``; trapezoid rule.
``spherical_harmonic``
    k = 3, real spherical harmonics; Gauss-Legendre x trapezoid.
``harmonic``
    any k >= 2; harmonic homogeneous polynomials orthonormalised under a
    hyperspherical Gauss-Jacobi product rule.  Used for k >= 4.
``two_point``
    k = 1, the 0-sphere {-1, +1}: degrees 0 and 1 only.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special

__all__ = [
    "DegreeOverflow",
    "FiberSpace",
    "FiberFunction",
    "ParityReport",
    "fiber_space",
    "harmonic_dim",
    "laplace_eigenvalue",
    "sphere_area",
    "constant",
    "linear",
    "quadratic",
    "from_function",
    "project",
    "multiply",
    "fiber_average",
    "parity_degree_check",
    "discrete_laplacian",
]

DEFAULT_CAP = 16
DEFAULT_CAP_GENERIC = 4

_KIND_RANK = {"constant": 0, "zonal": 1, "two_point": 2, "fourier": 2,
              "spherical_harmonic": 2, "harmonic": 2}


class DegreeOverflow(ValueError):
    """A product would exceed the harmonic degree cap of its space."""


def sphere_area(k: int) -> float:
    """Area of the unit sphere S^{k-1} in R^k, ``2 pi^{k/2} / Gamma(k/2)``."""
    return 2.0 * math.pi ** (k / 2.0) / math.gamma(k / 2.0)


def harmonic_dim(k: int, j: int) -> int:
    """Dimension of the degree-``j`` spherical harmonics on S^{k-1}."""
    if j < 0:
        return 0
    if k == 1:
        return 1 if j <= 1 else 0
    return math.comb(j + k - 1, k - 1) - (math.comb(j + k - 3, k - 1) if j >= 2 else 0)


def laplace_eigenvalue(k: int, j: int) -> int:
    """Eigenvalue ``-j(j + k - 2)`` of the round Laplacian on degree ``j``."""
    return -j * (j + k - 2)


# ---------------------------------------------------------------------------
# quadrature rules on S^{k-1}, weights normalised to sum 1


def _gauss_jacobi_cos(m: int, npts: int):
    """Nodes x = cos(theta) and weights for sin^m(theta) d(theta) on [0, pi]."""
    a = (m - 1) / 2.0
    if m == 0:
        # d(theta) = dx / sqrt(1-x^2): Gauss-Chebyshev
        x, w = special.roots_chebyt(npts)
    elif m == 1:
        x, w = special.roots_legendre(npts)
    else:
        x, w = special.roots_jacobi(npts, a, a)
    return np.asarray(x), np.asarray(w)


def _hyperspherical_rule(k: int, degree: int):
    """Product rule on S^{k-1} exact for polynomials of total degree ``degree``."""
    npol = degree // 2 + 1
    nphi = degree + 1
    phi = 2.0 * np.pi * np.arange(nphi) / nphi
    # start with the circle (last two coordinates)
    pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    wts = np.full(nphi, 1.0 / nphi)
    for dim in range(3, k + 1):
        # add one polar angle with weight sin^{dim-2}
        x, w = _gauss_jacobi_cos(dim - 2, npol)
        w = w / w.sum()
        s = np.sqrt(1.0 - x * x)
        new_pts = np.concatenate(
            [np.repeat(s, len(pts))[:, None] * np.tile(pts, (len(x), 1)),
             np.repeat(x, len(pts))[:, None]], axis=1)
        wts = np.repeat(w, len(wts)) * np.tile(wts, len(x))
        pts = new_pts
    return pts, wts


# ---------------------------------------------------------------------------
# bases


def _fourier_eval(j: int, pts: np.ndarray) -> np.ndarray:
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    if j == 0:
        return np.ones((1, len(pts)))
    r2 = math.sqrt(2.0)
    return np.stack([r2 * np.cos(j * theta), r2 * np.sin(j * theta)])


def _real_sh_eval(j: int, pts: np.ndarray) -> np.ndarray:
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    polar = np.arccos(np.clip(z, -1.0, 1.0))
    azim = np.arctan2(y, x)
    rows = []
    scale = math.sqrt(4.0 * math.pi)
    for m in range(-j, j + 1):
        y_c = special.sph_harm_y(j, abs(m), polar, azim)
        if m == 0:
            rows.append(scale * y_c.real)
        elif m > 0:
            rows.append(scale * math.sqrt(2.0) * y_c.real)
        else:
            rows.append(scale * math.sqrt(2.0) * y_c.imag)
    return np.array(rows)


def _zonal_eval(k: int, j: int, pts: np.ndarray, norms: np.ndarray) -> np.ndarray:
    x = pts[:, -1]
    if k == 2:
        vals = special.eval_chebyt(j, x)
    elif k == 3:
        vals = special.eval_legendre(j, x)
    else:
        vals = special.eval_gegenbauer(j, (k - 2) / 2.0, x)
    return (vals / norms[j])[None, :]


@functools.lru_cache(maxsize=None)
def _monomial_exponents(k: int, j: int) -> tuple:
    out = []
    for combo in itertools.combinations_with_replacement(range(k), j):
        e = [0] * k
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return tuple(out)


def _monomials(k: int, j: int, pts: np.ndarray) -> np.ndarray:
    exps = np.array(_monomial_exponents(k, j), dtype=int).reshape(-1, k)
    return np.prod(pts[None, :, :] ** exps[:, None, :], axis=2)


def _harmonic_polynomials(k: int, j: int) -> np.ndarray:
    """Coefficient matrix (dim H_j x #monomials) spanning harmonic polynomials."""
    exps = _monomial_exponents(k, j)
    if j < 2:
        return np.eye(len(exps))
    lower = {e: i for i, e in enumerate(_monomial_exponents(k, j - 2))}
    lap = np.zeros((len(lower), len(exps)))
    for col, e in enumerate(exps):
        for i in range(k):
            if e[i] >= 2:
                f = list(e)
                f[i] -= 2
                lap[lower[tuple(f)], col] += e[i] * (e[i] - 1)
    return linalg.null_space(lap).T


@dataclass(eq=False)
class FiberSpace:
    """Quadrature grid plus orthonormal harmonic basis on S^{k-1}.

    Instances are cached by :func:`fiber_space`; treat them as immutable.
    """

    k: int
    kind: str
    cap: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    dims: tuple = field(repr=False)
    offsets: tuple = field(repr=False)
    basis_values: np.ndarray = field(repr=False)
    _poly: list = field(default=None, repr=False)
    _zonal_norms: np.ndarray = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.offsets[-1]

    def size_to(self, degree: int) -> int:
        """Number of coefficients for degrees ``0..degree``."""
        return self.offsets[min(degree, self.cap) + 1]

    def block(self, j: int) -> slice:
        return slice(self.offsets[j], self.offsets[j + 1])

    def eigenvalues(self, degree: int | None = None) -> np.ndarray:
        """Laplace eigenvalue for every coefficient up to ``degree``."""
        degree = self.cap if degree is None else degree
        return np.concatenate(
            [np.full(self.dims[j], laplace_eigenvalue(self.k, j), dtype=float)
             for j in range(degree + 1)])

    def degree_of_index(self) -> np.ndarray:
        return np.concatenate([np.full(d, j, dtype=int) for j, d in enumerate(self.dims)])

    def evaluate_basis(self, pts: np.ndarray, degree: int | None = None) -> np.ndarray:
        """Basis values at unit vectors ``pts`` (P x k); shape (M, P)."""
        degree = self.cap if degree is None else degree
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        rows = []
        for j in range(degree + 1):
            if self.dims[j] == 0:
                continue
            if self.kind == "constant":
                rows.append(np.ones((1, len(pts))))
            elif self.kind == "two_point":
                rows.append(np.ones((1, len(pts))) if j == 0 else pts[:, 0][None, :])
            elif self.kind == "fourier":
                rows.append(_fourier_eval(j, pts))
            elif self.kind == "spherical_harmonic":
                rows.append(_real_sh_eval(j, pts))
            elif self.kind == "zonal":
                rows.append(_zonal_eval(self.k, j, pts, self._zonal_norms))
            else:
                rows.append(self._poly[j] @ _monomials(self.k, j, pts))
        return np.concatenate(rows, axis=0)

    def analyse(self, values: np.ndarray, degree: int | None = None) -> np.ndarray:
        """Project node values onto the basis up to ``degree``."""
        degree = self.cap if degree is None else degree
        m = self.size_to(degree)
        return self.basis_values[:m] @ (self.weights * values)

    def synthesise(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs @ self.basis_values[: len(coeffs)]


def _offsets(dims) -> tuple:
    return tuple(int(x) for x in np.concatenate([[0], np.cumsum(dims)]))


def _default_kind(k: int) -> str:
    return {1: "two_point", 2: "fourier", 3: "spherical_harmonic"}.get(k, "harmonic")


@functools.lru_cache(maxsize=None)
def fiber_space(k: int, kind: str | None = None, cap: int | None = None) -> FiberSpace:
    """Return the (cached) space of fibre functions on S^{k-1}.

    Parameters
    ----------
    k : int
        Codimension; the fibre is S^{k-1}.
    kind : str, optional
        Basis kind, see the module docstring.  Defaults to the full basis
        for ``k`` (``two_point``, ``fourier``, ``spherical_harmonic`` or
        ``harmonic``).
    cap : int, optional
        Largest representable harmonic degree.  The quadrature rule is
        exact for polynomials of degree ``2 * cap``.
    """
    if k < 1:
        raise ValueError(f"codimension must be >= 1, got {k}")
    kind = kind or _default_kind(k)
    if cap is None:
        cap = DEFAULT_CAP if kind != "harmonic" else DEFAULT_CAP_GENERIC
    if kind == "constant":
        cap = 0
    if k == 1:
        if kind not in ("constant", "two_point", "zonal"):
            raise ValueError(f"basis {kind!r} is not available for k=1")
        kind = "constant" if kind == "constant" else "two_point"
        cap = min(cap, 1)
    if kind == "fourier" and k != 2:
        raise ValueError("fourier basis needs k=2")
    if kind == "spherical_harmonic" and k != 3:
        raise ValueError("spherical_harmonic basis needs k=3")
    if kind == "harmonic" and k < 2:
        raise ValueError("harmonic basis needs k>=2")
    if kind not in _KIND_RANK:
        raise ValueError(f"unknown basis kind {kind!r}")

    deg = 2 * cap
    poly = None
    znorm = None
    if kind == "constant":
        nodes = np.zeros((1, k))
        nodes[0, -1] = 1.0
        weights = np.ones(1)
        dims = (1,)
    elif kind == "two_point":
        nodes = np.array([[1.0], [-1.0]])
        weights = np.array([0.5, 0.5])
        dims = tuple(harmonic_dim(1, j) for j in range(cap + 1))
    elif kind == "fourier":
        m = deg + 1
        theta = 2.0 * np.pi * np.arange(m) / m
        nodes = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        weights = np.full(m, 1.0 / m)
        dims = tuple(harmonic_dim(2, j) for j in range(cap + 1))
    elif kind == "spherical_harmonic":
        x, w = special.roots_legendre(cap + 1)
        m = deg + 1
        phi = 2.0 * np.pi * np.arange(m) / m
        s = np.sqrt(1.0 - x * x)
        nodes = np.stack([np.repeat(s, m) * np.tile(np.cos(phi), len(x)),
                          np.repeat(s, m) * np.tile(np.sin(phi), len(x)),
                          np.repeat(x, m)], axis=1)
        weights = np.repeat(w / w.sum(), m) / m
        dims = tuple(harmonic_dim(3, j) for j in range(cap + 1))
    elif kind == "zonal":
        x, w = _gauss_jacobi_cos(k - 2, cap + 1)
        w = w / w.sum()
        nodes = np.zeros((len(x), k))
        nodes[:, 0] = np.sqrt(1.0 - x * x)
        nodes[:, -1] = x
        weights = w
        dims = (1,) * (cap + 1)
        raw = []
        for j in range(cap + 1):
            if k == 2:
                v = special.eval_chebyt(j, x)
            elif k == 3:
                v = special.eval_legendre(j, x)
            else:
                v = special.eval_gegenbauer(j, (k - 2) / 2.0, x)
            raw.append(math.sqrt(float(np.sum(w * v * v))))
        znorm = np.array(raw)
    else:
        nodes, weights = _hyperspherical_rule(k, deg)
        dims = tuple(harmonic_dim(k, j) for j in range(cap + 1))
        poly = []
        for j in range(cap + 1):
            c = _harmonic_polynomials(k, j)
            vals = c @ _monomials(k, j, nodes)
            gram = (vals * weights) @ vals.T
            chol = np.linalg.cholesky(gram)
            poly.append(np.linalg.solve(chol, c))
    space = FiberSpace(k=k, kind=kind, cap=cap, nodes=nodes, weights=weights,
                       dims=dims, offsets=_offsets(dims),
                       basis_values=np.empty((0, 0)), _poly=poly, _zonal_norms=znorm)
    space.basis_values = space.evaluate_basis(nodes)
    return space


# ---------------------------------------------------------------------------
# fibre functions


@dataclass(eq=False)
class FiberFunction:
    """Function on S^{k-1} stored by harmonic degree.

    ``coeffs`` holds degrees ``0..max_degree`` in the order of
    ``space.offsets``; use :meth:`component` for one degree.
    """

    space: FiberSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        n = len(self.coeffs)
        if n not in self.space.offsets[1:]:
            raise ValueError("coefficient vector does not end on a degree boundary")

    @property
    def k(self) -> int:
        return self.space.k

    @property
    def basis_kind(self) -> str:
        return self.space.kind

    @property
    def max_degree(self) -> int:
        return self.space.offsets.index(len(self.coeffs)) - 1

    # -- construction helpers -------------------------------------------
    @classmethod
    def zeros(cls, space: FiberSpace, degree: int = 0) -> "FiberFunction":
        return cls(space, np.zeros(space.size_to(degree)))

    def padded(self, degree: int) -> np.ndarray:
        m = self.space.size_to(degree)
        out = np.zeros(m)
        n = min(m, len(self.coeffs))
        out[:n] = self.coeffs[:n]
        return out

    def truncated(self, degree: int) -> "FiberFunction":
        return FiberFunction(self.space, self.padded(degree))

    def trimmed(self, tol: float = 0.0) -> "FiberFunction":
        """Drop trailing degrees whose coefficients are all within ``tol``."""
        j = self.max_degree
        while j > 0 and np.all(np.abs(self.coeffs[self.space.block(j)]) <= tol):
            j -= 1
        return self.truncated(j)

    # -- inspection ------------------------------------------------------
    def component(self, j: int) -> np.ndarray:
        if j > self.max_degree:
            return np.zeros(self.space.dims[j] if j <= self.space.cap else 0)
        return self.coeffs[self.space.block(j)]

    def degree_norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(self.component(j)) for j in range(self.max_degree + 1)])

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def average(self) -> float:
        return float(self.coeffs[0])

    def values(self) -> np.ndarray:
        """Values on the quadrature nodes of the space."""
        return self.space.synthesise(self.coeffs)

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        return self.coeffs @ self.space.evaluate_basis(pts, self.max_degree)

    # -- algebra ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, FiberFunction):
            if other.space is self.space:
                return self, other
            space = _common_space(self.space, other.space)
            return promote(self, space), promote(other, space)
        return None

    def __add__(self, other):
        if np.isscalar(other):
            c = self.coeffs.copy()
            c[0] += other
            return FiberFunction(self.space, c)
        a, b = self._coerce(other)
        d = max(a.max_degree, b.max_degree)
        return FiberFunction(a.space, a.padded(d) + b.padded(d))

    __radd__ = __add__

    def __neg__(self):
        return FiberFunction(self.space, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return FiberFunction(self.space, self.coeffs * other)
        return multiply(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not np.isscalar(other):
            raise TypeError("only division by scalars is supported")
        return FiberFunction(self.space, self.coeffs / other)

    def laplacian(self) -> "FiberFunction":
        """Round Laplacian, applied spectrally."""
        return FiberFunction(self.space, self.coeffs * self.space.eigenvalues(self.max_degree))

    def grad_dot(self, other: "FiberFunction") -> "FiberFunction":
        """``<df, dg>`` for the round metric, from ``Delta(fg) - f Delta g - g Delta f``."""
        fg = multiply(self, other)
        return 0.5 * (fg.laplacian() - multiply(self, other.laplacian())
                      - multiply(other, self.laplacian()))

    def __repr__(self) -> str:
        return (f"FiberFunction(k={self.k}, kind={self.basis_kind!r}, "
                f"max_degree={self.max_degree}, norms={np.round(self.degree_norms(), 12)})")


def _common_space(a: FiberSpace, b: FiberSpace) -> FiberSpace:
    if a.k != b.k:
        raise ValueError(f"fibre dimension mismatch: k={a.k} vs k={b.k}")
    ra, rb = _KIND_RANK[a.kind], _KIND_RANK[b.kind]
    if ra == rb == 2 and a.kind != b.kind:
        raise ValueError(f"cannot mix bases {a.kind!r} and {b.kind!r}")
    kind = a.kind if ra >= rb else b.kind
    cap = max(a.cap, b.cap)
    if kind == "constant":
        cap = 0
    return fiber_space(a.k, kind, cap)


def promote(f: FiberFunction, space: FiberSpace) -> FiberFunction:
    """Re-express ``f`` in ``space`` (same k, richer or equal basis)."""
    if f.space is space:
        return f
    if f.max_degree > space.cap:
        raise DegreeOverflow(f"degree {f.max_degree} exceeds cap {space.cap}")
    if f.space.kind == "constant":
        c = np.zeros(space.size_to(0))
        c[0] = f.coeffs[0]
        return FiberFunction(space, c)
    vals = f(space.nodes)
    return FiberFunction(space, space.analyse(vals, f.max_degree))


def constant(space: FiberSpace, value: float) -> FiberFunction:
    c = np.zeros(space.size_to(0))
    c[0] = value
    return FiberFunction(space, c)


def linear(space: FiberSpace, vec) -> FiberFunction:
    """The degree-1 function ``c -> vec . c``."""
    vec = np.asarray(vec, dtype=float)
    vals = space.nodes @ vec
    return FiberFunction(space, space.analyse(vals, min(1, space.cap)))


def quadratic(space: FiberSpace, mat) -> FiberFunction:
    """The function ``c -> c^T mat c`` (degrees 0 and 2)."""
    mat = np.asarray(mat, dtype=float)
    vals = np.einsum("qa,ab,qb->q", space.nodes, mat, space.nodes)
    return FiberFunction(space, space.analyse(vals, min(2, space.cap)))


def from_function(space: FiberSpace, fn, degree: int | None = None) -> FiberFunction:
    """Project a callable of unit vectors (Q x k -> Q) onto the basis."""
    degree = space.cap if degree is None else degree
    return FiberFunction(space, space.analyse(np.asarray(fn(space.nodes), dtype=float), degree))


def project(f: FiberFunction, j: int) -> FiberFunction:
    """Degree-``j`` component of ``f`` as a fibre function."""
    if j > f.max_degree:
        return FiberFunction.zeros(f.space, 0)
    c = np.zeros(f.space.size_to(j))
    blk = f.space.block(j)
    c[blk] = f.coeffs[blk]
    return FiberFunction(f.space, c)


def multiply(f: FiberFunction, g: FiberFunction) -> FiberFunction:
    """Pointwise product, re-projected up to degree ``J_f + J_g``."""
    if f.space is not g.space:
        space = _common_space(f.space, g.space)
        f, g = promote(f, space), promote(g, space)
    space = f.space
    if space.kind == "constant" or (f.max_degree == 0 and g.max_degree == 0):
        return constant(space, f.coeffs[0] * g.coeffs[0])
    if f.max_degree == 0:
        return FiberFunction(space, f.coeffs[0] * g.coeffs)
    if g.max_degree == 0:
        return FiberFunction(space, g.coeffs[0] * f.coeffs)
    degree = f.max_degree + g.max_degree
    if degree > space.cap:
        if space.k == 1:
            degree = 1
        else:
            raise DegreeOverflow(
                f"product degree {degree} exceeds cap {space.cap} (k={space.k}, {space.kind})")
    vals = f.values() * g.values()
    return FiberFunction(space, space.analyse(vals, degree))


def fiber_average(f: FiberFunction) -> float:
    """Average of ``f`` over the fibre (its degree-0 coefficient)."""
    return f.average()


@dataclass
class ParityReport:
    """Outcome of :func:`parity_degree_check`; truthy when no violation."""

    ok: bool
    violations: list
    worst: float

    def __bool__(self) -> bool:
        return self.ok


def parity_degree_check(series, tol: float = 1e-8) -> ParityReport:
    """Check that entry ``j`` of ``series`` lies in Y_j.

    Y_j is spanned by harmonics of degree at most ``j`` with the parity of
    ``j``.  Each offending degree block is measured in the averaged L^2
    norm (equal to the coefficient norm) and compared against ``tol``.
    """
    violations = []
    worst = 0.0
    for order, f in enumerate(series):
        norms = f.degree_norms()
        for deg, nrm in enumerate(norms):
            if deg > order or (order - deg) % 2:
                worst = max(worst, float(nrm))
                if nrm > tol:
                    violations.append((order, deg, float(nrm)))
    return ParityReport(ok=not violations, violations=violations, worst=worst)


def discrete_laplacian(fn, pts: np.ndarray, h: float = 5e-3) -> np.ndarray:
    """Round Laplacian of ``fn`` at unit vectors ``pts`` by finite differences.

    ``fn`` is extended to R^k as a 0-homogeneous function; its Euclidean
    Laplacian on the unit sphere equals the spherical Laplacian.  Fourth
    order central differences in every ambient direction.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    k = pts.shape[1]

    def ext(x):
        return fn(x / np.linalg.norm(x, axis=1, keepdims=True))

    total = -30.0 * k * ext(pts)
    for i in range(k):
        e = np.zeros(k)
        e[i] = h
        total += (-ext(pts + 2 * e) + 16 * ext(pts + e)
                  + 16 * ext(pts - e) - ext(pts - 2 * e))
    return total / (12.0 * h * h)
