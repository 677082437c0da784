"""Basic limit functions: cascade evaluation, supports, integrals and a quadrature oracle."""
from __future__ import annotations

import itertools
import math
from math import comb
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core_algebra import Mask, OffsetVector, SlantedMatrix
from .linalg import normalized_null_vector, solve
from .schemes import Scheme

__all__ = [
    "LimitSamples",
    "SupportInterval",
    "IntegralWeights",
    "DivergentSchemeError",
    "support",
    "support_indices",
    "cascade",
    "cascade_eval",
    "combination_eval",
    "knot_values",
    "regular_knot_values",
    "integral_weights",
    "MomentVector",
    "refinable_moments",
    "moment_vector",
    "quad_inner",
    "moment",
    "check_convergence",
]

DEFAULT_LEVEL = 12


def _memo_n(fn):
    cache: dict[tuple, tuple] = {}

    def wrapper(obj, n):
        hit = cache.get((id(obj), n))
        if hit is not None and hit[0] is obj:
            return hit[1]
        out = fn(obj, n)
        if len(cache) > 512:
            cache.clear()
        cache[(id(obj), n)] = (obj, out)
        return out

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _memo(fn):
    # schemes hold dicts and are unhashable; cache on identity instead
    cache: dict[int, tuple] = {}

    def wrapper(obj):
        hit = cache.get(id(obj))
        if hit is not None and hit[0] is obj:
            return hit[1]
        out = fn(obj)
        if len(cache) > 256:
            cache.clear()
        cache[id(obj)] = (obj, out)
        return out

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


class DivergentSchemeError(RuntimeError):
    pass


@dataclass(frozen=True)
class SupportInterval:
    left: float
    right: float
    index_left: float
    index_right: float

    @property
    def width(self) -> float:
        return self.right - self.left

    def contains(self, x, tol: float = 1e-12) -> bool:
        return self.left - tol <= x <= self.right + tol


@dataclass(frozen=True)
class LimitSamples:
    """Values of a limit function at the level-``J`` points ``t(m)/2**J``, ``m = start, start+1, ...``."""

    scheme: Scheme
    index: int | None
    level: int
    start: int
    x: np.ndarray
    values: np.ndarray

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.start, self.start + len(self.values))

    def aligned(self, start: int, stop: int) -> np.ndarray:
        return OffsetVector(self.start, np.asarray(self.values, dtype=float)).get_range(start, stop)


# ---------------------------------------------------------------------------
# supports


@_memo
def _support_table(Z: SlantedMatrix) -> tuple[int, int, dict]:
    """Fixed point of the support recursion on the irregular index range.

    Returns ``(lo, hi, table)`` where regular functions satisfy
    ``supp zeta_i = [t(i+lo), t(i+hi)]`` on the left (the right tail uses its
    own offsets, see :func:`support_indices`) and ``table`` maps irregular
    indices to their real-valued index bounds.
    """

    def nz_rows(k):
        start, vals = Z.column(k)
        return [start + n for n, v in enumerate(vals) if v != 0]

    lo_l = min(nz_rows(Z.k_left)) - 2 * Z.k_left
    hi_l = max(nz_rows(Z.k_left)) - 2 * Z.k_left
    lo_r = min(nz_rows(Z.k_right)) - 2 * Z.k_right
    hi_r = max(nz_rows(Z.k_right)) - 2 * Z.k_right
    kl = min(Z.k_left, -hi_l)
    kr = max(Z.k_right, -lo_r)

    def regular(i):
        if i <= kl:
            return float(i + lo_l), float(i + hi_l)
        return float(i + lo_r), float(i + hi_r)

    pad = max(abs(lo_l), abs(hi_l), abs(lo_r), abs(hi_r)) + 1
    idx = range(kl + 1, kr)
    table = {i: (float(min(i + lo_l, i + lo_r)) - 4 * pad, float(max(i + hi_l, i + hi_r)) + 4 * pad) for i in idx}

    def bounds(i):
        return table[i] if i in table else regular(i)

    for _ in range(200):
        new = {}
        for i in idx:
            rows = nz_rows(i)
            a = min(bounds(p)[0] for p in rows) / 2
            b = max(bounds(p)[1] for p in rows) / 2
            new[i] = (a, b)
        delta = max(max(abs(new[i][0] - table[i][0]), abs(new[i][1] - table[i][1])) for i in idx) if idx else 0
        table = new
        if delta < 1e-15:
            break
    snapped = {}
    for i, (a, b) in table.items():
        fa, fb = Fraction(a).limit_denominator(4096), Fraction(b).limit_denominator(4096)
        snapped[i] = (float(fa) if abs(fa - a) < 1e-12 else a, float(fb) if abs(fb - b) < 1e-12 else b)
    return kl, kr, {"left": (lo_l, hi_l), "right": (lo_r, hi_r), "irregular": snapped}


def support_indices(s: Scheme | SlantedMatrix, i: int) -> tuple[float, float]:
    """Real knot-index bounds ``(a, b)`` with ``supp zeta_i`` inside ``[t(a), t(b)]``."""
    Z = s.Z if isinstance(s, Scheme) else s
    kl, kr, tab = _support_table(Z)
    if i <= kl:
        lo, hi = tab["left"]
        return float(i + lo), float(i + hi)
    if i >= kr:
        lo, hi = tab["right"]
        return float(i + lo), float(i + hi)
    return tab["irregular"][i]


def support(s: Scheme, i: int) -> SupportInterval:
    a, b = support_indices(s, i)
    return SupportInterval(float(s.mesh.point(a)), float(s.mesh.point(b)), a, b)


# ---------------------------------------------------------------------------
# cascade


def cascade(Z: SlantedMatrix, coeffs: OffsetVector, J: int) -> OffsetVector:
    """``Z**J`` applied to finitely supported coarse coefficients."""
    v = coeffs
    for _ in range(J):
        v = Z.apply(v)
    return v


def _regular_values(mask: Mask) -> dict[int, float]:
    """Values of the shift-invariant refinable function at the integers.

    ``phi(n) = sum_p a(p) phi(2n - p)`` with ``a(p)`` the column mask
    (row offset ``p``); normalized so the values sum to one.
    """
    a = {mask.anchor + n: float(v) for n, v in enumerate(mask.values) if v != 0}
    lo, hi = min(a), max(a)
    ns = list(range(lo, hi + 1))
    T = np.zeros((len(ns), len(ns)))
    for r, n in enumerate(ns):
        for c, q in enumerate(ns):
            T[r, c] = a.get(2 * n - q, 0.0)
    g = normalized_null_vector(T)
    return {n: float(v) for n, v in zip(ns, g)}


def regular_knot_values(mask: Mask) -> dict[int, float]:
    return _regular_values(mask)


@_memo
def knot_values(s: Scheme) -> SlantedMatrix:
    """Slant-1 matrix ``E`` with ``E(m, l) = zeta_l(t(m))``.

    For interpolatory schemes this is the identity.  Otherwise the values at
    the origin are the normalized left eigenvector of the local subdivision
    block, values far away come from the regular masks, and everything in
    between follows from ``E(m, :) = E(2m, :) Z``.
    """
    Z = s.Z
    if s.interpolatory:
        return SlantedMatrix(1, -1, 1, Mask(0, (1.0,)), Mask(0, (1.0,)), {0: Mask(0, (1.0,))})
    kl, kr, tab = _support_table(Z)
    phi_l = _regular_values(Z.left)
    phi_r = _regular_values(Z.right)
    irr = tab["irregular"]
    m_left = min((math.floor(a) for a, b in irr.values()), default=kl)
    m_right = max((math.ceil(b) for a, b in irr.values()), default=kr)
    Zf = Z.astype_float()

    def supp(l):
        return support_indices(Z, l)

    memo: dict[int, dict[int, float]] = {}

    def row(m: int) -> dict[int, float]:
        if m in memo:
            return memo[m]
        if m <= m_left and m < 0:
            out = {m - n: v for n, v in phi_l.items() if v != 0 and m - n <= kl}
        elif m >= m_right and m > 0:
            out = {m - n: v for n, v in phi_r.items() if v != 0 and m - n >= kr}
        elif m == 0:
            S = [l for l in range(kl - 4 * len(Z.left), kr + 4 * len(Z.right)) if supp(l)[0] < 0 < supp(l)[1]]
            B = Zf.window((S[0], S[-1]), (S[0], S[-1])).values
            e = normalized_null_vector(B.T)
            out = {l: float(v) for l, v in zip(S, e)}
        else:
            fine = row(2 * m)
            out = {}
            p0, p1 = min(fine), max(fine)
            c0, c1 = Zf.columns_touching_rows(p0, p1)
            vec = np.array([fine.get(p, 0.0) for p in range(p0, p1 + 1)])
            W = Zf.window((p0, p1), (c0, c1)).values
            vals = vec.dot(W)
            out = {c0 + n: float(v) for n, v in enumerate(vals) if abs(v) > 1e-300}
        memo[m] = out
        return out

    left_lo = min(n for n, v in phi_l.items() if v != 0)
    left_hi = max(n for n, v in phi_l.items() if v != 0)
    right_lo = min(n for n, v in phi_r.items() if v != 0)
    right_hi = max(n for n, v in phi_r.items() if v != 0)
    left = Mask(left_lo, tuple(phi_l[n] for n in range(left_lo, left_hi + 1)))
    right = Mask(right_lo, tuple(phi_r[n] for n in range(right_lo, right_hi + 1)))
    irregular = {}
    for l in range(kl + 1, kr):
        a, b = supp(l)
        ms = range(math.ceil(a), math.floor(b) + 1)
        vals = [row(m).get(l, 0.0) for m in ms]
        irregular[l] = Mask(ms.start - l, tuple(vals)).trimmed() if len(vals) else Mask(0, ())
    return SlantedMatrix(1, kl, kr, left, right, irregular)


def combination_eval(s: Scheme, coeffs: OffsetVector, J: int) -> OffsetVector:
    """Samples of ``sum_l coeffs[l] zeta_l`` at the points ``t(m)/2**J``."""
    v = cascade(s.Z, coeffs, J)
    if s.interpolatory:
        return v
    E = knot_values(s)
    return E.apply(v.astype_float() if v.values.dtype == object else v)


def check_convergence(s: Scheme, length: int = 8) -> dict:
    """Cheap divergence test: local block spectrum plus difference-scheme spectral radii.

    Returns a diagnostic dict; ``converges`` is False only when a product of
    difference-scheme matrices, or the local block, shows spectral radius
    ``>= 1`` (a certain sign of divergence).
    """
    from .schemes import local_block

    _, B = local_block(s.Z)
    ev = sorted(np.abs(np.linalg.eigvals(B)), reverse=True)
    local_ok = abs(ev[0] - 1) < 1e-8 and (len(ev) < 2 or ev[1] < 1 - 1e-10)
    radii = {}
    for side, mask in (("left", s.Z.left), ("right", s.Z.right)):
        radii[side] = _difference_radius(mask, length)
    ok = local_ok and all(r < 1 for r in radii.values())
    return {"converges": bool(ok), "local_subdominant": float(ev[1]) if len(ev) > 1 else 0.0,
            "difference_radius": radii}


def _difference_radius(mask: Mask, length: int) -> float:
    a = np.array([float(v) for v in mask.values])
    # a(z) = (1 + z) b(z): synthetic division
    b = np.zeros(len(a) - 1)
    rem = a.copy()
    for n in range(len(a) - 1):
        b[n] = rem[n]
        rem[n + 1] -= rem[n]
    if abs(rem[-1]) > 1e-10 or abs(sum(a[0::2]) - 1) > 1e-10:
        return math.inf
    off = mask.anchor
    coeff = {off + n: v for n, v in enumerate(b)}
    lo, hi = min(coeff), max(coeff)
    size = hi - lo + 1
    mats = []
    for eps in (0, 1):
        T = np.zeros((size, size))
        for r in range(size):
            for c in range(size):
                T[r, c] = coeff.get(2 * r + eps - c + lo, 0.0)
        mats.append(T)
    best = 0.0
    for n in range(1, length + 1):
        for word in itertools.product((0, 1), repeat=n):
            P = np.eye(size)
            for e in word:
                P = mats[e] @ P
            best = max(best, max(abs(np.linalg.eigvals(P))) ** (1.0 / n))
    return float(best)


def cascade_eval(s: Scheme, i: int, J: int, check: bool = True) -> LimitSamples:
    """Samples of ``zeta_i`` on the level-``J`` refined mesh."""
    if J < 0:
        raise ValueError("level must be non-negative")
    if check:
        diag = check_convergence(s)
        if not diag["converges"]:
            raise DivergentSchemeError(f"scheme fails the convergence test: {diag}")
    exact = s.exact and s.interpolatory and J <= 4
    vals = combination_eval(s, OffsetVector.delta(i, exact=exact), J)
    if not s.interpolatory:
        vals = vals.trimmed(0.0)
    x = s.mesh.level_points(vals.start, vals.stop, J)
    return LimitSamples(s, i, J, vals.start, x, vals.values)


# ---------------------------------------------------------------------------
# integrals


@dataclass(frozen=True)
class IntegralWeights:
    """``d(k) = integral of zeta_k``: constants on the tails, explicit values in between."""

    k_left: int
    k_right: int
    left: object
    right: object
    middle: dict

    def __call__(self, k: int):
        if k <= self.k_left:
            return self.left
        if k >= self.k_right:
            return self.right
        return self.middle[k]

    def vector(self, start: int, stop: int) -> np.ndarray:
        idx = np.arange(start, stop)
        out = np.where(idx <= self.k_left, float(self.left), float(self.right))
        for k, v in self.middle.items():
            if start <= k < stop:
                out[k - start] = float(v)
        return out

    def to_json(self) -> dict:
        from .core_algebra import _num_to_json

        return {"k_left": self.k_left, "k_right": self.k_right, "left": _num_to_json(self.left),
                "right": _num_to_json(self.right),
                "middle": {str(k): _num_to_json(v) for k, v in self.middle.items()}}

    @classmethod
    def from_json(cls, obj: dict) -> "IntegralWeights":
        from .core_algebra import as_number

        return cls(int(obj["k_left"]), int(obj["k_right"]), as_number(obj["left"]), as_number(obj["right"]),
                   {int(k): as_number(v) for k, v in obj["middle"].items()})


@_memo
def integral_weights(s: Scheme) -> IntegralWeights:
    """Solve ``Z^T d = 2 d`` with the tails fixed to the knot spacings."""
    Z = s.Z
    kl, kr = s.function_k_left, s.function_k_right
    exact = s.exact
    hl, hr = s.mesh.h_left, s.mesh.h_right
    if not exact:
        hl, hr = float(hl), float(hr)
    unknowns = list(range(kl + 1, kr))
    n = len(unknowns)
    if n == 0:
        return IntegralWeights(kl, kr, hl, hr, {})
    dtype = object if exact else float
    A = np.zeros((n, n), dtype=dtype)
    b = np.zeros(n, dtype=dtype)
    if exact:
        A[:] = Fraction(0)
        b[:] = Fraction(0)
    pos = {k: r for r, k in enumerate(unknowns)}
    for r, k in enumerate(unknowns):
        A[r, r] += 2
        start, vals = Z.column(k)
        for off, z in enumerate(vals):
            i = start + off
            z = z if exact else float(z)
            if i in pos:
                A[r, pos[i]] -= z
            else:
                b[r] += z * (hl if i <= kl else hr)
    d = solve(A, b)
    middle = {k: d[pos[k]] if exact else float(d[pos[k]]) for k in unknowns}
    return IntegralWeights(kl, kr, hl, hr, middle)


def refinable_moments(mask: Mask, nmax: int) -> list:
    """Moments ``c_j = integral of x**j phi`` (``j <= nmax``) of the unit-spacing refinable function.

    ``phi`` has integral one and is attached to the knot ``0``.  Uses the
    standard recursion obtained by integrating the refinement equation.
    """
    exact = mask.exact
    a = {mask.anchor + n: v for n, v in enumerate(mask.values) if v != 0}
    one = Fraction(1) if exact else 1.0
    c = [one]
    for j in range(1, nmax + 1):
        acc = sum(comb(j, i) * c[i] * sum(v * p ** (j - i) for p, v in a.items()) for i in range(j))
        c.append(acc / (2 ** (j + 1) * (1 - one / 2**j)))
    return c


@dataclass(frozen=True)
class MomentVector:
    """``mu_n(k) = integral of x**n zeta_k`` with closed-form tails and explicit middle values."""

    order: int
    mesh: object
    k_left: int
    k_right: int
    left_moments: tuple
    right_moments: tuple
    middle: dict

    def __call__(self, k: int):
        if self.k_left < k < self.k_right:
            return self.middle[k]
        h, c = (self.mesh.h_left, self.left_moments) if k <= self.k_left else (self.mesh.h_right, self.right_moments)
        t = self.mesh.point(k)
        n = self.order
        return sum(comb(n, j) * t ** (n - j) * h ** (j + 1) * c[j] for j in range(n + 1))

    def vector(self, start: int, stop: int) -> np.ndarray:
        return np.array([float(self(k)) for k in range(start, stop)])


@_memo_n
def moment_vector(s: Scheme, n: int) -> MomentVector:
    """Exact moments of all basic limit functions from ``Z^T mu = 2**(n+1) mu``."""
    Z = s.Z
    kl, kr = s.function_k_left, s.function_k_right
    exact = s.exact
    mesh = s.mesh if exact else type(s.mesh)(float(s.mesh.h_left), float(s.mesh.h_right))
    cl = tuple(refinable_moments(Z.left, n))
    cr = tuple(refinable_moments(Z.right, n))
    tails = MomentVector(n, mesh, kl, kr, cl, cr, {})
    unknowns = list(range(kl + 1, kr))
    pos = {k: r for r, k in enumerate(unknowns)}
    m = len(unknowns)
    A = np.zeros((m, m), dtype=object if exact else float)
    b = np.zeros(m, dtype=object if exact else float)
    if exact:
        A[:] = Fraction(0)
        b[:] = Fraction(0)
    for r, k in enumerate(unknowns):
        A[r, r] += 2 ** (n + 1)
        start, vals = Z.column(k)
        for off, z in enumerate(vals):
            i = start + off
            z = z if exact else float(z)
            if i in pos:
                A[r, pos[i]] -= z
            else:
                b[r] += z * tails(i)
    mu = solve(A, b) if m else []
    middle = {k: (mu[pos[k]] if exact else float(mu[pos[k]])) for k in unknowns}
    return MomentVector(n, mesh, kl, kr, cl, cr, middle)


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def quad_inner(f: LimitSamples, g: LimitSamples) -> float:
    """Composite trapezoid approximation of the integral of ``f*g``."""
    if f.level != g.level:
        raise ValueError(f"level mismatch: {f.level} vs {g.level}")
    lo = max(f.start, g.start)
    hi = min(f.start + len(f.values), g.start + len(g.values))
    if hi - lo < 2:
        return 0.0
    mesh = f.scheme.mesh
    if (mesh.h_left, mesh.h_right) != (g.scheme.mesh.h_left, g.scheme.mesh.h_right):
        raise ValueError("samples live on different meshes")
    x = mesh.level_points(lo, hi, f.level)
    fv = f.aligned(lo, hi)
    gv = g.aligned(lo, hi)
    return float(np.dot(_trapezoid_weights(x), fv * gv))


def moment(f: LimitSamples, n: int) -> float:
    """Trapezoid approximation of the integral of ``x**n f(x)``."""
    if n < 0:
        raise ValueError("moment order must be non-negative")
    x = np.asarray(f.x, dtype=float)
    return float(np.dot(_trapezoid_weights(x), x**n * np.asarray(f.values, dtype=float)))
