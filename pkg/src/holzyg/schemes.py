"""Builders for semi-regular subdivision schemes and the RBF kernel catalog.

Three families are provided on a mesh ``t = -h_l N u {0} u h_r N``:

* B-splines of arbitrary degree (midpoint knot insertion),
* Dubuc-Deslauriers ``2L``-point interpolatory schemes,
* interpolatory RBF schemes with polynomial reproduction of order ``m``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .core_algebra import Mask, Mesh, OffsetVector, SlantedMatrix, as_number
from .linalg import SingularSystemError, solve

__all__ = [
    "Scheme",
    "RbfKernel",
    "SchemeError",
    "KERNELS",
    "buhmann",
    "polyharmonic",
    "gaussian",
    "multiquadric",
    "inverse_multiquadric",
    "get_kernel",
    "kernel_eval",
    "build_bspline",
    "build_dd",
    "build_rbf",
    "check_scheme",
    "SchemeReport",
]


class SchemeError(ValueError):
    """Raised when a scheme cannot be built (e.g. a singular RBF stencil)."""


@dataclass(frozen=True)
class Scheme:
    mesh: Mesh
    Z: SlantedMatrix
    interpolatory: bool
    reproduction_degree: int
    family: str
    params: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.Z.exact

    @property
    def reach(self) -> tuple[int, int]:
        return self.Z.row_reach()

    @property
    def function_k_left(self) -> int:
        """Largest index ``k`` such that every ``zeta_j``, ``j <= k``, is a shift of the left regular function."""
        hi = self.Z.left.anchor + len(self.Z.left) - 1
        return min(self.Z.k_left, -hi)

    @property
    def function_k_right(self) -> int:
        lo = self.Z.right.anchor
        return max(self.Z.k_right, -lo)

    def node(self, k, level: int = 0):
        """Parameter value attached to coefficient ``k`` at the given level.

        Interpolatory schemes use the knots themselves; B-splines use Greville
        abscissae, with respect to which they reproduce linear polynomials.
        """
        scale = Fraction(1, 2**level) if self.mesh.exact else 2.0**-level
        if self.family == "bspline":
            d = self.params["degree"]
            return sum(self.mesh.point(Fraction(k + m, 2**level)) for m in range(1, d + 1)) / d if self.mesh.exact \
                else sum(self.mesh.point((k + m) / 2**level) for m in range(1, d + 1)) / d
        return self.mesh.point(k) * scale

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "params": self.params,
            "mesh": self.mesh.to_json(),
            "interpolatory": self.interpolatory,
            "reproduction_degree": self.reproduction_degree,
            "Z": self.Z.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Scheme":
        return cls(
            mesh=Mesh.from_json(obj["mesh"]),
            Z=SlantedMatrix.from_json(obj["Z"]),
            interpolatory=bool(obj["interpolatory"]),
            reproduction_degree=int(obj["reproduction_degree"]),
            family=obj["family"],
            params=dict(obj.get("params", {})),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Scheme":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


# ---------------------------------------------------------------------------
# RBF kernels


@dataclass(frozen=True)
class RbfKernel:
    """Even radial function ``g`` with conditional positive definiteness order ``eta``.

    ``rule`` receives ``|x|`` and must accept Fractions when ``exact`` is set.
    """

    name: str
    rule: Callable
    eta: int
    homogeneous: bool = False
    exact: bool = False
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.rule(abs(x))

    def scaled(self, lam) -> "RbfKernel":
        rule = self.rule
        return RbfKernel(f"{lam}*{self.name}", lambda r: lam * rule(r), self.eta, self.homogeneous,
                         self.exact and isinstance(lam, (int, Fraction)), dict(self.params))


def _buhmann(r, log=math.log):
    if r >= 1:
        return 0.0
    if r == 0:
        return 1.0
    r = float(r)
    return 12 * r**4 * log(r) - 21 * r**4 + 32 * r**3 - 12 * r**2 + 1


def buhmann(log: Callable = math.log) -> RbfKernel:
    """Buhmann's compactly supported kernel; ``log`` selects the logarithm base."""
    return RbfKernel("buhmann", lambda r: _buhmann(r, log), eta=0)


def polyharmonic(p: int = 0) -> RbfKernel:
    """``|x|**(2p+1)``; exact on rational arguments."""
    return RbfKernel(f"polyharmonic{p}", lambda r: r ** (2 * p + 1), eta=p + 1, homogeneous=(p == 0),
                     exact=True, params={"p": p})


def gaussian(eps: float = 1.0) -> RbfKernel:
    return RbfKernel("gaussian", lambda r: math.exp(-((eps * float(r)) ** 2)), eta=0, params={"eps": eps})


def multiquadric(eps: float = 1.0) -> RbfKernel:
    return RbfKernel("multiquadric", lambda r: -math.sqrt(1 + (eps * float(r)) ** 2), eta=1, params={"eps": eps})


def inverse_multiquadric(eps: float = 1.0) -> RbfKernel:
    return RbfKernel("inverse_multiquadric", lambda r: 1 / math.sqrt(1 + (eps * float(r)) ** 2), eta=0,
                     params={"eps": eps})


KERNELS: dict[str, Callable[..., RbfKernel]] = {
    "buhmann": buhmann,
    "polyharmonic": polyharmonic,
    "gaussian": gaussian,
    "multiquadric": multiquadric,
    "inverse_multiquadric": inverse_multiquadric,
}


def get_kernel(name: str, **params) -> RbfKernel:
    try:
        factory = KERNELS[name]
    except KeyError:
        raise SchemeError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}") from None
    return factory(**params)


def kernel_eval(kernel: RbfKernel, x):
    return kernel(x)


# ---------------------------------------------------------------------------
# assembly helpers


def _interpolatory_matrix(odd_row: Callable[[int], tuple[int, tuple]], L: int) -> SlantedMatrix:
    """Assemble ``Z`` with ``Z(2i,k) = delta`` from its odd rows.

    ``odd_row(j)`` returns ``(first_col, weights)`` for row ``2j+1`` with
    columns ``j-L+1 .. j+L``.  Rows with all stencil knots on one side of
    the origin are regular, hence columns ``k <= 1-2L`` and ``k >= 2L-1``
    are shifted copies of one mask.
    """
    kl, kr = 1 - 2 * L, 2 * L - 1
    rows = {j: odd_row(j) for j in range(kl - L, kr + L)}
    def column(k: int) -> Mask:
        vals = {}
        for j in range(k - L, k + L):
            c0, w = rows[j]
            vals[2 * j + 1] = w[k - c0]
        first = next(iter(vals.values()))
        one_k = Fraction(1) if isinstance(first, Fraction) else 1.0
        zero_k = one_k * 0
        vals[2 * k] = one_k
        r0, r1 = 2 * k - 2 * L + 1, 2 * k + 2 * L - 1
        return Mask(r0 - 2 * k, tuple(vals.get(r, zero_k) for r in range(r0, r1 + 1)))

    return SlantedMatrix(2, kl, kr, column(kl), column(kr), {k: column(k) for k in range(kl + 1, kr)})


def _lagrange_weights(nodes, x):
    w = []
    for a, ta in enumerate(nodes):
        num = 1
        den = 1
        for b, tb in enumerate(nodes):
            if a != b:
                num *= x - tb
                den *= ta - tb
        w.append(num / den)
    return tuple(w)


def build_dd(mesh: Mesh, L: int) -> Scheme:
    """Semi-regular Dubuc-Deslauriers ``2L``-point scheme."""
    if L < 1:
        raise SchemeError("L must be at least 1")

    def odd_row(j):
        nodes = [mesh.point(k) for k in range(j - L + 1, j + L + 1)]
        x = (mesh.point(j) + mesh.point(j + 1)) / 2
        return j - L + 1, _lagrange_weights(nodes, x)

    Z = _interpolatory_matrix(odd_row, L)
    return Scheme(mesh, Z, True, 2 * L - 1, "dd", {"L": L})


def _saddle_row(mesh: Mesh, kernel: RbfKernel, L: int, m: int, j: int):
    ks = range(j - L + 1, j + L + 1)
    exact = kernel.exact and mesh.exact
    t = [mesh.point(k) for k in ks]
    if not exact:
        t = [float(v) for v in t]
    x = (mesh.point(j) + mesh.point(j + 1)) / 2
    x = x if exact else float(x)
    n = 2 * L
    size = n + m
    M = np.zeros((size, size), dtype=object if exact else float)
    rhs = np.zeros(size, dtype=object if exact else float)
    if exact:
        M[:] = Fraction(0)
        rhs[:] = Fraction(0)
    # monomials centred at x and scaled to the stencil: same span as t**c, so
    # the same u, but far better conditioned in floating point
    scale = max(abs(v - x) for v in t)
    for a in range(n):
        for b in range(n):
            M[a, b] = kernel(t[a] - t[b])
        for c in range(m):
            M[a, n + c] = ((t[a] - x) / scale) ** c
            M[n + c, a] = M[a, n + c]
        rhs[a] = kernel(x - t[a])
    rhs[n] = 1
    try:
        sol = solve(M, rhs)
    except SingularSystemError as exc:
        raise SchemeError(f"singular RBF saddle system at stencil k={j}: {exc}") from exc
    u = tuple(sol[:n]) if exact else tuple(float(v) for v in sol[:n])
    return j - L + 1, u


def build_rbf(mesh: Mesh, kernel: RbfKernel, L: int, m: int) -> Scheme:
    """Interpolatory RBF scheme: odd rows from the saddle-point system on ``2L`` knots."""
    if L < 1:
        raise SchemeError("L must be at least 1")
    if not (max(kernel.eta, 1) <= m <= 2 * L):
        raise SchemeError(f"need max(eta, 1) <= m <= 2L, got eta={kernel.eta}, m={m}, L={L}")
    Z = _interpolatory_matrix(lambda j: _saddle_row(mesh, kernel, L, m, j), L)
    return Scheme(mesh, Z, True, m - 1, "rbf", {"kernel": kernel.name, "L": L, "m": m, **kernel.params})


def _blossom(t: Callable, coeff: Callable, mu: int, d: int, args):
    c = [coeff(j) for j in range(mu - d, mu + 1)]
    for r in range(1, d + 1):
        for j in range(mu, mu - d + r - 1, -1):
            idx = j - (mu - d)
            alpha = (args[r - 1] - t(j)) / (t(j + d + 1 - r) - t(j))
            c[idx] = (1 - alpha) * c[idx - 1] + alpha * c[idx]
    return c[d]


def build_bspline(mesh: Mesh, degree: int) -> Scheme:
    """B-splines of the given degree with knots ``t``; ``zeta_k`` lives on ``[t(k), t(k+degree+1)]``.

    Column ``k`` holds the coefficients of ``zeta_k`` in the B-spline basis on
    the midpoint-refined knots ``t/2``; they are blossoms of ``zeta_k``
    evaluated at consecutive fine knots.
    """
    d = degree
    if d < 1:
        raise SchemeError("degree must be at least 1")
    exact = mesh.exact
    half = Fraction(1, 2) if exact else 0.5

    def t(k):
        return mesh.point(k)

    def tau(i):
        return mesh.point(i) * half

    def column(k: int) -> Mask:
        vals = []
        for i in range(2 * k, 2 * k + d + 2):
            args = [tau(i + r) for r in range(1, d + 1)]
            mu = i // 2
            one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
            vals.append(_blossom(t, lambda j: one if j == k else zero, mu, d, args))
        return Mask(0, tuple(vals))

    kl, kr = -(d + 1), 0
    Z = SlantedMatrix(2, kl, kr, column(kl), column(kr), {k: column(k) for k in range(kl + 1, kr)})
    return Scheme(mesh, Z, False, 1, "bspline", {"degree": d})


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class SchemeReport:
    row_sum_residual: float
    interpolation_residual: float | None
    reproduction_residuals: dict
    local_eigenvalues: list
    dominant_simple: bool
    tol: float = 1e-10

    @property
    def ok(self) -> bool:
        worst = max([self.row_sum_residual, self.interpolation_residual or 0.0,
                     *self.reproduction_residuals.values()])
        return worst <= self.tol and self.dominant_simple

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "row_sum_residual": self.row_sum_residual,
            "interpolation_residual": self.interpolation_residual,
            "reproduction_residuals": {str(k): v for k, v in self.reproduction_residuals.items()},
            "local_eigenvalues": [float(abs(v)) for v in self.local_eigenvalues],
            "dominant_simple": self.dominant_simple,
        }


def local_block(Z: SlantedMatrix) -> tuple[int, np.ndarray]:
    """Square section of ``Z`` around the origin that is closed under refinement."""
    lo, hi = Z.row_reach()
    n = max(hi, -lo, Z.k_right - Z.k_left)
    win = Z.window((-n, n), (-n, n))
    return n, win.astype_float()


def check_scheme(s: Scheme, radius: int | None = None, tol: float = 1e-10) -> SchemeReport:
    """Residuals of unit row sums, interpolation, polynomial reproduction and local spectrum."""
    Z = s.Z
    span = max(abs(Z.k_left), abs(Z.k_right)) + Z.max_support()
    radius = radius or 2 * span + 4
    rows = (-radius, radius)
    c0, c1 = Z.columns_touching_rows(*rows)
    win = Z.window(rows, (c0, c1))
    V = win.values
    exact = V.dtype == object

    def resid(a, b):
        diff = a - b
        return float(max(abs(v) for v in diff)) if exact else float(np.max(np.abs(diff)))

    ones = np.array([Fraction(1) if exact else 1.0] * V.shape[1], dtype=V.dtype)
    row_sums = V.dot(ones)
    row_sum_residual = resid(row_sums, np.array([ones[0]] * V.shape[0], dtype=V.dtype))

    interp = None
    if s.interpolatory:
        worst = 0.0
        for i in range(math.ceil(rows[0] / 2), rows[1] // 2 + 1):
            for k in range(c0, c1 + 1):
                want = 1 if i == k else 0
                worst = max(worst, abs(float(V[2 * i - rows[0], k - c0]) - want))
        interp = worst

    repro = {}
    coarse = [s.node(k) for k in range(c0, c1 + 1)]
    fine = [s.node(i, 1) for i in range(rows[0], rows[1] + 1)]
    if not exact:
        coarse = [float(v) for v in coarse]
        fine = [float(v) for v in fine]
    for alpha in range(0, s.reproduction_degree + 1):
        cv = np.array([c**alpha for c in coarse], dtype=V.dtype)
        fv = np.array([f**alpha for f in fine], dtype=V.dtype)
        scale = max(1.0, max(abs(float(f)) for f in fv))
        repro[alpha] = resid(V.dot(cv), fv) / scale

    _, B = local_block(Z)
    ev = np.linalg.eigvals(B)
    order = np.argsort(-np.abs(ev))
    ev = ev[order]
    dominant = bool(abs(ev[0] - 1) < 1e-8 and (len(ev) < 2 or abs(ev[1]) < 1 - 1e-8))
    return SchemeReport(row_sum_residual, interp, repro, list(ev), dominant, tol)
