"""Semi-regular meshes and finitely represented bi-infinite slanted matrices.

A :class:`SlantedMatrix` stores two regular column masks (one per tail) and
an explicit list of irregular columns in between.  Column ``k`` of a matrix
with slant ``s`` is anchored at row ``s*k``: the stored mask of a column is a
row offset relative to that anchor plus a contiguous run of values.

Entries are either :class:`fractions.Fraction` (exact) or ``float``.  All
operations work on numpy arrays with ``dtype=object`` for exact data and
``float64`` otherwise, so the same code path handles both.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Mesh",
    "Mask",
    "SlantedMatrix",
    "Window",
    "OffsetVector",
    "as_number",
    "is_exact",
    "mesh_point",
    "window",
    "transpose_apply",
    "multiply",
    "identity",
    "diagonal",
]


def as_number(x):
    """Coerce ``x`` to ``Fraction`` when it is exact, ``float`` otherwise.

    Strings of the form ``"p/q"`` or ``"3"`` are parsed exactly; strings that
    look like decimals (``"0.25"``) are parsed as floats.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        if any(c in s for c in ".eE") or s.lower() in {"nan", "inf", "-inf"}:
            return float(s)
        return Fraction(s)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, np.integer):
        return Fraction(int(x))
    raise TypeError(f"cannot interpret {x!r} as a number")


def is_exact(values: Iterable) -> bool:
    return all(isinstance(v, Fraction) for v in values)


def _as_array(values: Sequence, exact: bool) -> np.ndarray:
    if exact:
        return np.array([Fraction(v) for v in values], dtype=object)
    return np.array([float(v) for v in values], dtype=float)


@dataclass(frozen=True)
class Mesh:
    """Knots ``t(k) = k*h_left`` for ``k <= 0`` and ``k*h_right`` for ``k >= 0``."""

    h_left: object = Fraction(1)
    h_right: object = Fraction(1)

    def __post_init__(self):
        hl, hr = as_number(self.h_left), as_number(self.h_right)
        if not (hl > 0 and hr > 0):
            raise ValueError(f"mesh spacings must be positive, got {hl}, {hr}")
        object.__setattr__(self, "h_left", hl)
        object.__setattr__(self, "h_right", hr)

    @property
    def exact(self) -> bool:
        return isinstance(self.h_left, Fraction) and isinstance(self.h_right, Fraction)

    @property
    def regular(self) -> bool:
        return self.h_left == self.h_right

    def point(self, k):
        """Knot position; ``k`` may be any real index (piecewise-linear extension)."""
        return k * self.h_left if k <= 0 else k * self.h_right

    def points(self, ks) -> np.ndarray:
        ks = np.asarray(ks, dtype=float)
        return np.where(ks <= 0, ks * float(self.h_left), ks * float(self.h_right))

    def level_points(self, start: int, stop: int, level: int) -> np.ndarray:
        """Abscissae ``t(m)/2**level`` for ``m`` in ``[start, stop)``."""
        return self.points(np.arange(start, stop)) / 2.0**level

    def index_of(self, x: float) -> float:
        """Inverse of :meth:`point` (real-valued knot index)."""
        return x / float(self.h_left) if x <= 0 else x / float(self.h_right)

    def scaled(self, lam) -> "Mesh":
        return Mesh(self.h_left * lam, self.h_right * lam)

    def swapped(self) -> "Mesh":
        return Mesh(self.h_right, self.h_left)

    def to_json(self) -> dict:
        return {"h_left": _num_to_json(self.h_left), "h_right": _num_to_json(self.h_right)}

    @classmethod
    def from_json(cls, obj: dict) -> "Mesh":
        return cls(as_number(obj["h_left"]), as_number(obj["h_right"]))


def mesh_point(mesh: Mesh, k: int):
    return mesh.point(k)


@dataclass(frozen=True)
class OffsetVector:
    """Finitely supported bi-infinite vector: ``values[n]`` sits at index ``start + n``."""

    start: int
    values: np.ndarray

    @property
    def stop(self) -> int:
        return self.start + len(self.values)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.start, self.stop)

    @classmethod
    def delta(cls, i: int, exact: bool = False) -> "OffsetVector":
        one = Fraction(1) if exact else 1.0
        return cls(i, np.array([one], dtype=object if exact else float))

    def __getitem__(self, i: int):
        n = i - self.start
        if 0 <= n < len(self.values):
            return self.values[n]
        return 0

    def get_range(self, start: int, stop: int) -> np.ndarray:
        out = np.zeros(stop - start, dtype=self.values.dtype)
        if self.values.dtype == object:
            out[:] = Fraction(0)
        lo, hi = max(start, self.start), min(stop, self.stop)
        if lo < hi:
            out[lo - start : hi - start] = self.values[lo - self.start : hi - self.start]
        return out

    def astype_float(self) -> "OffsetVector":
        return OffsetVector(self.start, np.asarray(self.values, dtype=float))

    def trimmed(self, tol: float = 0.0) -> "OffsetVector":
        nz = np.nonzero(np.abs(np.asarray(self.values, dtype=float)) > tol)[0]
        if len(nz) == 0:
            return OffsetVector(self.start, self.values[:0])
        return OffsetVector(self.start + int(nz[0]), self.values[nz[0] : nz[-1] + 1])


@dataclass(frozen=True)
class Mask:
    """Contiguous run of column values starting ``anchor`` rows below the column anchor."""

    anchor: int
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(as_number(v) for v in self.values))

    def __len__(self):
        return len(self.values)

    @property
    def exact(self) -> bool:
        return is_exact(self.values)

    def trimmed(self) -> "Mask":
        vals = list(self.values)
        lo = 0
        while lo < len(vals) and vals[lo] == 0:
            lo += 1
        hi = len(vals)
        while hi > lo and vals[hi - 1] == 0:
            hi -= 1
        if lo == hi:
            return Mask(0, ())
        return Mask(self.anchor + lo, tuple(vals[lo:hi]))

    def to_json(self) -> dict:
        return {"anchor": self.anchor, "values": [_num_to_json(v) for v in self.values]}

    @classmethod
    def from_json(cls, obj: dict) -> "Mask":
        return cls(int(obj["anchor"]), tuple(as_number(v) for v in obj["values"]))


def _num_to_json(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else str(v.numerator)
    return float(v)


@dataclass(frozen=True)
class Window:
    """Dense block of a bi-infinite matrix: ``values[a, b]`` is entry ``(rows[0]+a, cols[0]+b)``."""

    rows: tuple[int, int]
    cols: tuple[int, int]
    values: np.ndarray

    def __post_init__(self):
        r0, r1 = self.rows
        c0, c1 = self.cols
        if self.values.shape != (r1 - r0 + 1, c1 - c0 + 1):
            raise ValueError("window shape does not match its ranges")

    def __getitem__(self, key):
        i, k = key
        return self.values[i - self.rows[0], k - self.cols[0]]

    def astype_float(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def sub(self, rows: tuple[int, int], cols: tuple[int, int]) -> "Window":
        a, b = rows[0] - self.rows[0], rows[1] - self.rows[0] + 1
        c, d = cols[0] - self.cols[0], cols[1] - self.cols[0] + 1
        if a < 0 or c < 0 or b > self.values.shape[0] or d > self.values.shape[1]:
            raise IndexError("sub-window exceeds window")
        return Window(rows, cols, self.values[a:b, c:d])


@dataclass(frozen=True)
class SlantedMatrix:
    """Bi-infinite matrix whose columns ``k <= k_left`` and ``k >= k_right`` are shifted masks.

    Column ``k <= k_left`` has entry ``left.values[n]`` at row
    ``slant*k + left.anchor + n``; the right tail is analogous.  Columns
    strictly between ``k_left`` and ``k_right`` are listed in ``irregular``
    (missing ones are zero columns), their ``anchor`` again relative to
    ``slant*k``.
    """

    slant: int
    k_left: int
    k_right: int
    left: Mask
    right: Mask
    irregular: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.slant < 1:
            raise ValueError("slant must be a positive integer")
        if self.k_left >= self.k_right:
            raise ValueError("k_left must be smaller than k_right")
        for k in self.irregular:
            if not self.k_left < k < self.k_right:
                raise ValueError(f"irregular column {k} outside ({self.k_left}, {self.k_right})")
        object.__setattr__(self, "irregular", dict(sorted(self.irregular.items())))

    # -- structure -------------------------------------------------------
    @property
    def exact(self) -> bool:
        return self.left.exact and self.right.exact and all(m.exact for m in self.irregular.values())

    def column_mask(self, k: int) -> Mask:
        if k <= self.k_left:
            return self.left
        if k >= self.k_right:
            return self.right
        return self.irregular.get(k, Mask(0, ()))

    def column(self, k: int) -> tuple[int, tuple]:
        """First row index and values of column ``k``."""
        m = self.column_mask(k)
        return self.slant * k + m.anchor, m.values

    def entry(self, i: int, k: int):
        start, vals = self.column(k)
        n = i - start
        if 0 <= n < len(vals):
            return vals[n]
        return Fraction(0) if self.exact else 0.0

    def max_support(self) -> int:
        return max([len(self.left), len(self.right)] + [len(m) for m in self.irregular.values()])

    def row_reach(self) -> tuple[int, int]:
        """Smallest and largest row offset (relative to ``slant*k``) over all masks."""
        masks = [m for m in [self.left, self.right, *self.irregular.values()] if len(m)]
        return min(m.anchor for m in masks), max(m.anchor + len(m) - 1 for m in masks)

    def columns_touching_rows(self, r0: int, r1: int) -> tuple[int, int]:
        """Inclusive column range that contains every column with a nonzero in rows ``r0..r1``."""
        lo, hi = self.row_reach()
        s = self.slant
        return math.floor((r0 - hi) / s), math.ceil((r1 - lo) / s)

    def rows_of_columns(self, c0: int, c1: int) -> tuple[int, int]:
        lo, hi = self.row_reach()
        return self.slant * c0 + lo, self.slant * c1 + hi

    # -- windows and products -------------------------------------------
    def window(self, rows: tuple[int, int], cols: tuple[int, int], exact: bool | None = None) -> Window:
        exact = self.exact if exact is None else exact
        r0, r1 = rows
        c0, c1 = cols
        out = np.zeros((r1 - r0 + 1, c1 - c0 + 1), dtype=object if exact else float)
        if exact:
            out[:] = Fraction(0)
        for k in range(c0, c1 + 1):
            start, vals = self.column(k)
            for n, v in enumerate(vals):
                i = start + n
                if r0 <= i <= r1:
                    out[i - r0, k - c0] = v if exact else float(v)
        return Window((r0, r1), (c0, c1), out)

    def apply(self, vec: OffsetVector) -> OffsetVector:
        """Matrix-vector product for a finitely supported vector."""
        exact = vec.values.dtype == object
        if not exact and self.exact:
            mat = self.astype_float()
        else:
            mat = self
        a, b = vec.start, vec.stop - 1
        if b < a:
            return OffsetVector(0, vec.values[:0])
        s = self.slant
        r0, r1 = mat.rows_of_columns(a, b)
        out = np.zeros(r1 - r0 + 1, dtype=object if exact else float)
        if exact:
            out[:] = Fraction(0)

        def add_regular(lo, hi, mask):
            if hi < lo or not len(mask):
                return
            seg = vec.values[lo - a : hi - a + 1]
            up = np.zeros(s * (len(seg) - 1) + 1, dtype=out.dtype)
            if exact:
                up[:] = Fraction(0)
            up[::s] = seg
            conv = np.convolve(up, _as_array(mask.values, exact))
            first = s * lo + mask.anchor - r0
            out[first : first + len(conv)] += conv

        add_regular(a, min(b, mat.k_left), mat.left)
        add_regular(max(a, mat.k_right), b, mat.right)
        for k in range(max(a, mat.k_left + 1), min(b, mat.k_right - 1) + 1):
            m = mat.irregular.get(k)
            if m is None or not len(m):
                continue
            c = vec.values[k - a]
            first = s * k + m.anchor - r0
            out[first : first + len(m)] += c * _as_array(m.values, exact)
        return OffsetVector(r0, out)

    def astype_float(self) -> "SlantedMatrix":
        def f(m: Mask) -> Mask:
            return Mask(m.anchor, tuple(float(v) for v in m.values))

        return SlantedMatrix(self.slant, self.k_left, self.k_right, f(self.left), f(self.right),
                             {k: f(m) for k, m in self.irregular.items()})

    def scaled(self, c) -> "SlantedMatrix":
        def f(m: Mask) -> Mask:
            return Mask(m.anchor, tuple(c * v for v in m.values))

        return SlantedMatrix(self.slant, self.k_left, self.k_right, f(self.left), f(self.right),
                             {k: f(m) for k, m in self.irregular.items()})

    def transpose(self) -> "SlantedMatrix":
        """Transpose of a 1-slanted matrix (the result is again 1-slanted)."""
        if self.slant != 1:
            raise ValueError("only 1-slanted matrices have a slanted transpose")
        lo_l = self.left.anchor
        hi_l = self.left.anchor + len(self.left) - 1
        lo_r = self.right.anchor
        hi_r = self.right.anchor + len(self.right) - 1
        # rows touched by anything other than the left tail / right tail
        mid_rows = [self.k_right + lo_r]
        mid_rows_hi = [self.k_left + hi_l]
        for k, m in self.irregular.items():
            if len(m):
                mid_rows.append(k + m.anchor)
                mid_rows_hi.append(k + m.anchor + len(m) - 1)
        new_kl = min(self.k_left + lo_l, min(mid_rows) - 1)
        new_kr = max(self.k_right + hi_r, max(mid_rows_hi) + 1)
        left = Mask(-hi_l, tuple(reversed(self.left.values)))
        right = Mask(-hi_r, tuple(reversed(self.right.values)))
        c0, c1 = self.columns_touching_rows(new_kl + 1, new_kr - 1)
        win = self.window((new_kl + 1, new_kr - 1), (c0, c1))
        irregular = {}
        for i in range(new_kl + 1, new_kr):
            row = win.values[i - new_kl - 1]
            irregular[i] = Mask(c0 - i, tuple(row)).trimmed()
        return SlantedMatrix(1, new_kl, new_kr, left.trimmed(), right.trimmed(), irregular)

    # -- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        irregular = []
        for k, m in self.irregular.items():
            for n, v in enumerate(m.values):
                irregular.append({"row": self.slant * k + m.anchor + n, "col": k, "value": _num_to_json(v)})
        return {
            "slant": self.slant,
            "k_left": self.k_left,
            "k_right": self.k_right,
            "left_mask": self.left.to_json(),
            "right_mask": self.right.to_json(),
            "irregular": irregular,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SlantedMatrix":
        slant = int(obj["slant"])
        cols: dict[int, dict[int, object]] = {}
        for e in obj.get("irregular", []):
            cols.setdefault(int(e["col"]), {})[int(e["row"])] = as_number(e["value"])
        irregular = {}
        for k, entries in cols.items():
            r0, r1 = min(entries), max(entries)
            zero = Fraction(0) if all(isinstance(v, Fraction) for v in entries.values()) else 0.0
            vals = tuple(entries.get(r, zero) for r in range(r0, r1 + 1))
            irregular[k] = Mask(r0 - slant * k, vals)
        return cls(slant, int(obj["k_left"]), int(obj["k_right"]),
                   Mask.from_json(obj["left_mask"]), Mask.from_json(obj["right_mask"]), irregular)


def window(A: SlantedMatrix, rows: tuple[int, int], cols: tuple[int, int]) -> Window:
    return A.window(rows, cols)


def identity(exact: bool = True) -> SlantedMatrix:
    one = Fraction(1) if exact else 1.0
    return SlantedMatrix(1, -1, 1, Mask(0, (one,)), Mask(0, (one,)), {0: Mask(0, (one,))})


def diagonal(left, right, middle: dict) -> SlantedMatrix:
    """Diagonal matrix with constant tails ``left`` / ``right`` and explicit entries ``middle``."""
    k_left = min(middle) - 1 if middle else -1
    k_right = max(middle) + 1 if middle else 1
    return SlantedMatrix(1, k_left, k_right, Mask(0, (left,)), Mask(0, (right,)),
                         {k: Mask(0, (v,)) for k, v in middle.items()})


def transpose_apply(A: SlantedMatrix, W: Window) -> Window:
    """Exact window of ``A^T W`` covering every column of ``A`` that meets ``W``'s rows."""
    r0, r1 = W.rows
    c0, c1 = A.columns_touching_rows(r0, r1)
    exact = W.values.dtype == object
    Awin = A.window((r0, r1), (c0, c1), exact=exact)
    vals = Awin.values.T.dot(W.values)
    # drop columns of A that do not actually reach the window
    nz = [k for k in range(c0, c1 + 1) if any(v != 0 for v in Awin.values[:, k - c0])]
    if not nz:
        return Window((c0, c0), W.cols, np.zeros((1, W.values.shape[1]), dtype=W.values.dtype))
    lo, hi = nz[0], nz[-1]
    return Window((lo, hi), W.cols, vals[lo - c0 : hi - c0 + 1])


def multiply(A: SlantedMatrix, B: SlantedMatrix) -> SlantedMatrix:
    """Product ``A B`` of slanted matrices; slants multiply."""
    exact = A.exact and B.exact
    if not exact:
        A, B = A.astype_float(), B.astype_float()
    s = A.slant * B.slant

    def col_product(k: int) -> tuple[int, tuple]:
        start, vals = B.column(k)
        if not vals:
            return s * k, ()
        prod = A.apply(OffsetVector(start, _as_array(vals, exact)))
        return prod.start, tuple(prod.values)

    # B's tail columns land in A's tail columns from these indices on
    lb, hb = B.left.anchor, B.left.anchor + len(B.left) - 1
    kl = min(B.k_left, math.floor((A.k_left - hb) / B.slant))
    lr = B.right.anchor
    kr = max(B.k_right, math.ceil((A.k_right - lr) / B.slant))

    def mask_at(k: int) -> Mask:
        start, vals = col_product(k)
        return Mask(start - s * k, vals).trimmed()

    left, right = mask_at(kl), mask_at(kr)
    irregular = {k: mask_at(k) for k in range(kl + 1, kr)}
    return SlantedMatrix(s, kl, kr, left, right, irregular)
