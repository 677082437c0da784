"""Decay rates of frame coefficients and the two Hoelder-Zygmund exponent estimators.

For ``gamma_j = sup_k |<f, psi_{j,k}>|`` the optimal exponent is the largest
``r`` with ``gamma_j <= C 2^{-j(r + 1/2)}``.  Two finite-level estimates are
provided: the slope of the least-squares line through
``(j, -log2 gamma_j)``, ``j = 1..n+1``, and the level ratio
``log2(gamma_n / gamma_{n+1})``, both shifted by ``1/2``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .gramian_frame import FrameCoefficients, FrameSystem, cross_gramian, frame_coefficients
from .schemes import Scheme

__all__ = [
    "GammaSequence",
    "gamma_sequence",
    "estimate_regression",
    "estimate_ratio",
    "FunctionReport",
    "RegularityReport",
    "regularity_report",
]

# coefficients below this fraction of the level-0 size are rounding noise
ZERO_LEVEL = 1e-13


@dataclass(frozen=True)
class GammaSequence:
    """``gamma_1 .. gamma_J`` for one function.

    ``zero_levels`` lists levels whose coefficient row vanished (the function
    lies in the polynomial kernel of the framelets there); estimators refuse
    to use them.
    """

    values: np.ndarray
    function: int | None = None
    frame_id: str | None = None
    zero_levels: tuple = ()

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or not len(vals):
            raise ValueError("gamma sequence must be a non-empty vector")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("gamma values must be finite and non-negative")
        object.__setattr__(self, "values", vals)
        if not self.zero_levels:
            object.__setattr__(self, "zero_levels", tuple(int(j) + 1 for j in np.nonzero(vals == 0)[0]))

    @property
    def levels(self) -> int:
        return len(self.values)

    def __getitem__(self, j: int) -> float:
        """``gamma_j`` with 1-based level ``j``."""
        if not 1 <= j <= self.levels:
            raise IndexError(f"level {j} outside 1..{self.levels}")
        return float(self.values[j - 1])


def gamma_sequence(C: FrameCoefficients, i: int, frame_id: str | None = None) -> GammaSequence:
    """``gamma_j = max_k |C_j(i, k)|`` from computed frame coefficients."""
    if i not in C.gamma:
        raise KeyError(f"row {i} was not computed")
    vals = np.array(C.gamma[i], dtype=float)
    scale = float(np.max(np.abs(C.coarse[i].values))) if len(C.coarse[i].values) else 1.0
    zero = vals <= ZERO_LEVEL * max(scale, 1e-300)
    if np.all(zero):
        raise ValueError(f"function {i} lies in the frame's polynomial kernel (all coefficients vanish)")
    vals = np.where(zero, 0.0, vals)
    return GammaSequence(vals, i, frame_id, tuple(int(j) + 1 for j in np.nonzero(zero)[0]))


def _check_levels(g: GammaSequence, n: int) -> None:
    if n < 1:
        raise ValueError("n must be at least 1")
    if n + 1 > g.levels:
        raise ValueError(f"n = {n} needs {n + 1} levels, only {g.levels} available")


def estimate_regression(g: GammaSequence, n: int) -> float:
    """Slope of the regression line through ``(j, -log2 gamma_j)``, ``j = 1..n+1``, minus 1/2."""
    _check_levels(g, n)
    vals = g.values[: n + 1]
    if np.any(vals == 0):
        raise ValueError("regression window contains vanishing gamma values")
    j = np.arange(1, n + 2, dtype=float)
    slope = np.polyfit(j, -np.log2(vals), 1)[0]
    return float(slope - 0.5)


def estimate_ratio(g: GammaSequence, n: int) -> float:
    """``log2(gamma_n / gamma_{n+1}) - 1/2``."""
    _check_levels(g, n)
    a, b = g[n], g[n + 1]
    if b == 0 or a == 0:
        raise ValueError(f"gamma vanishes at level {n if a == 0 else n + 1}")
    return math.log2(a / b) - 0.5


@dataclass
class FunctionReport:
    """Estimator sequences and verdict for one basic limit function."""

    function: int
    gamma: list
    r_n: list
    r_star_n: list
    estimate: float | None
    converged: bool
    max_step: float
    oscillation: float
    valid: bool
    note: str = ""

    def to_json(self) -> dict:
        return {
            "function": self.function,
            "gamma": self.gamma,
            "r_n": self.r_n,
            "r_star_n": self.r_star_n,
            "verdict": {
                "estimate": self.estimate,
                "converged": self.converged,
                "max_step_last_levels": self.max_step,
                "oscillation_last_levels": self.oscillation,
                "valid": self.valid,
                "note": self.note,
            },
        }


@dataclass
class RegularityReport:
    """Per-function estimator tables plus the validity window ``(0, min(s, v))``."""

    functions: list
    n_max: int
    s: float | None
    v: int
    tol: float = 5e-4
    window: int = 3
    meta: dict = field(default_factory=dict)

    @property
    def upper(self) -> float:
        return float(self.v) if self.s is None else min(float(self.s), float(self.v))

    def by_function(self, i: int) -> FunctionReport:
        for f in self.functions:
            if f.function == i:
                return f
        raise KeyError(i)

    def to_json(self) -> dict:
        return {
            "n_max": self.n_max,
            "validity": {"s": self.s, "v": self.v, "upper": self.upper},
            "convergence_rule": {"tol": self.tol, "levels": self.window},
            "meta": self.meta,
            "functions": [f.to_json() for f in self.functions],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"

    def table(self, key: str, digits: int | None = None) -> str:
        """CSV table with rows ``n`` and one column per function (``key`` is ``r_n``, ``r_star_n`` or ``gamma``)."""
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        name = {"r_n": "r_n", "r_star_n": "r*_n", "gamma": "gamma_j"}[key]
        w.writerow(["n" if key != "gamma" else "j"] + [f"{name}(zeta_{f.function})" for f in self.functions])
        rows = max(len(getattr(f, key)) for f in self.functions)
        for n in range(rows):
            line = [n + 1]
            for f in self.functions:
                seq = getattr(f, key)
                x = seq[n] if n < len(seq) else None
                if x is None:
                    line.append("")
                elif digits is None:
                    line.append(repr(float(x)))
                else:
                    line.append(f"{x:.{digits}f}")
            w.writerow(line)
        return out.getvalue()


def _verdict(r_star: list, upper: float, tol: float, window: int) -> tuple:
    vals = [x for x in r_star if x is not None]
    if not vals:
        return None, False, math.inf, math.inf, False, "no estimates"
    last = vals[-1]
    tail = vals[-(window + 1):]
    steps = np.abs(np.diff(tail)) if len(tail) > 1 else np.array([math.inf])
    max_step = float(np.max(steps))
    osc_tail = vals[-5:]
    oscillation = float(max(osc_tail) - min(osc_tail))
    converged = len(tail) == window + 1 and max_step <= tol
    valid = 0 < last < upper
    note = ""
    if not valid:
        note = f"estimate outside the validity window (0, {upper:g})"
    elif not converged:
        note = "not converged; last value reported with its oscillation"
    return (last if valid else None), converged, max_step, oscillation, valid, note


def regularity_report(zs: Scheme, F: FrameSystem, rows, n_max: int, tol: float = 5e-4,
                      window: int = 3, s: float | None = None) -> RegularityReport:
    """Full pipeline: cross-Gramian, frame coefficients, both estimators, verdict.

    Parameters
    ----------
    zs : Scheme
        Scheme whose basic limit functions are analyzed.
    F : FrameSystem
        Tight frame (its ``smoothness`` metadata feeds the validity window).
    rows : iterable of int
        Function indices ``i``.
    n_max : int
        Largest estimator index; ``n_max + 1`` levels are computed.
    tol, window : float, int
        Converged when the last ``window`` steps of ``r*_n`` are ``<= tol``.
    s : float, optional
        Overrides the frame's smoothness metadata.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    rows = list(rows)
    if not rows:
        raise ValueError("no rows requested")
    G = cross_gramian(zs, F.scheme)
    C = frame_coefficients(G, F, rows, n_max + 1)
    s = F.smoothness if s is None else s
    v = F.v_measured or F.v_declared
    upper = float(v) if s is None else min(float(s), float(v))
    reports = []
    for i in rows:
        try:
            g = gamma_sequence(C, i)
        except ValueError as exc:
            reports.append(FunctionReport(i, [0.0] * (n_max + 1), [], [], None, False, math.inf,
                                          math.inf, False, str(exc)))
            continue
        r_n, r_star = [], []
        for n in range(1, n_max + 1):
            try:
                r_n.append(estimate_regression(g, n))
            except ValueError:
                r_n.append(None)
            try:
                r_star.append(estimate_ratio(g, n))
            except ValueError:
                r_star.append(None)
        est, conv, step, osc, valid, note = _verdict(r_star, upper, tol, window)
        reports.append(FunctionReport(i, [float(x) for x in g.values], r_n, r_star, est, conv, step, osc,
                                      valid, note))
    meta = {"levels": n_max + 1, "frame_v_declared": F.v_declared, "frame_v_measured": F.v_measured}
    return RegularityReport(reports, n_max, s, v, tol, window, meta)
