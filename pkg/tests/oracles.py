"""Brute-force quadrature references, independent of the cross-Gramian recursion."""
import numpy as np

from holzyg.limits import cascade_eval, support


def _common(f, g):
    lo = min(f.start, g.start)
    hi = max(f.start + len(f.values), g.start + len(g.values))
    return lo, hi


def _trap(x, y):
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def gramian_oracle(zs, ps, rows, cols, J=12):
    """``<zeta_i, phi_k>`` by the composite trapezoid rule on the level-``J`` mesh."""
    zf = {i: cascade_eval(zs, i, J) for i in rows}
    pf = {k: cascade_eval(ps, k, J) for k in cols}
    out = np.zeros((len(rows), len(cols)))
    for a, i in enumerate(rows):
        for b, k in enumerate(cols):
            lo, hi = _common(zf[i], pf[k])
            x = zs.mesh.level_points(lo, hi, J)
            out[a, b] = _trap(x, zf[i].aligned(lo, hi) * pf[k].aligned(lo, hi))
    return out


def c1_oracle(zs, F, i, J=12):
    """Level-1 frame coefficients ``<zeta_i, psi_{1,k}>`` for every ``k`` they can reach.

    ``psi_{1,k} = sqrt(2) sum_m Q(m, k) d_m^{-1/2} phi_m(2 .)``; on the level-``J``
    grid, ``phi_m(2 x)`` is the level-``J-1`` sample with the same index.
    """
    ps = F.scheme
    f = cascade_eval(zs, i, J)
    sp = support(zs, i)
    mesh = zs.mesh
    m_lo = int(np.floor(mesh.index_of(2 * float(sp.left)))) - 8
    m_hi = int(np.ceil(mesh.index_of(2 * float(sp.right)))) + 8
    u = {}
    for m in range(m_lo, m_hi + 1):
        g = cascade_eval(ps, m, J - 1)
        lo, hi = _common(f, g)
        x = mesh.level_points(lo, hi, J)
        u[m] = _trap(x, f.aligned(lo, hi) * g.aligned(lo, hi))
    ms = np.arange(m_lo, m_hi + 1)
    y = np.sqrt(2.0) * np.array([u[m] for m in ms]) * F.d_sqrt_inv(m_lo, m_hi + 1)
    c0, c1 = F.Q.columns_touching_rows(m_lo, m_hi)
    Qw = F.Q.window((m_lo, m_hi), (c0, c1)).values
    return c0, Qw.T @ y
