from fractions import Fraction

import numpy as np
import pytest

from golden import BSPLINE2, DD4
from holzyg.core_algebra import (Mask, Mesh, OffsetVector, SlantedMatrix, Window, identity, mesh_point, multiply,
                                 transpose_apply, window)


def random_slanted(rng, slant=2, width=4, irregular=3):
    left = Mask(-1, tuple(rng.normal(size=width)))
    right = Mask(-2, tuple(rng.normal(size=width)))
    mid = {k: Mask(int(rng.integers(-2, 1)), tuple(rng.normal(size=int(rng.integers(1, width + 2)))))
           for k in range(1 - irregular // 2, irregular // 2 + 1)}
    return SlantedMatrix(slant, -irregular // 2 - 1, irregular // 2 + 1, left, right, mid)


def dense(A, rows, cols):
    return A.window(rows, cols, exact=False).values


def test_mesh_points():
    m = Mesh(1, 2)
    assert mesh_point(m, 0) == 0
    assert mesh_point(m, -3) == -3
    assert mesh_point(m, 1) == 2
    assert m.exact and not m.regular
    with pytest.raises(ValueError):
        Mesh(0, 1)


def test_mesh_increments():
    m = Mesh(Fraction(1, 3), Fraction(5, 2))
    for k in range(-5, 6):
        step = m.point(k) - m.point(k - 1)
        assert step == (m.h_left if k <= 0 else m.h_right)


def test_identity_window():
    W = window(identity(), (-2, 2), (-2, 2))
    assert (W.values == np.eye(5, dtype=int)).all()


def test_golden_windows(schemes):
    row = schemes["dd4"].Z.window((-1, -1), (-2, 1)).values[0]
    assert list(row) == [Fraction(-5, 64), Fraction(5, 8), Fraction(15, 32), Fraction(-1, 64)]
    B = schemes["bspline2"].Z.window((-2, -1), (-2, -1)).values
    assert (B == np.array([[Fraction(5, 6), Fraction(1, 6)], [Fraction(1, 3), Fraction(2, 3)]])).all()
    assert (schemes["dd4"].Z.window((-9, 9), (-3, 3)).values == DD4).all()
    assert (schemes["bspline2"].Z.window((-6, 3), (-3, 0)).values == BSPLINE2).all()


def test_transpose_apply_identity():
    W = Window((0, 2), (0, 1), np.arange(6.0).reshape(3, 2))
    out = transpose_apply(identity(exact=False), W)
    assert out.rows == (0, 2)
    assert np.array_equal(out.values, W.values)


def test_transpose_apply_bspline_row(schemes):
    W = Window((0, 0), (5, 5), np.array([[Fraction(1)]], dtype=object))
    out = transpose_apply(schemes["bspline2"].Z, W)
    got = {k: out[k, 5] for k in range(out.rows[0], out.rows[1] + 1) if out[k, 5] != 0}
    assert got == {-1: Fraction(3, 4), 0: Fraction(1, 4)}


@pytest.mark.parametrize("seed", range(5))
def test_transpose_apply_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    A = random_slanted(rng)
    W = Window((-4, 3), (0, 7), rng.normal(size=(8, 8)))
    out = transpose_apply(A, W)
    c0, c1 = out.rows
    pad = (c0 - 6, c1 + 6)
    ref = dense(A, (-4, 3), pad).T @ W.values
    assert np.allclose(ref[c0 - pad[0]: c1 - pad[0] + 1], out.values, atol=1e-14)
    # columns outside the reported range receive nothing
    assert np.all(ref[: c0 - pad[0]] == 0) and np.all(ref[c1 - pad[0] + 1:] == 0)


def test_multiply_identity(schemes):
    Z = schemes["dd4"].Z
    ZI = multiply(Z, identity())
    assert ZI.window((-20, 20), (-10, 10)).values.tolist() == Z.window((-20, 20), (-10, 10)).values.tolist()


@pytest.mark.parametrize("name", ["bspline2", "dd4", "polyharmonic"])
def test_multiply_dense_oracle(schemes, name):
    Z = schemes[name].Z.astype_float()
    Z2 = multiply(Z, Z)
    assert Z2.slant == 4
    rows, cols = (-30, 30), (-6, 6)
    mid = Z.columns_touching_rows(*rows)
    mid = (mid[0] - 4, mid[1] + 4)
    ref = dense(Z, rows, mid) @ dense(Z, mid, cols)
    assert np.max(np.abs(ref - dense(Z2, rows, cols))) <= 1e-14


def test_multiply_row_sums(schemes):
    Z = schemes["dd4"].Z
    Z2 = multiply(Z, Z)
    V = Z2.window((-24, 24), Z2.columns_touching_rows(-24, 24)).values
    assert all(s == 1 for s in V.sum(axis=1))


def test_tail_consistency(schemes):
    for s in schemes.values():
        Z = s.Z
        for k in range(Z.k_left - 4, Z.k_left):
            a0, av = Z.column(k)
            b0, bv = Z.column(k + 1)
            assert tuple(av) == tuple(bv) and b0 - a0 == Z.slant
        for k in range(Z.k_right, Z.k_right + 4):
            a0, av = Z.column(k)
            b0, bv = Z.column(k + 1)
            assert tuple(av) == tuple(bv) and b0 - a0 == Z.slant


@pytest.mark.parametrize("name", ["dd4", "buhmann"])
def test_window_stability(schemes, name):
    Z = schemes[name].Z
    small = Z.window((-7, 5), (-3, 2), exact=False).values
    big = Z.window((-31, 29), (-15, 14), exact=False).values
    assert np.max(np.abs(big[24:37, 12:18] - small)) <= 1e-14


def test_apply_matches_window(schemes):
    Z = schemes["dd4"].Z.astype_float()
    v = OffsetVector(-3, np.array([1.0, -2.0, 0.5, 4.0, 3.0, -1.0]))
    out = Z.apply(v)
    ref = dense(Z, (out.start, out.stop - 1), (-3, 2)) @ v.values
    assert np.allclose(out.values, ref, atol=1e-15)


def test_json_roundtrip(schemes):
    Z = schemes["polyharmonic"].Z
    back = SlantedMatrix.from_json(Z.to_json())
    assert back.window((-12, 12), (-5, 5)).values.tolist() == Z.window((-12, 12), (-5, 5)).values.tolist()
    W = schemes["buhmann"].Z
    back = SlantedMatrix.from_json(W.to_json())
    assert np.array_equal(dense(back, (-12, 12), (-5, 5)), dense(W, (-12, 12), (-5, 5)))


def test_transpose(schemes):
    A = random_slanted(np.random.default_rng(7), slant=1)
    T = A.transpose()
    assert np.array_equal(dense(A, (-12, 12), (-12, 12)).T, dense(T, (-12, 12), (-12, 12)))
    with pytest.raises(ValueError):
        schemes["dd4"].Z.transpose()
