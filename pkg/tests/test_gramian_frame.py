import json
from fractions import Fraction

import numpy as np
import pytest

from oracles import c1_oracle, gramian_oracle
from holzyg.core_algebra import Mesh, OffsetVector
from holzyg.gramian_frame import (FrameError, build_frame, cross_gramian, frame_coefficients, framelet_moments,
                                  import_frame, load_frame, measured_vanishing_moments, regular_factor,
                                  regular_gramian_kernel, save_frame, uep_residual, verify_frame_axioms)
from holzyg.limits import integral_weights
from holzyg.schemes import build_bspline, build_dd


def test_regular_gramian_kernel_hat():
    # <hat, hat(. - n)> on the integers: 2/3 at 0, 1/6 at +-1
    hat = build_bspline(Mesh(1, 1), 1).Z
    g = regular_gramian_kernel(hat.left, hat.left, exact=True)
    assert g[0] == Fraction(2, 3) and g[1] == Fraction(1, 6) and g[-1] == Fraction(1, 6)
    assert sum(g.values()) == 1


def test_gramian_fixed_point_and_row_sums(schemes):
    G = cross_gramian(schemes["dd4"], schemes["dd6"])
    assert G.fixed_point_residual((-12, 12), (-12, 12)) <= 1e-13
    # sum_k <zeta_i, phi_k> = integral of zeta_i (partition of unity of phi)
    d = integral_weights(schemes["dd4"])
    sums = G.row_sums(range(-6, 7))
    assert np.max(np.abs(sums - np.array([float(d(i)) for i in range(-6, 7)]))) <= 1e-12


def test_gramian_symmetric_for_equal_schemes(schemes):
    G = cross_gramian(schemes["dd4"], schemes["dd4"])
    W = G.window((-10, 10), (-10, 10)).values
    assert np.max(np.abs(W - W.T)) <= 1e-13


def test_gramian_exact_mode(schemes):
    G = cross_gramian(schemes["bspline2"], schemes["dd4"], exact=True)
    assert isinstance(G.G.entry(0, 0), Fraction)
    Gf = cross_gramian(schemes["bspline2"], schemes["dd4"])
    assert abs(float(G.G.entry(-1, 0)) - Gf.entry(-1, 0)) <= 1e-14


def test_gramian_oracle_small(schemes):
    zs, ps = schemes["bspline2"], schemes["dd4"]
    ref = gramian_oracle(zs, ps, [-2, -1, 0], list(range(-4, 4)), J=10)
    got = cross_gramian(zs, ps).window((-2, 0), (-4, 3)).values
    assert np.max(np.abs(ref - got)) <= 1e-5


def test_gramian_mesh_mismatch(schemes):
    with pytest.raises(ValueError):
        cross_gramian(schemes["dd4"], build_dd(Mesh(1, 1), 2))


def test_regular_factor_requires_interpolatory(schemes):
    with pytest.raises(FrameError):
        regular_factor(schemes["bspline2"].Z.left)
    f = regular_factor(schemes["dd6"].Z.left)
    assert f.kappa == 3


@pytest.mark.parametrize("L", [2, 3])
def test_regular_mesh_frame_is_shift_invariant(L):
    F = build_frame(build_dd(Mesh(1, 1), L))
    assert uep_residual(F) <= 1e-12
    assert measured_vanishing_moments(F) >= L - 1


def test_frame_dd4_axioms(frame_dd4, schemes):
    rep = verify_frame_axioms(frame_dd4, test_scheme=schemes["bspline2"], test_index=-1)
    assert rep["uep_residual"] <= 1e-9
    assert rep["moments"][0] <= 1e-6 and rep["moments"][1] <= 1e-6
    assert rep["parseval_ok"] and rep["ok"]
    assert rep["v_measured"] >= 2


def test_frame_dd6_axioms(frame_dd6, schemes):
    rep = verify_frame_axioms(frame_dd6, test_scheme=schemes["bspline2"], test_index=-1)
    assert rep["ok"]
    assert rep["v_measured"] >= 3
    assert abs(rep["parseval_gap"]) <= 1e-3
    assert rep["C_supp"] > 0 and rep["C_Gamma"] > 0


def test_framelet_moments_vanish(frame_dd6):
    for n in range(3):
        assert max(framelet_moments(frame_dd6, n).values()) <= 1e-8


def test_frame_rejects_non_interpolatory(schemes):
    with pytest.raises(ValueError):
        build_frame(schemes["bspline2"])


def test_frame_roundtrip(frame_dd4, tmp_path):
    p = tmp_path / "f.json"
    save_frame(frame_dd4, p)
    F = load_frame(p)
    assert uep_residual(F) <= 1e-9
    assert F.v_measured == frame_dd4.v_measured
    save_frame(F, tmp_path / "g.json")
    assert (tmp_path / "g.json").read_text() == p.read_text()


def test_import_rejects_tampered(frame_dd4):
    obj = json.loads(json.dumps(frame_dd4.to_json()))
    mid = obj["Q"]["middle"]
    key = next(iter(mid))
    mid[key]["values"][0] = float(mid[key]["values"][0]) + 1e-2
    with pytest.raises(FrameError):
        import_frame(obj)


def test_transpose_apply_dense(frame_dd6):
    Q = frame_dd6.Q
    rng = np.random.default_rng(3)
    y = OffsetVector(-15, rng.normal(size=30))
    out = Q.transpose_apply(y)
    c0, c1 = Q.columns_touching_rows(-15, 14)
    ref = Q.window((-15, 14), (c0, c1)).values.T @ y.values
    assert np.allclose(out.get_range(c0, c1 + 1), ref, atol=1e-14)


def test_frame_coefficients_match_oracle(schemes, frame_dd6):
    zs = schemes["bspline2"]
    G = cross_gramian(zs, frame_dd6.scheme)
    C = frame_coefficients(G, frame_dd6, [-1], 1, keep_rows=True)
    c0, ref = c1_oracle(zs, frame_dd6, -1, J=10)
    got = C.rows[-1][0].get_range(c0, c0 + len(ref))
    assert np.max(np.abs(got - ref)) <= 1e-5


def test_frame_coefficients_errors(schemes, frame_dd4, frame_dd6):
    G = cross_gramian(schemes["bspline2"], frame_dd6.scheme)
    with pytest.raises(ValueError):
        frame_coefficients(G, frame_dd4, [-1], 3)
    with pytest.raises(ValueError):
        frame_coefficients(G, frame_dd6, [-1], 0)


def test_framelets_annihilate_constants(frame_dd6):
    # integral of psi_{1,k} is proportional to sum_m Q(m, k) sqrt(d_m)
    d = integral_weights(frame_dd6.scheme)
    c0, c1 = frame_dd6.Q.columns_touching_rows(-30, 30)
    lo, hi = c0 - 40, c1 + 40
    Qw = frame_dd6.Q.window((lo, hi), (c0, c1)).values
    w = np.sqrt(d.vector(lo, hi + 1))
    assert np.max(np.abs(Qw.T @ w)) <= 1e-10
