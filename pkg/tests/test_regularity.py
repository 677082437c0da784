import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holzyg.core_algebra import OffsetVector
from holzyg.gramian_frame import FrameCoefficients, cross_gramian, frame_coefficients
from holzyg.regularity import (GammaSequence, _verdict, estimate_ratio, estimate_regression, gamma_sequence,
                               regularity_report)

exponents = st.floats(min_value=0.05, max_value=4.0)
constants = st.floats(min_value=1e-3, max_value=1e3)


def geometric(r, C=1.0, levels=17):
    j = np.arange(1, levels + 1)
    return GammaSequence(C * 2.0 ** (-j * (r + 0.5)))


@given(exponents, constants, st.integers(1, 15))
def test_estimators_exact_on_geometric(r, C, n):
    g = geometric(r, C)
    assert abs(estimate_ratio(g, n) - r) <= 1e-12
    assert abs(estimate_regression(g, n) - r) <= 1e-12


@given(exponents, constants, st.lists(st.floats(0.2, 5.0), min_size=6, max_size=6))
def test_scaling_invariance(r, C, noise):
    vals = geometric(r, levels=6).values * np.array(noise)
    a, b = GammaSequence(vals), GammaSequence(C * vals)
    for n in range(1, 5):
        assert math.isclose(estimate_ratio(a, n), estimate_ratio(b, n), abs_tol=1e-12)
        assert math.isclose(estimate_regression(a, n), estimate_regression(b, n), abs_tol=1e-12)


def test_ratio_value():
    g = GammaSequence([1.0, 2.0**-2.5, 2.0**-5])
    assert estimate_ratio(g, 1) == pytest.approx(2.0, abs=1e-15)
    assert estimate_ratio(g, 2) == pytest.approx(2.0, abs=1e-15)


def test_estimator_errors():
    g = geometric(1.0, levels=4)
    with pytest.raises(ValueError):
        estimate_regression(g, 0)
    with pytest.raises(ValueError):
        estimate_ratio(g, 4)
    z = GammaSequence([1.0, 0.5, 0.0])
    assert z.zero_levels == (3,)
    with pytest.raises(ValueError):
        estimate_ratio(z, 2)
    with pytest.raises(ValueError):
        GammaSequence([1.0, -1.0])


def test_gamma_sequence_synthetic():
    r = 1.3
    rows = {0: [OffsetVector(0, np.array([0.0, 2.0 ** (-j * (r + 0.5)), 0.0])) for j in range(1, 6)]}
    gam = {0: [float(np.max(np.abs(v.values))) for v in rows[0]]}
    C = FrameCoefficients(None, None, 5, rows, gam, {0: OffsetVector(0, np.array([1.0]))}, {})
    g = gamma_sequence(C, 0)
    assert np.allclose(g.values, 2.0 ** (-np.arange(1, 6) * (r + 0.5)), rtol=0, atol=0)
    with pytest.raises(KeyError):
        gamma_sequence(C, 1)


def test_gamma_all_zero_row():
    C = FrameCoefficients(None, None, 2, {0: [None, None]}, {0: [0.0, 0.0]},
                          {0: OffsetVector(0, np.array([1.0]))}, {})
    with pytest.raises(ValueError, match="polynomial kernel"):
        gamma_sequence(C, 0)


def test_regular_rows_shift_invariant(schemes, frame_dd6):
    zs = schemes["dd4"]
    G = cross_gramian(zs, frame_dd6.scheme)
    C = frame_coefficients(G, frame_dd6, [-40, -41, 40, 41], 6)
    assert np.allclose(C.gamma[-40], C.gamma[-41], rtol=1e-10)
    assert np.allclose(C.gamma[40], C.gamma[41], rtol=1e-10)


def test_bspline_ratio_limit(schemes, frame_dd6):
    G = cross_gramian(schemes["bspline2"], frame_dd6.scheme)
    C = frame_coefficients(G, frame_dd6, [-1], 8)
    g = gamma_sequence(C, -1)
    assert g[6] / g[7] == pytest.approx(2**2.5, rel=1e-3)


def test_verdict_rules():
    est, conv, step, osc, valid, _ = _verdict([1.0, 1.5, 1.9, 2.0, 2.0001, 2.0002, 2.0002], 3.0, 5e-4, 3)
    assert conv and valid and est == 2.0002
    est, conv, *_ = _verdict([1.0, 1.5, 1.9, 2.0, 2.1, 2.0, 2.1], 3.0, 5e-4, 3)
    assert not conv and est == 2.1
    est, conv, step, osc, valid, note = _verdict([2.5, 3.0, 3.2], 3.0, 5e-4, 3)
    assert est is None and not valid and "validity" in note


def test_report_bspline(schemes, frame_dd6):
    rep = regularity_report(schemes["bspline2"], frame_dd6, [-2, -1], 6)
    for f in rep.functions:
        assert f.estimate == pytest.approx(2.0, abs=5e-3)
        assert len(f.r_n) == len(f.r_star_n) == 6
        assert f.r_n[0] == pytest.approx(f.r_star_n[0], abs=1e-12)
    obj = json.loads(rep.dumps())
    assert obj["validity"]["v"] == 3
    assert set(obj["functions"][0]) == {"function", "gamma", "r_n", "r_star_n", "verdict"}
    table = rep.table("r_star_n", 4).splitlines()
    assert table[0] == "n,r*_n(zeta_-2),r*_n(zeta_-1)"
    assert table[6].split(",")[1] == "2.0000"


def test_report_validity_gate(schemes, frame_dd4):
    # the quadratic B-spline has exponent 2, at the edge of the DD4 frame's window
    rep = regularity_report(schemes["bspline2"], frame_dd4, [-1], 6, s=1.5)
    f = rep.functions[0]
    assert rep.upper == 1.5
    assert f.estimate is None and not f.valid


def test_report_rejects_bad_levels(schemes, frame_dd4):
    with pytest.raises(ValueError):
        regularity_report(schemes["hat"], frame_dd4, [0], 0)
    with pytest.raises(ValueError):
        regularity_report(schemes["hat"], frame_dd4, [], 3)
