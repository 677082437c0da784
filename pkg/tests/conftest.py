import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from holzyg.core_algebra import Mesh
from holzyg.gramian_frame import build_frame
from holzyg.schemes import build_bspline, build_dd, build_rbf, buhmann, polyharmonic


@pytest.fixture(scope="session")
def mesh():
    return Mesh(Fraction(1), Fraction(2))


@pytest.fixture(scope="session")
def schemes(mesh):
    return {
        "bspline2": build_bspline(mesh, 2),
        "hat": build_bspline(mesh, 1),
        "dd4": build_dd(mesh, 2),
        "dd6": build_dd(mesh, 3),
        "polyharmonic": build_rbf(mesh, polyharmonic(), 2, 3),
        "buhmann": build_rbf(mesh, buhmann(), 2, 1),
    }


@pytest.fixture(scope="session")
def frame_dd4(schemes):
    return build_frame(schemes["dd4"])


@pytest.fixture(scope="session")
def frame_dd6(schemes):
    return build_frame(schemes["dd6"])


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        ok, detail = RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
