"""Regularity analysis of semi-regular subdivision limits via wavelet tight frames."""
from .core_algebra import Mesh, SlantedMatrix, Window, mesh_point, multiply, transpose_apply, window
from .schemes import Scheme, build_bspline, build_dd, build_rbf, buhmann, check_scheme, polyharmonic
from .limits import cascade_eval, integral_weights, moment, quad_inner, support
from .gramian_frame import (FrameError, FrameSystem, build_frame, cross_gramian, frame_coefficients,
                            import_frame, verify_frame_axioms)
from .regularity import estimate_ratio, estimate_regression, gamma_sequence, regularity_report

__version__ = "0.1.0"
