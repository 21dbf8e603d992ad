"""Eye pupil localization: CDF thresholding, projection functions and edge analysis."""

from .cdf import CdfParams, cdf_binarize, find_pmi, locate_pupil_cdf
from .edges import EaParams, canny, line_votes, locate_pupil_ea, select_boundary_lines
from .errors import *  # noqa: F401,F403
from .evaluation import (
    EfficiencyCurve,
    EvalRecord,
    EyeAnnotation,
    Params,
    RoiPolicy,
    SynthEyeSpec,
    derive_roi,
    detection_error,
    efficiency_table,
    load_bioid,
    run_benchmark,
    synth_eye,
)
from .image import (
    GrayImage,
    PupilEstimate,
    Region,
    gaussian_blur,
    histogram_cdf,
    mean_intensity,
    minimum_filter,
)
from .pgm import read_pgm, write_pgm
from .projection import Axis, PfParams, ProjectionCurve, boundary_points, locate_pupil_pf, projection

__version__ = "0.1.0"
