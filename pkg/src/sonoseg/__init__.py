"""Lesion segmentation and quantitative-ultrasound characterization toolkit.

Pipeline: RF frame -> envelope/B-mode -> histogram equalization -> geometric
nonlinear diffusion -> per-line empirical mode decomposition residue ->
automatic thresholding -> ROI extraction -> calibrated spectral parameter
images -> spectral + morphometric features -> weighted malignancy score.

All operations are pure functions of their inputs; returned arrays are owned
by the caller and safe to share across threads.
"""

from .frame_io import (
    BModeImage,
    CalibrationSet,
    EnvelopeImage,
    FrameFormatError,
    RFFrame,
    detect_envelope,
    form_bmode,
    load_rf_frame,
    save_rf_frame,
)
from .preprocess import DiffusionParams, diffuse, equalize_histogram
from .emd import Decomposition, EmdParams, decompose, find_extrema, residue_image, spline_envelopes
from .segmentation import (
    LesionROI,
    SegmentationParams,
    binarize,
    dimension_error,
    extract_rois,
    otsu_threshold,
    select_roi,
)
from .spectral import (
    ParameterImage,
    SpectralConfig,
    calibrate,
    parameter_images,
    regress_band,
    windowed_spectrum,
)
from .features import (
    FeatureConfig,
    FeatureError,
    FeatureVector,
    RoiGeometry,
    autocorrelation,
    cooccurrence_contrast,
    echogenicity,
    extract_features,
    fnpa,
    heterogeneity,
    hurst,
    margin_definition,
    morphometrics,
    roi_geometry,
)
from .classify import (
    CohortResult,
    WeightProfile,
    built_in_profile,
    decide,
    roc_analysis,
    score,
)
from .phantom import PhantomSpec, generate, generate_cohort, make_calibration

__version__ = "0.1.0"
