"""Single-shot 3D imaging through scattering media.

Simulate lensless speckle captures of 3D point scenes under the memory-effect
model, and reconstruct the scene from one capture by computational rescaling,
speckle cross-correlation and 3D phase retrieval (HIO followed by ER).
"""

from .correlation import (
    CorrelationStack,
    ScaleSeries,
    SpeckleCorrelator,
    background_compensate,
    build_correlation_stack,
    comp_scale_series,
    equalize_bias,
    memory_effect_ok,
    stack_to_power_spectrum,
)
from .evaluate import EvaluationReport, align_and_score, rasterize_scene
from .grid import crop_center, dft3, downsample2, rescale2, xcorr2
from .retrieval import (
    ConstraintSet,
    PhaseRetriever,
    RetrievalConfig,
    er_update,
    fourier_error,
    hio_update,
    init_state,
    retrieve,
    violation_set,
)
from .sim import (
    ImpulseResponse,
    ScatteringScene,
    add_noise,
    gen_impulse_response,
    plane_response,
    render_speckle,
    scale_factor,
)

__version__ = "0.1.0"

__all__ = [
    "ConstraintSet",
    "CorrelationStack",
    "EvaluationReport",
    "ImpulseResponse",
    "PhaseRetriever",
    "RetrievalConfig",
    "ScaleSeries",
    "ScatteringScene",
    "SpeckleCorrelator",
    "add_noise",
    "align_and_score",
    "background_compensate",
    "build_correlation_stack",
    "comp_scale_series",
    "crop_center",
    "dft3",
    "downsample2",
    "equalize_bias",
    "er_update",
    "fourier_error",
    "gen_impulse_response",
    "hio_update",
    "init_state",
    "memory_effect_ok",
    "plane_response",
    "rasterize_scene",
    "render_speckle",
    "rescale2",
    "retrieve",
    "scale_factor",
    "stack_to_power_spectrum",
    "violation_set",
    "xcorr2",
]
