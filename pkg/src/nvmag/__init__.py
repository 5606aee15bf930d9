"""Simulation and analysis of CW-ODMR NV-diamond magnetometers.

Set ``NVMAG_BACKEND=numpy`` to disable the numba kernels.
"""

__version__ = "0.1.0"

from ._backend import get_backend, set_backend, use_backend
from .config import RunConfig, load_config, parse_config
from .dsp_spectral import (
    AmplitudeSpectrum,
    BrickWall,
    FilterChain,
    LowpassCascade,
    NepResult,
    apply_filter_chain,
    asd,
    band_average,
    nep_bandwidth,
)
from .errors import (
    AnalysisWarning,
    ConfigError,
    FitFailureError,
    FitWarning,
    InvalidArgumentError,
    NoSolutionError,
    NvmagError,
    SingularParameterError,
)
from .fitting import (
    FitResult,
    central_slope,
    fit_odmr_spectrum,
    fit_zero_crossing,
    nlls_fit,
    synthetic_spectrum,
)
from .model_odmr import (
    GAMMA_E,
    HYPERFINE_SPLITTING,
    DerivLorentzianPeak,
    OdmrSpectrum,
    SensorConfig,
    deriv_lorentzian,
    field_response,
    three_tone_peaks,
    spectrum_model,
    spectrum_slope,
)
from .noise_budget import (
    DEFAULT_BUDGET,
    NoiseBudget,
    NoiseDatum,
    equivalent_photocurrent,
    field_noise_floor,
    fit_noise_model,
    noise_model_eval,
    reduction_rate,
    relative_intensity_noise,
    shot_noise_density,
)
from .stability import AdevPoint, SensitivityReport, min_detectable_field, overlapping_adev, sensitivity
from .timetrace import TimeTrace
from .trace_synth import (
    ServoSpec,
    SynthSpec,
    apply_lockin_lpf,
    calibrate_order,
    preset_synth_spec,
    servo_lock,
    synthesize,
)
