"""Reconstruction of electromagnetic point and small-volume sources from Cauchy data."""

from .config import ExperimentConfig, parse_config, parse_config_dict
from .forward import (
    BallSource,
    CauchyData,
    ConfigError,
    MeasurementSurface,
    PointSource,
    add_noise,
    build_sphere_surface,
    synthesize_point_source_data,
    synthesize_small_volume_data,
)
from .imaging import (
    DeflationTerm,
    ImagingSpec,
    SamplingGrid,
    ScalarField,
    base_I,
    base_I_hat,
    deflated_base,
    imaging_field,
    oracle_base,
)
from .kernels import SingularityError, WaveContext
from .reconstruct import (
    Peak,
    Reconstruction,
    ReconstructionParams,
    deflation_loop,
    detect_peaks,
    group_dominant,
    merge_re_im,
    reconstruct_sources,
    recover_moment_component,
)

__version__ = "0.1.0"

__all__ = [
    "BallSource",
    "CauchyData",
    "ConfigError",
    "DeflationTerm",
    "ExperimentConfig",
    "ImagingSpec",
    "MeasurementSurface",
    "Peak",
    "PointSource",
    "Reconstruction",
    "ReconstructionParams",
    "SamplingGrid",
    "ScalarField",
    "SingularityError",
    "WaveContext",
    "add_noise",
    "base_I",
    "base_I_hat",
    "build_sphere_surface",
    "deflated_base",
    "deflation_loop",
    "detect_peaks",
    "group_dominant",
    "imaging_field",
    "merge_re_im",
    "oracle_base",
    "parse_config",
    "parse_config_dict",
    "reconstruct_sources",
    "recover_moment_component",
    "synthesize_point_source_data",
    "synthesize_small_volume_data",
]
