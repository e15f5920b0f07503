"""Reconstruction of 1-D rough interfaces from multi-frequency scattered fields."""

from .estimator import RoughSurfaceReconstructor
from .experiments import (
    ConfigError,
    MeasurementSet,
    ScenarioConfig,
    reconstruction_error,
    run_scenario,
    synthesize_measurements,
)
from .forward import (
    IncidentWave,
    Medium,
    ReceiverArray,
    assemble_impedance,
    incident_field,
    scattered_field,
    solve_forward,
    wavenumber,
)
from .inverse import (
    FrequencySchedule,
    InverseConfig,
    ReconstructionError,
    frechet_matrix,
    multi_frequency_reconstruct,
    newton_step,
    sensitivity_matrix,
)
from .surface import (
    RandomSurfaceParams,
    SampledSurface,
    SplineBasis,
    SurfaceModel,
    generate_gaussian_surface,
    sample_surface,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "FrequencySchedule",
    "IncidentWave",
    "InverseConfig",
    "MeasurementSet",
    "Medium",
    "RandomSurfaceParams",
    "ReceiverArray",
    "ReconstructionError",
    "RoughSurfaceReconstructor",
    "SampledSurface",
    "ScenarioConfig",
    "SplineBasis",
    "SurfaceModel",
    "assemble_impedance",
    "frechet_matrix",
    "generate_gaussian_surface",
    "incident_field",
    "multi_frequency_reconstruct",
    "newton_step",
    "reconstruction_error",
    "run_scenario",
    "sample_surface",
    "scattered_field",
    "sensitivity_matrix",
    "solve_forward",
    "synthesize_measurements",
    "wavenumber",
]
