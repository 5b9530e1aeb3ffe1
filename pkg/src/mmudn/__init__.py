"""Spectral efficiency, blockage and spectrum allocation for mmW-overlaid ultra-dense networks."""

__version__ = "0.1.0"

from .allocator import (  # noqa: E402
    AllocationResult,
    SpectralEfficiencies,
    SpectrumConfig,
    UplinkAllocator,
    optimize_closed_form,
    optimize_numeric,
)
from .blockage import BuildingStats, LosDistanceEstimator, LosModel  # noqa: E402
from .channel import ChannelConfig, Link  # noqa: E402
from .config import NetworkConfig  # noqa: E402
from .geometry import DensityConfig, Deployment, Window  # noqa: E402
from .montecarlo import ExperimentPlan, SeEstimate, SpectralEfficiencyModel, estimate_se  # noqa: E402

__all__ = [
    "AllocationResult",
    "BuildingStats",
    "ChannelConfig",
    "DensityConfig",
    "Deployment",
    "ExperimentPlan",
    "Link",
    "LosDistanceEstimator",
    "LosModel",
    "NetworkConfig",
    "SeEstimate",
    "SpectralEfficiencies",
    "SpectralEfficiencyModel",
    "SpectrumConfig",
    "UplinkAllocator",
    "Window",
    "estimate_se",
    "optimize_closed_form",
    "optimize_numeric",
]
