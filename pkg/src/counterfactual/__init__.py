"""Simulation and analysis of a post-selected counterfactual communication scheme."""

from .exceptions import (
    CapExceededError, ConfigurationError, InconsistentFamilyError, UsageError,
    WeakValueUndefinedError,
)
from .optics import (
    DETECTOR_ARMS, TOL, CircuitModel, ModeSpace, Polarization, PureState,
    apply_block, apply_pbs, apply_rotator, detect_probabilities, propagate,
)
from .protocol import (
    DetectionDistribution, PostselectionSummary, ProtocolParams, build_circuit,
    postselected_summary, raw_probabilities, raw_probabilities_limit, sweep,
)

__version__ = "0.1.0"
