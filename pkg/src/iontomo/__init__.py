"""Noise-aware single-qubit tomography and calibrated gate synthesis for trapped-ion simulators."""

from .errors import EstimationFailure, InvalidArgument, SynthesisFailure
from .noise import CrossTalkModel, LinearGateModel, QtGateParams, ReadoutErrors
from .qmath import RotationParams, fidelity, u_rotation, unitary_to_rotation
from .sim import EXACT, Circuit, NoiseContext, TomographyDataset

__version__ = "0.1.0"

__all__ = [
    "EXACT",
    "Circuit",
    "CrossTalkModel",
    "EstimationFailure",
    "InvalidArgument",
    "LinearGateModel",
    "NoiseContext",
    "QtGateParams",
    "ReadoutErrors",
    "RotationParams",
    "SynthesisFailure",
    "TomographyDataset",
    "fidelity",
    "u_rotation",
    "unitary_to_rotation",
]
