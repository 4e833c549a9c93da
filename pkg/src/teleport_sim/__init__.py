"""Linear-optics simulation of heralded polarization teleportation with a double-pass down-conversion source."""

from .detection import DetectorKind, DetectorModel, DetectorPort, FiringPattern, fidelity, pattern_probability, reduced_density
from .experiment import Scheme, ScenarioConfig, average_fidelity, build_circuit, run_scenario, simulate, survival_ratio
from .fock import BellKind, FockState, Mode, ModeRegistry, Polarization, QubitPolarizationState, basis_state, bell_state, inner_product, qubit_to_fock, tensor
from .optics import ModeUnitary, apply_unitary, bs_50_50, pbs, polarizer, rotator
from .source import PdcParams, double_pass_source, pdc_two_mode, sector_decompose

__version__ = "0.1.0"

__all__ = [
    "BellKind",
    "DetectorKind",
    "DetectorModel",
    "DetectorPort",
    "FiringPattern",
    "FockState",
    "Mode",
    "ModeRegistry",
    "ModeUnitary",
    "PdcParams",
    "Polarization",
    "QubitPolarizationState",
    "ScenarioConfig",
    "Scheme",
    "apply_unitary",
    "average_fidelity",
    "basis_state",
    "bell_state",
    "bs_50_50",
    "build_circuit",
    "double_pass_source",
    "fidelity",
    "inner_product",
    "pattern_probability",
    "pbs",
    "pdc_two_mode",
    "polarizer",
    "qubit_to_fock",
    "reduced_density",
    "rotator",
    "run_scenario",
    "sector_decompose",
    "simulate",
    "survival_ratio",
    "tensor",
]
