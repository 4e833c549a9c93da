"""Circuit wiring for the teleportation schemes and end-to-end scenario runs.

Schemes
-------
``modified``
    Rotators on beams 1 and 4, a PBS on beam 4 feeding D3 (transmitted line)
    and D4 (reflected line), a 50:50 BS on beams 1 and 2, an H polarizer in
    front of D1 and a V polarizer in front of D2. Coincidence: D1 and D2
    fired, exactly one of D3 and D4 fired. Output: beam 3.
``innsbruck``
    Beam 1 is prepared by a polarizer sandwiched between a rotator and its
    inverse; bare threshold trigger on beam 4; no polarizers at D1/D2.
``pnr-trigger``
    As ``innsbruck`` with a number-resolving trigger that must see exactly
    one photon.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .detection import (
    DetectorKind,
    DetectorModel,
    DetectorPort,
    FidelityRecord,
    FiringPattern,
    MeasurementOutcome,
    fidelity,
    pattern_probability,
)
from .fock import FockState, Mode, ModeRegistry, Polarization, QubitPolarizationState
from .optics import (
    BS_HADAMARD,
    PBS_TRANSMIT_H,
    PBS_TRANSMIT_V,
    ModeUnitary,
    apply_elements,
    bs_50_50,
    loss,
    pbs,
    polarizer,
    rotator,
    rotator_matrix,
)
from .source import PdcParams, Sector, SectorWeight, double_pass_source, sector_decompose

H, V = Polarization.H, Polarization.V

CLASSICAL_FIDELITY_THRESHOLD = 0.75
GOOD_SECTOR: Sector = (1, 1)

# Pauli eigenstates as rotations of |H>: H, V, D, A, R, L.
SIX_STATES: tuple[tuple[float, float], ...] = (
    (0.0, 0.0),
    (math.pi / 2, 0.0),
    (math.pi / 4, 0.0),
    (math.pi / 4, math.pi),
    (math.pi / 4, math.pi / 2),
    (math.pi / 4, -math.pi / 2),
)


class ExperimentError(ValueError):
    pass


class Scheme(Enum):
    MODIFIED = "modified"
    INNSBRUCK = "innsbruck"
    PNR_TRIGGER = "pnr-trigger"


@dataclass(frozen=True)
class ScenarioConfig:
    scheme: Scheme = Scheme.MODIFIED
    params: PdcParams = field(default_factory=PdcParams)
    rot1: tuple[float, float] = (0.0, 0.0)
    rot4: tuple[float, float] = (0.0, 0.0)
    efficiency: float = 1.0
    averaging: str = "six-state"
    samples: int = 100
    seed: int = 0
    pbs_convention: str = PBS_TRANSMIT_H
    bs_convention: str = BS_HADAMARD

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "rot1", tuple(float(x) for x in self.rot1))
        object.__setattr__(self, "rot4", tuple(float(x) for x in self.rot4))
        if not 0.0 < self.efficiency <= 1.0:
            raise ExperimentError("efficiency must lie in (0, 1]")
        if self.averaging not in ("six-state", "monte-carlo"):
            raise ExperimentError(f"unknown averaging mode {self.averaging!r}")
        if self.averaging == "monte-carlo" and self.samples < 1:
            raise ExperimentError("monte-carlo averaging needs at least one sample")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scheme"] = self.scheme.value
        d["rot1"] = list(self.rot1)
        d["rot4"] = list(self.rot4)
        return d


@dataclass(frozen=True)
class Circuit:
    registry: ModeRegistry
    elements: tuple[ModeUnitary, ...]
    ports: tuple[DetectorPort, ...]
    pattern: FiringPattern
    output_modes: tuple[Mode, ...]
    sinks: tuple[str, ...]
    targets: dict[str, QubitPolarizationState]


def heralded_input(rot1: Sequence[float], rot4: Sequence[float], herald_pol: Polarization) -> QubitPolarizationState:
    """Beam-1 polarization left by a singlet pair when beam 4, after ``rot4``, is found in ``herald_pol``."""
    r4 = rotator_matrix(*rot4)
    row = r4[0 if herald_pol is H else 1, :]
    # <w|_4 (H1 V4 - V1 H4) with w* = row of rot4.
    beam1 = np.array([row[1], -row[0]], dtype=complex)
    return QubitPolarizationState.from_vector(rotator_matrix(*rot1) @ beam1)


def _loss_stage(ports: Sequence[DetectorPort], efficiency: float) -> tuple[list[ModeUnitary], list[str]]:
    if efficiency >= 1.0:
        return [], []
    elements, sinks = [], []
    for port in ports:
        sink = f"loss_{port.name}"
        elements.append(loss(port.spatial, efficiency, sink))
        sinks.append(sink)
    return elements, sinks


def _check_sinks(elements: Sequence[ModeUnitary], sinks: Sequence[str]) -> None:
    for sink in sinks:
        users = [u.label for u in elements if sink in u.spatial_labels]
        if len(users) != 1:
            raise ExperimentError(f"sink {sink!r} is used by {len(users)} elements")


def build_circuit(config: ScenarioConfig) -> Circuit:
    k = config.params.max_pairs
    det = DetectorModel(DetectorKind.THRESHOLD, config.efficiency)
    if config.scheme is Scheme.MODIFIED:
        ports = [
            DetectorPort("D1", "1", model=det),
            DetectorPort("D2", "2", model=det),
            DetectorPort("D3", "4", model=det),
            DetectorPort("D4", "4r", model=det),
        ]
        elements = [
            rotator("1", *config.rot1),
            rotator("4", *config.rot4),
            pbs("4", "4r", config.pbs_convention),
            bs_50_50("1", "2", config.bs_convention),
            polarizer("1", H, "s1"),
            polarizer("2", V, "s2"),
        ]
        sinks = ["s1", "s2"]
        pattern = FiringPattern(fired={"D1", "D2"}, exactly_one_of=(("D3", "D4"),))
        on_d3 = H if config.pbs_convention == PBS_TRANSMIT_H else V
        targets = {
            "D3": heralded_input(config.rot1, config.rot4, on_d3),
            "D4": heralded_input(config.rot1, config.rot4, on_d3.orthogonal),
        }
        spatial = ["1", "2", "3", "4", "4r"]
    else:
        pnr = config.scheme is Scheme.PNR_TRIGGER
        trig_model = DetectorModel(DetectorKind.NUMBER_RESOLVING if pnr else DetectorKind.THRESHOLD, config.efficiency)
        ports = [
            DetectorPort("D1", "1", model=det),
            DetectorPort("D2", "2", model=det),
            DetectorPort("Dtrig", "4", model=trig_model),
        ]
        theta, phi = config.rot1
        elements = [
            rotator("1", -theta, phi),
            polarizer("1", H, "p1"),
            rotator("1", theta, phi),
            bs_50_50("1", "2", config.bs_convention),
        ]
        sinks = ["p1"]
        if pnr:
            pattern = FiringPattern(fired={"D1", "D2"}, counts=(("Dtrig", 1),))
        else:
            pattern = FiringPattern(fired={"D1", "D2", "Dtrig"})
        targets = {"all": QubitPolarizationState(theta, phi)}
        spatial = ["1", "2", "3", "4"]

    loss_elements, loss_sinks = _loss_stage(ports, config.efficiency)
    elements += loss_elements
    sinks += loss_sinks
    _check_sinks(elements, sinks)
    registry = ModeRegistry.from_spatial(spatial + sinks, 2 * k)
    for u in elements:
        for m in u.modes:
            registry.index(m)
    return Circuit(
        registry=registry,
        elements=tuple(elements),
        ports=tuple(ports),
        pattern=pattern,
        output_modes=(Mode("3", H), Mode("3", V)),
        sinks=tuple(sinks),
        targets=targets,
    )


@dataclass(frozen=True)
class BranchResult:
    branch: str
    probability: float
    target: QubitPolarizationState
    fidelity: FidelityRecord | None
    outcome: MeasurementOutcome


@dataclass(frozen=True)
class SingleRun:
    """Result of one scenario at a single input setting."""

    config: ScenarioConfig
    sector_weights: tuple[SectorWeight, ...]
    sector_outcomes: dict[Sector, tuple[MeasurementOutcome, ...]]
    branches: tuple[BranchResult, ...]

    @property
    def total_probability(self) -> float:
        return sum(b.probability for b in self.branches)

    def sector_probability(self, sector: Sector, branch: str | None = None) -> float:
        outs = self.sector_outcomes.get(sector, ())
        return sum(o.probability for o in outs if branch is None or o.branch == branch)

    def sector_peak(self, sector: Sector) -> float:
        return max((o.max_amplitude for o in self.sector_outcomes.get(sector, ())), default=0.0)

    @property
    def conditional_fidelity(self) -> float:
        total = self.total_probability
        if total <= 0:
            raise ExperimentError("no coincidences: conditional fidelity undefined")
        return sum(b.probability * b.fidelity.raw for b in self.branches if b.fidelity) / total


def measure(circuit: Circuit, state: FockState) -> list[MeasurementOutcome]:
    final = apply_elements(state, circuit.elements)
    return pattern_probability(final, circuit.pattern, circuit.ports, circuit.output_modes, circuit.sinks)


def simulate(config: ScenarioConfig) -> SingleRun:
    circuit = build_circuit(config)
    source = double_pass_source(config.params, circuit.registry)
    weights, per_sector = [], {}
    for w, sector_state in sector_decompose(source):
        weights.append(w)
        per_sector[w.sector] = tuple(measure(circuit, sector_state))
    branches = []
    for outcome in measure(circuit, source):
        target = circuit.targets[outcome.branch]
        fid = fidelity(outcome.conditional_state, target) if outcome.conditional_state is not None else None
        branches.append(BranchResult(outcome.branch, outcome.probability, target, fid, outcome))
    return SingleRun(config, tuple(weights), per_sector, tuple(branches))


def input_set(config: ScenarioConfig) -> list[tuple[float, float]]:
    if config.averaging == "six-state":
        return list(SIX_STATES)
    rng = np.random.default_rng(config.seed)
    u = rng.random(config.samples)
    phi = 2 * math.pi * rng.random(config.samples)
    return [(float(math.acos(math.sqrt(a))), float(b)) for a, b in zip(u, phi)]


def average_fidelity(config: ScenarioConfig, inputs: Sequence[tuple[float, float]] | None = None) -> float:
    """Branch-probability-weighted conditional fidelity, averaged over input rotations of beam 1."""
    inputs = input_set(config) if inputs is None else list(inputs)
    if not inputs:
        raise ExperimentError("empty input set")
    return float(np.mean([simulate(replace(config, rot1=tuple(r))).conditional_fidelity for r in inputs]))


def survival_ratio(config: ScenarioConfig) -> float:
    """Good-sector coincidence rate of the modified scheme relative to the Innsbruck baseline.

    Each modified-scheme branch is compared with an Innsbruck run whose
    polarizer prepares the same input state that branch heralds; the result
    is the mean over branches.
    """
    if config.params.max_pairs < 2:
        raise ExperimentError("the (1,1) sector needs max_pairs >= 2")
    mod = simulate(replace(config, scheme=Scheme.MODIFIED))
    ratios = []
    for b in mod.branches:
        t = b.target
        inn = simulate(replace(config, scheme=Scheme.INNSBRUCK, rot1=(t.theta, t.phi)))
        denom = inn.sector_probability(GOOD_SECTOR)
        if denom <= 0:
            raise ExperimentError("baseline has zero good-sector coincidence probability")
        ratios.append(mod.sector_probability(GOOD_SECTOR, b.branch) / denom)
    return float(np.mean(ratios))


@dataclass(frozen=True)
class ScenarioReport:
    config: ScenarioConfig
    run: SingleRun
    average_fidelity: float | None
    survival_ratio: float | None
    threshold_reference: float = CLASSICAL_FIDELITY_THRESHOLD

    @property
    def sector_weights(self) -> dict[Sector, float]:
        return {w.sector: w.weight for w in self.run.sector_weights}

    @property
    def sector_probabilities(self) -> dict[Sector, dict[str, float]]:
        return {s: {o.branch: o.probability for o in outs} for s, outs in self.run.sector_outcomes.items()}

    def weighted_sector_total(self) -> float:
        w = self.sector_weights
        return sum(w[s] * p for s, probs in self.sector_probabilities.items() for p in probs.values())


def run_scenario(config: ScenarioConfig) -> ScenarioReport:
    run = simulate(config)
    try:
        avg = average_fidelity(config)
    except ExperimentError:
        avg = None  # some input never produces a coincidence
    surv = survival_ratio(config) if config.params.max_pairs >= 2 else None
    return ScenarioReport(config, run, avg, surv)


def swap_pbs_convention(config: ScenarioConfig) -> ScenarioConfig:
    other = PBS_TRANSMIT_V if config.pbs_convention == PBS_TRANSMIT_H else PBS_TRANSMIT_H
    return replace(config, pbs_convention=other)
