"""Detector models, firing-pattern post-selection and conditional output states."""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .fock import FockState, Mode, Occupation, Polarization, QubitPolarizationState

TRACE_TOL = 1e-10


class DetectionError(ValueError):
    pass


class DetectorKind(Enum):
    THRESHOLD = "threshold"
    NUMBER_RESOLVING = "number_resolving"


@dataclass(frozen=True)
class DetectorModel:
    kind: DetectorKind = DetectorKind.THRESHOLD
    efficiency: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.efficiency <= 1.0:
            raise DetectionError("efficiency must lie in (0, 1]")


@dataclass(frozen=True)
class DetectorPort:
    name: str
    spatial: str
    pols: tuple[Polarization, ...] = (Polarization.H, Polarization.V)
    model: DetectorModel = field(default_factory=DetectorModel)

    @property
    def modes(self) -> tuple[Mode, ...]:
        return tuple(Mode(self.spatial, p) for p in self.pols)


@dataclass(frozen=True)
class FiringPattern:
    """Post-selection predicate over named detector ports.

    ``counts`` requires an exact photon number and is only meaningful for
    number-resolving ports. Each ``exactly_one_of`` group yields one branch
    per member.
    """

    fired: frozenset[str] = frozenset()
    silent: frozenset[str] = frozenset()
    exactly_one_of: tuple[tuple[str, ...], ...] = ()
    counts: tuple[tuple[str, int], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "fired", frozenset(self.fired))
        object.__setattr__(self, "silent", frozenset(self.silent))
        object.__setattr__(self, "exactly_one_of", tuple(tuple(g) for g in self.exactly_one_of))
        object.__setattr__(self, "counts", tuple(sorted(dict(self.counts).items())))
        if self.fired & self.silent:
            raise DetectionError("a port cannot be both fired and silent")
        grouped = [p for g in self.exactly_one_of for p in g]
        if len(set(grouped)) != len(grouped) or set(grouped) & (self.fired | self.silent):
            raise DetectionError("exactly-one-of groups must be disjoint from each other and from fired/silent")
        if any(len(g) < 1 for g in self.exactly_one_of):
            raise DetectionError("empty exactly-one-of group")

    @property
    def ports(self) -> frozenset[str]:
        return self.fired | self.silent | {p for g in self.exactly_one_of for p in g} | {n for n, _ in self.counts}

    def branches(self) -> list[tuple[str, frozenset[str], frozenset[str]]]:
        """(label, ports that must fire, ports that must stay silent) per branch."""
        if not self.exactly_one_of:
            return [("all", self.fired, self.silent)]
        out = []
        for choice in itertools.product(*self.exactly_one_of):
            fired = set(self.fired) | set(choice)
            silent = set(self.silent)
            for group, pick in zip(self.exactly_one_of, choice):
                silent |= set(group) - {pick}
            out.append(("+".join(choice), frozenset(fired), frozenset(silent)))
        return out


@dataclass(frozen=True, eq=False)
class DensityOperator:
    modes: tuple[Mode, ...]
    basis: tuple[Occupation, ...]
    matrix: np.ndarray

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def normalized(self) -> "DensityOperator":
        tr = self.trace()
        if tr <= 0:
            raise DetectionError("cannot normalize a zero density operator")
        return DensityOperator(self.modes, self.basis, self.matrix / tr)

    def photon_weights(self) -> dict[int, float]:
        weights: dict[int, float] = defaultdict(float)
        for occ, d in zip(self.basis, np.real(np.diag(self.matrix))):
            weights[sum(occ)] += float(d)
        return dict(weights)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True)
class MeasurementOutcome:
    branch: str
    probability: float
    conditional_state: DensityOperator | None
    max_amplitude: float = 0.0  # largest |amplitude| among accepted terms


@dataclass(frozen=True)
class FidelityRecord:
    raw: float
    single_photon_weight: float
    vacuum_weight: float
    multi_weight: float
    single_photon_conditioned: float | None = None


def output_basis(modes: Sequence[Mode], max_photons: int) -> tuple[Occupation, ...]:
    """All occupations of ``modes`` with at most ``max_photons`` in total, by photon number."""
    basis = []
    for total in range(max_photons + 1):
        for combo in itertools.combinations_with_replacement(range(len(modes)), total):
            occ = [0] * len(modes)
            for k in combo:
                occ[k] += 1
            basis.append(tuple(occ))
    return tuple(sorted(set(basis), key=lambda o: (sum(o), tuple(-x for x in o))))


def _density_from_groups(groups: Mapping[tuple, Mapping[Occupation, complex]], modes, basis) -> DensityOperator:
    index = {b: i for i, b in enumerate(basis)}
    rho = np.zeros((len(basis), len(basis)), dtype=complex)
    for outs in groups.values():
        vec = np.zeros(len(basis), dtype=complex)
        for occ, amp in outs.items():
            vec[index[occ]] += amp
        rho += np.outer(vec, vec.conj())
    return DensityOperator(tuple(modes), basis, rho)


def reduced_density(state: FockState, modes: Sequence[Mode]) -> DensityOperator:
    """Partial trace onto ``modes``; the trace equals the squared norm of ``state``."""
    reg = state.registry
    keep = [reg.index(m) for m in modes]
    keep_set = set(keep)
    rest = [i for i in range(len(reg)) if i not in keep_set]
    groups: dict[tuple, dict[Occupation, complex]] = defaultdict(dict)
    for occ, amp in state:
        groups[tuple(occ[i] for i in rest)][tuple(occ[i] for i in keep)] = amp
    return _density_from_groups(groups, modes, output_basis(modes, reg.max_total_photons))


def _port_assignment(state: FockState, ports: Sequence[DetectorPort], output_modes: Sequence[Mode], sinks: Iterable[str]):
    reg = state.registry
    role: dict[int, object] = {}
    for k, port in enumerate(ports):
        for m in port.modes:
            i = reg.index(m)
            if i in role:
                raise DetectionError(f"mode {m} assigned twice")
            role[i] = k
    for m in output_modes:
        i = reg.index(m)
        if i in role:
            raise DetectionError(f"output mode {m} is also a detector mode")
        role[i] = "out"
    sinks = set(sinks)
    for i, m in enumerate(reg.modes):
        if i in role:
            continue
        if m.spatial in sinks:
            role[i] = "sink"
        else:
            raise DetectionError(f"mode {m} is neither detected, output, nor a sink")
    return role


def _check_pattern(pattern: FiringPattern, ports: Sequence[DetectorPort]) -> dict[str, int]:
    names = {p.name: k for k, p in enumerate(ports)}
    if len(names) != len(ports):
        raise DetectionError("duplicate port names")
    unknown = pattern.ports - set(names)
    if unknown:
        raise DetectionError(f"pattern references unknown ports {sorted(unknown)}")
    for name, _ in pattern.counts:
        if ports[names[name]].model.kind is not DetectorKind.NUMBER_RESOLVING:
            raise DetectionError(f"exact count requested from threshold detector {name}")
    return names


def pattern_probability(
    state: FockState,
    pattern: FiringPattern,
    ports: Sequence[DetectorPort],
    output_modes: Sequence[Mode],
    sinks: Iterable[str] = (),
) -> list[MeasurementOutcome]:
    """Probability and conditional output state for every branch of ``pattern``.

    Detector efficiency is not applied here: lossy detectors are modelled by
    loss elements placed in the circuit ahead of the port.
    """
    names = _check_pattern(pattern, ports)
    role = _port_assignment(state, ports, output_modes, sinks)
    reg = state.registry
    out_idx = [reg.index(m) for m in output_modes]
    env_idx = [i for i in range(len(reg)) if role[i] != "out"]
    port_of = [role[i] if isinstance(role[i], int) else -1 for i in range(len(reg))]
    exact = {names[n]: c for n, c in pattern.counts}
    branch_rules = [(label, [names[p] for p in fired], [names[p] for p in silent]) for label, fired, silent in pattern.branches()]

    groups = [defaultdict(dict) for _ in branch_rules]
    peak = [0.0] * len(branch_rules)
    for occ, amp in state:
        counts = [0] * len(ports)
        for i, n in enumerate(occ):
            if n and port_of[i] >= 0:
                counts[port_of[i]] += n
        if any(counts[k] != c for k, c in exact.items()):
            continue
        for b, (_, fired, silent) in enumerate(branch_rules):
            if all(counts[k] >= 1 for k in fired) and all(counts[k] == 0 for k in silent):
                env = tuple(occ[i] for i in env_idx)
                groups[b][env][tuple(occ[i] for i in out_idx)] = amp
                peak[b] = max(peak[b], abs(amp))

    basis = output_basis(output_modes, reg.max_total_photons)
    outcomes = []
    for b, (label, _, _) in enumerate(branch_rules):
        rho = _density_from_groups(groups[b], output_modes, basis)
        prob = rho.trace()
        cond = rho.normalized() if prob > 0 else None
        outcomes.append(MeasurementOutcome(label, prob, cond, peak[b]))
    return outcomes


def firing_distribution(state: FockState, ports: Sequence[DetectorPort]) -> dict[frozenset[str], float]:
    """Threshold firing statistics: probability of each set of fired ports."""
    reg = state.registry
    owner = {reg.index(m): p.name for p in ports for m in p.modes}
    dist: dict[frozenset[str], float] = defaultdict(float)
    for occ, amp in state:
        fired = frozenset(owner[i] for i, n in enumerate(occ) if n and i in owner)
        dist[fired] += abs(amp) ** 2
    return dict(dist)


def _polarization_indices(rho: DensityOperator) -> tuple[int, int]:
    if len(rho.modes) != 2 or {m.pol for m in rho.modes} != set(Polarization) or rho.modes[0].spatial != rho.modes[1].spatial:
        raise DetectionError("fidelity needs the H and V modes of a single beam")
    h = [m.pol for m in rho.modes].index(Polarization.H)
    one_h = tuple(1 if k == h else 0 for k in range(2))
    one_v = tuple(0 if k == h else 1 for k in range(2))
    return rho.basis.index(one_h), rho.basis.index(one_v)


def fidelity(rho: DensityOperator, target: QubitPolarizationState) -> FidelityRecord:
    """Overlap with a single-photon target; vacuum and multi-photon mass count as failure."""
    if abs(rho.trace() - 1.0) > TRACE_TOL:
        raise DetectionError(f"density operator trace {rho.trace():.12g} is not 1")
    ih, iv = _polarization_indices(rho)
    vec = np.zeros(len(rho.basis), dtype=complex)
    vec[ih], vec[iv] = target.vector
    raw = float(np.real(vec.conj() @ rho.matrix @ vec))
    w = rho.photon_weights()
    single = w.get(1, 0.0)
    vac = w.get(0, 0.0)
    multi = float(sum(v for n, v in w.items() if n >= 2))
    return FidelityRecord(raw, single, vac, multi, raw / single if single > 0 else None)
