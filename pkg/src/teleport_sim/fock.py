"""Polarization-resolved bosonic Fock states.

States are sparse maps from occupation vectors to complex amplitudes over a
fixed, ordered :class:`ModeRegistry`. Every spatial beam carries an H and a V
mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

PRUNE_TOL = 1e-15
NORM_TOL = 1e-12
DEFAULT_MAX_PHOTONS = 4

Occupation = tuple[int, ...]


class FockError(ValueError):
    """Invalid occupation, registry or state composition."""


class Polarization(Enum):
    H = "H"
    V = "V"

    @property
    def orthogonal(self) -> "Polarization":
        return Polarization.V if self is Polarization.H else Polarization.H


@dataclass(frozen=True)
class Mode:
    spatial: str
    pol: Polarization

    def __str__(self) -> str:
        return f"{self.spatial}{self.pol.value}"

    # Enum has no ordering; sort by value string.
    def __lt__(self, other: "Mode") -> bool:
        return (self.spatial, self.pol.value) < (other.spatial, other.pol.value)


class ModeRegistry:
    """Ordered, duplicate-free list of modes plus a total photon budget."""

    def __init__(self, modes: Iterable[Mode], max_total_photons: int = DEFAULT_MAX_PHOTONS):
        self.modes: tuple[Mode, ...] = tuple(modes)
        if len(set(self.modes)) != len(self.modes):
            raise FockError("duplicate modes in registry")
        if max_total_photons < 0:
            raise FockError("max_total_photons must be non-negative")
        self.max_total_photons = int(max_total_photons)
        self._index = {m: i for i, m in enumerate(self.modes)}

    @classmethod
    def from_spatial(cls, labels: Iterable[str], max_total_photons: int = DEFAULT_MAX_PHOTONS) -> "ModeRegistry":
        modes = [Mode(str(lab), pol) for lab in labels for pol in Polarization]
        return cls(modes, max_total_photons)

    def __len__(self) -> int:
        return len(self.modes)

    def __contains__(self, mode: object) -> bool:
        return mode in self._index

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModeRegistry):
            return NotImplemented
        return self.modes == other.modes and self.max_total_photons == other.max_total_photons

    def __hash__(self) -> int:
        return hash((self.modes, self.max_total_photons))

    def __repr__(self) -> str:
        labels = ",".join(str(m) for m in self.modes)
        return f"ModeRegistry([{labels}], max_total_photons={self.max_total_photons})"

    def index(self, mode: Mode) -> int:
        try:
            return self._index[mode]
        except KeyError:
            raise FockError(f"mode {mode} not registered") from None

    def mode(self, spatial: str, pol: Polarization) -> Mode:
        m = Mode(str(spatial), pol)
        self.index(m)
        return m

    @property
    def spatial_labels(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for m in self.modes:
            seen.setdefault(m.spatial, None)
        return tuple(seen)

    def has_spatial(self, spatial: str) -> bool:
        return all(Mode(spatial, p) in self._index for p in Polarization)

    def validate(self, occupation: Sequence[int]) -> Occupation:
        occ = tuple(int(n) for n in occupation)
        if len(occ) != len(self.modes):
            raise FockError(f"occupation has length {len(occ)}, registry has {len(self.modes)} modes")
        if any(n < 0 for n in occ):
            raise FockError("negative occupation")
        if sum(occ) > self.max_total_photons:
            raise FockError(f"{sum(occ)} photons exceed budget {self.max_total_photons}")
        return occ

    def occupation(self, counts: Mapping[Mode, int]) -> Occupation:
        occ = [0] * len(self.modes)
        for m, n in counts.items():
            occ[self.index(m)] = n
        return self.validate(occ)

    def with_budget(self, max_total_photons: int) -> "ModeRegistry":
        return ModeRegistry(self.modes, max_total_photons)


class FockState:
    """Immutable sparse superposition of occupation-number basis vectors."""

    __slots__ = ("registry", "_terms")

    def __init__(self, registry: ModeRegistry, terms: Mapping[Occupation, complex] | None = None, *, validate: bool = True):
        self.registry = registry
        clean: dict[Occupation, complex] = {}
        for occ, amp in (terms or {}).items():
            amp = complex(amp)
            if abs(amp) < PRUNE_TOL:
                continue
            if validate:
                occ = registry.validate(occ)
            clean[occ] = clean.get(occ, 0j) + amp
        self._terms = MappingProxyType(clean)

    @property
    def terms(self) -> Mapping[Occupation, complex]:
        return self._terms

    def __iter__(self) -> Iterator[tuple[Occupation, complex]]:
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        parts = []
        for occ, amp in sorted(self._terms.items()):
            ket = " ".join(f"{n}{m}" for n, m in zip(occ, self.registry.modes) if n)
            parts.append(f"({amp.real:+.6g}{amp.imag:+.6g}j)|{ket or 'vac'}>")
        return " + ".join(parts) or "0"

    def amplitude(self, occupation: Sequence[int]) -> complex:
        return self._terms.get(tuple(occupation), 0j)

    def amplitude_of(self, counts: Mapping[Mode, int]) -> complex:
        return self.amplitude(self.registry.occupation(counts))

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self._terms.values()))

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def normalized(self) -> "FockState":
        n = self.norm()
        if n == 0.0:
            raise FockError("cannot normalize the zero vector")
        return self.scaled(1.0 / n)

    def scaled(self, factor: complex) -> "FockState":
        return FockState(self.registry, {o: a * factor for o, a in self._terms.items()}, validate=False)

    def __add__(self, other: "FockState") -> "FockState":
        _require_same_registry(self, other)
        merged = dict(self._terms)
        for occ, amp in other._terms.items():
            merged[occ] = merged.get(occ, 0j) + amp
        return FockState(self.registry, merged, validate=False)

    def __sub__(self, other: "FockState") -> "FockState":
        return self + other.scaled(-1.0)

    def filter(self, predicate) -> "FockState":
        """Keep only terms whose occupation satisfies ``predicate``."""
        return FockState(self.registry, {o: a for o, a in self._terms.items() if predicate(o)}, validate=False)

    def photon_numbers(self) -> set[int]:
        return {sum(o) for o in self._terms}

    def count_in(self, occupation: Occupation, spatial: str) -> int:
        return sum(n for n, m in zip(occupation, self.registry.modes) if m.spatial == spatial)

    def to_vector(self, basis: Sequence[Occupation]) -> np.ndarray:
        return np.array([self.amplitude(b) for b in basis], dtype=complex)


def _require_same_registry(a: FockState, b: FockState) -> None:
    if a.registry.modes != b.registry.modes:
        raise FockError("states live on different registries")


def basis_state(registry: ModeRegistry, occupation: Sequence[int]) -> FockState:
    occ = registry.validate(occupation)
    return FockState(registry, {occ: 1.0}, validate=False)


def vacuum(registry: ModeRegistry) -> FockState:
    return basis_state(registry, (0,) * len(registry))


def create(state: FockState, mode: Mode, coefficient: complex = 1.0) -> FockState:
    """Apply ``coefficient * a†`` on ``mode`` with the sqrt(n+1) factor."""
    i = state.registry.index(mode)
    out: dict[Occupation, complex] = {}
    for occ, amp in state:
        new = list(occ)
        new[i] += 1
        out[tuple(new)] = amp * coefficient * math.sqrt(new[i])
    return FockState(state.registry, out)


def tensor(a: FockState, b: FockState, registry: ModeRegistry | None = None) -> FockState:
    """Product state over the concatenated registry ``a.modes + b.modes``."""
    overlap = set(a.registry.modes) & set(b.registry.modes)
    if overlap:
        raise FockError(f"overlapping modes: {sorted(str(m) for m in overlap)}")
    if registry is None:
        registry = ModeRegistry(a.registry.modes + b.registry.modes, a.registry.max_total_photons + b.registry.max_total_photons)
    elif registry.modes != a.registry.modes + b.registry.modes:
        raise FockError("target registry must be the concatenation of both registries")
    terms = {oa + ob: xa * xb for oa, xa in a for ob, xb in b}
    return FockState(registry, terms)


def embed(state: FockState, registry: ModeRegistry) -> FockState:
    """Re-express ``state`` on a registry holding a superset (any order) of its modes.

    New modes are empty.
    """
    src = state.registry.modes
    positions = [registry.index(m) for m in src]
    width = len(registry)
    terms = {}
    for occ, amp in state:
        new = [0] * width
        for pos, n in zip(positions, occ):
            new[pos] = n
        terms[tuple(new)] = amp
    return FockState(registry, terms)


def inner_product(a: FockState, b: FockState) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    _require_same_registry(a, b)
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for occ, amp in small:
        other = large.amplitude(occ)
        if other:
            total += (amp.conjugate() * other) if small is a else (other.conjugate() * amp)
    return total


def state_fidelity(a: FockState, b: FockState) -> float:
    """Global-phase-insensitive overlap |<a|b>|^2 / (|a|^2 |b|^2)."""
    return abs(inner_product(a, b)) ** 2 / (a.norm_squared() * b.norm_squared())


class BellKind(Enum):
    PSI_MINUS = "PsiMinus"
    PSI_PLUS = "PsiPlus"
    PHI_MINUS = "PhiMinus"
    PHI_PLUS = "PhiPlus"


def bell_state(kind: BellKind | str, spatial_a: str, spatial_b: str, registry: ModeRegistry | None = None) -> FockState:
    """Two-photon Bell state; Psi = (HV +- VH)/sqrt2, Phi = (HH +- VV)/sqrt2."""
    kind = BellKind(kind) if isinstance(kind, str) else kind
    if spatial_a == spatial_b:
        raise FockError("Bell state needs two distinct beams")
    if registry is None:
        registry = ModeRegistry.from_spatial([spatial_a, spatial_b], 2)
    for lab in (spatial_a, spatial_b):
        if not registry.has_spatial(lab):
            raise FockError(f"beam {lab!r} not registered")
    H, V = Polarization.H, Polarization.V
    if kind in (BellKind.PSI_MINUS, BellKind.PSI_PLUS):
        pairs = ((H, V), (V, H))
    else:
        pairs = ((H, H), (V, V))
    sign = -1.0 if kind in (BellKind.PSI_MINUS, BellKind.PHI_MINUS) else 1.0
    s = 1 / math.sqrt(2)
    terms = {}
    for (pa, pb), c in zip(pairs, (s, sign * s)):
        occ = registry.occupation({Mode(spatial_a, pa): 1, Mode(spatial_b, pb): 1})
        terms[occ] = c
    return FockState(registry, terms, validate=False)


@dataclass(frozen=True)
class QubitPolarizationState:
    """cos(theta)|H> + exp(i phi) sin(theta)|V>."""

    theta: float
    phi: float = 0.0

    @property
    def vector(self) -> np.ndarray:
        return np.array([math.cos(self.theta), np.exp(1j * self.phi) * math.sin(self.theta)], dtype=complex)

    @classmethod
    def from_vector(cls, vec: Sequence[complex]) -> "QubitPolarizationState":
        """Nearest (theta, phi) for a 2-vector, ignoring global phase."""
        v = np.asarray(vec, dtype=complex)
        v = v / np.linalg.norm(v)
        theta = math.acos(min(1.0, abs(v[0])))
        if abs(v[1]) < PRUNE_TOL:
            return cls(theta, 0.0)
        ref = np.angle(v[0]) if abs(v[0]) >= PRUNE_TOL else 0.0
        return cls(theta, float(np.angle(v[1]) - ref))


def qubit_to_fock(q: QubitPolarizationState, spatial: str, registry: ModeRegistry | None = None) -> FockState:
    if registry is None:
        registry = ModeRegistry.from_spatial([spatial], 1)
    if not registry.has_spatial(spatial):
        raise FockError(f"beam {spatial!r} not registered")
    vec = q.vector
    terms = {}
    for pol, amp in zip(Polarization, vec):
        terms[registry.occupation({Mode(spatial, pol): 1})] = amp
    return FockState(registry, terms, validate=False)
