"""Type-II down-conversion source, truncated in the number of emitted pairs.

The single-pass state is the series ``sum_k chi^k (A†)^k / k! |0>`` with the
singlet pair creator ``A† = a†_sH a†_iV - a†_sV a†_iH``. The double-pass
source emits into beams (2, 3) on the first pass and beams (1, 4) on the
reflected pass.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fock import FockError, FockState, ModeRegistry, Polarization, create, embed, tensor, vacuum

H, V = Polarization.H, Polarization.V

SOURCE_BEAMS = ("1", "2", "3", "4")
# (m, n): m pairs in beams 1 & 4, n pairs in beams 2 & 3.
Sector = tuple[int, int]


@dataclass(frozen=True)
class PdcParams:
    chi: float = 0.1
    max_pairs: int = 2
    chi_23: float | None = None  # second pass; defaults to chi

    def __post_init__(self) -> None:
        if not self.chi >= 0.0:
            raise ValueError("chi must be non-negative")
        if self.chi_23 is not None and not self.chi_23 >= 0.0:
            raise ValueError("chi_23 must be non-negative")
        if not 1 <= self.max_pairs <= 3:
            raise ValueError("max_pairs must be 1, 2 or 3")

    @property
    def chi_14(self) -> float:
        return self.chi

    @property
    def chi_second(self) -> float:
        return self.chi if self.chi_23 is None else self.chi_23


@dataclass(frozen=True)
class SectorWeight:
    m: int
    n: int
    weight: float

    @property
    def sector(self) -> Sector:
        return (self.m, self.n)


def _apply_pair_creator(state: FockState, signal: str, idler: str) -> FockState:
    reg = state.registry
    hv = create(create(state, reg.mode(idler, V)), reg.mode(signal, H))
    vh = create(create(state, reg.mode(idler, H)), reg.mode(signal, V))
    return hv - vh


def pdc_series(signal: str, idler: str, chi: float, max_pairs: int, registry: ModeRegistry | None = None) -> FockState:
    """Unnormalized truncated series up to ``max_pairs`` pairs."""
    if signal == idler:
        raise FockError("signal and idler beams must differ")
    if registry is None:
        registry = ModeRegistry.from_spatial([signal, idler], 2 * max_pairs)
    if registry.max_total_photons < 2 * max_pairs:
        raise FockError(f"photon budget {registry.max_total_photons} too small for {max_pairs} pairs")
    term = vacuum(registry)
    total = term
    for k in range(1, max_pairs + 1):
        term = _apply_pair_creator(term, signal, idler).scaled(chi / k)
        total = total + term
    return total


def pdc_two_mode(signal: str, idler: str, params: PdcParams, registry: ModeRegistry | None = None) -> FockState:
    return pdc_series(signal, idler, params.chi, params.max_pairs, registry).normalized()


def source_registry(max_pairs: int) -> ModeRegistry:
    return ModeRegistry.from_spatial(SOURCE_BEAMS, 2 * max_pairs)


def double_pass_source(params: PdcParams, registry: ModeRegistry | None = None) -> FockState:
    """Product of both passes, cut back to ``max_pairs`` total pairs and renormalized."""
    k = params.max_pairs
    pass_23 = pdc_series("2", "3", params.chi_second, k)
    pass_14 = pdc_series("1", "4", params.chi_14, k)
    joint = tensor(pass_23, pass_14)
    target = source_registry(k) if registry is None else registry
    if target.max_total_photons < 2 * k:
        raise FockError(f"photon budget {target.max_total_photons} too small for {k} pairs")
    for lab in SOURCE_BEAMS:
        if not target.has_spatial(lab):
            raise FockError(f"registry lacks beam {lab}")
    truncated = joint.filter(lambda occ: sum(occ) <= 2 * k)
    return embed(truncated, target).normalized()


def _beam_counts(state: FockState, occ) -> dict[str, int]:
    counts = dict.fromkeys(SOURCE_BEAMS, 0)
    for n, mode in zip(occ, state.registry.modes):
        if mode.spatial in counts:
            counts[mode.spatial] += n
    return counts


def sector_of(state: FockState, occ) -> Sector:
    c = _beam_counts(state, occ)
    total = sum(occ)
    if c["1"] + c["4"] + c["2"] + c["3"] != total:
        raise FockError("photons outside the source beams")
    if (c["1"] + c["4"]) % 2 or (c["2"] + c["3"]) % 2:
        raise FockError("odd photon count in a pass; not a down-conversion state")
    return ((c["1"] + c["4"]) // 2, (c["2"] + c["3"]) // 2)


def sector_decompose(state: FockState) -> list[tuple[SectorWeight, FockState]]:
    """Split a source state by (pairs in beams 1&4, pairs in beams 2&3)."""
    buckets: dict[Sector, dict] = {}
    for occ, amp in state:
        buckets.setdefault(sector_of(state, occ), {})[occ] = amp
    out = []
    for (m, n) in sorted(buckets):
        part = FockState(state.registry, buckets[(m, n)], validate=False)
        out.append((SectorWeight(m, n, part.norm_squared()), part.normalized()))
    return out
