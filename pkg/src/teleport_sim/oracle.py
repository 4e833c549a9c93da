"""Dense reference engine used to cross-check the sparse simulator.

This module shares only the circuit wiring with the rest of the package.
States are full amplitude vectors over every occupation with at most N
photons. Basis order is ascending lexicographic order of the occupation
tuples (registry mode order). Optical elements act through the exponential
of their quadratic generator ``sum_jk K_jk a†_j a_k`` with ``U = exp(iK)``.
Detection is exhaustive enumeration over that basis.

Matrix logarithm branch: eigenphases are taken in (-pi, pi]. An eigenvalue
at -1 may land on either end of the interval, and both give the same
exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply
from scipy.stats import unitary_group

from .detection import DetectionError, DetectorKind, DetectorPort, FiringPattern
from .fock import FockState, Mode, ModeRegistry, Polarization, QubitPolarizationState
from .optics import ModeUnitary

MAX_ORACLE_PAIRS = 2
MAX_ORACLE_MODES = 24


def _occupations(modes: int, budget: int):
    if modes == 0:
        yield ()
        return
    for k in range(budget + 1):
        for rest in _occupations(modes - 1, budget - k):
            yield (k,) + rest


class DenseBasis:
    def __init__(self, registry: ModeRegistry):
        if len(registry) > MAX_ORACLE_MODES:
            raise ValueError(f"oracle limited to {MAX_ORACLE_MODES} modes")
        self.registry = registry
        self.states = list(_occupations(len(registry), registry.max_total_photons))
        self.occ = np.array(self.states, dtype=int).reshape(len(self.states), len(registry))
        self.lookup = {s: i for i, s in enumerate(self.states)}
        expected = math.comb(len(registry) + registry.max_total_photons, registry.max_total_photons)
        assert len(self.states) == expected
        self._creators: dict[int, sp.csr_matrix] = {}
        self._annihilators: dict[int, sp.csr_matrix] = {}

    @property
    def dim(self) -> int:
        return len(self.states)

    def creator(self, k: int) -> sp.csr_matrix:
        """Matrix of a†_k on the truncated space; overflow beyond the budget is dropped."""
        if k not in self._creators:
            rows, cols, vals = [], [], []
            for i, s in enumerate(self.states):
                t = list(s)
                t[k] += 1
                j = self.lookup.get(tuple(t))
                if j is not None:
                    rows.append(j)
                    cols.append(i)
                    vals.append(math.sqrt(t[k]))
            self._creators[k] = sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim), dtype=complex)
        return self._creators[k]

    def annihilator(self, k: int) -> sp.csr_matrix:
        if k not in self._annihilators:
            self._annihilators[k] = self.creator(k).conj().T.tocsr()
        return self._annihilators[k]


@dataclass
class DenseState:
    basis: DenseBasis
    vector: np.ndarray

    @classmethod
    def from_fock(cls, state: FockState, basis: DenseBasis | None = None) -> "DenseState":
        basis = basis or DenseBasis(state.registry)
        vec = np.zeros(basis.dim, dtype=complex)
        for occ, amp in state:
            vec[basis.lookup[occ]] = amp
        return cls(basis, vec)

    def to_fock(self) -> FockState:
        terms = {self.basis.states[i]: a for i, a in enumerate(self.vector) if a != 0}
        return FockState(self.basis.registry, terms, validate=False)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def amplitude(self, occ) -> complex:
        return complex(self.vector[self.basis.lookup[tuple(occ)]])


def hermitian_log(u: np.ndarray) -> np.ndarray:
    """K with exp(iK) = u, eigenphases in (-pi, pi]."""
    t, z = scipy.linalg.schur(np.asarray(u, dtype=complex), output="complex")
    phases = np.angle(np.diag(t))
    return (z * phases) @ z.conj().T


def generator(basis: DenseBasis, u: ModeUnitary) -> sp.csr_matrix:
    k_mat = hermitian_log(u.matrix)
    idx = [basis.registry.index(m) for m in u.modes]
    g = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for a, j in enumerate(idx):
        for b, k in enumerate(idx):
            if abs(k_mat[a, b]) > 1e-15:
                g = g + k_mat[a, b] * (basis.creator(j) @ basis.annihilator(k))
    return g


def dense_apply(state: DenseState, u: ModeUnitary) -> DenseState:
    g = generator(state.basis, u)
    return DenseState(state.basis, expm_multiply(1j * g, state.vector))


def many_body_matrix(basis: DenseBasis, u: ModeUnitary) -> np.ndarray:
    return scipy.linalg.expm(1j * generator(basis, u).toarray())


def dense_source(basis: DenseBasis, chi_14: float, chi_23: float) -> DenseState:
    """exp(chi_14 A†_14 + chi_23 A†_23)|0> on the truncated space, normalized."""
    reg = basis.registry

    def a_dag(spatial, pol):
        return basis.creator(reg.index(Mode(spatial, pol)))

    H, V = Polarization.H, Polarization.V

    def pair(s, i):
        return a_dag(s, H) @ a_dag(i, V) - a_dag(s, V) @ a_dag(i, H)

    gen = chi_14 * pair("1", "4") + chi_23 * pair("2", "3")
    vac = np.zeros(basis.dim, dtype=complex)
    vac[basis.lookup[(0,) * len(reg)]] = 1.0
    vec = expm_multiply(gen, vac)
    return DenseState(basis, vec / np.linalg.norm(vec))


def dense_sectors(state: DenseState) -> dict[tuple[int, int], tuple[float, DenseState]]:
    reg = state.basis.registry
    cols = {lab: [i for i, m in enumerate(reg.modes) if m.spatial == lab] for lab in ("1", "2", "3", "4")}
    n = {lab: state.basis.occ[:, c].sum(axis=1) for lab, c in cols.items()}
    m_pairs = (n["1"] + n["4"]) // 2
    n_pairs = (n["2"] + n["3"]) // 2
    out = {}
    present = np.abs(state.vector) > 0
    for m, k in sorted(set(zip(m_pairs[present].tolist(), n_pairs[present].tolist()))):
        mask = (m_pairs == m) & (n_pairs == k)
        vec = np.where(mask, state.vector, 0)
        w = float(np.vdot(vec, vec).real)
        out[(m, k)] = (w, DenseState(state.basis, vec / math.sqrt(w)))
    return out


@dataclass
class DenseOutcome:
    branch: str
    probability: float
    rho: np.ndarray | None  # over ``out_states``
    out_states: list[tuple[int, ...]]


def oracle_pattern_probability(
    state: DenseState,
    pattern: FiringPattern,
    ports: Sequence[DetectorPort],
    output_modes: Sequence[Mode],
    sinks: Sequence[str] = (),
) -> list[DenseOutcome]:
    reg = state.basis.registry
    occ = state.basis.occ
    names = [p.name for p in ports]
    unknown = pattern.ports - set(names)
    if unknown:
        raise DetectionError(f"unknown ports {sorted(unknown)}")
    covered = {m for p in ports for m in p.modes} | set(output_modes)
    for m in reg.modes:
        if m not in covered and m.spatial not in set(sinks):
            raise DetectionError(f"unassigned mode {m}")
    counts = {p.name: occ[:, [reg.index(m) for m in p.modes]].sum(axis=1) for p in ports}
    for name, _ in pattern.counts:
        if ports[names.index(name)].model.kind is not DetectorKind.NUMBER_RESOLVING:
            raise DetectionError("exact count on a threshold detector")

    out_cols = [reg.index(m) for m in output_modes]
    env_cols = [i for i in range(len(reg)) if i not in out_cols]
    out_keys = [tuple(r) for r in occ[:, out_cols]]
    env_keys = [tuple(r) for r in occ[:, env_cols]]
    out_states = sorted(set(out_keys))
    out_pos = {o: i for i, o in enumerate(out_states)}

    base = np.ones(state.basis.dim, dtype=bool)
    for name, c in pattern.counts:
        base &= counts[name] == c
    results = []
    for label, fired, silent in pattern.branches():
        mask = base.copy()
        for name in fired:
            mask &= counts[name] > 0
        for name in silent:
            mask &= counts[name] == 0
        rows = np.flatnonzero(mask & (state.vector != 0))
        env_ids: dict[tuple, int] = {}
        for i in rows:
            env_ids.setdefault(env_keys[i], len(env_ids))
        mat = np.zeros((len(env_ids), len(out_states)), dtype=complex)
        for i in rows:
            mat[env_ids[env_keys[i]], out_pos[out_keys[i]]] = state.vector[i]
        rho = mat.T @ mat.conj()
        p = float(np.trace(rho).real)
        results.append(DenseOutcome(label, p, rho / p if p > 0 else None, out_states))
    return results


def oracle_fidelity(outcome: DenseOutcome, output_modes: Sequence[Mode], target: QubitPolarizationState) -> float:
    pols = [m.pol for m in output_modes]
    vec = np.zeros(len(outcome.out_states), dtype=complex)
    for amp, pol in zip(target.vector, (Polarization.H, Polarization.V)):
        occ = tuple(1 if p is pol else 0 for p in pols)
        vec[outcome.out_states.index(occ)] = amp
    return float(np.real(vec.conj() @ outcome.rho @ vec))


@dataclass
class OracleRun:
    sector_weights: dict[tuple[int, int], float]
    sector_probabilities: dict[tuple[int, int], dict[str, float]]
    branch_probabilities: dict[str, float]
    branch_fidelities: dict[str, float | None]

    @property
    def total_probability(self) -> float:
        return sum(self.branch_probabilities.values())

    @property
    def conditional_fidelity(self) -> float:
        return sum(self.branch_probabilities[b] * f for b, f in self.branch_fidelities.items() if f is not None) / self.total_probability


def oracle_run(config) -> OracleRun:
    """Dense re-computation of a scenario's probabilities and fidelities."""
    from .experiment import build_circuit

    if config.params.max_pairs > MAX_ORACLE_PAIRS:
        raise ValueError(f"oracle limited to max_pairs <= {MAX_ORACLE_PAIRS}")
    circuit = build_circuit(config)
    basis = DenseBasis(circuit.registry)
    source = dense_source(basis, config.params.chi_14, config.params.chi_second)

    generators = [1j * generator(basis, u) for u in circuit.elements]

    def propagate(s: DenseState) -> DenseState:
        vec = s.vector
        for g in generators:
            vec = expm_multiply(g, vec)
        return DenseState(basis, vec)

    def measure(s: DenseState) -> list[DenseOutcome]:
        return oracle_pattern_probability(propagate(s), circuit.pattern, circuit.ports, circuit.output_modes, circuit.sinks)

    weights, sector_probs = {}, {}
    for sector, (w, s) in dense_sectors(source).items():
        weights[sector] = w
        sector_probs[sector] = {o.branch: o.probability for o in measure(s)}
    probs, fids = {}, {}
    for o in measure(source):
        probs[o.branch] = o.probability
        fids[o.branch] = oracle_fidelity(o, circuit.output_modes, circuit.targets[o.branch]) if o.rho is not None else None
    return OracleRun(weights, sector_probs, probs, fids)


def random_state(registry: ModeRegistry, rng: np.random.Generator) -> FockState:
    basis = DenseBasis(registry)
    vec = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    return DenseState(basis, vec / np.linalg.norm(vec)).to_fock()


def random_unitary(modes: Sequence[Mode], rng: np.random.Generator) -> ModeUnitary:
    if len(modes) == 1:
        return ModeUnitary(tuple(modes), np.array([[np.exp(2j * np.pi * rng.random())]]))
    return ModeUnitary(tuple(modes), unitary_group.rvs(len(modes), random_state=rng))


@dataclass(frozen=True)
class Check:
    name: str
    deviation: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.deviation <= self.tolerance


def cross_check(seed: int = 0, n_random: int = 200) -> list[Check]:
    """Sparse engine versus oracle on random applications and the acceptance scenarios."""
    from .experiment import SIX_STATES, Scheme, ScenarioConfig, simulate, survival_ratio
    from .optics import PBS_TRANSMIT_V, apply_unitary
    from .source import PdcParams, double_pass_source, pdc_two_mode, sector_decompose

    rng = np.random.default_rng(seed)
    checks: list[Check] = []

    worst = 0.0
    for _ in range(n_random):
        n_modes = int(rng.integers(1, 5))
        reg = ModeRegistry([Mode(str(i), Polarization.H) for i in range(n_modes)], int(rng.integers(1, 5)))
        state = random_state(reg, rng)
        u = random_unitary(reg.modes, rng)
        sparse_out = apply_unitary(state, u)
        dense_out = dense_apply(DenseState.from_fock(state), u)
        worst = max(worst, float(np.abs(DenseState.from_fock(sparse_out, dense_out.basis).vector - dense_out.vector).max()))
    checks.append(Check(f"{n_random} random unitary applications (amplitude)", worst, 1e-8))

    worst = 0.0
    for chi in (0.05, 0.1, 0.3):
        params = PdcParams(chi, 2)
        reg = ModeRegistry.from_spatial(("1", "2", "3", "4"), 4)
        sparse_src = double_pass_source(params, reg)
        dense_src = dense_source(DenseBasis(reg), chi, chi)
        worst = max(worst, float(np.abs(DenseState.from_fock(sparse_src, dense_src.basis).vector - dense_src.vector).max()))
        two = [s for w, s in sector_decompose(sparse_src) if w.sector == (2, 0)][0]
        dense_two = dense_sectors(dense_src)[(2, 0)][1]
        worst = max(worst, float(np.abs(DenseState.from_fock(two, dense_two.basis).vector - dense_two.vector).max()))
        single = pdc_two_mode("1", "4", params)
        worst = max(worst, abs(single.norm() - 1.0))
    checks.append(Check("PDC source and two-pair sector", worst, 1e-10))

    def compare(name: str, config) -> None:
        sparse_run = simulate(config)
        dense_run = oracle_run(config)
        dev = 0.0
        for w in sparse_run.sector_weights:
            dev = max(dev, abs(w.weight - dense_run.sector_weights[w.sector]))
            for o in sparse_run.sector_outcomes[w.sector]:
                dev = max(dev, abs(o.probability - dense_run.sector_probabilities[w.sector][o.branch]))
        for b in sparse_run.branches:
            dev = max(dev, abs(b.probability - dense_run.branch_probabilities[b.branch]))
            if b.fidelity is not None:
                dev = max(dev, abs(b.fidelity.raw - dense_run.branch_fidelities[b.branch]))
        checks.append(Check(name, dev, 1e-10))

    grid = [(t, p) for t in np.linspace(0, math.pi / 2, 5) for p in np.linspace(0, 2 * math.pi, 5, endpoint=False)]
    for conv in ("transmit_h", PBS_TRANSMIT_V):
        for rot in grid:
            compare(f"modified {conv} rot1={rot[0]:.3f},{rot[1]:.3f}", ScenarioConfig(rot1=rot, pbs_convention=conv))
    for scheme in (Scheme.INNSBRUCK, Scheme.PNR_TRIGGER):
        for rot in SIX_STATES:
            compare(f"{scheme.value} rot1={rot[0]:.3f},{rot[1]:.3f}", ScenarioConfig(scheme=scheme, rot1=rot))
    for eta in (1.0, 0.6):
        compare(f"modified eta={eta}", ScenarioConfig(efficiency=eta))
        compare(f"innsbruck eta={eta}", ScenarioConfig(scheme=Scheme.INNSBRUCK, efficiency=eta))

    # Survival ratio recomputed from oracle runs.
    for eta in (1.0, 0.6):
        cfg = ScenarioConfig(efficiency=eta)
        mod = oracle_run(cfg)
        sparse_mod = simulate(cfg)
        ratios = []
        for b in sparse_mod.branches:
            inn = oracle_run(replace(cfg, scheme=Scheme.INNSBRUCK, rot1=(b.target.theta, b.target.phi)))
            ratios.append(mod.sector_probabilities[(1, 1)][b.branch] / inn.sector_probabilities[(1, 1)]["all"])
        checks.append(Check(f"survival ratio eta={eta}", abs(float(np.mean(ratios)) - survival_ratio(cfg)), 1e-10))
    return checks
