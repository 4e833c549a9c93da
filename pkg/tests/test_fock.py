import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teleport_sim.fock import (
    PRUNE_TOL,
    BellKind,
    FockError,
    FockState,
    Mode,
    ModeRegistry,
    Polarization,
    QubitPolarizationState,
    basis_state,
    bell_state,
    embed,
    inner_product,
    qubit_to_fock,
    state_fidelity,
    tensor,
    vacuum,
)

H, V = Polarization.H, Polarization.V
S = 1 / math.sqrt(2)


def test_vacuum_basis_state():
    reg = ModeRegistry.from_spatial(["1"], 4)
    vac = basis_state(reg, (0, 0))
    assert vac.norm() == 1.0
    assert len(vac) == 1


def test_single_excitation():
    reg = ModeRegistry.from_spatial(["1"], 4)
    s = basis_state(reg, reg.occupation({Mode("1", H): 1}))
    assert s.amplitude_of({Mode("1", H): 1}) == 1
    assert s.norm() == 1.0


def test_budget_exceeded():
    reg = ModeRegistry.from_spatial(["1"], 4)
    with pytest.raises(FockError):
        basis_state(reg, (3, 2))


def test_length_mismatch():
    reg = ModeRegistry.from_spatial(["1"], 4)
    with pytest.raises(FockError):
        basis_state(reg, (1,))


def test_duplicate_modes_rejected():
    with pytest.raises(FockError):
        ModeRegistry([Mode("1", H), Mode("1", H)])


def test_tensor_basic():
    a = vacuum(ModeRegistry.from_spatial(["1"], 2))
    b = vacuum(ModeRegistry.from_spatial(["4"], 2))
    vv = tensor(a, b)
    assert vv.norm() == 1.0 and len(vv) == 1

    h1 = qubit_to_fock(QubitPolarizationState(0.0), "1")
    v4 = qubit_to_fock(QubitPolarizationState(math.pi / 2), "4")
    prod = tensor(h1, v4)
    assert prod.amplitude_of({Mode("1", H): 1, Mode("4", V): 1}) == pytest.approx(1.0)
    assert prod.norm() == pytest.approx(1.0, abs=1e-12)


def test_tensor_overlap_rejected():
    a = vacuum(ModeRegistry.from_spatial(["1"], 2))
    with pytest.raises(FockError):
        tensor(a, a)


def test_inner_product_examples():
    psi = bell_state("PsiMinus", "2", "3")
    phi = bell_state("PhiPlus", "2", "3")
    assert inner_product(psi, psi) == pytest.approx(1.0, abs=1e-12)
    assert abs(inner_product(psi, phi)) < 1e-15
    reg = ModeRegistry.from_spatial(["1"], 1)
    assert inner_product(vacuum(reg), basis_state(reg, (1, 0))) == 0


def test_inner_product_registry_mismatch():
    with pytest.raises(FockError):
        inner_product(bell_state("PsiMinus", "2", "3"), bell_state("PsiMinus", "1", "4"))


def test_bell_signs_exact():
    psi = bell_state(BellKind.PSI_MINUS, "2", "3")
    assert psi.amplitude_of({Mode("2", H): 1, Mode("3", V): 1}) == S
    assert psi.amplitude_of({Mode("2", V): 1, Mode("3", H): 1}) == -S
    phi = bell_state(BellKind.PHI_PLUS, "2", "3")
    assert phi.amplitude_of({Mode("2", H): 1, Mode("3", H): 1}) == S
    assert phi.amplitude_of({Mode("2", V): 1, Mode("3", V): 1}) == S
    psi_p = bell_state(BellKind.PSI_PLUS, "2", "3")
    assert psi_p.amplitude_of({Mode("2", V): 1, Mode("3", H): 1}) == S
    phi_m = bell_state(BellKind.PHI_MINUS, "2", "3")
    assert phi_m.amplitude_of({Mode("2", V): 1, Mode("3", V): 1}) == -S


def test_bell_basis_orthonormal():
    states = [bell_state(k, "2", "3") for k in BellKind]
    gram = np.array([[inner_product(a, b) for b in states] for a in states])
    assert np.allclose(gram, np.eye(4), atol=1e-12)


def test_bell_unregistered_beam():
    reg = ModeRegistry.from_spatial(["2"], 2)
    with pytest.raises(FockError):
        bell_state("PsiMinus", "2", "3", reg)


def test_qubit_to_fock():
    h = qubit_to_fock(QubitPolarizationState(0.0), "1")
    assert h.amplitude_of({Mode("1", H): 1}) == 1
    v_ref = basis_state(h.registry, h.registry.occupation({Mode("1", V): 1}))
    v = qubit_to_fock(QubitPolarizationState(math.pi / 2, 1.3), "1")
    assert state_fidelity(v, v_ref) == pytest.approx(1.0, abs=1e-12)
    d = qubit_to_fock(QubitPolarizationState(math.pi / 4, 0.0), "1")
    assert d.norm() == pytest.approx(1.0, abs=1e-12)
    assert d.amplitude_of({Mode("1", V): 1}) == pytest.approx(S)


def test_from_vector_roundtrip():
    q = QubitPolarizationState(0.7, -1.1)
    back = QubitPolarizationState.from_vector(np.exp(0.4j) * q.vector)
    assert abs(np.vdot(back.vector, q.vector)) == pytest.approx(1.0, abs=1e-12)


def test_pruning_drops_tiny_terms():
    reg = ModeRegistry.from_spatial(["1"], 1)
    s = FockState(reg, {(0, 0): 1.0, (1, 0): 1e-16})
    assert len(s) == 1
    assert abs(s.norm_squared() - 1.0) <= 1 * PRUNE_TOL**2


def test_embed_reorders():
    h1 = qubit_to_fock(QubitPolarizationState(0.3, 0.2), "1")
    big = ModeRegistry.from_spatial(["0", "1", "2"], 3)
    e = embed(h1, big)
    assert e.amplitude_of({Mode("1", V): 1}) == h1.amplitude_of({Mode("1", V): 1})


amplitudes = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)


def _random_state(labels, amps) -> FockState:
    reg = ModeRegistry.from_spatial(labels, 1)
    occs = [(0,) * len(reg)] + [tuple(int(i == k) for i in range(len(reg))) for k in range(len(reg))]
    vec = np.array(amps[: len(occs)] + [0] * (len(occs) - len(amps)), dtype=complex)
    if np.linalg.norm(vec) < 1e-6:
        vec[0] = 1.0
    vec /= np.linalg.norm(vec)
    return FockState(reg, dict(zip(occs, vec)))


@settings(max_examples=60, deadline=None)
@given(st.lists(amplitudes, min_size=3, max_size=3), st.lists(amplitudes, min_size=3, max_size=3), st.lists(amplitudes, min_size=3, max_size=3))
def test_tensor_properties(xa, xb, xc):
    a, b, c = _random_state(["a"], xa), _random_state(["b"], xb), _random_state(["c"], xc)
    ab = tensor(a, b)
    assert ab.norm() == pytest.approx(1.0, abs=1e-12)
    left = tensor(ab, c)
    right = tensor(a, tensor(b, c))
    assert left.registry.modes == right.registry.modes
    for occ, amp in left:
        assert abs(amp - right.amplitude(occ)) < 1e-12
    self_ip = inner_product(ab, ab)
    assert abs(self_ip.imag) < 1e-12
    assert self_ip.real == pytest.approx(ab.norm_squared(), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(amplitudes, min_size=3, max_size=3), st.lists(amplitudes, min_size=3, max_size=3), amplitudes)
def test_inner_product_conjugate_linear(xa, xb, z):
    a, b = _random_state(["x"], xa), _random_state(["x"], xb)
    assert abs(inner_product(a, b)) <= a.norm() * b.norm() + 1e-12
    assert inner_product(a.scaled(z), b) == pytest.approx(z.conjugate() * inner_product(a, b), abs=1e-12)
