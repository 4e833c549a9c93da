"""Passive optical elements as mode unitaries and their action on Fock states.

A :class:`ModeUnitary` transforms creation operators as
``a†_i -> sum_j U[j, i] b†_j``. Column ``i`` of the matrix is therefore the
output amplitude pattern of a single photon entering mode ``i``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fock import FockError, FockState, Mode, Occupation, Polarization

UNITARY_TOL = 1e-12

# Polarizing beam splitter conventions. The default transmits H and reflects V.
PBS_TRANSMIT_H = "transmit_h"
PBS_TRANSMIT_V = "transmit_v"

BS_HADAMARD = "hadamard"    # (1/sqrt2) [[1, 1], [1, -1]]
BS_SYMMETRIC = "symmetric"  # (1/sqrt2) [[1, i], [i, 1]]

H, V = Polarization.H, Polarization.V


@dataclass(frozen=True, eq=False)
class ModeUnitary:
    modes: tuple[Mode, ...]
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "matrix", mat)
        m = len(self.modes)
        if len(set(self.modes)) != m:
            raise FockError("repeated mode in unitary")
        if mat.shape != (m, m):
            raise FockError(f"matrix shape {mat.shape} does not match {m} modes")
        err = np.abs(mat.conj().T @ mat - np.eye(m)).max() if m else 0.0
        if err > UNITARY_TOL:
            raise FockError(f"matrix is not unitary (deviation {err:.3g})")

    @property
    def spatial_labels(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(m.spatial for m in self.modes))

    def then(self, other: "ModeUnitary") -> "ModeUnitary":
        """Unitary for applying ``self`` first and ``other`` second."""
        modes = list(self.modes) + [m for m in other.modes if m not in self.modes]
        return ModeUnitary(tuple(modes), _lift(other, modes) @ _lift(self, modes), f"{self.label}>{other.label}")


def _lift(u: ModeUnitary, modes: Sequence[Mode]) -> np.ndarray:
    full = np.eye(len(modes), dtype=complex)
    idx = [list(modes).index(m) for m in u.modes]
    full[np.ix_(idx, idx)] = u.matrix
    return full


def _expand_local(local: Occupation, matrix: np.ndarray) -> dict[Occupation, complex]:
    """Multinomial expansion of prod_i (sum_j U_ji b†_j)^{n_i} |0>, with Fock normalization."""
    m = len(local)
    poly: dict[Occupation, complex] = {(0,) * m: 1.0 + 0j}
    for i, n in enumerate(local):
        column = [(j, matrix[j, i]) for j in range(m) if matrix[j, i] != 0]
        for _ in range(n):
            nxt: dict[Occupation, complex] = defaultdict(complex)
            for mono, c in poly.items():
                for j, u in column:
                    key = mono[:j] + (mono[j] + 1,) + mono[j + 1:]
                    nxt[key] += c * u
            poly = nxt
    in_norm = math.prod(math.sqrt(math.factorial(n)) for n in local)
    out = {}
    for mono, c in poly.items():
        out[mono] = c * math.prod(math.sqrt(math.factorial(k)) for k in mono) / in_norm
    return out


def apply_unitary(state: FockState, u: ModeUnitary) -> FockState:
    reg = state.registry
    idx = [reg.index(m) for m in u.modes]
    cache: dict[Occupation, dict[Occupation, complex]] = {}
    out: dict[Occupation, complex] = defaultdict(complex)
    for occ, amp in state:
        local = tuple(occ[i] for i in idx)
        if local not in cache:
            cache[local] = _expand_local(local, u.matrix)
        base = list(occ)
        for mono, c in cache[local].items():
            for i, k in zip(idx, mono):
                base[i] = k
            out[tuple(base)] += amp * c
    return FockState(reg, out, validate=False)


def apply_elements(state: FockState, elements: Sequence[ModeUnitary]) -> FockState:
    for u in elements:
        state = apply_unitary(state, u)
    return state


def _two_port(port_a: str, port_b: str, block: np.ndarray, label: str) -> ModeUnitary:
    if port_a == port_b:
        raise FockError("beam splitter needs two distinct ports")
    modes = (Mode(port_a, H), Mode(port_a, V), Mode(port_b, H), Mode(port_b, V))
    return ModeUnitary(modes, np.kron(block, np.eye(2)), label)


def bs_50_50(port_a: str, port_b: str, convention: str = BS_HADAMARD) -> ModeUnitary:
    s = 1 / math.sqrt(2)
    if convention == BS_HADAMARD:
        block = s * np.array([[1, 1], [1, -1]], dtype=complex)
    elif convention == BS_SYMMETRIC:
        block = s * np.array([[1, 1j], [1j, 1]], dtype=complex)
    else:
        raise ValueError(f"unknown beam splitter convention {convention!r}")
    return _two_port(port_a, port_b, block, f"BS({port_a},{port_b})")


def pbs(port_a: str, port_b: str, convention: str = PBS_TRANSMIT_H) -> ModeUnitary:
    """Transmitted polarization stays on its port; the other swaps ports."""
    if convention not in (PBS_TRANSMIT_H, PBS_TRANSMIT_V):
        raise ValueError(f"unknown PBS convention {convention!r}")
    if port_a == port_b:
        raise FockError("PBS needs two distinct ports")
    reflected = V if convention == PBS_TRANSMIT_H else H
    modes = (Mode(port_a, H), Mode(port_a, V), Mode(port_b, H), Mode(port_b, V))
    mat = np.zeros((4, 4), dtype=complex)
    for k, pol in enumerate((H, V)):
        a, b = k, 2 + k
        if pol is reflected:
            mat[b, a] = mat[a, b] = 1.0
        else:
            mat[a, a] = mat[b, b] = 1.0
    return ModeUnitary(modes, mat, f"PBS({port_a},{port_b})")


def rotator_matrix(theta: float, phi: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -np.exp(-1j * phi) * s], [np.exp(1j * phi) * s, c]], dtype=complex)


def rotator(port: str, theta: float, phi: float = 0.0) -> ModeUnitary:
    """Maps |H> to cos(theta)|H> + exp(i phi) sin(theta)|V>."""
    return ModeUnitary((Mode(port, H), Mode(port, V)), rotator_matrix(theta, phi), f"R({port})")


def polarizer(port: str, passed: Polarization, sink: str) -> ModeUnitary:
    """Swap the blocked polarization of ``port`` into ``sink``.

    The sink is an unmonitored mode that is traced out at measurement, which
    makes this an exact model of absorption.
    """
    if port == sink:
        raise FockError("polarizer sink must differ from its port")
    blocked = passed.orthogonal
    modes = (Mode(port, blocked), Mode(sink, blocked))
    return ModeUnitary(modes, np.array([[0, 1], [1, 0]], dtype=complex), f"P{passed.value}({port})")


def loss(port: str, efficiency: float, sink: str) -> ModeUnitary:
    """Beam splitter with amplitude transmissivity sqrt(efficiency) into ``sink``, both polarizations."""
    if not 0.0 < efficiency <= 1.0:
        raise ValueError("efficiency must lie in (0, 1]")
    t, r = math.sqrt(efficiency), math.sqrt(1.0 - efficiency)
    block = np.array([[t, -r], [r, t]], dtype=complex)
    return _two_port(port, sink, block, f"loss({port})")
