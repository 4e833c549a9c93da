"""Regenerate tests/golden.json from the dense oracle only.

    python scripts/make_golden.py

No value in the output touches the sparse engine.
"""

from __future__ import annotations

import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from teleport_sim.detection import DetectorPort, FiringPattern
from teleport_sim.experiment import SIX_STATES, Scheme, ScenarioConfig
from teleport_sim.fock import Mode, ModeRegistry, Polarization, bell_state, basis_state
from teleport_sim.optics import bs_50_50, polarizer
from teleport_sim.oracle import DenseBasis, DenseState, dense_apply, dense_sectors, dense_source, oracle_pattern_probability, oracle_run

H, V = Polarization.H, Polarization.V
OUT = Path(__file__).resolve().parents[1] / "tests" / "golden.json"


def sector_weights(chi: float) -> dict[str, float]:
    reg = ModeRegistry.from_spatial(("1", "2", "3", "4"), 4)
    src = dense_source(DenseBasis(reg), chi, chi)
    return {f"{m},{n}": w for (m, n), (w, _) in dense_sectors(src).items()}


def hom_coincidence() -> float:
    full = ModeRegistry.from_spatial(("a", "b"), 2)
    state = DenseState.from_fock(basis_state(full, full.occupation({Mode("a", H): 1, Mode("b", H): 1})))
    out = dense_apply(state, bs_50_50("a", "b"))
    return abs(out.amplitude(full.occupation({Mode("a", H): 1, Mode("b", H): 1})))


def singlet_polarizer_coincidence() -> float:
    reg = ModeRegistry.from_spatial(("1", "2", "s1", "s2"), 2)
    state = DenseState.from_fock(bell_state("PsiMinus", "1", "2", reg))
    for u in (polarizer("1", H, "s1"), polarizer("2", V, "s2")):
        state = dense_apply(state, u)
    ports = [DetectorPort("D1", "1"), DetectorPort("D2", "2")]
    pattern = FiringPattern(fired={"D1", "D2"})
    return oracle_pattern_probability(state, pattern, ports, (), ("s1", "s2"))[0].probability


def mean_fidelity(config: ScenarioConfig) -> float:
    return float(np.mean([oracle_run(replace(config, rot1=r)).conditional_fidelity for r in SIX_STATES]))


def main() -> None:
    base = ScenarioConfig()
    golden = {
        "_generated_by": "python scripts/make_golden.py",
        "sector_weights_chi_0.1": sector_weights(0.1),
        "hom_coincidence_amplitude": hom_coincidence(),
        "singlet_polarizer_coincidence": singlet_polarizer_coincidence(),
        "innsbruck_fidelity_chi_0.1": oracle_run(replace(base, scheme=Scheme.INNSBRUCK)).conditional_fidelity,
        "innsbruck_six_state_average_chi_0.1": mean_fidelity(replace(base, scheme=Scheme.INNSBRUCK)),
        "pnr_six_state_average_chi_0.1": mean_fidelity(replace(base, scheme=Scheme.PNR_TRIGGER)),
        "modified_six_state_average_chi_0.1": mean_fidelity(base),
        "modified_two_pair_leak": {
            f"{theta:.6f}": oracle_run(replace(base, rot1=(theta, 0.3))).sector_probabilities[(2, 0)]
            for theta in (0.0, math.pi / 8, math.pi / 4, math.pi / 2)
        },
    }
    OUT.write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
