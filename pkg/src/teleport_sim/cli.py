"""Command-line front end.

Exit codes: 0 success, 1 ``--verify`` disagreement, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from .experiment import ExperimentError, Scheme, ScenarioConfig, ScenarioReport, run_scenario
from .optics import PBS_TRANSMIT_H, PBS_TRANSMIT_V
from .source import PdcParams

SCHEMA_VERSION = 1

CONFIG_KEYS = {
    "scheme", "chi", "chi_23", "max_pairs", "rot1", "rot4", "efficiency",
    "averaging", "samples", "seed", "pbs_convention", "format",
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would print usage and exit itself
        raise ConfigError(message)


def _num(x: float | None) -> float | None:
    if x is None:
        return None
    v = float(f"{x:.12g}")
    return 0.0 if v == 0 else v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="teleport-sim", description="Simulate post-selected teleportation with a double-pass down-conversion source.")
    p.add_argument("--config", type=Path, help="JSON config file; flags override its values")
    p.add_argument("--scheme", choices=[s.value for s in Scheme])
    p.add_argument("--chi", type=float, help="pair-generation amplitude (default 0.1)")
    p.add_argument("--chi23", dest="chi_23", type=float, help="separate amplitude for the beams 2/3 pass")
    p.add_argument("--max-pairs", dest="max_pairs", type=int, help="truncation order, 1-3 (default 2)")
    p.add_argument("--theta1", type=float)
    p.add_argument("--phi1", type=float)
    p.add_argument("--theta4", type=float)
    p.add_argument("--phi4", type=float)
    p.add_argument("--efficiency", type=float, help="detector efficiency in (0, 1]")
    p.add_argument("--averaging", choices=["six-state", "monte-carlo"])
    p.add_argument("--samples", type=int, help="Monte Carlo sample count")
    p.add_argument("--seed", type=int)
    p.add_argument("--pbs-convention", dest="pbs_convention", choices=[PBS_TRANSMIT_H, PBS_TRANSMIT_V])
    p.add_argument("--format", choices=["table", "json", "csv"])
    p.add_argument("--verify", action="store_true", help="cross-check the sparse engine against the dense oracle")
    return p


def load_settings(args: argparse.Namespace) -> dict[str, Any]:
    settings: dict[str, Any] = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(data) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        settings.update(data)
    for key in ("scheme", "chi", "chi_23", "max_pairs", "efficiency", "averaging", "samples", "seed", "pbs_convention", "format"):
        value = getattr(args, key)
        if value is not None:
            settings[key] = value
    for beam in ("1", "4"):
        rot = list(settings.get(f"rot{beam}", [0.0, 0.0]))
        if len(rot) != 2:
            raise ConfigError(f"rot{beam} must be [theta, phi]")
        theta, phi = getattr(args, f"theta{beam}"), getattr(args, f"phi{beam}")
        if theta is not None:
            rot[0] = theta
        if phi is not None:
            rot[1] = phi
        settings[f"rot{beam}"] = rot
    return settings


def make_config(settings: dict[str, Any]) -> ScenarioConfig:
    try:
        params = PdcParams(
            chi=float(settings.get("chi", 0.1)),
            max_pairs=int(settings.get("max_pairs", 2)),
            chi_23=None if settings.get("chi_23") is None else float(settings["chi_23"]),
        )
        return ScenarioConfig(
            scheme=Scheme(settings.get("scheme", Scheme.MODIFIED.value)),
            params=params,
            rot1=tuple(float(x) for x in settings["rot1"]),
            rot4=tuple(float(x) for x in settings["rot4"]),
            efficiency=float(settings.get("efficiency", 1.0)),
            averaging=settings.get("averaging", "six-state"),
            samples=int(settings.get("samples", 100)),
            seed=int(settings.get("seed", 0)),
            pbs_convention=settings.get("pbs_convention", PBS_TRANSMIT_H),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def report_to_dict(report: ScenarioReport) -> dict[str, Any]:
    run = report.run
    cfg = report.config
    try:
        conditional = _num(run.conditional_fidelity)
    except ExperimentError:
        conditional = None
    branches = []
    for b in run.branches:
        fid = None
        if b.fidelity is not None:
            fid = {
                "raw": _num(b.fidelity.raw),
                "single_photon_weight": _num(b.fidelity.single_photon_weight),
                "vacuum_weight": _num(b.fidelity.vacuum_weight),
                "multi_weight": _num(b.fidelity.multi_weight),
                "single_photon_conditioned": _num(b.fidelity.single_photon_conditioned),
            }
        branches.append({
            "branch": b.branch,
            "probability": _num(b.probability),
            "target": {"theta": _num(b.target.theta), "phi": _num(b.target.phi)},
            "fidelity": fid,
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "config": {
            "scheme": cfg.scheme.value,
            "chi": _num(cfg.params.chi),
            "chi_23": _num(cfg.params.chi_second),
            "max_pairs": cfg.params.max_pairs,
            "rot1": [_num(x) for x in cfg.rot1],
            "rot4": [_num(x) for x in cfg.rot4],
            "efficiency": _num(cfg.efficiency),
            "averaging": cfg.averaging,
            "samples": cfg.samples if cfg.averaging == "monte-carlo" else None,
            "seed": cfg.seed,
            "pbs_convention": cfg.pbs_convention,
            "bs_convention": cfg.bs_convention,
        },
        "sector_weights": [{"m": w.m, "n": w.n, "weight": _num(w.weight)} for w in run.sector_weights],
        "sector_probabilities": [
            {"m": s[0], "n": s[1], "branch": o.branch, "probability": _num(o.probability), "max_amplitude": _num(o.max_amplitude)}
            for s, outs in sorted(run.sector_outcomes.items())
            for o in outs
        ],
        "branches": branches,
        "total_probability": _num(run.total_probability),
        "weighted_sector_total": _num(report.weighted_sector_total()),
        "conditional_fidelity": conditional,
        "average_fidelity": _num(report.average_fidelity),
        "threshold_reference": report.threshold_reference,
        "survival_ratio": _num(report.survival_ratio),
    }


def format_json(data: dict[str, Any]) -> str:
    return json.dumps(data, indent=2) + "\n"


def format_csv(data: dict[str, Any]) -> str:
    weights = {(w["m"], w["n"]): w["weight"] for w in data["sector_weights"]}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["m", "n", "sector_weight", "branch", "probability"])
    for row in data["sector_probabilities"]:
        writer.writerow([row["m"], row["n"], repr(weights[(row["m"], row["n"])]), row["branch"], repr(row["probability"])])
    return buf.getvalue()


def _fmt(x: float | None, spec: str = ".6g") -> str:
    return "n/a" if x is None else format(x, spec)


def format_table(data: dict[str, Any]) -> str:
    cfg = data["config"]
    lines = [
        f"scheme {cfg['scheme']}  chi={cfg['chi']:g}  max_pairs={cfg['max_pairs']}  efficiency={cfg['efficiency']:g}",
        f"rot1=({cfg['rot1'][0]:g}, {cfg['rot1'][1]:g})  rot4=({cfg['rot4'][0]:g}, {cfg['rot4'][1]:g})  pbs={cfg['pbs_convention']}",
        "",
        "coincidence probability per sector (m pairs in beams 1&4, n in beams 2&3)",
    ]
    branches = [b["branch"] for b in data["branches"]]
    weights = {(w["m"], w["n"]): w["weight"] for w in data["sector_weights"]}
    probs: dict[tuple[int, int], dict[str, float]] = {}
    for row in data["sector_probabilities"]:
        probs.setdefault((row["m"], row["n"]), {})[row["branch"]] = row["probability"]
    lines.append(f"  {'sector':>8} {'weight':>12} " + " ".join(f"{b:>12}" for b in branches))
    for sector in sorted(probs):
        cells = " ".join(f"{probs[sector].get(b, 0.0):>12.6g}" for b in branches)
        lines.append(f"  {str(sector):>8} {weights[sector]:>12.6g} {cells}")
    lines += ["", "branch results"]
    for b in data["branches"]:
        raw = b["fidelity"]["raw"] if b["fidelity"] else None
        lines.append(f"  {b['branch']:>6}  probability {_fmt(b['probability'])}  fidelity {_fmt(raw, '.6f')}")
    lines += [
        "",
        f"conditional fidelity  {_fmt(data['conditional_fidelity'], '.6f')}",
        f"average fidelity      {_fmt(data['average_fidelity'], '.6f')}   (classical reference {data['threshold_reference']:.2f})",
        f"survival ratio        {_fmt(data['survival_ratio'], '.6f')}",
    ]
    return "\n".join(lines) + "\n"


def run_verify(seed: int, out) -> int:
    from .oracle import cross_check

    checks = cross_check(seed)
    for c in checks:
        out.write(f"{'ok  ' if c.ok else 'FAIL'} {c.name}: deviation {c.deviation:.3e} (tolerance {c.tolerance:.0e})\n")
    failed = sum(not c.ok for c in checks)
    out.write(f"{len(checks) - failed}/{len(checks)} checks agree\n")
    return 1 if failed else 0


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        settings = load_settings(args)
        config = make_config(settings)
        fmt = settings.get("format", "table")
        if fmt not in ("table", "json", "csv"):
            raise ConfigError(f"unknown output format {fmt!r}")
    except ConfigError as exc:
        err.write(f"teleport-sim: error: {exc}\n")
        return 2
    if args.verify:
        return run_verify(config.seed, out)
    data = report_to_dict(run_scenario(config))
    out.write({"json": format_json, "csv": format_csv, "table": format_table}[fmt](data))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
