"""File-driven command-line front end for design, analysis, and simulation.

Four subcommands cover the workflow: ``synth`` designs a saturated boundary
gain for the plant in a JSON config and writes the certificate, ``grid``
sweeps the design over (mu, alpha) weight grids into a feasibility map CSV,
``simulate`` runs the closed loop and writes trajectory CSVs, and
``verify`` recomputes every certified inequality for a stored certificate.
Every command writes a JSON run report with a config digest and a manifest
of the files it produced.

Exit status is 0 on success, 2 when a design is infeasible or a
verification fails, and 1 on any operational error.  CSV output is
deterministic: rerunning a command with the same config yields
byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import control, lmi, pde
from .control import (
    InfeasibleError,
    Plant,
    SynthesisCertificate,
    SynthesisError,
    iss_coefficients,
    synthesize,
    verify_analysis,
    wellposedness_certificate,
)
from .linalg import DiagMatrix, Matrix, SymMatrix, invert_diag
from .pde import BlowUpError, Grid, SignalSpec, SimConfig, simulate

_DEFAULT_OUT = "out"


class ConfigError(ValueError):
    """Malformed config or certificate; the message names the bad path."""


# ---------------------------------------------------------------------------
# config parsing


def _section(cfg: dict, name: str) -> dict:
    if name not in cfg:
        raise ConfigError(f"{name}: missing section")
    if not isinstance(cfg[name], dict):
        raise ConfigError(f"{name}: expected an object")
    return cfg[name]


def _get(d: dict, path: str, key: str):
    if key not in d:
        raise ConfigError(f"{path}.{key}: missing")
    return d[key]


def _number(d: dict, path: str, key: str, positive: bool = False,
            default=None) -> float:
    if key not in d and default is not None:
        return float(default)
    v = _get(d, path, key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number")
    v = float(v)
    if positive and not (v > 0.0 and math.isfinite(v)):
        raise ConfigError(f"{path}.{key}: must be positive and finite")
    return v


def _integer(d: dict, path: str, key: str, minimum: int) -> int:
    v = _get(d, path, key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}: expected an integer")
    if v < minimum:
        raise ConfigError(f"{path}.{key}: must be at least {minimum}")
    return v


def _vector(d: dict, path: str, key: str) -> np.ndarray:
    v = _get(d, path, key)
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}: expected a numeric array") from None
    if arr.ndim != 1 or arr.size == 0:
        raise ConfigError(f"{path}.{key}: expected a nonempty 1-D array")
    return arr


def _matrix(d: dict, path: str, key: str) -> np.ndarray:
    v = _get(d, path, key)
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}: expected a numeric matrix") from None
    if arr.ndim != 2 or arr.size == 0:
        raise ConfigError(f"{path}.{key}: expected a row-major 2-D array")
    return arr


def _load_config(path: str) -> tuple[dict, str]:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror or e}") from None
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return cfg, hashlib.sha256(raw).hexdigest()


def _build_plant(cfg: dict) -> Plant:
    block = _section(cfg, "plant")
    speeds = _vector(block, "plant", "lambda")
    try:
        return Plant(
            speeds=DiagMatrix(speeds),
            reflection=Matrix(_matrix(block, "plant", "H")),
            input_map=Matrix(_matrix(block, "plant", "B")),
            disturbance_map=Matrix(_matrix(block, "plant", "N")),
            u_max=_vector(block, "plant", "u_max"),
        )
    except ValueError as e:
        raise ConfigError(f"plant: {e}") from None


def _scalar_weight(design: dict, key: str) -> float:
    v = _get(design, "design", key)
    if isinstance(v, dict):
        raise ConfigError(f"design.{key}: expected a scalar, got a grid")
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0.0:
        raise ConfigError(f"design.{key}: expected a positive number")
    return float(v)


def _grid_weight(design: dict, key: str) -> np.ndarray:
    v = _get(design, "design", key)
    if not isinstance(v, dict):
        raise ConfigError(f"design.{key}: expected a grid {{min, max, count}}")
    lo = _number(v, f"design.{key}", "min", positive=True)
    hi = _number(v, f"design.{key}", "max", positive=True)
    count = _integer(v, f"design.{key}", "count", 1)
    if count > 1 and hi <= lo:
        raise ConfigError(f"design.{key}.max: must exceed min")
    return np.linspace(lo, hi, count)


def _signal(block: dict, path: str) -> SignalSpec:
    kind = _get(block, path, "kind")
    try:
        if kind == pde.ZERO:
            return SignalSpec.zero(_integer(block, path, "components", 1))
        if kind == pde.SINUSOIDAL_PRODUCT:
            phases = _get(block, path, "phases")
            if not isinstance(phases, list):
                raise ConfigError(f"{path}.phases: expected a list")
            return SignalSpec.sinusoidal_product(
                _number(block, path, "amplitude"), phases)
        if kind == pde.COSINE_PROFILE:
            return SignalSpec.cosine_profile(
                _number(block, path, "amplitude"),
                _vector(block, path, "frequencies"))
        if kind == pde.TABULATED:
            return SignalSpec.tabulated(_vector(block, path, "grid"),
                                        _matrix(block, path, "values"))
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{path}: {e}") from None
    raise ConfigError(f"{path}.kind: unknown signal kind {kind!r}")


def _optional_signal(block: dict, path: str, key: str) -> SignalSpec | None:
    if key not in block or block[key] is None:
        return None
    v = block[key]
    if not isinstance(v, dict):
        raise ConfigError(f"{path}.{key}: expected a signal object")
    return _signal(v, f"{path}.{key}")


def _build_sim_config(cfg: dict, keep_snapshots: bool) -> SimConfig:
    block = _section(cfg, "simulation")
    stride = block.get("snapshot_stride")
    if stride is not None:
        stride = _integer(block, "simulation", "snapshot_stride", 1)
    try:
        return SimConfig(
            grid=Grid(_integer(block, "simulation", "M", 8)),
            t_final=_number(block, "simulation", "t_final", positive=True),
            cfl=_number(block, "simulation", "cfl", positive=True, default=0.9),
            disturbance=_optional_signal(block, "simulation", "disturbance"),
            initial=_optional_signal(block, "simulation", "initial"),
            snapshot_stride=stride,
            keep_snapshots=keep_snapshots,
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"simulation: {e}") from None


def _output_settings(cfg: dict, out_override: str | None) -> tuple[Path, dict]:
    block = cfg.get("output", {})
    if not isinstance(block, dict):
        raise ConfigError("output: expected an object")
    directory = out_override or block.get("directory", _DEFAULT_OUT)
    if not isinstance(directory, str) or not directory:
        raise ConfigError("output.directory: expected a nonempty string")
    toggles = {
        "norms": bool(block.get("norms", True)),
        "controls": bool(block.get("controls", True)),
        "snapshots": bool(block.get("snapshots", False)),
    }
    return Path(directory), toggles


# ---------------------------------------------------------------------------
# serialization


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([cell if isinstance(cell, str) else _fmt(cell)
                        for cell in row])


def _certificate_payload(cert: SynthesisCertificate) -> dict:
    return {
        "mu": cert.mu,
        "alpha": cert.alpha,
        "peak": cert.peak,
        "gamma": cert.gamma,
        "omega": cert.omega,
        "kappa": cert.kappa,
        "gain": cert.gain.array.tolist(),
        "lyap_inv": cert.lyap_inv.diagonal.tolist(),
        "sector_inv": cert.sector_inv.diagonal.tolist(),
        "gain_scaled": cert.gain_scaled.array.tolist(),
        "coupling": cert.coupling.array.tolist(),
        "margins": dict(cert.margins),
    }


def _load_certificate(path: str, plant: Plant) -> dict:
    p = Path(path)
    try:
        data = json.loads(p.read_bytes())
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror or e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    out: dict = {}
    try:
        out["mu"] = _number(data, "certificate", "mu", positive=True)
        out["alpha"] = _number(data, "certificate", "alpha", positive=True)
        out["peak"] = _number(data, "certificate", "peak", positive=True)
        out["gain"] = Matrix(_matrix(data, "certificate", "gain"))
        out["lyap_inv"] = DiagMatrix(_vector(data, "certificate", "lyap_inv"))
        out["sector_inv"] = DiagMatrix(_vector(data, "certificate", "sector_inv"))
        out["gain_scaled"] = Matrix(_matrix(data, "certificate", "gain_scaled"))
        out["coupling"] = SymMatrix.symmetrized(_matrix(data, "certificate", "coupling"))
        for key in ("gamma", "omega", "kappa"):
            out[key] = _number(data, "certificate", key, positive=True)
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"certificate: {e}") from None
    n, m = plant.n, plant.m
    if out["gain"].array.shape != (m, n):
        raise ConfigError(f"certificate.gain: expected shape {(m, n)} for this plant")
    if out["lyap_inv"].dim != n or out["coupling"].array.shape != (n, n):
        raise ConfigError("certificate: weight dimensions do not match the plant")
    if out["sector_inv"].dim != m or out["gain_scaled"].array.shape != (m, n):
        raise ConfigError("certificate: sector/gain dimensions do not match the plant")
    if np.any(out["lyap_inv"].diagonal <= 0.0) or np.any(out["sector_inv"].diagonal <= 0.0):
        raise ConfigError("certificate: diagonal weights must be positive")
    return out


def _write_report(out_dir: Path, command: str, digest: str, margins: dict,
                  timing: float, manifest: list[str], certificate=None,
                  extra: dict | None = None) -> Path:
    path = out_dir / f"{command}_report.json"
    report = {
        "command": command,
        "config_digest": digest,
        "certificate": certificate,
        "margins": margins,
        "timing_seconds": timing,
        "manifest": sorted(manifest + [path.name]),
    }
    if extra:
        report.update(extra)
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# commands


def cmd_synth(config_path: str, out_override: str | None) -> int:
    cfg, digest = _load_config(config_path)
    plant = _build_plant(cfg)
    design = _section(cfg, "design")
    mu = _scalar_weight(design, "mu")
    alpha = _scalar_weight(design, "alpha")
    eps = _number(design, "design", "epsilon", positive=True, default=lmi.DEFAULT_EPS)
    out_dir, _ = _output_settings(cfg, out_override)
    out_dir.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    try:
        cert = synthesize(plant, mu, alpha, eps=eps)
    except InfeasibleError as e:
        timing = time.perf_counter() - started
        worst = min(e.solution.margins) if e.solution is not None else float("nan")
        _write_report(out_dir, "synth", digest,
                      {"worst_phase1_margin": worst}, timing, [],
                      extra={"status": "infeasible", "mu": mu, "alpha": alpha})
        print(f"infeasible at mu={mu:g}, alpha={alpha:g} "
              f"(worst margin {worst:.3e})", file=sys.stderr)
        return 2
    timing = time.perf_counter() - started

    cert_path = out_dir / "certificate.json"
    cert_path.write_text(
        json.dumps(_certificate_payload(cert), indent=2, sort_keys=True) + "\n")
    _write_report(out_dir, "synth", digest, dict(cert.margins), timing,
                  [cert_path.name], certificate=_certificate_payload(cert),
                  extra={"status": "feasible"})
    print(f"feasible: peak={cert.peak:.6g} gamma={cert.gamma:.6g} "
          f"omega={cert.omega:g} kappa={cert.kappa:.6g}")
    print(f"wrote {cert_path}")
    return 0


def cmd_grid(config_path: str, out_override: str | None) -> int:
    cfg, digest = _load_config(config_path)
    plant = _build_plant(cfg)
    design = _section(cfg, "design")
    mu_grid = _grid_weight(design, "mu")
    alpha_grid = _grid_weight(design, "alpha")
    eps = _number(design, "design", "epsilon", positive=True, default=lmi.DEFAULT_EPS)
    out_dir, _ = _output_settings(cfg, out_override)
    out_dir.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    fmap = control.grid_search(plant, mu_grid, alpha_grid, eps=eps)
    timing = time.perf_counter() - started

    csv_path = out_dir / "feasibility.csv"
    rows = []
    for cell in fmap.cells:
        rows.append([cell.mu, cell.alpha, cell.status,
                     "" if cell.peak is None else _fmt(cell.peak),
                     "" if cell.gamma is None else _fmt(cell.gamma)])
    _write_csv(csv_path, ["mu", "alpha", "status", "c", "gamma"], rows)

    best = fmap.best
    extra = {
        "status": "feasible" if best is not None else "infeasible",
        "cells": {s: sum(1 for c in fmap.cells if c.status == s)
                  for s in ("feasible", "infeasible", "failed")},
    }
    if best is not None:
        extra["best"] = {"mu": best.mu, "alpha": best.alpha,
                         "gamma": best.gamma, "peak": best.peak}
    _write_report(out_dir, "grid", digest,
                  dict(best.margins) if best is not None else {}, timing,
                  [csv_path.name],
                  certificate=_certificate_payload(best) if best is not None else None,
                  extra=extra)
    print(f"wrote {csv_path} ({len(rows)} cells, "
          f"{extra['cells']['feasible']} feasible)")
    if best is None:
        print("no feasible cell", file=sys.stderr)
        return 2
    print(f"best: mu={best.mu:g} alpha={best.alpha:g} gamma={best.gamma:.6g}")
    return 0


def _gain_and_certificate(gain_source: str, cfg: dict, plant: Plant):
    """Resolve --gain for simulate: designed, zero, or loaded from a file."""
    if gain_source == "auto":
        design = _section(cfg, "design")
        cert = synthesize(plant, _scalar_weight(design, "mu"),
                          _scalar_weight(design, "alpha"),
                          eps=_number(design, "design", "epsilon",
                                      positive=True, default=lmi.DEFAULT_EPS))
        return cert.gain, {
            "lyap": invert_diag(cert.lyap_inv), "mu": cert.mu,
            "alpha": cert.alpha, "supply": 1.0}
    if gain_source == "zero":
        return Matrix(np.zeros((plant.m, plant.n))), None
    stored = _load_certificate(gain_source, plant)
    return stored["gain"], {
        "lyap": invert_diag(stored["lyap_inv"]), "mu": stored["mu"],
        "alpha": stored["alpha"], "supply": 1.0}


def cmd_simulate(config_path: str, out_override: str | None,
                 gain_source: str) -> int:
    cfg, digest = _load_config(config_path)
    plant = _build_plant(cfg)
    out_dir, toggles = _output_settings(cfg, out_override)
    sim_cfg = _build_sim_config(cfg, keep_snapshots=toggles["snapshots"])
    gain, constants = _gain_and_certificate(gain_source, cfg, plant)
    out_dir.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    lyap_args = None
    if constants is not None:
        lyap_args = (constants["lyap"], constants["mu"])
    try:
        traj = simulate(plant, gain, sim_cfg, lyapunov=lyap_args)
    except BlowUpError as e:
        print(f"simulation blew up at t = {e.time:.6g}", file=sys.stderr)
        return 1
    timing = time.perf_counter() - started

    if constants is not None:
        params = pde.iss_bound_params(
            constants["lyap"], constants["mu"], constants["alpha"],
            constants["supply"], float(traj.l2_norms[0]))
        energy = pde.disturbance_energy(sim_cfg.disturbance, traj.times,
                                        sim_cfg.grid)
        rhs = np.array([pde.iss_rhs(t, params, e)
                        for t, e in zip(traj.times, energy)])
        lyap_col = traj.lyapunov_values
    else:
        nan = float("nan")
        rhs = np.full(traj.times.size, nan)
        lyap_col = np.full(traj.times.size, nan)

    manifest: list[str] = []
    if toggles["norms"]:
        path = out_dir / "norms.csv"
        _write_csv(path, ["t", "l2_norm", "iss_rhs", "lyapunov"],
                   zip(traj.times, traj.l2_norms, rhs, lyap_col))
        manifest.append(path.name)
    if toggles["controls"]:
        path = out_dir / "controls.csv"
        m = traj.control_traces.shape[1]
        _write_csv(path, ["t"] + [f"u_{i + 1}" for i in range(m)],
                   ([t, *row] for t, row in zip(traj.times, traj.control_traces)))
        manifest.append(path.name)
    if toggles["snapshots"]:
        path = out_dir / "snapshots.csv"
        n = plant.n
        centers = sim_cfg.grid.centers

        def snapshot_rows():
            for t, snap in zip(traj.times, traj.snapshots):
                for j, z in enumerate(centers):
                    yield [t, z, *snap[:, j]]

        _write_csv(path, ["t", "z"] + [f"x_{i + 1}" for i in range(n)],
                   snapshot_rows())
        manifest.append(path.name)

    _write_report(out_dir, "simulate", digest, {}, timing, manifest,
                  extra={"status": "completed", "gain_source": gain_source,
                         "records": int(traj.times.size),
                         "final_l2_norm": float(traj.l2_norms[-1])})
    print(f"simulated to t={sim_cfg.t_final:g} "
          f"({traj.times.size} records, final norm {traj.l2_norms[-1]:.6g})")
    for name in manifest:
        print(f"wrote {out_dir / name}")
    return 0


def cmd_verify(config_path: str, out_override: str | None,
               cert_path: str | None, tolerance: float) -> int:
    if not cert_path or cert_path in ("auto", "zero"):
        raise ConfigError("--gain: verify needs a certificate file path")
    cfg, digest = _load_config(config_path)
    plant = _build_plant(cfg)
    design = cfg.get("design", {})
    delta = _number(design, "design", "delta", positive=True, default=0.01) \
        if isinstance(design, dict) else 0.01
    stored = _load_certificate(cert_path, plant)
    out_dir, _ = _output_settings(cfg, out_override)
    out_dir.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    margins: dict[str, float] = {}

    # the design-side inequalities at the stored point
    problem = control.build_synthesis_lmis(plant, stored["mu"], stored["alpha"])
    point = lmi.Point.build(problem.variables, {
        "lyap_inv": stored["lyap_inv"].diagonal,
        "sector_inv": stored["sector_inv"].diagonal,
        "gain_scaled": stored["gain_scaled"].array,
        "coupling": stored["coupling"].array,
        "peak": np.array([stored["peak"]]),
    })
    for con, value in zip(problem.constraints,
                          lmi.problem_margins(problem, point)):
        margins[f"synthesis.{con.label}"] = value

    # the analysis-side inequalities for the stored gain itself
    lyap = invert_diag(stored["lyap_inv"])
    pa = lyap.array
    coupling = SymMatrix.symmetrized(pa @ stored["coupling"].array @ pa)
    analysis = verify_analysis(plant, stored["gain"], lyap, coupling,
                               stored["mu"], 1.0, stored["alpha"])
    for label, value in analysis.margins.items():
        margins[f"analysis.{label}"] = value

    wp = wellposedness_certificate(plant, stored["gain"], delta=delta)
    for label, value in wp.slacks.items():
        margins[f"wellposedness.{label}"] = value

    coeffs = iss_coefficients(lyap, stored["mu"], stored["alpha"], 1.0)
    drift = max(abs(coeffs.omega - stored["omega"]),
                abs(coeffs.kappa - stored["kappa"]),
                abs(coeffs.gamma - stored["gamma"]))
    margins["certificate.iss_consistency"] = -drift
    timing = time.perf_counter() - started

    worst_label = min(margins, key=margins.get)
    passed = all(v >= tolerance for v in margins.values())
    _write_report(out_dir, "verify", digest, margins, timing, [],
                  extra={"status": "pass" if passed else "fail",
                         "tolerance": tolerance,
                         "wellposedness": {"tau": wp.tau, "mu_wp": wp.mu_wp,
                                           "rho": wp.rho},
                         "iss": {"omega": coeffs.omega, "kappa": coeffs.kappa,
                                 "gamma": coeffs.gamma}})
    status = "PASS" if passed else "FAIL"
    print(f"verify: {status} (worst margin {margins[worst_label]:.3e} "
          f"at {worst_label}, tolerance {tolerance:g})")
    return 0 if passed else 2


# ---------------------------------------------------------------------------
# seeded example configs


_EXAMPLE_PLANT = {
    "lambda": [1.0, math.sqrt(2.0)],
    "H": [[0.25, 0.0], [-1.0, 0.25]],
    "B": [[1.0, 0.0], [0.0, 1.0]],
    "N": [[1.0, 0.0], [0.0, 1.0]],
    "u_max": [0.3, 0.3],
}

_EXAMPLE_DESIGN = {
    "plant": _EXAMPLE_PLANT,
    "design": {"mu": 1.0, "alpha": 0.5, "epsilon": 1e-6, "delta": 0.01},
    "simulation": {
        "M": 400,
        "cfl": 0.9,
        "t_final": 25.0,
        "disturbance": {"kind": "sinusoidal_product", "amplitude": 5.0,
                        "phases": ["sin", "cos"]},
        "initial": {"kind": "cosine_profile", "amplitude": 10.0,
                    "frequencies": [2.0, 1.0]},
    },
    "output": {"directory": "out", "norms": True, "controls": True,
               "snapshots": False},
}

_EXAMPLE_GRID = {
    "plant": _EXAMPLE_PLANT,
    "design": {
        "mu": {"min": 0.25, "max": 2.0, "count": 8},
        "alpha": {"min": 0.1, "max": 1.5, "count": 8},
        "epsilon": 1e-6,
    },
    "output": {"directory": "out"},
}


def _seed_configs(directory: Path) -> list[Path]:
    written = []
    for name, payload in (("example_design.json", _EXAMPLE_DESIGN),
                          ("example_gridsearch.json", _EXAMPLE_GRID)):
        path = directory / name
        path.write_text(json.dumps(payload, indent=2) + "\n")
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypiss",
        description="Design, verify, and simulate saturated boundary "
                    "feedback for 1-D hyperbolic transport systems.")
    parser.add_argument("--seed-configs", action="store_true",
                        help="write the bundled example configs into the "
                             "current directory and exit")
    sub = parser.add_subparsers(dest="command")
    for name, text in (("synth", "design a gain and write its certificate"),
                       ("grid", "sweep the design over (mu, alpha) grids"),
                       ("simulate", "run the closed loop and write CSVs"),
                       ("verify", "recheck a stored certificate")):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True,
                         help="path to a JSON experiment config")
        cmd.add_argument("--out", default=None,
                         help="output directory (overrides the config)")
        if name == "simulate":
            cmd.add_argument("--gain", default="auto",
                             help="gain source: certificate path, 'zero', "
                                  "or 'auto' to design one (default)")
        if name == "verify":
            cmd.add_argument("--gain", default=None,
                             help="path to the certificate to verify")
            cmd.add_argument("--tolerance", type=float, default=0.0,
                             help="smallest acceptable margin (default 0)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; fold that into the operational
        # error code and keep 0 for --help
        return 0 if e.code in (0, None) else 1

    try:
        if args.seed_configs:
            for path in _seed_configs(Path.cwd()):
                print(f"wrote {path}")
            return 0
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        if args.command == "synth":
            return cmd_synth(args.config, args.out)
        if args.command == "grid":
            return cmd_grid(args.config, args.out)
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out, args.gain)
        return cmd_verify(args.config, args.out, args.gain, args.tolerance)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return 2
    except SynthesisError as e:
        print(f"solver error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # keep the exit contract: never a raw traceback
        print(f"error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
