"""Command-line front end.

Three subcommands:

  modes      enumerate the operation-mode table for a configured cluster
  solve      run the continuation solver (optionally sweeping revolution
             counts) and write solution.json plus trajectory.csv
  propagate  integrate the augmented dynamics from a given costate file,
             no solving

Every run writes manifest.json (config snapshot, version, seed, timestamps,
output names). Solution and trajectory files carry no timestamps, so two runs
with the same config and seed produce byte-identical results.

Exit codes: 0 success, 2 configuration or input error, 3 solver
non-convergence, 4 runtime (propagation) failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, _core
from .adjoint import evaluate_control, pack
from .config import ConfigError, Problem, build_problem, load_config
from .control import SmoothingParams
from .modes import ModeTable, enumerate_mixed
from .solver import (
    ContinuationResult,
    SolverParams,
    continuation_solve,
    nrev_sweep,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_RUNTIME = 4

_SCHEMA_VERSION = 1


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _jsonify(value):
    """Coerce numpy scalars/arrays and non-finite floats for strict JSON."""
    if isinstance(value, dict):
        return {key: _jsonify(val) for key, val in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(val) for val in value]
    if isinstance(value, np.ndarray):
        return [_jsonify(val) for val in value.tolist()]
    if isinstance(value, (float, np.floating)):
        val = float(value)
        return val if math.isfinite(val) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonify(doc), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _channel_names(table: ModeTable) -> list[str]:
    names = []
    for ch in table.channels:
        setting = ch.setting.lower()
        names.append(setting if ch.slot < 0 else f"e{ch.slot}_{setting}")
    return names


def _write_modes_csv(path: Path, table: ModeTable, same_type: bool) -> None:
    n_slots = table.cluster.n_engines
    with open(path, "w") as fh:
        if same_type:
            fh.write("mode_index,p_used_w,n_at_pmax,n_at_pmin,mdot_full_mg_s\n")
            for mode in table.modes:
                fh.write(f"{mode.index},{_fmt(mode.p_used_w)},{mode.n_at_pmax},"
                         f"{mode.n_at_pmin},{_fmt(mode.mdot_full_mg_s)}\n")
        else:
            slots = ",".join(f"setting_e{i}" for i in range(n_slots))
            fh.write(f"mode_index,p_used_w,{slots},mdot_full_mg_s\n")
            for mode in table.modes:
                settings = ",".join(s.lower() for s in mode.settings)
                fh.write(f"{mode.index},{_fmt(mode.p_used_w)},{settings},"
                         f"{_fmt(mode.mdot_full_mg_s)}\n")


def _write_trajectory_csv(path: Path, problem: Problem, rho: float,
                          t_rec, z_rec) -> list[str]:
    """Tabulate the recorded trajectory with per-channel diagnostics."""
    units = problem.units
    ctx = problem.ctx.with_rho(SmoothingParams(rho_b=rho, rho_c=rho))
    names = _channel_names(problem.table)
    thrust_mn_per_can = 1.0 / units.thrust_to_canonical(1.0)
    day_per_can = units.tu_s / 86400.0

    header = (["t_days", "p_au", "f", "g", "h", "k", "l_rad", "r_au", "m_kg",
               "thrust_mN"]
              + [f"S_{n}" for n in names] + [f"zeta_{n}" for n in names]
              + ["engaged_mode", "w_max"])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for t, z in zip(t_rec, z_rec):
            decision = evaluate_control(z, float(t), ctx)
            p, f, g, h, k, l = z[0:6]
            w = 1.0 + f * math.cos(l) + g * math.sin(l)
            row = [_fmt(t * day_per_can), _fmt(p), _fmt(f), _fmt(g), _fmt(h),
                   _fmt(k), _fmt(l), _fmt(p / w), _fmt(z[6] * units.mass_ref_kg),
                   _fmt(decision.thrust * thrust_mn_per_can)]
            row += [_fmt(s) for s in decision.s_values]
            row += [_fmt(zt) for zt in decision.zetas]
            row += [str(decision.engaged_mode), _fmt(decision.w_max)]
            fh.write(",".join(row) + "\n")
    return header


def _write_manifest(out_dir: Path, command: str, argv, config_path, problem,
                    seed, started: str, outputs: dict) -> None:
    doc = {
        "schema_version": _SCHEMA_VERSION,
        "tool": "csctraj",
        "version": __version__,
        "command": command,
        "argv": list(argv) if argv is not None else sys.argv[1:],
        "config_path": str(config_path),
        "config": problem.config.raw,
        "seed": seed,
        "started_utc": started,
        "finished_utc": _utc_now(),
        "outputs": outputs,
    }
    _write_json(out_dir / "manifest.json", doc)


def _solver_params(problem: Problem, args) -> SolverParams:
    params = problem.config.solver
    updates = {}
    if getattr(args, "rho_final", None) is not None:
        updates["rho_final"] = args.rho_final
    if getattr(args, "schedule_steps", None) is not None:
        updates["schedule_steps"] = args.schedule_steps
    return replace(params, **updates) if updates else params


def _continuation_doc(result: ContinuationResult, n_rev: int) -> dict:
    doc = {
        "n_rev": n_rev,
        "success": result.success,
        "residual_inf": result.residual_inf,
        "rho_final": result.rho_final,
        "rho_reached": result.rho_reached,
        "m_final_kg": result.m_final_kg,
        "mass_fraction": result.mass_fraction,
        "trial": result.trial,
        "nfev_total": result.nfev_total,
        "message": result.message,
        "trace": result.trace,
    }
    if result.eta is not None:
        doc["eta0"] = [float(v) for v in result.eta]
    return doc


def cmd_modes(args, argv) -> int:
    started = _utc_now()
    problem = build_problem(load_config(args.config))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    same_type = problem.config.cluster.kind == "same_type"
    table = problem.table
    _write_modes_csv(out_dir / "modes.csv", table, same_type)
    outputs = {"modes": "modes.csv"}

    if args.raw:
        raw_table = enumerate_mixed(problem.catalog, problem.config.cluster,
                                    problem.cap_w, filtered=False)
        _write_modes_csv(out_dir / "modes_raw.csv", raw_table, same_type=False)
        outputs["modes_raw"] = "modes_raw.csv"
        print(f"raw (pre-filter) modes: {raw_table.n_modes}")

    first = table.modes[0]
    last = table.modes[-1]
    print(f"{table.n_modes} operation modes under cap {problem.cap_w:.3f} W")
    print(f"first: index {first.index}, p_used {first.p_used_w} W")
    print(f"last:  index {last.index}, p_used {last.p_used_w} W")
    _write_manifest(out_dir, "modes", argv, args.config, problem, None,
                    started, outputs)
    return EXIT_OK


def cmd_solve(args, argv) -> int:
    started = _utc_now()
    problem = build_problem(load_config(args.config))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = _solver_params(problem, args)
    seed = args.seed

    sweep_doc = None
    if args.sweep_nrev:
        n_revs = _parse_sweep(args.sweep_nrev)
        sweep = nrev_sweep(problem.setup, n_revs, params, seed=seed)
        items = [{"n_rev": item.n_rev,
                  **_continuation_doc(item.result, item.n_rev)}
                 for item in sweep.items]
        sweep_doc = {
            "items": items,
            "best_n_rev": sweep.best.n_rev if sweep.best else None,
        }
        if sweep.best is None:
            _write_json(out_dir / "diagnostics.json", {
                "message": "no revolution count converged",
                "sweep": sweep_doc, "seed": seed})
            print("solver failed: no revolution count converged", file=sys.stderr)
            return EXIT_SOLVER
        best_item = sweep.best
        result = best_item.result
        n_rev = best_item.n_rev
        setup = problem.setup.with_n_rev(n_rev)
    else:
        n_rev = problem.config.boundary.n_rev
        setup = problem.setup
        result = continuation_solve(setup, params, seed=seed)
        if not result.success:
            _write_json(out_dir / "diagnostics.json", {
                "message": result.message, "trace": result.trace,
                "seed": seed, "name": problem.config.name,
                "rho_reached": result.rho_reached,
                "m_final_kg": result.m_final_kg,
                "eta_partial": (list(result.eta)
                                if result.eta is not None else None)})
            print(f"solver failed: {result.message}", file=sys.stderr)
            return EXIT_SOLVER

    solution = {
        "schema_version": _SCHEMA_VERSION,
        "name": problem.config.name,
        "seed": seed,
        "rho_final": params.rho_final,
        "rho_reached": result.rho_reached,
        "schedule_steps": params.schedule_steps,
        "n_rev": n_rev,
        "eta0": [float(v) for v in result.eta],
        "residual": [float(v) for v in _final_residual(setup, result, params)],
        "residual_inf": result.residual_inf,
        "m_final_kg": result.m_final_kg,
        "mass_fraction": result.mass_fraction,
        "trial": result.trial,
        "nfev_total": result.nfev_total,
        "trace": result.trace,
        "sweep": sweep_doc,
    }
    _write_json(out_dir / "solution.json", solution)

    rho = params.rho_final
    ctx = setup.ctx.with_rho(SmoothingParams(rho_b=rho, rho_c=rho))
    flat = _core.flatten_context(ctx)
    z0 = pack(setup.x0, 1.0, result.eta[:6], result.eta[6])
    prop = _core.propagate(z0, 0.0, setup.tof, flat, rtol=params.rtol,
                           atol=params.atol, record=True,
                           max_steps=params.max_steps)
    if prop.status != _core.STATUS_OK:
        print(f"propagation of converged solution failed (status {prop.status})",
              file=sys.stderr)
        return EXIT_RUNTIME
    _write_trajectory_csv(out_dir / "trajectory.csv", problem, rho,
                          prop.t_rec, prop.z_rec)

    print(f"converged: m_f = {result.m_final_kg:.3f} kg "
          f"(residual {result.residual_inf:.3e}, trial {result.trial}, "
          f"N_rev {n_rev})")
    _write_manifest(out_dir, "solve", argv, args.config, problem, seed, started,
                    {"solution": "solution.json", "trajectory": "trajectory.csv"})
    return EXIT_OK


def _final_residual(setup, result: ContinuationResult, params: SolverParams):
    if result.z_end is None:
        return [math.nan] * 7
    out = np.empty(7)
    out[0:6] = result.z_end[0:6] - setup.x_target
    out[6] = result.z_end[13] + 1.0
    return out


def _parse_sweep(text: str) -> list[int]:
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError(f"empty range {text!r}")
            return list(range(lo, hi + 1))
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"--sweep-nrev: {exc}") from exc


def _read_eta0(path: str) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    values = None
    try:
        doc = json.loads(text)
        if isinstance(doc, dict):
            values = doc.get("eta0")
        elif isinstance(doc, list):
            values = doc
    except json.JSONDecodeError:
        values = text.split()
    if values is None:
        raise ConfigError(f"{path}: expected a JSON array, an object with an "
                          f"'eta0' field, or whitespace-separated numbers")
    try:
        eta = np.array([float(v) for v in values], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: non-numeric costate value: {exc}") from exc
    if eta.shape != (7,) or not np.all(np.isfinite(eta)):
        raise ConfigError(f"{path}: expected 7 finite values, got {eta.tolist()}")
    return eta


def cmd_propagate(args, argv) -> int:
    started = _utc_now()
    problem = build_problem(load_config(args.config))
    eta = _read_eta0(args.eta0)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = _solver_params(problem, args)
    rho = params.rho_final

    setup = problem.setup
    ctx = setup.ctx.with_rho(SmoothingParams(rho_b=rho, rho_c=rho))
    flat = _core.flatten_context(ctx)
    z0 = pack(setup.x0, 1.0, eta[:6], eta[6])
    prop = _core.propagate(z0, 0.0, setup.tof, flat, rtol=params.rtol,
                           atol=params.atol, record=True,
                           max_steps=params.max_steps)
    if prop.status != _core.STATUS_OK:
        print(f"propagation failed with status {prop.status} at "
              f"t = {prop.t_end:.6f} canonical", file=sys.stderr)
        return EXIT_RUNTIME

    _write_trajectory_csv(out_dir / "trajectory.csv", problem, rho,
                          prop.t_rec, prop.z_rec)
    m_f = prop.z_end[6] * problem.units.mass_ref_kg
    print(f"propagated {len(prop.t_rec)} steps, m_f = {m_f:.3f} kg")
    _write_manifest(out_dir, "propagate", argv, args.config, problem, None,
                    started, {"trajectory": "trajectory.csv"})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csctraj",
        description="Fuel-optimal low-thrust rendezvous with discrete-mode "
                    "engine clusters")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=False, solver_flags=False):
        p.add_argument("--config", required=True, help="problem JSON document")
        p.add_argument("--out-dir", default=".", help="output directory")
        if seed:
            p.add_argument("--seed", type=int, default=0,
                           help="RNG seed for multi-start (default 0)")
        if solver_flags:
            p.add_argument("--rho-final", type=float, default=None,
                           help="override the final smoothing width")
            p.add_argument("--schedule-steps", type=int, default=None,
                           help="override the continuation step count")

    p_modes = sub.add_parser("modes", help="enumerate the operation-mode table")
    common(p_modes)
    p_modes.add_argument("--raw", action="store_true",
                         help="also write the pre-filter table (modes_raw.csv)")

    p_solve = sub.add_parser("solve", help="solve the rendezvous problem")
    common(p_solve, seed=True, solver_flags=True)
    p_solve.add_argument("--sweep-nrev", default=None, metavar="A..B",
                         help="sweep revolution counts (e.g. 0..3 or 0,2,3)")

    p_prop = sub.add_parser("propagate",
                            help="propagate a costate guess without solving")
    common(p_prop, solver_flags=True)
    p_prop.add_argument("eta0", help="file with 7 departure costates (JSON "
                                     "array, object with 'eta0', or plain text)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"modes": cmd_modes, "solve": cmd_solve,
                "propagate": cmd_propagate}
    try:
        return handlers[args.command](args, argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
