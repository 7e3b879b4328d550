"""Command line: scenario runs with CSV + figure output, and the
acceptance check suite.

Scenarios are reproducible parameter presets for the shipped machines and
counterexamples.  Each run writes one CSV per report (fixed column schema,
12 significant digits, deterministic bytes) plus a rendered PNG, prints a
PASS/FAIL line per checked inequality, and exits nonzero if any inequality
failed beyond tolerance.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O error,
4 inequality violation, 1 failed acceptance criteria (``check``).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import machines
from .dynamics import flat_top_schedule
from .machines import (
    CLOCK_DEFAULTS,
    ENGINE_DEFAULTS,
    FRIDGE_DEFAULTS,
    QUDIT_DEFAULTS,
    QUTRIT_DEFAULTS,
    MachineReport,
)
from .models import PassiveQuditSpec, TwoQubitParams, engine_system

__all__ = ["main", "parse_config", "build_run_config", "run_scenario",
           "write_csv", "RunConfig", "ConfigError"]


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


_GRID_KEYS = {"t_max": float, "n_steps": int, "tolerance": float}
_PAIR_KEYS = {"omega_a": float, "omega_b": float,
              "beta_a0": float, "beta_b0": float}

SCENARIOS: dict[str, dict] = {
    "fig2": {
        "description": "two-qubit refrigerator (exchange coupling, "
                       "rotated-thermal hot qubit)",
        "keys": {**_PAIR_KEYS, "g": float, "phi": float, **_GRID_KEYS},
        "defaults": {
            "omega_a": FRIDGE_DEFAULTS.omega_a,
            "omega_b": FRIDGE_DEFAULTS.omega_b,
            "beta_a0": FRIDGE_DEFAULTS.beta_a0,
            "beta_b0": FRIDGE_DEFAULTS.beta_b0,
            "g": FRIDGE_DEFAULTS.g,
            "phi": FRIDGE_DEFAULTS.phi,
            "n_steps": 2000,
        },
    },
    "fig3": {
        "description": "two-qubit engine (xy coupling, thermal bias)",
        "keys": {**_PAIR_KEYS, "gx": float, "gy": float, **_GRID_KEYS},
        "defaults": {
            "omega_a": ENGINE_DEFAULTS.omega_a,
            "omega_b": ENGINE_DEFAULTS.omega_b,
            "beta_a0": ENGINE_DEFAULTS.beta_a0,
            "beta_b0": ENGINE_DEFAULTS.beta_b0,
            "gx": ENGINE_DEFAULTS.gx,
            "gy": ENGINE_DEFAULTS.gy,
            "n_steps": 2000,
        },
    },
    "fig4": {
        "description": "engine coupling sweep: speed versus efficiency "
                       "trade-off",
        "keys": {**_PAIR_KEYS, "gy": float, "gx_start": float,
                 "gx_stop": float, "gx_step": float, **_GRID_KEYS},
        "defaults": {
            "omega_a": ENGINE_DEFAULTS.omega_a,
            "omega_b": ENGINE_DEFAULTS.omega_b,
            "beta_a0": ENGINE_DEFAULTS.beta_a0,
            "beta_b0": ENGINE_DEFAULTS.beta_b0,
            "gy": ENGINE_DEFAULTS.gy,
            "gx_start": 2.0, "gx_stop": 3.0, "gx_step": 0.1,
            "n_steps": 1600,
        },
    },
    "fig5": {
        "description": "refrigerator and engine with refined "
                       "(path-averaged-temperature) Carnot bounds",
        "keys": dict(_GRID_KEYS),
        "defaults": {"n_steps": 2000},
    },
    "appB": {
        "description": "qutrit swap counterexample: ergotropy-based "
                       "entropy production goes negative",
        "keys": {"omega_1": float, "omega_2": float, "beta_1": float,
                 "beta_2": float, "g": float, **_GRID_KEYS},
        "defaults": {
            "omega_1": QUTRIT_DEFAULTS["omega_1"],
            "omega_2": QUTRIT_DEFAULTS["omega_2"],
            "beta_1": QUTRIT_DEFAULTS["beta_1"],
            "beta_2": QUTRIT_DEFAULTS["beta_2"],
            "g": QUTRIT_DEFAULTS["g"],
            "n_steps": 2000,
        },
    },
    "appH": {
        "description": "work extraction from a passive non-thermal qudit "
                       "reproducing the engine",
        "keys": {**_PAIR_KEYS, "gx": float, "gy": float, "d": int,
                 "omega_2": float, **_GRID_KEYS},
        "defaults": {
            "omega_a": ENGINE_DEFAULTS.omega_a,
            "omega_b": ENGINE_DEFAULTS.omega_b,
            "beta_a0": ENGINE_DEFAULTS.beta_a0,
            "beta_b0": ENGINE_DEFAULTS.beta_b0,
            "gx": ENGINE_DEFAULTS.gx,
            "gy": ENGINE_DEFAULTS.gy,
            "d": QUDIT_DEFAULTS.d,
            "omega_2": QUDIT_DEFAULTS.omega_2,
            "n_steps": 2000,
        },
    },
    "appI": {
        "description": "engine coupling switched by a clock schedule "
                       "(autonomous switching, effective picture)",
        "keys": {**_PAIR_KEYS, "gx": float, "gy": float, "lead": float,
                 "rise": float, "plateau": float, **_GRID_KEYS},
        "defaults": {
            "omega_a": ENGINE_DEFAULTS.omega_a,
            "omega_b": ENGINE_DEFAULTS.omega_b,
            "beta_a0": ENGINE_DEFAULTS.beta_a0,
            "beta_b0": ENGINE_DEFAULTS.beta_b0,
            "gx": ENGINE_DEFAULTS.gx,
            "gy": ENGINE_DEFAULTS.gy,
            "lead": CLOCK_DEFAULTS["lead"],
            "rise": CLOCK_DEFAULTS["rise"],
            "plateau": CLOCK_DEFAULTS["plateau"],
            "n_steps": 10000,
        },
    },
    "custom": {
        "description": "user-specified two-qubit machine "
                       "(machine=fridge|engine plus its couplings)",
        "keys": {"machine": str, **_PAIR_KEYS, "g": float, "gx": float,
                 "gy": float, "phi": float, **_GRID_KEYS},
        "defaults": {"omega_a": 1.0, "phi": 0.0, "n_steps": 2000},
    },
}


@dataclass
class RunConfig:
    scenario: str
    params: dict
    t_max: float | None
    n_steps: int
    tolerance: float


def parse_config(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines with ``#`` comments; returns raw strings."""
    raw: dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), 1):
        payload = line.split("#", 1)[0].strip()
        if not payload:
            continue
        if "=" not in payload:
            raise ConfigError(
                f"line {number}: expected 'key = value', got {payload!r}")
        key, value = (part.strip() for part in payload.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {number}: empty key or value")
        if key in raw:
            raise ConfigError(f"line {number}: duplicate key {key!r}")
        raw[key] = value
    return raw


def _convert(key: str, value, kind):
    if isinstance(value, kind):
        return value
    try:
        if kind is int:
            as_float = float(value)
            if as_float != int(as_float):
                raise ValueError
            return int(as_float)
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(
            f"key {key!r}: expected {kind.__name__}, got {value!r}") from None


def build_run_config(scenario: str, overrides: dict) -> RunConfig:
    """Merge scenario defaults with overrides and validate keys and types."""
    if scenario not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario {scenario!r}; choose from "
            f"{', '.join(SCENARIOS)}")
    table = SCENARIOS[scenario]
    merged = dict(table["defaults"])
    for key, value in overrides.items():
        if key == "scenario":
            if str(value) != scenario:
                raise ConfigError(
                    f"config is for scenario {value!r}, requested {scenario!r}")
            continue
        if key not in table["keys"]:
            raise ConfigError(
                f"unknown key {key!r} for scenario {scenario!r}")
        merged[key] = _convert(key, value, table["keys"][key])
    if scenario == "custom":
        _validate_custom(merged)
    n_steps = int(merged.pop("n_steps", 2000))
    if n_steps < 2:
        raise ConfigError("n_steps must be at least 2")
    t_max = merged.pop("t_max", None)
    t_max = None if t_max is None else float(t_max)
    if t_max is not None and t_max <= 0:
        raise ConfigError("t_max must be positive")
    tolerance = float(merged.pop("tolerance", machines.TOLERANCE))
    return RunConfig(scenario=scenario, params=merged, t_max=t_max,
                     n_steps=n_steps, tolerance=tolerance)


def _validate_custom(merged: dict) -> None:
    machine = merged.get("machine")
    if machine is None:
        raise ConfigError("custom scenario: missing required key 'machine' "
                          "(fridge or engine)")
    if machine not in ("fridge", "engine"):
        raise ConfigError(f"custom scenario: machine must be 'fridge' or "
                          f"'engine', got {machine!r}")
    needed = ["omega_b", "beta_a0", "beta_b0"]
    needed += ["g"] if machine == "fridge" else ["gx", "gy"]
    missing = [key for key in needed if key not in merged]
    if missing:
        raise ConfigError(
            f"custom scenario: missing required keys: {', '.join(missing)}")


def _grid(cfg: RunConfig, default_t_max: float) -> np.ndarray:
    t_max = cfg.t_max if cfg.t_max is not None else default_t_max
    return np.linspace(0.0, t_max, cfg.n_steps + 1)


def _two_qubit_params(p: dict, coupling: str) -> TwoQubitParams:
    kwargs = {k: p[k] for k in ("omega_a", "omega_b", "beta_a0", "beta_b0")}
    if coupling == "exchange":
        kwargs["g"] = p["g"]
        kwargs["phi"] = p.get("phi", 0.0)
    else:
        kwargs["gx"] = p["gx"]
        kwargs["gy"] = p["gy"]
    return TwoQubitParams(**kwargs)


def run_scenario(cfg: RunConfig) -> list[tuple[str, MachineReport]]:
    """Produce the named reports for one run configuration."""
    p = cfg.params
    tol = cfg.tolerance
    if cfg.scenario == "fig2":
        params = _two_qubit_params(p, "exchange")
        grid = _grid(cfg, 4 * math.pi / params.rabi_frequency)
        return [("fig2", machines.refined_bounds(
            machines.run_refrigerator(params, grid, tol), tol))]
    if cfg.scenario == "fig3":
        params = _two_qubit_params(p, "xy")
        grid = _grid(cfg, 4 * math.pi / params.rabi_frequency)
        return [("fig3", machines.refined_bounds(
            machines.run_engine(params, grid, tol), tol))]
    if cfg.scenario == "fig4":
        base = TwoQubitParams(
            omega_a=p["omega_a"], omega_b=p["omega_b"],
            beta_a0=p["beta_a0"], beta_b0=p["beta_b0"],
            gx=p["gx_start"], gy=p["gy"])
        count = int(round((p["gx_stop"] - p["gx_start"]) / p["gx_step"])) + 1
        if count < 1:
            raise ConfigError("empty coupling sweep: check gx_start/stop/step")
        gx_values = [p["gx_start"] + k * p["gx_step"] for k in range(count)]
        grid = _grid(cfg, 4 * math.pi / base.rabi_frequency)
        reports, peaks = machines.sweep_coupling(base, gx_values, grid, tol)
        out = []
        for gx, rep in zip(gx_values, reports):
            out.append((f"fig4_gx{gx:.2f}",
                        machines.refined_bounds(rep, tol)))
        if out:
            out[0][1].extras["sweep_peaks"] = peaks
        return out
    if cfg.scenario == "fig5":
        sub_fridge = build_run_config("fig2", {"n_steps": cfg.n_steps})
        sub_engine = build_run_config("fig3", {"n_steps": cfg.n_steps})
        return [("fig5_fridge", run_scenario(sub_fridge)[0][1]),
                ("fig5_engine", run_scenario(sub_engine)[0][1])]
    if cfg.scenario == "appB":
        omegas = [0.0, p["omega_1"], p["omega_2"]]
        grid = _grid(cfg, math.pi / p["g"])
        return [("appB", machines.counterexample_qutrit(
            omegas, p["beta_1"], p["beta_2"], p["g"], grid, tol=tol))]
    if cfg.scenario == "appH":
        params = _two_qubit_params(p, "xy")
        spec = PassiveQuditSpec(d=p["d"], omega_b=p["omega_b"],
                                omega_2=p["omega_2"], beta_b0=p["beta_b0"],
                                beta_target=p["beta_a0"])
        grid = _grid(cfg, 4 * math.pi / params.rabi_frequency)
        return [("appH", machines.passive_extraction(spec, params, grid, tol))]
    if cfg.scenario == "appI":
        params = _two_qubit_params(p, "xy")
        schedule = flat_top_schedule(rise=p["rise"], plateau=p["plateau"],
                                     lead=p["lead"])
        span = 2 * p["lead"] + 2 * p["rise"] + p["plateau"]
        grid = _grid(cfg, span)
        return [("appI", machines.clock_machine(
            engine_system(params), schedule, grid, tol))]
    if cfg.scenario == "custom":
        if p["machine"] == "fridge":
            params = _two_qubit_params(p, "exchange")
            grid = _grid(cfg, 4 * math.pi / params.rabi_frequency)
            return [("custom", machines.refined_bounds(
                machines.run_refrigerator(params, grid, tol), tol))]
        params = _two_qubit_params(p, "xy")
        grid = _grid(cfg, 4 * math.pi / params.rabi_frequency)
        return [("custom", machines.refined_bounds(
            machines.run_engine(params, grid, tol), tol))]
    raise ConfigError(f"unknown scenario {cfg.scenario!r}")


def _fmt(x: float) -> str:
    if x is None or math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.11e}"


def write_csv(report: MachineReport, path: Path) -> None:
    """Fixed-schema per-sample table; deterministic bytes."""
    a, b = report.labels[0], report.labels[1]
    columns = ["t", "E_A", "E_B", "E_int", "S_A", "S_B", "beta_A", "beta_B",
               "Q_A", "Q_B", "W_A", "W_B", "I_AB", "sigma_A", "sigma_B",
               "clausius_sum", "fom", "carnot", "refined_carnot"]
    with_wc = report.rows[0].w_c is not None
    if with_wc:
        columns.append("W_C")
    refined = report.refined_carnot
    lines = [",".join(columns)]
    for k, row in enumerate(report.rows):
        values = [
            row.t,
            row.energy[a], row.energy[b], row.e_int,
            row.entropy[a], row.entropy[b],
            row.beta[a], row.beta[b],
            row.heat[a], row.heat[b],
            row.work[a], row.work[b],
            row.i_tot, row.sigma[a], row.sigma[b], row.clausius_sum,
            float(report.fom[k]),
            report.carnot,
            float(refined[k]) if refined is not None else math.nan,
        ]
        if with_wc:
            values.append(row.w_c)
        lines.append(",".join(_fmt(v) for v in values))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _print_summary(name: str, report: MachineReport,
                   tolerance: float) -> bool:
    """Emit the PASS/FAIL lines for one report; returns overall pass."""
    header = f"[{name}] scenario={report.scenario}"
    if report.fom_name is not None and np.isfinite(report.carnot):
        header += f" carnot_{report.fom_name}={report.carnot:.6g}"
    omega = report.params.get("omega_a")
    if all(k in report.params for k in ("omega_a", "omega_b")):
        try:
            params = TwoQubitParams(**{
                k: report.params[k]
                for k in ("omega_a", "omega_b", "beta_a0", "beta_b0",
                          "g", "gx", "gy", "phi")
                if report.params.get(k) is not None})
            header += f" Omega={params.rabi_frequency:.6g}"
        except (TypeError, ValueError):
            pass
    print(header)
    failed = {v.check for v in report.violations}
    for check in sorted(report.check_margins):
        margin = report.check_margins[check]
        status = "FAIL" if check in failed else "PASS"
        print(f"  {status} {check}: worst margin {margin:+.3e}")
    if "sigma_erg" in report.extras:
        sig = report.extras["sigma_erg"]
        print(f"  INFO sigma_erg: min {np.min(sig):+.3e} (expected negative), "
              f"at swap {report.extras['sigma_erg_at_swap']:+.3e}")
    if "sweep_peaks" in report.extras:
        for peak in report.extras["sweep_peaks"]:
            print(f"  INFO first peak gx={peak.gx:.2f}: "
                  f"t={peak.t_peak:.4f} value={peak.value:.6f}")
    if "end_work_residual" in report.extras:
        print(f"  INFO schedule work: W_C(end)="
              f"{report.extras['w_c'][-1]:+.6e}, identity residual "
              f"{report.extras['end_work_residual']:.3e}")
    return not report.violations


def _cmd_run(args) -> int:
    overrides: dict = {}
    if args.config:
        try:
            overrides.update(parse_config(Path(args.config).read_text()))
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 3
    for item in args.set or []:
        if "=" not in item:
            print(f"error: --set expects key=value, got {item!r}",
                  file=sys.stderr)
            return 2
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.steps is not None:
        overrides["n_steps"] = args.steps
    if args.tmax is not None:
        overrides["t_max"] = args.tmax
    try:
        cfg = build_run_config(args.scenario, overrides)
        named_reports = run_scenario(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out)
    all_passed = True
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, report in named_reports:
            csv_path = out_dir / f"{name}.csv"
            write_csv(report, csv_path)
            print(f"wrote {csv_path}")
            if not args.no_figures:
                from .plots import render_report
                png_path = out_dir / f"{name}.png"
                render_report(report, png_path)
                print(f"wrote {png_path}")
            all_passed &= _print_summary(name, report, cfg.tolerance)
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return 3
    return 0 if all_passed else 4


def _cmd_list() -> int:
    for name, table in SCENARIOS.items():
        print(f"{name}: {table['description']}")
        defaults = ", ".join(f"{k}={v:.6g}" if isinstance(v, float)
                             else f"{k}={v}"
                             for k, v in table["defaults"].items())
        print(f"  defaults: {defaults or '(none)'}")
    return 0


def _cmd_check(only: str | None) -> int:
    from .acceptance import run_all
    results = run_all(only=only)
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.number:2d} {res.name}: {res.detail}")
        failed += not res.passed
    print(f"{len(results) - failed}/{len(results)} criteria passed")
    return 0 if failed == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qthermo",
        description="Exact quantum thermodynamics of small composite "
                    "systems: machines, ledgers, bounds.",
        epilog="exit codes: 0 ok, 2 config, 3 I/O, 4 inequality violation")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario and write CSV/PNG")
    p_run.add_argument("scenario", choices=sorted(SCENARIOS))
    p_run.add_argument("--config", help="flat key=value config file")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--steps", type=int, help="override n_steps")
    p_run.add_argument("--tmax", type=float, help="override t_max")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one parameter (repeatable)")
    p_run.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering")
    sub.add_parser("list", help="list scenarios and their defaults")
    p_check = sub.add_parser("check", help="run the acceptance suite")
    p_check.add_argument("--only", help="substring filter on criterion names")
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "list":
        return _cmd_list()
    return _cmd_check(args.only)


if __name__ == "__main__":
    sys.exit(main())
