"""Command-line front end: scenario files in, plans/validations/sweeps out.

Exit codes are a stable contract: 0 success, 2 I/O failure, 3 unservable
scenario, 4 configuration/schema error, 5 every run of a sweep failed.
All numbers are SI (Hz, W, m, bit/s) except explicitly suffixed dBm/dBi/dB
keys, which are converted on load.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .channel import ChannelParams, db_to_linear, dbm_to_watt
from .coverage import UnservableError, build_spheres, enumerate_zones
from .geometry import FeasibleBox, Point3
from .planner import CapacityDeadlockError, plan_deployment, validate_deployment
from .positioning import SwarmConfig
from .scenario import (
    UE,
    BaselineKind,
    ConfigError,
    Scenario,
    demand_satisfaction_ratio,
    evaluate_throughput,
    generate_scenario,
    run_baseline,
    run_experiment,
)

EXIT_OK = 0
EXIT_IO = 2
EXIT_UNSERVABLE = 3
EXIT_CONFIG = 4
EXIT_ALL_RUNS_FAILED = 5


def _require_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(unknown)}")


_CHANNEL_KEYS = {
    "carrier_frequency_hz", "tx_power_dbm", "tx_power_w",
    "tx_antenna_gain_dbi", "tx_antenna_gain",
    "rx_antenna_gain_dbi", "rx_antenna_gain",
    "noise_floor_dbm", "noise_floor_bandwidth_hz", "noise_spectral_density",
    "c1", "c2", "mu_los_db", "mu_los", "mu_nlos_db", "mu_nlos",
    "los_threshold",
}

_PSO_KEYS = {
    "particle_count", "max_iterations", "inertia_weight",
    "cognitive_coeff", "social_coeff", "position_precision_m",
    "early_stop_patience",
}

_POLICY_KEYS = {"bandwidth", "fixed_bandwidth_hz", "grid_hz"}


def parse_channel(section: dict) -> ChannelParams:
    _require_keys(section, _CHANNEL_KEYS, "channel section")
    if "tx_power_dbm" in section and "tx_power_w" in section:
        raise ConfigError("give tx power as dBm or W, not both")
    kwargs: dict = {}
    if "carrier_frequency_hz" in section:
        kwargs["carrier_frequency_hz"] = float(section["carrier_frequency_hz"])
    if "tx_power_dbm" in section:
        kwargs["tx_power_w"] = dbm_to_watt(float(section["tx_power_dbm"]))
    if "tx_power_w" in section:
        kwargs["tx_power_w"] = float(section["tx_power_w"])
    for side in ("tx", "rx"):
        dbi, lin = f"{side}_antenna_gain_dbi", f"{side}_antenna_gain"
        if dbi in section and lin in section:
            raise ConfigError(f"give {side} antenna gain as dBi or linear, not both")
        if dbi in section:
            kwargs[lin] = db_to_linear(float(section[dbi]))
        if lin in section:
            kwargs[lin] = float(section[lin])
    if "noise_spectral_density" in section and "noise_floor_dbm" in section:
        raise ConfigError("give noise as a floor (dBm over a bandwidth) or a density, not both")
    if "noise_floor_dbm" in section:
        bw = float(section.get("noise_floor_bandwidth_hz", 20e6))
        kwargs["noise_spectral_density"] = dbm_to_watt(float(section["noise_floor_dbm"])) / bw
    if "noise_spectral_density" in section:
        kwargs["noise_spectral_density"] = float(section["noise_spectral_density"])
    for plain in ("c1", "c2", "los_threshold"):
        if plain in section:
            kwargs[plain] = float(section[plain])
    for mu in ("mu_los", "mu_nlos"):
        db_key = f"{mu}_db"
        if db_key in section and mu in section:
            raise ConfigError(f"give {mu} as dB or linear, not both")
        if db_key in section:
            kwargs[mu] = db_to_linear(float(section[db_key]))
        if mu in section:
            kwargs[mu] = float(section[mu])
    try:
        return ChannelParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_pso(section: dict, seed: int) -> SwarmConfig:
    _require_keys(section, _PSO_KEYS, "pso section")
    kwargs = {k: section[k] for k in section}
    for int_key in ("particle_count", "max_iterations", "early_stop_patience"):
        if int_key in kwargs:
            kwargs[int_key] = int(kwargs[int_key])
    for f_key in ("inertia_weight", "cognitive_coeff", "social_coeff", "position_precision_m"):
        if f_key in kwargs:
            kwargs[f_key] = float(kwargs[f_key])
    try:
        return SwarmConfig(seed=seed, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def scenario_from_dict(doc: dict) -> tuple[Scenario, ChannelParams, SwarmConfig]:
    _require_keys(doc, {"label", "seed", "venue", "b_max_hz", "ues", "channel", "pso", "policy"},
                  "scenario document")
    for key in ("seed", "venue", "ues"):
        if key not in doc:
            raise ConfigError(f"scenario document is missing {key!r}")
    venue_doc = doc["venue"]
    _require_keys(venue_doc, {"x", "y", "z_uav"}, "venue section")
    try:
        venue = FeasibleBox(
            x=(float(venue_doc["x"][0]), float(venue_doc["x"][1])),
            y=(float(venue_doc["y"][0]), float(venue_doc["y"][1])),
            z=(float(venue_doc["z_uav"][0]), float(venue_doc["z_uav"][1])),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid venue section: {exc}") from exc

    ues = []
    for n, ue_doc in enumerate(doc["ues"]):
        _require_keys(ue_doc, {"x", "y", "z", "demand_bps", "bandwidth_hz"}, f"ues[{n}]")
        try:
            ues.append(UE(
                position=Point3(float(ue_doc["x"]), float(ue_doc["y"]), float(ue_doc.get("z", 0.0))),
                demand_bps=float(ue_doc["demand_bps"]),
                bandwidth_hz=float(ue_doc["bandwidth_hz"]) if "bandwidth_hz" in ue_doc else None,
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid ues[{n}]: {exc}") from exc

    policy_doc = doc.get("policy", {})
    _require_keys(policy_doc, _POLICY_KEYS, "policy section")
    policy = policy_doc.get("bandwidth", "demand-fit")

    scenario = Scenario(
        label=str(doc.get("label", "")),
        seed=int(doc["seed"]),
        venue=venue,
        ues=tuple(ues),
        b_max_hz=float(doc.get("b_max_hz", 160e6)),
        bandwidth_policy=str(policy),
        fixed_bandwidth_hz=float(policy_doc.get("fixed_bandwidth_hz", 20e6)),
        bandwidth_grid_hz=float(policy_doc.get("grid_hz", 1e3)),
    )
    scenario.validate()
    params = parse_channel(doc.get("channel", {}))
    swarm = parse_pso(doc.get("pso", {}), seed=scenario.seed)
    return scenario, params, swarm


def scenario_to_dict(scenario: Scenario) -> dict:
    doc = {
        "label": scenario.label,
        "seed": scenario.seed,
        "venue": {
            "x": [scenario.venue.x[0], scenario.venue.x[1]],
            "y": [scenario.venue.y[0], scenario.venue.y[1]],
            "z_uav": [scenario.venue.z[0], scenario.venue.z[1]],
        },
        "b_max_hz": scenario.b_max_hz,
        "ues": [
            {
                "x": ue.position.x, "y": ue.position.y, "z": ue.position.z,
                "demand_bps": ue.demand_bps,
                **({"bandwidth_hz": ue.bandwidth_hz} if ue.bandwidth_hz is not None else {}),
            }
            for ue in scenario.ues
        ],
        "channel": {},
        "pso": {},
        "policy": {
            "bandwidth": scenario.bandwidth_policy,
            "fixed_bandwidth_hz": scenario.fixed_bandwidth_hz,
            "grid_hz": scenario.bandwidth_grid_hz,
        },
    }
    return doc


def _apply_config_overrides(path, scenario, params, swarm):
    doc = _load_json(path)
    _require_keys(doc, {"channel", "pso", "policy", "seed"}, "config document")
    if "channel" in doc:
        params = parse_channel(doc["channel"])
    if "seed" in doc:
        scenario = replace(scenario, seed=int(doc["seed"]))
    if "pso" in doc:
        swarm = parse_pso(doc["pso"], seed=scenario.seed)
    if "policy" in doc:
        _require_keys(doc["policy"], _POLICY_KEYS, "policy section")
        updates: dict = {}
        if "bandwidth" in doc["policy"]:
            updates["bandwidth_policy"] = str(doc["policy"]["bandwidth"])
        if "fixed_bandwidth_hz" in doc["policy"]:
            updates["fixed_bandwidth_hz"] = float(doc["policy"]["fixed_bandwidth_hz"])
        if "grid_hz" in doc["policy"]:
            updates["bandwidth_grid_hz"] = float(doc["policy"]["grid_hz"])
        scenario = replace(scenario, **updates)
        scenario.validate()
    return scenario, params, swarm


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return doc


class _IOFailure(Exception):
    pass


def _write_text(path, text: str) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from exc


def _dump_json(path, obj) -> None:
    _write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def deployment_to_dict(deployment, report) -> dict:
    z = np.asarray(deployment.association.z)
    assoc = []
    for i in range(z.shape[0]):
        for k in np.flatnonzero(z[i] == 1):
            assoc.append({
                "ue": int(i),
                "uav": int(k),
                "bandwidth_hz": float(deployment.link_bandwidth_hz[i]),
                "rate_bps": float(deployment.link_rate_bps[i]),
            })
    return {
        "uav_count": deployment.uav_count,
        "positions": [{"x": p.x, "y": p.y, "z": p.z} for p in deployment.uav_positions],
        "assoc": assoc,
        "aggregate_bps": deployment.aggregate_bps,
        "validation": {
            "pass": report.passed,
            "constraints": [
                {"name": c.name, "residual": c.residual, "pass": c.passed}
                for c in report.checks
            ],
        },
    }


def cmd_generate(args) -> int:
    scenario = generate_scenario(args.kind, args.variant, args.seed)
    _dump_json(args.out, scenario_to_dict(scenario))
    return EXIT_OK


def cmd_plan(args) -> int:
    scenario, params, swarm = scenario_from_dict(_load_json(args.scenario))
    if args.config:
        scenario, params, swarm = _apply_config_overrides(args.config, scenario, params, swarm)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
        swarm = replace(swarm, seed=args.seed)

    if args.dump_zones:
        spheres = build_spheres(scenario, params)
        zones = enumerate_zones(spheres, scenario.venue)
        _dump_json(args.dump_zones, [
            {
                "members": list(zone.members),
                "witness": {"x": zone.witness.x, "y": zone.witness.y, "z": zone.witness.z},
                "slack_m": zone.slack,
            }
            for zone in zones
        ])

    pool: list | None = [] if args.dump_pool else None
    trace: list | None = [] if args.pso_trace else None
    if args.baseline:
        kind = BaselineKind(args.baseline)
        deployment = run_baseline(kind, scenario, params, swarm)
    else:
        deployment = plan_deployment(scenario, params, swarm, pool=pool, trace=trace)

    report = validate_deployment(deployment, scenario, params)
    aggregate, delivered = evaluate_throughput(deployment, scenario, params)
    doc = deployment_to_dict(deployment, report)
    doc["aggregate_bps"] = aggregate
    doc["demand_satisfied_ratio"] = demand_satisfaction_ratio(delivered, scenario)
    _dump_json(args.out, doc)

    if args.dump_pool and pool is not None:
        _dump_json(args.dump_pool, [
            {
                "members": list(members),
                "position": {"x": s.uav_position.x, "y": s.uav_position.y, "z": s.uav_position.z},
                "fitness_bps": s.fitness,
                "feasible": s.feasible,
            }
            for members, s in pool
        ])
    if args.pso_trace and trace is not None:
        lines = ["members,iteration,gbest_fitness_bps,x_m,y_m,z_m"]
        for members, rows in trace:
            tag = "|".join(str(m) for m in members)
            for it, val, pos in rows:
                lines.append(f"{tag},{it},{val!r},{pos[0]!r},{pos[1]!r},{pos[2]!r}")
        _write_text(args.pso_trace, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    params = ChannelParams()
    swarm = None
    overrides = None
    if args.config:
        doc = _load_json(args.config)
        _require_keys(doc, {"channel", "pso", "policy", "seed"}, "config document")
        if "channel" in doc:
            params = parse_channel(doc["channel"])
        if "pso" in doc:
            swarm = parse_pso(doc["pso"], seed=args.base_seed)
        if "policy" in doc:
            _require_keys(doc["policy"], _POLICY_KEYS, "policy section")
            overrides = {}
            if "bandwidth" in doc["policy"]:
                overrides["bandwidth_policy"] = str(doc["policy"]["bandwidth"])
            if "fixed_bandwidth_hz" in doc["policy"]:
                overrides["fixed_bandwidth_hz"] = float(doc["policy"]["fixed_bandwidth_hz"])
            if "grid_hz" in doc["policy"]:
                overrides["bandwidth_grid_hz"] = float(doc["policy"]["grid_hz"])

    table = run_experiment(
        args.kind, params, swarm, n_runs=args.runs, base_seed=args.base_seed,
        scenario_overrides=overrides,
    )
    import os

    try:
        os.makedirs(args.out_dir, exist_ok=True)
        table.write_csv(os.path.join(args.out_dir, f"runs_{table.kind}.csv"))
        table.write_summary_csv(os.path.join(args.out_dir, f"summary_{table.kind}.csv"))
        _write_plot_data(table, args.out_dir)
    except OSError as exc:
        raise _IOFailure(str(exc)) from exc

    if all(r.error for r in table.rows):
        print("every run failed", file=sys.stderr)
        return EXIT_ALL_RUNS_FAILED
    return EXIT_OK


def _write_plot_data(table, out_dir) -> None:
    """Per-figure CSVs: mean UAV count and mean throughput per variant/method."""
    import os

    summary = table.summary()
    variants = sorted({row["variant"] for row in summary})
    methods = ("planner", "fixed-altitude", "fixed-n")
    for metric, fname in (
        ("uav_count_mean", f"plot_uav_count_{table.kind}.csv"),
        ("aggregate_bps_mean", f"plot_throughput_{table.kind}.csv"),
    ):
        lines = ["variant," + ",".join(methods)]
        for v in variants:
            cells = []
            for m in methods:
                hit = [r for r in summary if r["variant"] == v and r["method"] == m]
                cells.append(repr(hit[0][metric]) if hit else "nan")
            lines.append(f"{v!r}," + ",".join(cells))
        _write_text(os.path.join(out_dir, fname), "\n".join(lines) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavplan",
        description="Plan minimum-count UAV access point deployments for ground traffic demands.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a scenario file for a published family")
    gen.add_argument("--kind", required=True, choices=["A", "B", "C"])
    gen.add_argument("--variant", required=True, type=int)
    gen.add_argument("--seed", required=True, type=int)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_generate)

    plan = sub.add_parser("plan", help="plan a deployment for a scenario file")
    plan.add_argument("--scenario", required=True)
    plan.add_argument("--config", default=None)
    plan.add_argument("--out", required=True)
    plan.add_argument("--seed", type=int, default=None)
    plan.add_argument("--baseline", choices=[k.value for k in BaselineKind], default=None)
    plan.add_argument("--dump-zones", default=None, metavar="PATH")
    plan.add_argument("--pso-trace", default=None, metavar="PATH")
    plan.add_argument("--dump-pool", default=None, metavar="PATH")
    plan.set_defaults(func=cmd_plan)

    sweep = sub.add_parser("sweep", help="run a seeded experiment sweep to CSV")
    sweep.add_argument("--kind", required=True, choices=["A", "B", "C"])
    sweep.add_argument("--config", default=None)
    sweep.add_argument("--runs", type=int, default=30)
    sweep.add_argument("--base-seed", type=int, default=0)
    sweep.add_argument("--out-dir", required=True)
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except UnservableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSERVABLE
    except (ConfigError, CapacityDeadlockError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
