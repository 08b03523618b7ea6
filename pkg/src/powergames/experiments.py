"""Experiment orchestration: single-game runs, channel-state sweeps,
action-set sweeps over type spaces, payoff-region export, file emission.

Every emitted file carries a metadata block (config hash, seeds, tool
version) and contains only seeded, deterministic numbers: rerunning the
same config byte-reproduces the payloads. CSV floats use ``repr`` (shortest
round-trip decimal form).
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .communication import (
    GameFamily,
    build_type_space,
    device_to_json,
    per_type_tensors,
    solve_commeq,
)
from .config import ExperimentConfig
from .correlated import (
    ce_payoff_region,
    ce_violation,
    region_to_csv,
    solve_directional_ce,
    solve_welfare_ce,
)
from .errors import ConfigError
from .geometry import convex_hull_ccw, dedup_points
from .model import (
    ChannelMatrix,
    GameInstance,
    PayoffTensor,
    build_payoff_tensor,
    build_power_grid,
    grid_from_levels,
    nested_db_levels,
)
from .nash import enumerate_pure_nash, mixed_nash_2x2
from .regret import rm_run


def _fmt(v: float) -> str:
    return repr(float(v))


def power_grids(cfg: ExperimentConfig, levels: int | None = None,
                nested: bool = False):
    """Per-player power grids; ``levels`` overrides the configured count."""
    p = cfg.power
    if p.levels_linear is not None:
        return (grid_from_levels(p.levels_linear),) * cfg.players
    m = levels if levels is not None else p.levels
    if nested:
        dbs = sorted(nested_db_levels(p.min_db, p.max_db, m))
        grid = grid_from_levels([10.0 ** (d / 10.0) for d in dbs])
    else:
        grid = build_power_grid(p.min_db, p.max_db, m)
    return (grid,) * cfg.players


def game_from_config(cfg: ExperimentConfig, gains) -> GameInstance:
    chan = ChannelMatrix.from_array(gains)
    return GameInstance(chan, power_grids(cfg), cfg.alpha, cfg.noise, cfg.packet_len)


def single_game_tensor(cfg: ExperimentConfig) -> PayoffTensor:
    if cfg.channel.matrix is None:
        raise ConfigError(
            "this command needs an explicit channel.matrix; "
            "grid-mode channels are for the sweep command"
        )
    return build_payoff_tensor(game_from_config(cfg, cfg.channel.matrix))


def channel_states(cfg: ExperimentConfig, force_enumerate: bool = False):
    """Channel matrices for the sweep, as a list of K x K tuples."""
    ch = cfg.channel
    k = cfg.players
    if ch.grid is None:
        if ch.matrix is None:
            raise ConfigError("channel: needs either 'matrix' or 'grid'")
        return [ch.matrix], "explicit"
    if ch.grid.points == 1:
        values = [ch.grid.min]
    else:
        step = (ch.grid.max - ch.grid.min) / (ch.grid.points - 1)
        values = [ch.grid.min + i * step for i in range(ch.grid.points)]
        values[-1] = ch.grid.max
    n_links = k * k
    if force_enumerate or ch.sweep.mode == "enumerate":
        states = []
        for combo in itertools.product(range(len(values)), repeat=n_links):
            flat = [values[c] for c in combo]
            states.append(tuple(
                tuple(flat[j * k + i] for i in range(k)) for j in range(k)
            ))
        return states, "enumerate"
    rng = np.random.default_rng(ch.sweep.seed)
    idx = rng.integers(0, len(values), size=(ch.sweep.count, n_links))
    states = []
    for row in idx:
        flat = [values[c] for c in row]
        states.append(tuple(
            tuple(flat[j * k + i] for i in range(k)) for j in range(k)
        ))
    return states, "sample"


def metadata(cfg: ExperimentConfig, **extra) -> dict:
    meta = {
        "tool": "powergames",
        "version": __version__,
        "config_sha256": cfg.sha256(),
        "seeds": {
            "channel_sweep": cfg.channel.sweep.seed,
            "learning": cfg.learning.seed,
        },
    }
    meta.update(extra)
    return meta


def _meta_lines(meta: dict) -> list[str]:
    lines = [f"# tool: {meta['tool']} {meta['version']}",
             f"# config_sha256: {meta['config_sha256']}"]
    for key, value in meta.items():
        if key in ("tool", "version", "config_sha256"):
            continue
        lines.append(f"# {key}: {json.dumps(value, sort_keys=True)}")
    return lines


def write_csv(path: Path, meta: dict, payload: str):
    text = "\n".join(_meta_lines(meta)) + "\n" + payload
    path.write_text(text, encoding="utf-8")
    return text


def write_json(path: Path, obj: dict):
    text = json.dumps(obj, indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    return text


# ---------------------------------------------------------------- single runs

def game_dump(cfg: ExperimentConfig) -> dict:
    tensor = single_game_tensor(cfg)
    game = game_from_config(cfg, cfg.channel.matrix)
    return {
        "meta": metadata(cfg),
        "players": cfg.players,
        "dims": list(tensor.dims),
        "channel": [list(row) for row in game.channel.g],
        "power_levels": [list(g.values_linear) for g in game.grids],
        "alpha": game.alpha,
        "noise": game.noise,
        "packet_len": game.packet_len,
        "payoffs": [tensor.flat(i).tolist() for i in range(tensor.players)],
    }


def run_nash(cfg: ExperimentConfig) -> dict:
    tensor = single_game_tensor(cfg)
    profiles = enumerate_pure_nash(tensor)
    out = {
        "meta": metadata(cfg),
        "pure_profiles": [list(p) for p in profiles],
        "pure_payoffs": [[tensor.payoff(i, p) for i in range(tensor.players)]
                         for p in profiles],
    }
    if tensor.dims == (2, 2):
        out["mixed_2x2"] = [
            {"strategies": [list(p), list(q)], "payoffs": list(u)}
            for (p, q), u in mixed_nash_2x2(tensor)
        ]
    return out


def run_ce(cfg: ExperimentConfig, direction: float | None = None) -> dict:
    tensor = single_game_tensor(cfg)
    if direction is None:
        rep = solve_welfare_ce(tensor)
        objective = "welfare"
    else:
        weights = (math.cos(direction), math.sin(direction))
        rep = solve_directional_ce(tensor, weights)
        objective = f"direction {direction!r} rad"
    return {
        "meta": metadata(cfg),
        "objective": objective,
        "welfare": rep.welfare,
        "per_player": list(rep.per_player_value),
        "max_violation": rep.max_violation,
        "iterations": rep.solver_iterations,
        "distribution": rep.distribution.probs.tolist(),
    }


def types_from_config(cfg: ExperimentConfig):
    if not cfg.types.enabled:
        raise ConfigError("this command needs a 'types' section in the config")
    if cfg.types.points == 1:
        values = [cfg.types.min]
    else:
        step = (cfg.types.max - cfg.types.min) / (cfg.types.points - 1)
        values = [cfg.types.min + i * step for i in range(cfg.types.points)]
        values[-1] = cfg.types.max
    return build_type_space(values, cfg.players, mode=cfg.types.mode,
                            prior=cfg.types.prior)


def run_commeq(cfg: ExperimentConfig, formulation: str | None = None) -> dict:
    space = types_from_config(cfg)
    family = GameFamily(power_grids(cfg), cfg.alpha, cfg.noise, cfg.packet_len)
    form = formulation or cfg.solver.formulation
    res = solve_commeq(space, family, form)
    return {
        "meta": metadata(cfg),
        "formulation": form,
        "welfare": res.welfare,
        "max_violation": res.max_violation,
        "iterations": res.solver_iterations,
        "device": json.loads(device_to_json(res.device)),
    }


def run_regret(cfg: ExperimentConfig, steps: int | None = None,
               seed: int | None = None, rule: str | None = None) -> dict:
    tensor = single_game_tensor(cfg)
    steps = steps if steps is not None else cfg.learning.steps
    seed = seed if seed is not None else cfg.learning.seed
    rule = rule or cfg.learning.rule
    res = rm_run(tensor, steps, seed, mu=cfg.learning.mu, rule=rule)
    welfare = float(res.empirical.probs @ tensor.welfare_flat())
    return {
        "meta": metadata(cfg, seeds_used={"learning": seed}),
        "rule": rule,
        "steps": steps,
        "welfare": welfare,
        "ce_gap": ce_violation(tensor, res.empirical),
        "max_regret": max(float(r.max()) for r in res.state.regrets()),
        "empirical": res.empirical.probs.tolist(),
        "trace": [list(row) for row in res.trace],
    }


# --------------------------------------------------------------------- sweeps

def _state_result(args):
    idx, gains, cfg = args
    tensor = build_payoff_tensor(game_from_config(cfg, gains))
    profiles = enumerate_pure_nash(tensor)
    ne_payoffs = [[tensor.payoff(i, p) for i in range(tensor.players)]
                  for p in profiles]
    best_ne = max((sum(u) for u in ne_payoffs), default=None)
    rep = solve_welfare_ce(tensor)
    row = {
        "state": idx,
        "gains": [list(r) for r in gains],
        "n_pure_ne": len(profiles),
        "pure_ne": [list(p) for p in profiles],
        "pure_ne_payoffs": ne_payoffs,
        "best_ne_welfare": best_ne,
        "ce_welfare": rep.welfare,
        "ce_violation": rep.max_violation,
        "ce_per_player": list(rep.per_player_value),
        "lp_iterations": rep.solver_iterations,
    }
    if cfg.sweep.include_regret:
        res = rm_run(tensor, cfg.learning.steps, cfg.learning.seed + idx,
                     mu=cfg.learning.mu, rule=cfg.learning.rule, trace=False)
        row["regret_welfare"] = float(res.empirical.probs @ tensor.welfare_flat())
    return idx, row


def _aggregate(samples: list[float]) -> dict:
    if not samples:
        return {"mean": None, "stderr": None, "count": 0}
    arr = np.asarray(samples)
    stderr = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
    return {"mean": float(arr.mean()), "stderr": stderr, "count": int(arr.size)}


def run_channel_sweep(cfg: ExperimentConfig, force_enumerate: bool = False,
                      workers: int | None = None) -> dict:
    states, mode = channel_states(cfg, force_enumerate)
    jobs = [(i, g, cfg) for i, g in enumerate(states)]
    n_workers = workers if workers is not None else cfg.sweep.workers
    if n_workers == 0:
        n_workers = os.cpu_count() or 1
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = dict(pool.map(_state_result, jobs))
    else:
        results = dict(map(_state_result, jobs))
    rows = [results[i] for i in range(len(jobs))]  # order-independent by key
    report = {
        "mode": mode,
        "states": rows,
        "aggregate": {
            "ce_welfare": _aggregate([r["ce_welfare"] for r in rows]),
            "best_ne_welfare": _aggregate(
                [r["best_ne_welfare"] for r in rows if r["best_ne_welfare"] is not None]
            ),
            "states_without_pure_ne": sum(1 for r in rows if r["n_pure_ne"] == 0),
        },
    }
    if cfg.sweep.include_regret:
        report["aggregate"]["regret_welfare"] = _aggregate(
            [r["regret_welfare"] for r in rows]
        )
    return report


def run_action_sweep(cfg: ExperimentConfig) -> dict:
    """Fig-2a-shaped table: welfare of CE baselines and communication
    equilibria as the action-set size grows."""
    space = types_from_config(cfg)
    levels = cfg.sweep.action_levels or (cfg.power.levels,)
    rows = []
    for m in levels:
        grids = power_grids(cfg, levels=m, nested=cfg.sweep.nested_grids)
        family = GameFamily(grids, cfg.alpha, cfg.noise, cfg.packet_len)
        tensors = per_type_tensors(space, family)
        prior_flat = space.prior.reshape(-1)
        per_state = 0.0
        for q, tensor in zip(prior_flat, tensors):
            if q > 0:
                per_state += q * solve_welfare_ce(tensor).welfare
        avg_values = sum(q * t.values for q, t in zip(prior_flat, tensors))
        avg_tensor = PayoffTensor(family.dims, np.ascontiguousarray(avg_values))
        avg_game_ce = solve_welfare_ce(avg_tensor).welfare
        lit = solve_commeq(space, family, "literal")
        can = solve_commeq(space, family, "canonical")
        rows.append({
            "levels": m,
            "ce_per_state_avg": float(per_state),
            "ce_average_game": float(avg_game_ce),
            "commeq_literal": float(lit.welfare),
            "commeq_canonical": float(can.welfare),
        })
    return {"nested_grids": cfg.sweep.nested_grids, "rows": rows}


def run_equilibrium_sweep(cfg: ExperimentConfig, force_enumerate: bool = False,
                          workers: int | None = None, out_dir=None) -> dict:
    """Full sweep per config: channel-state section when the channel is a
    grid, action-set section when a type space is configured. Writes
    sweep.json plus one CSV per section."""
    report = {"meta": metadata(cfg)}
    if cfg.channel.grid is not None:
        report["channel_sweep"] = run_channel_sweep(cfg, force_enumerate, workers)
    if cfg.types.enabled:
        report["action_sweep"] = run_action_sweep(cfg)
    if "channel_sweep" not in report and "action_sweep" not in report:
        raise ConfigError("sweep: config has neither a channel grid nor types")

    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "sweep.json", report)
    if "channel_sweep" in report:
        header = ["state", "n_pure_ne", "best_ne_welfare", "ce_welfare",
                  "ce_violation"]
        if cfg.sweep.include_regret:
            header.append("regret_welfare")
        k = cfg.players
        header += [f"g{j + 1}{i + 1}" for j in range(k) for i in range(k)]
        lines = [",".join(header)]
        for r in report["channel_sweep"]["states"]:
            row = [str(r["state"]), str(r["n_pure_ne"]),
                   "" if r["best_ne_welfare"] is None else _fmt(r["best_ne_welfare"]),
                   _fmt(r["ce_welfare"]), _fmt(r["ce_violation"])]
            if cfg.sweep.include_regret:
                row.append(_fmt(r["regret_welfare"]))
            row += [_fmt(v) for flatrow in r["gains"] for v in flatrow]
            lines.append(",".join(row))
        write_csv(out / "sweep_states.csv", report["meta"], "\n".join(lines) + "\n")
    if "action_sweep" in report:
        lines = ["levels,ce_per_state_avg,ce_average_game,commeq_literal,commeq_canonical"]
        for r in report["action_sweep"]["rows"]:
            lines.append(",".join([
                str(r["levels"]), _fmt(r["ce_per_state_avg"]),
                _fmt(r["ce_average_game"]), _fmt(r["commeq_literal"]),
                _fmt(r["commeq_canonical"]),
            ]))
        write_csv(out / "sweep_actions.csv", report["meta"], "\n".join(lines) + "\n")
    return report


# -------------------------------------------------------------------- regions

def export_regions(cfg: ExperimentConfig, out_dir=None,
                   directions: int | None = None) -> dict:
    """Three CSVs for a 2-player game: feasible payoff hull, CE payoff
    polygon, NE payoff points; plus a manifest with checksums."""
    if cfg.players != 2:
        raise ConfigError("region export is limited to 2-player games")
    tensor = single_game_tensor(cfg)
    d = directions if directions is not None else cfg.solver.directions

    feasible = convex_hull_ccw(
        dedup_points(zip(tensor.flat(0).tolist(), tensor.flat(1).tolist()), tol=0.0)
    )
    region = ce_payoff_region(tensor, directions=d)
    ne_rows = []
    for prof in enumerate_pure_nash(tensor):
        ne_rows.append((tensor.payoff(0, prof), tensor.payoff(1, prof), "pure"))
    if tensor.dims == (2, 2):
        for (p, q), payoffs in mixed_nash_2x2(tensor):
            if 0.0 < p[0] < 1.0 or 0.0 < q[0] < 1.0:
                ne_rows.append((payoffs[0], payoffs[1], "mixed"))

    meta = metadata(cfg, directions=d)
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    files = {}
    files["feasible_hull.csv"] = write_csv(
        out / "feasible_hull.csv", meta, region_to_csv(feasible))
    files["ce_region.csv"] = write_csv(
        out / "ce_region.csv", meta, region_to_csv(region))
    ne_payload = "u1,u2,kind\n" + "".join(
        f"{_fmt(u1)},{_fmt(u2)},{kind}\n" for u1, u2, kind in ne_rows
    )
    files["ne_points.csv"] = write_csv(out / "ne_points.csv", meta, ne_payload)

    manifest = {
        "meta": meta,
        "files": {
            name: {"sha256": hashlib.sha256(text.encode()).hexdigest()}
            for name, text in files.items()
        },
        "counts": {
            "feasible_vertices": len(feasible),
            "ce_vertices": len(region),
            "ne_points": len(ne_rows),
        },
    }
    write_json(out / "region_manifest.json", manifest)
    return manifest
