"""Communication equilibria over Bayesian channel-gain type spaces.

Each player's private type is the vector of gains into its own receiver.
Nature draws a joint type from a prior, players report types to a mediator,
and the mediator draws a joint power profile from a per-report conditional
distribution. The system of conditionals is a communication equilibrium when
no player gains by lying about its type or disobeying its recommendation.

Two incentive-constraint families are supported:

* ``literal``: one row per (player, true type, reported type, fixed action);
  the deviator plays that fixed action whatever it is told.
* ``canonical``: deviation maps from recommendations to actions, linearized
  with one auxiliary variable per (player, true type, reported type,
  recommendation). Constant maps are a subset, so the canonical optimum
  never exceeds the literal one.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError
from .model import ChannelMatrix, GameInstance, PayoffTensor, PowerGrid, build_payoff_tensor
from .simplex import LpProblem, SimplexOptions, make_problem, solve_lp

COMMEQ_VAR_BUDGET = 10**6
# rows * (vars + rows) cap: beyond this a dense tableau solve is hours-scale
COMMEQ_TABLEAU_BUDGET = 12 * 10**6
ACCEPT_VIOLATION = 1e-8


@dataclass(frozen=True)
class GameFamily:
    """A power-control game with the channel left open (it comes from types)."""

    grids: tuple[PowerGrid, ...]
    alpha: float = 0.01
    noise: float = 1.0
    packet_len: int = 100

    @property
    def players(self) -> int:
        return len(self.grids)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(g.levels for g in self.grids)

    def instance(self, channel: ChannelMatrix) -> GameInstance:
        return GameInstance(channel, self.grids, self.alpha, self.noise, self.packet_len)


@dataclass(frozen=True)
class TypeSpace:
    """Per-player type lists plus a joint prior.

    A type of player i is the tuple ``(g[0][i], ..., g[K-1][i])`` of gains
    into receiver i, ordered by transmitter index. ``prior`` has shape
    ``(|T_1|, ..., |T_K|)``.
    """

    types: tuple[tuple[tuple[float, ...], ...], ...]
    prior: np.ndarray = field(repr=False)
    mode: str = "diagonal"

    def __post_init__(self):
        k = len(self.types)
        if k < 1:
            raise ValueError("at least one player required")
        for per_player in self.types:
            if not per_player:
                raise ValueError("empty type list")
            for t in per_player:
                if len(t) != k:
                    raise ValueError("each type must list one gain per transmitter")
                if any(not math.isfinite(g) or g < 0 for g in t):
                    raise ValueError("gains must be finite and nonnegative")
        if self.prior.shape != self.type_dims:
            raise ValueError("prior shape must match type counts")
        if self.prior.min() < 0:
            raise ValueError("prior must be nonnegative")
        if abs(float(self.prior.sum()) - 1.0) > 1e-12:
            raise ValueError("prior must sum to 1")
        self.prior.setflags(write=False)

    @property
    def players(self) -> int:
        return len(self.types)

    @property
    def type_dims(self) -> tuple[int, ...]:
        return tuple(len(t) for t in self.types)

    @property
    def joint_count(self) -> int:
        return int(np.prod(self.type_dims))

    def joint_types(self):
        return itertools.product(*[range(d) for d in self.type_dims])

    def encode(self, joint) -> int:
        idx = 0
        for t, d in zip(joint, self.type_dims):
            idx = idx * d + t
        return idx

    def decode(self, index: int) -> tuple[int, ...]:
        out = []
        for d in reversed(self.type_dims):
            out.append(index % d)
            index //= d
        return tuple(reversed(out))

    def channel_for(self, joint) -> ChannelMatrix:
        k = self.players
        g = [[0.0] * k for _ in range(k)]
        for i in range(k):
            column = self.types[i][joint[i]]
            for j in range(k):
                g[j][i] = column[j]
        return ChannelMatrix(tuple(tuple(row) for row in g))


def build_type_space(gains, players: int, mode: str = "diagonal",
                     prior="uniform") -> TypeSpace:
    """Type space from per-link gain grids.

    ``gains`` is one shared grid (sequence of values) or a K x K nested list
    ``gains[j][i]`` of per-link grids. ``diagonal`` indexes all gains into a
    receiver by a single superscript (type n takes the n-th value on every
    incoming link); ``product`` takes the Cartesian product of incoming-link
    grids. ``prior`` is "uniform" or an explicit joint table.
    """
    if mode not in ("diagonal", "product"):
        raise ValueError("mode must be 'diagonal' or 'product'")
    if not len(gains):
        raise ValueError("empty gain grid")
    first = gains[0]
    if np.isscalar(first):
        grid = [float(v) for v in gains]
        link = [[grid for _ in range(players)] for _ in range(players)]
    else:
        link = [[[float(v) for v in gains[j][i]] for i in range(players)]
                for j in range(players)]
    for j in range(players):
        for i in range(players):
            if not link[j][i]:
                raise ValueError("empty gain grid")
    types = []
    for i in range(players):
        incoming = [link[j][i] for j in range(players)]
        if mode == "diagonal":
            n = len(incoming[0])
            if any(len(g) != n for g in incoming):
                raise ValueError("diagonal mode needs equal grid lengths per receiver")
            types.append(tuple(tuple(g[t] for g in incoming) for t in range(n)))
        else:
            types.append(tuple(tuple(combo) for combo in itertools.product(*incoming)))
    types = tuple(types)
    dims = tuple(len(t) for t in types)
    if isinstance(prior, str):
        if prior != "uniform":
            raise ValueError("prior must be 'uniform' or an explicit table")
        table = np.full(dims, 1.0 / int(np.prod(dims)))
    else:
        table = np.asarray(prior, dtype=float).reshape(dims)
    return TypeSpace(types, table, mode)


def conditional_prior(space: TypeSpace, i: int, t_i: int) -> np.ndarray:
    """q(t_-i | t_i): Bayes posterior over the other players' types."""
    if not 0 <= i < space.players:
        raise IndexError("player index out of range")
    if not 0 <= t_i < space.type_dims[i]:
        raise IndexError("type index out of range")
    sl = [slice(None)] * space.players
    sl[i] = t_i
    joint = space.prior[tuple(sl)]
    total = float(joint.sum())
    if total <= 0.0:
        raise ValueError("cannot condition on a zero-probability type")
    return joint / total


def per_type_tensors(space: TypeSpace, family: GameFamily) -> list[PayoffTensor]:
    """Payoff tensor of the complete-information game at every joint type."""
    if space.players != family.players:
        raise ValueError("type space and game family disagree on player count")
    return [build_payoff_tensor(family.instance(space.channel_for(joint)))
            for joint in space.joint_types()]


@dataclass(frozen=True)
class CommDevice:
    """Conditional profile distributions p(.|t), one row per joint type."""

    space: TypeSpace
    action_dims: tuple[int, ...]
    conditionals: np.ndarray = field(repr=False)  # (|T|, prod(action_dims))

    def __post_init__(self):
        s = int(np.prod(self.action_dims))
        if self.conditionals.shape != (self.space.joint_count, s):
            raise ValueError("conditional table shape mismatch")
        if self.conditionals.min() < -1e-12:
            raise ValueError("negative conditional probability")
        if np.abs(self.conditionals.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("each conditional must sum to 1")
        self.conditionals.setflags(write=False)

    @staticmethod
    def from_raw(space: TypeSpace, action_dims, raw: np.ndarray) -> "CommDevice":
        p = np.asarray(raw, dtype=float).copy()
        if p.min() < -1e-12:
            raise ValueError("negative conditional probability beyond tolerance")
        np.clip(p, 0.0, None, out=p)
        totals = p.sum(axis=1, keepdims=True)
        if (totals <= 0).any():
            raise ValueError("a conditional row has no mass")
        return CommDevice(space, tuple(action_dims), p / totals)


@dataclass(frozen=True)
class CommEqResult:
    device: CommDevice
    welfare: float
    max_violation: float
    solver_iterations: int


def _incentive_terms(space: TypeSpace, tensors: list[PayoffTensor], i: int,
                     t_i: int, t_rep: int):
    """Per-(t_-i) data for player i's incentive rows: posterior weight, the
    true-type flat index, the reported-type flat index, and the player's
    payoff array at the true type."""
    cond = conditional_prior(space, i, t_i)
    others_axes = [range(d) for j, d in enumerate(space.type_dims) if j != i]
    out = []
    for rest in itertools.product(*others_axes):
        joint_true = list(rest)
        joint_true.insert(i, t_i)
        joint_rep = list(rest)
        joint_rep.insert(i, t_rep)
        w = float(cond[tuple(rest)]) if cond.ndim else float(cond)
        if w == 0.0:
            continue
        out.append((w, space.encode(joint_true), space.encode(joint_rep),
                    tensors[space.encode(joint_true)].player_payoffs(i)))
    return out


def build_commeq_lp(space: TypeSpace, family: GameFamily,
                    formulation: str = "literal") -> LpProblem:
    """LP whose optimum is the welfare-maximal communication equilibrium.

    Variables are p(a|t) for every joint type and profile (type-major), plus
    one free auxiliary per (player, true type, reported type, recommendation)
    in the canonical formulation.
    """
    if formulation not in ("literal", "canonical"):
        raise ValueError("formulation must be 'literal' or 'canonical'")
    tensors = per_type_tensors(space, family)
    dims = family.dims
    s = int(np.prod(dims))
    nt = space.joint_count
    n_x = nt * s
    k = space.players

    z_index: dict[tuple[int, int, int, int], int] = {}
    if formulation == "canonical":
        pos = n_x
        for i in range(k):
            for t_i in range(space.type_dims[i]):
                for t_rep in range(space.type_dims[i]):
                    for a in range(dims[i]):
                        z_index[(i, t_i, t_rep, a)] = pos
                        pos += 1
    n_vars = n_x + len(z_index)
    if n_vars > COMMEQ_VAR_BUDGET:
        raise BudgetError(
            f"communication LP needs {n_vars} variables, budget is {COMMEQ_VAR_BUDGET}"
        )
    if formulation == "literal":
        n_rows = sum(space.type_dims[i] ** 2 * dims[i] for i in range(k)) + nt
    else:
        n_rows = sum(space.type_dims[i] ** 2 * (1 + dims[i] ** 2) for i in range(k)) + nt
    work = n_rows * (n_vars + n_rows)
    if work > COMMEQ_TABLEAU_BUDGET:
        raise BudgetError(
            f"communication LP with {n_vars} variables and {n_rows} rows needs a "
            f"{work}-entry dense tableau (budget {COMMEQ_TABLEAU_BUDGET}); "
            "shrink the action grid or the type space, or use the literal formulation"
        )

    prior_flat = space.prior.reshape(-1)
    objective = np.zeros(n_vars)
    for t in range(nt):
        objective[t * s:(t + 1) * s] = prior_flat[t] * tensors[t].welfare_flat()

    eq_rows = []
    for t in range(nt):
        row = np.zeros(n_vars)
        row[t * s:(t + 1) * s] = 1.0
        eq_rows.append((row, 1.0))

    ineq_rows = []
    for i in range(k):
        for t_i in range(space.type_dims[i]):
            for t_rep in range(space.type_dims[i]):
                terms = _incentive_terms(space, tensors, i, t_i, t_rep)
                if formulation == "literal":
                    for a_dev in range(dims[i]):
                        row = np.zeros(n_vars)
                        for w, ft, fr, u in terms:
                            row[ft * s:(ft + 1) * s] += w * u.reshape(-1)
                            dev = np.moveaxis(u, i, 0)[a_dev]
                            dev_full = np.broadcast_to(
                                dev[None, ...], (dims[i],) + dev.shape)
                            dev_flat = np.moveaxis(
                                dev_full, 0, i).reshape(-1)
                            row[fr * s:(fr + 1) * s] -= w * dev_flat
                        ineq_rows.append((row, 0.0))
                else:
                    head = np.zeros(n_vars)
                    for w, ft, fr, u in terms:
                        head[ft * s:(ft + 1) * s] += w * u.reshape(-1)
                    for a in range(dims[i]):
                        head[z_index[(i, t_i, t_rep, a)]] = -1.0
                    ineq_rows.append((head, 0.0))
                    for a in range(dims[i]):
                        for a_dev in range(dims[i]):
                            row = np.zeros(n_vars)
                            row[z_index[(i, t_i, t_rep, a)]] = 1.0
                            for w, ft, fr, u in terms:
                                um = np.moveaxis(u, i, 0)
                                segment = np.zeros(dims)
                                sl = [slice(None)] * k
                                sl[i] = a
                                segment[tuple(sl)] = um[a_dev]
                                row[fr * s:(fr + 1) * s] -= w * segment.reshape(-1)
                            ineq_rows.append((row, 0.0))

    bounds = [(0.0, None)] * n_x + [(None, None)] * len(z_index)
    return make_problem(objective, ineq_rows=ineq_rows, eq_rows=eq_rows,
                        bounds=bounds, name=f"commeq-{formulation}")


def solve_commeq(space: TypeSpace, family: GameFamily,
                 formulation: str = "literal",
                 options: SimplexOptions | None = None) -> CommEqResult:
    """Welfare-optimal communication equilibrium for the given deviation set."""
    prob = build_commeq_lp(space, family, formulation)
    sol = solve_lp(prob, options)
    if sol.status != "optimal":
        # the polytope is nonempty (Bayes-Nash devices are feasible) and bounded
        raise RuntimeError(f"communication LP reported {sol.status}")
    s = int(np.prod(family.dims))
    nt = space.joint_count
    raw = sol.x[: nt * s].reshape(nt, s)
    device = CommDevice.from_raw(space, family.dims, raw)
    violation = commeq_violation(device, family, formulation)
    if violation > ACCEPT_VIOLATION:
        raise RuntimeError(f"communication device failed verification ({violation:.3e})")
    return CommEqResult(device, float(sol.objective_value), violation, sol.iterations)


def commeq_violation(device: CommDevice, family: GameFamily,
                     formulation: str = "literal") -> float:
    """Worst truth-telling/obedience gap of a device, floored at zero.

    Recomputes expected payoffs directly from the device and per-type games;
    shares no code with the LP row builder.
    """
    if formulation not in ("literal", "canonical"):
        raise ValueError("formulation must be 'literal' or 'canonical'")
    space = device.space
    dims = device.action_dims
    if dims != family.dims:
        raise ValueError("device and game family disagree on action dims")
    tensors = per_type_tensors(space, family)
    k = space.players
    worst = 0.0
    for i in range(k):
        mi = dims[i]
        for t_i in range(space.type_dims[i]):
            truth = 0.0
            for w, ft, _, u in _incentive_terms(space, tensors, i, t_i, t_i):
                truth += w * float(device.conditionals[ft] @ u.reshape(-1))
            for t_rep in range(space.type_dims[i]):
                dmat = np.zeros((mi, mi))
                for w, ft, fr, u in _incentive_terms(space, tensors, i, t_i, t_rep):
                    p = device.conditionals[fr].reshape(dims)
                    pm = np.moveaxis(p, i, 0).reshape(mi, -1)
                    um = np.moveaxis(u, i, 0).reshape(mi, -1)
                    dmat += w * (pm @ um.T)  # dmat[a, b]: told a, play b
                if formulation == "literal":
                    gap = float(dmat.sum(axis=0).max()) - truth
                else:
                    gap = float(dmat.max(axis=1).sum()) - truth
                worst = max(worst, gap)
    return max(worst, 0.0)


def run_mediator_session(device: CommDevice, reported_types=None,
                         seed: int = 0) -> tuple[int, ...]:
    """One mediation round: Nature draws a joint type (seeded), players
    report (truthfully unless ``reported_types`` overrides), the mediator
    samples a profile from the reported type's conditional."""
    rng = np.random.default_rng(seed)
    space = device.space
    prior_flat = space.prior.reshape(-1)
    if prior_flat.sum() <= 0:
        raise ValueError("prior has no mass")
    u = rng.random() * prior_flat.sum()
    drawn = min(int(np.searchsorted(np.cumsum(prior_flat), u, side="left")),
                prior_flat.size - 1)
    if reported_types is None:
        reported = space.decode(drawn)
    else:
        reported = tuple(int(t) for t in reported_types)
        if len(reported) != space.players:
            raise ValueError("one reported type per player required")
        for i, t in enumerate(reported):
            if not 0 <= t < space.type_dims[i]:
                raise ValueError("reported type index out of range")
    row = device.conditionals[space.encode(reported)]
    if row.sum() <= 0:
        raise ValueError("conditional row has no mass")
    v = rng.random() * row.sum()
    idx = min(int(np.searchsorted(np.cumsum(row), v, side="left")), row.size - 1)
    out = []
    for d in reversed(device.action_dims):
        out.append(idx % d)
        idx //= d
    return tuple(reversed(out))


def device_to_json(device: CommDevice) -> str:
    """Joint-type key (gains to 6 decimal places) -> probability array."""
    space = device.space
    payload = {}
    for t in range(space.joint_count):
        joint = space.decode(t)
        key = "|".join(
            "(" + ",".join(f"{g:.6f}" for g in space.types[i][joint[i]]) + ")"
            for i in range(space.players)
        )
        payload[key] = [float(v) for v in device.conditionals[t]]
    return json.dumps(payload, indent=2)
