"""Correlated equilibria: constraint systems, welfare/directional optima by LP,
candidate verification, payoff-region tracing, and mediator sampling.

The CE polytope of a payoff tensor is ``{p on the profile simplex :
sum_{a_-i} p(a_i, a_-i) (u_i(a_i, a_-i) - u_i(b, a_-i)) >= 0}`` for every
player i and ordered action pair (a_i, b). Optimizing a linear objective over
it is done by delayed row generation: solve a small master LP over the rows
violated so far, scan the full deviation system, add the worst offenders,
repeat until clean. This is exact (the final point is feasible for the full
system and optimal for a relaxation of it) and keeps each LP at a size the
dense simplex handles comfortably.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import convex_hull_ccw, dedup_points
from .model import PayoffTensor
from .simplex import LpProblem, SimplexOptions, make_problem, solve_lp

# a freshly solved report must verify at least this cleanly
ACCEPT_VIOLATION = 1e-8
# deviation rows with expected gain above this are added to the master LP
ROW_GEN_TOL = 1e-10
ROW_GEN_BATCH = 8


@dataclass(frozen=True)
class JointDistribution:
    """Probability vector over joint action profiles (mixed-radix layout)."""

    dims: tuple[int, ...]
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = int(np.prod(self.dims))
        if self.probs.shape != (n,):
            raise ValueError("probability vector length mismatch")
        if self.probs.min(initial=0.0) < -1e-12:
            raise ValueError("negative probability beyond tolerance")
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1")
        self.probs.setflags(write=False)

    def as_array(self) -> np.ndarray:
        """Probabilities reshaped to ``dims``."""
        return self.probs.reshape(self.dims)

    @staticmethod
    def from_raw(dims, raw: np.ndarray) -> "JointDistribution":
        """Clamp solver dust in [-1e-12, 0) to zero and renormalize."""
        p = np.asarray(raw, dtype=float).copy()
        if p.min(initial=0.0) < -1e-12:
            raise ValueError("negative probability beyond tolerance")
        np.clip(p, 0.0, None, out=p)
        total = p.sum()
        if total <= 0:
            raise ValueError("distribution has no mass")
        return JointDistribution(tuple(dims), p / total)


@dataclass(frozen=True)
class EquilibriumReport:
    distribution: JointDistribution
    per_player_value: tuple[float, ...]
    welfare: float
    max_violation: float
    solver_iterations: int


def build_ce_constraints(tensor: PayoffTensor, objective: np.ndarray | None = None) -> LpProblem:
    """The full CE linear program: one row per (player, recommendation,
    deviation) pair, the probability-simplex equality, and nonnegativity.

    Default objective is social welfare.
    """
    n = tensor.profile_count
    rows = []
    for i in range(tensor.players):
        for a in range(tensor.dims[i]):
            for b in range(tensor.dims[i]):
                if b != a:
                    rows.append((_ce_row(tensor, i, a, b), 0.0))
    if objective is None:
        objective = tensor.welfare_flat()
    return make_problem(objective, ineq_rows=rows,
                        eq_rows=[(np.ones(n), 1.0)], name="ce")


def _ce_row(tensor: PayoffTensor, i: int, a: int, b: int) -> np.ndarray:
    """Coefficients of the (i, a -> b) obedience row over flat profiles."""
    u = np.moveaxis(tensor.player_payoffs(i), i, 0)
    coeffs = np.zeros(tensor.dims)
    sl = [slice(None)] * tensor.players
    sl[i] = a
    coeffs[tuple(sl)] = u[a] - u[b]
    return coeffs.reshape(-1)


def _deviation_gains(tensor: PayoffTensor, flat_probs: np.ndarray) -> list[np.ndarray]:
    """G_i[a, b] = expected gain of playing b when recommended a (player i)."""
    p = flat_probs.reshape(tensor.dims)
    out = []
    for i in range(tensor.players):
        mi = tensor.dims[i]
        pm = np.moveaxis(p, i, 0).reshape(mi, -1)
        um = np.moveaxis(tensor.player_payoffs(i), i, 0).reshape(mi, -1)
        s = pm @ um.T  # s[a, b] = sum_r p(a, r) u_i(b, r)
        out.append(s - np.diag(s)[:, None])
    return out


class CePolytopeSolver:
    """Row-generation optimizer over one tensor's CE polytope.

    Generated rows describe the game, not the objective, so they are kept
    and reused across objectives (directional sweeps get cheap after the
    first few solves). Not safe for concurrent use; make one per worker.
    """

    def __init__(self, tensor: PayoffTensor, options: SimplexOptions | None = None):
        self.tensor = tensor
        self.options = options or SimplexOptions()
        self._rows: list[np.ndarray] = []
        self._row_ids: set[tuple[int, int, int]] = set()

    def maximize(self, objective: np.ndarray) -> tuple[np.ndarray, float, int]:
        """Maximize a linear objective over the CE polytope.

        Returns (flat distribution, objective value, simplex pivots).
        """
        n = self.tensor.profile_count
        eq = [(np.ones(n), 1.0)]
        total_iters = 0
        for _ in range(10 * n + 100):
            rows = [(r, 0.0) for r in self._rows]
            prob = make_problem(objective, ineq_rows=rows, eq_rows=eq, name="ce-master")
            sol = solve_lp(prob, self.options)
            total_iters += sol.iterations
            if sol.status != "optimal":
                # the CE polytope is nonempty and bounded, so this is internal
                raise RuntimeError(f"CE master LP reported {sol.status}")
            x = sol.x
            if self._add_violated_rows(x) == 0:
                return x, float(sol.objective_value), total_iters
        raise RuntimeError("row generation failed to converge")

    def _add_violated_rows(self, flat_probs: np.ndarray) -> int:
        added = 0
        for i, gains in enumerate(_deviation_gains(self.tensor, flat_probs)):
            mi = self.tensor.dims[i]
            order = np.argsort(gains, axis=None)[::-1][:ROW_GEN_BATCH]
            for f in order:
                a, b = divmod(int(f), mi)
                if a == b or gains[a, b] <= ROW_GEN_TOL or (i, a, b) in self._row_ids:
                    continue
                self._row_ids.add((i, a, b))
                self._rows.append(_ce_row(self.tensor, i, a, b))
                added += 1
        return added


def _report(tensor: PayoffTensor, flat: np.ndarray, iters: int) -> EquilibriumReport:
    dist = JointDistribution.from_raw(tensor.dims, flat)
    values = tuple(float(dist.probs @ tensor.flat(i)) for i in range(tensor.players))
    violation = ce_violation(tensor, dist)
    if violation > ACCEPT_VIOLATION:
        raise RuntimeError(f"CE solution failed verification ({violation:.3e})")
    return EquilibriumReport(dist, values, float(sum(values)), violation, iters)


def solve_welfare_ce(tensor: PayoffTensor,
                     options: SimplexOptions | None = None,
                     solver: CePolytopeSolver | None = None) -> EquilibriumReport:
    """Correlated equilibrium maximizing the sum of expected utilities."""
    solver = solver or CePolytopeSolver(tensor, options)
    flat, _, iters = solver.maximize(tensor.welfare_flat())
    return _report(tensor, flat, iters)


def solve_directional_ce(tensor: PayoffTensor, weights,
                         options: SimplexOptions | None = None,
                         solver: CePolytopeSolver | None = None) -> EquilibriumReport:
    """CE maximizing a weighted sum of the players' expected utilities."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (tensor.players,) or not np.isfinite(w).all():
        raise ValueError("need one finite weight per player")
    if not w.any():
        raise ValueError("weight vector must not be all zero")
    objective = np.zeros(tensor.profile_count)
    for i in range(tensor.players):
        objective += w[i] * tensor.flat(i)
    solver = solver or CePolytopeSolver(tensor, options)
    flat, _, iters = solver.maximize(objective)
    return _report(tensor, flat, iters)


def ce_violation(tensor: PayoffTensor, dist: JointDistribution) -> float:
    """Worst expected deviation gain; zero (up to fp) iff ``dist`` is a CE.

    Loops the (recommendation, deviation) pairs directly against the tensor,
    independently of any LP bookkeeping.
    """
    if tuple(dist.dims) != tuple(tensor.dims):
        raise ValueError("distribution dims do not match tensor")
    p = dist.as_array()
    worst = 0.0
    for i in range(tensor.players):
        mi = tensor.dims[i]
        pm = np.moveaxis(p, i, 0).reshape(mi, -1)
        um = np.moveaxis(tensor.player_payoffs(i), i, 0).reshape(mi, -1)
        for a in range(mi):
            base = float(pm[a] @ um[a])
            for b in range(mi):
                if b == a:
                    continue
                gain = float(pm[a] @ um[b]) - base
                if gain > worst:
                    worst = gain
    return max(worst, 0.0)


def ce_payoff_region(tensor: PayoffTensor, directions: int = 64,
                     options: SimplexOptions | None = None) -> list[tuple[float, float]]:
    """Support-function trace of the 2-player CE payoff region.

    Solves one directional LP per angle 2*pi*k/directions, deduplicates the
    resulting expected-payoff points (1e-7 metric) and returns them as a
    convex polygon in counter-clockwise order.
    """
    if tensor.players != 2:
        raise ValueError("payoff-region export is 2-player only")
    if directions < 4:
        raise ValueError("need at least 4 directions")
    solver = CePolytopeSolver(tensor, options)
    points = []
    for k in range(directions):
        theta = 2.0 * math.pi * k / directions
        rep = solve_directional_ce(tensor, (math.cos(theta), math.sin(theta)),
                                   solver=solver)
        points.append(rep.per_player_value)
    return convex_hull_ccw(dedup_points(points, tol=1e-7))


def region_to_csv(points) -> str:
    """CE region CSV: header ``u1,u2``, one vertex per line, CCW order."""
    lines = ["u1,u2"]
    for p in points:
        lines.append(f"{float(p[0])!r},{float(p[1])!r}")
    return "\n".join(lines) + "\n"


def mediator_sample(dist: JointDistribution, seed: int) -> tuple[int, ...]:
    """Draw one joint profile by inverse CDF in mixed-radix order.

    The same seed always returns the same draw.
    """
    probs = dist.probs
    total = probs.sum()
    if total <= 0:
        raise ValueError("cannot sample from an all-zero distribution")
    rng = np.random.default_rng(seed)
    u = rng.random() * total
    idx = int(np.searchsorted(np.cumsum(probs), u, side="left"))
    idx = min(idx, probs.shape[0] - 1)
    out = []
    for d in reversed(dist.dims):
        out.append(idx % d)
        idx //= d
    return tuple(reversed(out))
