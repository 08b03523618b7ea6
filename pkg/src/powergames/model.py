"""Power-control game instances and their dense payoff tensors.

A game is K transmitter/receiver pairs on an interference channel. Each
transmitter picks a discrete power level; its payoff is the packet success
probability at its own receiver minus a linear energy cost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetError

# Dense tensors above this entry count (K * prod(dims)) are refused.
TENSOR_ENTRY_BUDGET = 10**8


@dataclass(frozen=True)
class PowerGrid:
    """Ordered set of transmit power levels for one player.

    ``values_linear`` is strictly increasing, in linear power units;
    ``min_db``/``max_db`` are the endpoints on the dB scale.
    """

    min_db: float
    max_db: float
    levels: int
    values_linear: tuple[float, ...]

    def __post_init__(self):
        if self.levels < 1 or len(self.values_linear) != self.levels:
            raise ValueError("grid level count mismatch")
        vals = self.values_linear
        if any(not math.isfinite(v) or v < 0 for v in vals):
            raise ValueError("grid values must be finite and nonnegative")
        if any(a >= b for a, b in zip(vals, vals[1:])):
            raise ValueError("grid values must be strictly increasing")


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def build_power_grid(min_db: float, max_db: float, levels: int) -> PowerGrid:
    """Uniform grid of ``levels`` points on [min_db, max_db], stored linearly."""
    if not (math.isfinite(min_db) and math.isfinite(max_db)):
        raise ValueError("grid bounds must be finite")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if min_db > max_db:
        raise ValueError("min_db must not exceed max_db")
    if levels == 1:
        if min_db != max_db:
            raise ValueError("a single-level grid needs min_db == max_db")
        dbs = [min_db]
    else:
        step = (max_db - min_db) / (levels - 1)
        dbs = [min_db + k * step for k in range(levels)]
        dbs[-1] = max_db
    return PowerGrid(min_db, max_db, levels, tuple(db_to_linear(d) for d in dbs))


def grid_from_levels(values_linear: Sequence[float]) -> PowerGrid:
    """Grid from an explicit strictly increasing list of linear power values."""
    vals = tuple(float(v) for v in values_linear)
    if not vals:
        raise ValueError("empty level list")
    if vals[0] <= 0:
        raise ValueError("linear power levels must be positive")
    lo = 10.0 * math.log10(vals[0])
    hi = 10.0 * math.log10(vals[-1])
    return PowerGrid(lo, hi, len(vals), vals)


def nested_db_levels(min_db: float, max_db: float, levels: int) -> list[float]:
    """dB levels whose sets are nested as ``levels`` grows (bisection order).

    levels=2 gives the endpoints; each further level inserts the midpoint of
    the widest remaining gap, so the M-level set contains the (M-1)-level set.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if levels == 1:
        return [min_db]
    pts = [min_db, max_db]
    while len(pts) < levels:
        gaps = [(b - a, i) for i, (a, b) in enumerate(zip(pts, pts[1:]))]
        width, i = max(gaps)
        pts.insert(i + 1, pts[i] + width / 2.0)
    return pts


@dataclass(frozen=True)
class ChannelMatrix:
    """K x K gains; ``g[j][i]`` is the gain from transmitter j to receiver i."""

    g: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        k = len(self.g)
        if k < 1 or any(len(row) != k for row in self.g):
            raise ValueError("channel matrix must be square and nonempty")
        for row in self.g:
            for v in row:
                if not math.isfinite(v) or v < 0:
                    raise ValueError("channel gains must be finite and nonnegative")

    @property
    def players(self) -> int:
        return len(self.g)

    @staticmethod
    def from_array(arr) -> "ChannelMatrix":
        a = np.asarray(arr, dtype=float)
        return ChannelMatrix(tuple(tuple(float(v) for v in row) for row in a))


@dataclass(frozen=True)
class GameInstance:
    """Everything needed to evaluate utilities: channel, grids, alpha, noise, L."""

    channel: ChannelMatrix
    grids: tuple[PowerGrid, ...]
    alpha: float = 0.01
    noise: float = 1.0
    packet_len: int = 100

    def __post_init__(self):
        if len(self.grids) != self.channel.players:
            raise ValueError("one power grid per player required")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError("alpha must be positive")
        if not (self.noise > 0 and math.isfinite(self.noise)):
            raise ValueError("noise must be positive")
        if self.packet_len < 1:
            raise ValueError("packet_len must be >= 1")

    @property
    def players(self) -> int:
        return self.channel.players

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(g.levels for g in self.grids)


def sinr(i: int, profile: Sequence[float], channel: ChannelMatrix, noise: float) -> float:
    """Signal-to-interference-plus-noise ratio at receiver i.

    ``profile`` holds linear transmit powers for all K players.
    """
    if noise <= 0:
        raise ValueError("noise must be positive")
    g = channel.g
    k = channel.players
    if len(profile) != k:
        raise ValueError("profile length mismatch")
    if not 0 <= i < k:
        raise IndexError("player index out of range")
    interference = 0.0
    for j in range(k):
        if j != i:
            interference += profile[j] * g[j][i]
    return profile[i] * g[i][i] / (noise + interference)


def efficiency(x: float, packet_len: int) -> float:
    """Packet success probability (1 - e^-x)^L; in [0, 1], nondecreasing."""
    if x < 0:
        raise ValueError("SINR must be nonnegative")
    if packet_len < 1:
        raise ValueError("packet_len must be >= 1")
    return (1.0 - math.exp(-x)) ** packet_len


def utility(i: int, profile: Sequence[float], game: GameInstance) -> float:
    """Goodput-minus-cost payoff of player i at a linear power profile."""
    s = sinr(i, profile, game.channel, game.noise)
    return efficiency(s, game.packet_len) - game.alpha * profile[i]


@dataclass(frozen=True)
class PayoffTensor:
    """Dense per-player payoffs over all joint action profiles.

    Layout: ``values[i]`` has shape ``dims``; flattening is C-order, i.e.
    mixed-radix with player 1's action as the most significant digit.
    """

    dims: tuple[int, ...]
    values: np.ndarray = field(repr=False)  # shape (K, *dims), read-only

    def __post_init__(self):
        k = self.values.shape[0]
        if self.values.shape[1:] != self.dims or k != len(self.dims):
            raise ValueError("tensor shape mismatch")
        if not np.isfinite(self.values).all():
            raise ValueError("tensor entries must be finite")
        self.values.setflags(write=False)

    @property
    def players(self) -> int:
        return len(self.dims)

    @property
    def profile_count(self) -> int:
        return int(np.prod(self.dims))

    def player_payoffs(self, i: int) -> np.ndarray:
        """Payoff array of player i, shape ``dims``."""
        return self.values[i]

    def payoff(self, i: int, profile: Sequence[int]) -> float:
        return float(self.values[i][tuple(profile)])

    def flat(self, i: int) -> np.ndarray:
        """Payoffs of player i over mixed-radix profile indices."""
        return self.values[i].reshape(-1)

    def welfare_flat(self) -> np.ndarray:
        """Sum of all players' payoffs per mixed-radix profile index."""
        return self.values.reshape(self.players, -1).sum(axis=0)

    def encode(self, profile: Sequence[int]) -> int:
        idx = 0
        for a, d in zip(profile, self.dims):
            if not 0 <= a < d:
                raise ValueError("action index out of range")
            idx = idx * d + a
        return idx

    def decode(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.profile_count:
            raise ValueError("profile index out of range")
        out = []
        for d in reversed(self.dims):
            out.append(index % d)
            index //= d
        return tuple(reversed(out))


def build_payoff_tensor(game: GameInstance) -> PayoffTensor:
    """Evaluate every player's utility at every joint power profile."""
    dims = game.dims
    total = game.players * int(np.prod(dims))
    if total > TENSOR_ENTRY_BUDGET:
        raise BudgetError(
            f"payoff tensor needs {total} entries, budget is {TENSOR_ENTRY_BUDGET}"
        )
    levels = [g.values_linear for g in game.grids]
    values = np.empty((game.players,) + dims)
    for profile in np.ndindex(*dims):
        powers = [levels[j][a] for j, a in enumerate(profile)]
        for i in range(game.players):
            values[(i,) + profile] = utility(i, powers, game)
    return PayoffTensor(dims, values)
