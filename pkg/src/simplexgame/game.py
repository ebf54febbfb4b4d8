"""Game instances: strategy matrices, bets, allocations, payoffs, frustration.

Players process a broadcast signal m in {1..M} with S preprogrammed
strategies; each strategy maps every signal to one of B weighted nodes.
Payoffs are congestion payoffs, which the simplex encoding turns into dot
products with the aggregate bet b = sum of chosen vertices.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geometry import Simplex, StrengthDistribution, _readonly

PAYOFF_MODES = ("linear", "nonlinear")
ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class GameConfig:
    """Static parameters of one game: N players, B nodes, M signals, S strategies."""

    players: int
    nodes: int
    signals: int
    strategies_per_player: int
    strengths: StrengthDistribution
    payoff_mode: str = "linear"
    raw_efficiencies: tuple | None = None  # kept for reporting only

    def __post_init__(self):
        if self.players < 1:
            raise ValidationError("players must be >= 1")
        if self.nodes < 2:
            raise ValidationError("nodes must be >= 2")
        if self.signals < 1:
            raise ValidationError("signals must be >= 1")
        if self.strategies_per_player < 1:
            raise ValidationError("strategies_per_player must be >= 1")
        if self.strengths.node_count != self.nodes:
            raise ValidationError(
                f"strengths have {self.strengths.node_count} nodes, config says {self.nodes}"
            )
        if self.payoff_mode not in PAYOFF_MODES:
            raise ValidationError(f"payoff_mode must be one of {PAYOFF_MODES}")
        if self.nodes > 255:
            raise ValidationError("node indices are stored as bytes; nodes must be <= 255")

    @property
    def training_parameter(self) -> float:
        """lambda = M/N, always recomputed from the stored fields."""
        return self.signals / self.players

    @classmethod
    def from_efficiencies(cls, players, signals, strategies_per_player, efficiencies,
                          payoff_mode="linear") -> "GameConfig":
        """Build a config from raw spectral efficiencies, normalized to strengths."""
        raw = tuple(float(c) for c in efficiencies)
        return cls(
            players=players,
            nodes=len(raw),
            signals=signals,
            strategies_per_player=strategies_per_player,
            strengths=StrengthDistribution.from_efficiencies(np.array(raw)),
            payoff_mode=payoff_mode,
            raw_efficiencies=raw,
        )


@dataclass(frozen=True)
class StrategyMatrix:
    """Dense N x S x M table of node indices in {0..B-1}."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.ndim != 3:
            raise ValidationError(f"strategy matrix must be 3-d, got shape {e.shape}")
        object.__setattr__(self, "entries", _readonly(e.astype(np.uint8, copy=False)))

    @property
    def shape(self) -> tuple:
        return self.entries.shape


@dataclass(frozen=True)
class PureInstance:
    """One realized round: the broadcast signal plus each player's strategy pick."""

    signal: int
    choices: np.ndarray  # (N,) strategy indices

    def __post_init__(self):
        object.__setattr__(self, "choices",
                           _readonly(np.asarray(self.choices, dtype=np.int64)))


@dataclass(frozen=True)
class MixedProfile:
    """N x S row-stochastic matrix of strategy probabilities."""

    rows: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.rows, dtype=float)
        if p.ndim != 2:
            raise ValidationError(f"profile must be 2-d, got shape {p.shape}")
        if np.any(p < 0.0):
            raise ValidationError("profile probabilities must be nonnegative")
        if np.max(np.abs(p.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
            raise ValidationError("each profile row must sum to 1")
        object.__setattr__(self, "rows", _readonly(p))

    @classmethod
    def uniform(cls, players: int, strategies: int) -> "MixedProfile":
        return cls(np.full((players, strategies), 1.0 / strategies))

    @classmethod
    def pure(cls, choices, strategies: int) -> "MixedProfile":
        choices = np.asarray(choices, dtype=np.int64)
        rows = np.zeros((choices.size, strategies))
        rows[np.arange(choices.size), choices] = 1.0
        return cls(rows)


@dataclass(frozen=True)
class Allocation:
    """Per-node occupancy counts for one realized round."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if np.any(c < 0):
            raise ValidationError("allocation counts must be >= 0")
        object.__setattr__(self, "counts", _readonly(c))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def draw_strategy_matrix(config: GameConfig, rng: np.random.Generator) -> StrategyMatrix:
    """Draw every entry independently: node r with probability y_r."""
    n, s, m = config.players, config.strategies_per_player, config.signals
    entries = rng.choice(config.nodes, size=(n, s, m), p=config.strengths.weights)
    return StrategyMatrix(entries.astype(np.uint8))


def resolve_bets(c: StrategyMatrix, inst: PureInstance,
                 nodes: int | None = None) -> tuple[np.ndarray, Allocation]:
    """Map each player's picked strategy to its node; count occupancies."""
    n, s, m = c.shape
    if not (0 <= inst.signal < m):
        raise ValidationError(f"signal {inst.signal} out of range [0, {m})")
    if inst.choices.size != n or np.any(inst.choices < 0) or np.any(inst.choices >= s):
        raise ValidationError("strategy choices out of range")
    picked = c.entries[np.arange(n), inst.choices, inst.signal].astype(np.int64)
    minlength = nodes if nodes is not None else int(c.entries.max()) + 1
    counts = np.bincount(picked, minlength=minlength)
    return picked, Allocation(counts)


def aggregate_bet(alloc: Allocation, s: Simplex) -> np.ndarray:
    """b = sum_r N_r q_r; the zero vector exactly at the Nash allocation."""
    counts = alloc.counts
    if counts.size < s.node_count:
        counts = np.concatenate([counts, np.zeros(s.node_count - counts.size, dtype=np.int64)])
    return counts.astype(float) @ s.vertices


def payoff_linear(alloc: Allocation, config: GameConfig) -> np.ndarray:
    """Per-node linear utility 1 - N_r/(y_r N); empty nodes evaluate to 1."""
    counts = np.zeros(config.nodes, dtype=np.int64)
    counts[: alloc.counts.size] = alloc.counts
    return 1.0 - counts / (config.strengths.weights * config.players)


def payoff_nonlinear(alloc: Allocation, config: GameConfig) -> np.ndarray:
    """Per-node normalized throughput y_r N / N_r; NaN marks unoccupied nodes."""
    counts = np.zeros(config.nodes, dtype=np.int64)
    counts[: alloc.counts.size] = alloc.counts
    out = np.full(config.nodes, np.nan)
    occupied = counts > 0
    out[occupied] = config.strengths.weights[occupied] * config.players / counts[occupied]
    return out


def _profile_nodes(c: StrategyMatrix, choices: np.ndarray) -> np.ndarray:
    """(N, M) node picks when each player i plays pure strategy choices[i]."""
    n = c.shape[0]
    return c.entries[np.arange(n), np.asarray(choices, dtype=np.int64), :].astype(np.int64)


def correlated_payoff(c: StrategyMatrix, profile, i: int, config: GameConfig) -> float:
    """Signal-averaged linear payoff of player i at a pure strategy profile.

    Evaluated by direct resolution: per signal, count node occupancies and
    read off 1 - N_r/(y_r N) at player i's node.
    """
    nodes = _profile_nodes(c, profile)  # (N, M)
    n, m = nodes.shape
    y = config.strengths.weights
    total = 0.0
    for sig in range(m):
        counts = np.bincount(nodes[:, sig], minlength=config.nodes)
        r = nodes[i, sig]
        total += 1.0 - counts[r] / (y[r] * n)
    return total / m


def _strategy_vertices(c: StrategyMatrix, s: Simplex) -> np.ndarray:
    """(N, S, M, B-1) lookup of each table entry's vertex."""
    return s.vertices[c.entries]


def signal_mean_bets(c: StrategyMatrix, p: MixedProfile, s: Simplex) -> np.ndarray:
    """(M, B-1) mean aggregate bet per signal under the mixed profile."""
    qc = _strategy_vertices(c, s)
    return np.einsum("is,ismd->md", p.rows, qc)


def strategy_payoffs(c: StrategyMatrix, p: MixedProfile, s: Simplex,
                     config: GameConfig) -> np.ndarray:
    """(N, S) matrix of signal-averaged payoffs u_i(rest mixed; strategy s).

    Entry (i, s) is the payoff player i expects when committing to its s-th
    strategy while everyone else keeps playing the mixed profile.  Dotting
    row i with p's row i recovers player i's fully mixed payoff.
    """
    n = config.players
    qc = _strategy_vertices(c, s)                         # (N,S,M,D)
    mean_player = np.einsum("is,ismd->imd", p.rows, qc)   # <c_i^m>
    total = mean_player.sum(axis=0)                       # (M,D)
    others = total[None, :, :] - mean_player              # sum_{j!=i} <c_j^m>
    cross = np.einsum("ismd,imd->ism", qc, others)
    own_sq = np.einsum("ismd,ismd->ism", qc, qc)
    return -(cross + own_sq).mean(axis=2) / n


def mixed_correlated_payoff(c: StrategyMatrix, p: MixedProfile, i: int, s: Simplex,
                            config: GameConfig) -> float:
    """Player i's signal-averaged payoff with every player mixing."""
    per_strategy = strategy_payoffs(c, p, s, config)
    return float(p.rows[i] @ per_strategy[i])


def instantaneous_frustration(alloc: Allocation, s: Simplex, config: GameConfig) -> float:
    """|b|^2 / (N (B-1)) for one realized allocation; 0 iff b = 0."""
    b = aggregate_bet(alloc, s)
    return float(b @ b) / (config.players * (config.nodes - 1))


def frustration(c: StrategyMatrix, p: MixedProfile, s: Simplex, config: GameConfig) -> float:
    """Signal-averaged squared mean bet, normalized by N (B-1).

    Uses the per-signal mean bet sum_i sum_s p_is q(c_is^m) and averages its
    squared norm exactly over all M signals (no sampling).
    """
    bets = signal_mean_bets(c, p, s)
    return float(np.einsum("md,md->", bets, bets)) / (
        bets.shape[0] * config.players * (config.nodes - 1)
    )


def expected_frustration(c: StrategyMatrix, p: MixedProfile, s: Simplex,
                         config: GameConfig) -> float:
    """Exact frustration level of a mixed profile: -(sum_i u_i*) / (B-1).

    Unlike `frustration`, this is the expectation of |b|^2 under independent
    strategy sampling, so it includes each player's own mixing variance.  The
    two agree exactly at pure profiles.
    """
    per_strategy = strategy_payoffs(c, p, s, config)
    u_star_total = float(np.einsum("is,is->", p.rows, per_strategy))
    return -u_star_total / (config.nodes - 1)


def frustration_decomposition(c: StrategyMatrix, p: MixedProfile, s: Simplex,
                              config: GameConfig) -> tuple[float, float, float]:
    """(1, congestion term, self-overlap G(p)) whose combination 1 + congestion - G
    approximates the exact frustration up to O(1/N)."""
    congestion = frustration(c, p, s, config)
    g = float(np.einsum("is,is->", p.rows, p.rows)) / config.players
    return 1.0, congestion, g


def save_strategy_matrix(c: StrategyMatrix, path, fmt: str = "json") -> None:
    """Write the table row-major (player, strategy, signal) as JSON or raw bytes."""
    flat = c.entries.reshape(-1)
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(flat.tolist(), fh)
    elif fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(flat.tobytes())
    else:
        raise ValidationError(f"unknown strategy matrix format {fmt!r}")


def load_strategy_matrix(path, players: int, strategies: int, signals: int,
                         fmt: str = "json") -> StrategyMatrix:
    shape = (players, strategies, signals)
    if fmt == "json":
        with open(path) as fh:
            flat = np.asarray(json.load(fh), dtype=np.uint8)
    elif fmt == "binary":
        with open(path, "rb") as fh:
            flat = np.frombuffer(fh.read(), dtype=np.uint8)
    else:
        raise ValidationError(f"unknown strategy matrix format {fmt!r}")
    if flat.size != players * strategies * signals:
        raise ValidationError(
            f"file holds {flat.size} entries, expected {players * strategies * signals}"
        )
    return StrategyMatrix(flat.reshape(shape).copy())
