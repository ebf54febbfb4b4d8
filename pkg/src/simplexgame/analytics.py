"""Analytic predictions: the anarchy onset and the closed-form frustration curve.

The steady-state frustration of a large game depends only on the number of
strategies S and the combination lambda * (B - 1).  The critical training
parameter is lambda_c = zeta(S)^2 / (B - 1), where zeta(S) is the expected
minimum of S independent standard normal draws; above it the predicted
frustration is (1 - sqrt(lambda_c / lambda))^2, below it zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc

from .errors import ValidationError
from .game import GameConfig
from .geometry import StrengthDistribution

QUAD_LIMIT = 8.0  # integrand carries exp(-z^2); tail beyond |z|=8 is < 1e-27


@dataclass(frozen=True)
class AnarchyPrediction:
    """zeta(S), the critical lambda for (S, B), and the closed-form curve."""

    strategies: int
    nodes: int
    zeta: float
    lambda_c: float

    def curve(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        out = np.zeros_like(lam)
        above = lam > self.lambda_c
        out[above] = (1.0 - np.sqrt(self.lambda_c / lam[above])) ** 2
        return out


def zeta(strategies: int, method: str = "quadrature", samples: int = 10**6,
         seed=None) -> float:
    """Expected minimum of `strategies` independent standard normals.

    Quadrature evaluates S * sqrt(2/pi) * integral of
    z exp(-z^2) (erfc(z)/2)^(S-1), writing the survival factor as
    (erfc(z)/2)^(S-1) in [0, 1] so the integrand stays well scaled for any S.
    Zero for a single draw by symmetry; negative and strictly decreasing for
    S >= 2.  The monte_carlo method averages per-draw minima instead.
    """
    if strategies < 1:
        raise ValidationError("strategies must be >= 1")
    if method == "quadrature":
        return _zeta_quadrature(strategies)
    if method == "monte_carlo":
        return zeta_monte_carlo(strategies, samples=samples, seed=seed)[0]
    raise ValidationError(f"unknown zeta method {method!r}")


@lru_cache(maxsize=None)
def _zeta_quadrature(strategies: int) -> float:
    if strategies == 1:
        return 0.0

    def integrand(z):
        return z * np.exp(-z * z) * (0.5 * erfc(z)) ** (strategies - 1)

    value, err = quad(integrand, -QUAD_LIMIT, QUAD_LIMIT, epsabs=1e-12, limit=200)
    if err > 1e-8:
        raise ArithmeticError(f"quadrature error {err:.3e} above tolerance")
    return float(strategies * np.sqrt(2.0 / np.pi) * value)


def zeta_monte_carlo(strategies: int, samples: int = 10**6, seed=None,
                     chunk: int = 10**6) -> tuple[float, float]:
    """Sampling estimate of zeta(S): (mean of per-draw minima, standard error)."""
    if strategies < 1:
        raise ValidationError("strategies must be >= 1")
    if samples < 2:
        raise ValidationError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    remaining = samples
    while remaining > 0:
        take = min(remaining, chunk)
        m = rng.standard_normal((take, strategies)).min(axis=1)
        total += float(m.sum())
        total_sq += float((m * m).sum())
        remaining -= take
    mean = total / samples
    var = (total_sq - samples * mean * mean) / (samples - 1)
    return mean, float(np.sqrt(var / samples))


def critical_lambda(strategies: int, nodes: int) -> float:
    """lambda_c = zeta(S)^2 / (B - 1): the training ratio where anarchy emerges."""
    if nodes < 2:
        raise ValidationError("nodes must be >= 2")
    z = zeta(strategies)
    return z * z / (nodes - 1)


def predicted_anarchy(lam: float, strategies: int, nodes: int) -> float:
    """Closed-form steady-state frustration at training parameter lam."""
    if lam <= 0.0:
        raise ValidationError("lambda must be > 0")
    lc = critical_lambda(strategies, nodes)
    if lam <= lc:
        return 0.0
    return float((1.0 - np.sqrt(lc / lam)) ** 2)


def prediction_for(strategies: int, nodes: int) -> AnarchyPrediction:
    z = zeta(strategies)
    return AnarchyPrediction(strategies=strategies, nodes=nodes, zeta=z,
                             lambda_c=z * z / (nodes - 1))


def binary_reduction(config: GameConfig) -> GameConfig:
    """The equivalent 2-node game: equal strengths, signals scaled by B - 1.

    The predicted frustration curve of the original game and its reduction
    coincide because lambda_c scales by exactly 1/(B - 1).
    """
    return GameConfig(
        players=config.players,
        nodes=2,
        signals=config.signals * (config.nodes - 1),
        strategies_per_player=config.strategies_per_player,
        strengths=StrengthDistribution.uniform(2),
        payoff_mode=config.payoff_mode,
    )
