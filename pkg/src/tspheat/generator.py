"""Per-instance heat-map generation by gradient descent on raw logits.

One square logit matrix is optimized directly against the surrogate loss
with Adam; the column softmax of the final logits is the soft indicator
matrix and its cyclic transform is the heat map handed to the search stage.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .heatmap import (
    LossBreakdown,
    NumericError,
    column_softmax,
    indicator_to_heatmap,
    loss_gradient,
    surrogate_loss,
)
from .instances import Instance, distance_matrix


def default_steps(n: int) -> int:
    """Step budget that grows with instance size: 300 per started block of
    100 cities, never less than 300."""
    return 300 * max(1, math.ceil(n / 100))


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings for one heat-map fit.

    steps=None derives the budget from the instance size via default_steps.
    The lambda weights balance the doubly-stochastic pressure against the
    expected-length term; the defaults were chosen empirically so that the
    pruned heat map covers optimal-tour edges well (heavier penalties tend to
    collapse the indicator onto a single locally-optimal cycle, which hurts
    edge coverage).
    """

    steps: Optional[int] = None
    learning_rate: float = 0.05
    lambda1: float = 2.0
    lambda2: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    init_scale: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.steps is not None and self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda weights must be >= 0")
        if self.init_scale < 0:
            raise ValueError("init_scale must be >= 0")

    def resolved_steps(self, n: int) -> int:
        return self.steps if self.steps is not None else default_steps(n)


@dataclass
class TrainTrace:
    """Per-step loss breakdowns (evaluated before each update), the loss of
    the returned parameters, and wall-clock duration."""

    per_step: list[LossBreakdown]
    final: LossBreakdown
    seconds: float

    @property
    def steps(self) -> int:
        return len(self.per_step)


def init_logits(n: int, cfg: TrainConfig) -> np.ndarray:
    """Seeded Gaussian(0, init_scale^2) logits; all zeros when init_scale=0."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if cfg.init_scale == 0:
        return np.zeros((n, n))
    rng = np.random.default_rng(cfg.seed)
    return rng.normal(0.0, cfg.init_scale, size=(n, n))


def optimize_heatmap(inst: Instance, cfg: TrainConfig = TrainConfig()):
    """Fit logits to one instance; returns (heat_map, soft_indicator, trace).

    Runs the configured number of Adam updates on the logits using the
    analytic loss gradient. Deterministic for a fixed (instance, config).
    Raises NumericError naming the step if the loss or gradient goes
    non-finite.
    """
    n = inst.n
    d = distance_matrix(inst)
    steps = cfg.resolved_steps(n)
    lam1, lam2 = cfg.lambda1, cfg.lambda2
    logits = init_logits(n, cfg)
    m = np.zeros_like(logits)
    v = np.zeros_like(logits)
    per_step: list[LossBreakdown] = []
    t0 = time.perf_counter()
    for k in range(1, steps + 1):
        t = column_softmax(logits)
        h = indicator_to_heatmap(t)
        breakdown = surrogate_loss(t, h, d, lam1, lam2)
        if not math.isfinite(breakdown.total):
            raise NumericError(f"non-finite loss at step {k}")
        per_step.append(breakdown)
        g = loss_gradient(logits, d, lam1, lam2)
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * (g * g)
        m_hat = m / (1.0 - cfg.beta1**k)
        v_hat = v / (1.0 - cfg.beta2**k)
        logits -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
        if not np.isfinite(logits).all():
            raise NumericError(f"non-finite logits after step {k}")
    t = column_softmax(logits)
    h = indicator_to_heatmap(t)
    final = surrogate_loss(t, h, d, lam1, lam2)
    trace = TrainTrace(per_step=per_step, final=final, seconds=time.perf_counter() - t0)
    return h, t, trace
