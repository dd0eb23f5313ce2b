"""Hedge over groups on top of the perturbation-level boosting loop.

Each outer round spreads the current group weights evenly over the group's
members, runs the inner loop with those sample weights, and takes the inner
majority vote as the round's hypothesis. Groups where that hypothesis does
well lose weight, so later rounds concentrate on the groups that suffer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .hypothesis import ErmOracle
from .inner_boost import (
    NORMALIZATION_TOL,
    Ensemble,
    InnerConfig,
    default_eta,
    majority_from_votes,
    rounds_for_epsilon,
    run_fms,
)
from .metrics import group_losses_from_mistakes, group_robust_loss  # noqa: F401
from .perturbation import GroupedDataset, is_disjoint, require_valid


def hedge_update(P, rewards, delta: float) -> np.ndarray:
    """``P'_j = P_j (1 - delta * m_j) / Z``."""
    P = np.asarray(P, dtype=float)
    m = np.asarray(rewards, dtype=float)
    if m.shape != P.shape:
        raise ValueError("rewards and weights differ in shape")
    if np.any(m < 0) or np.any(m > 1) or not np.all(np.isfinite(m)):
        raise ValueError("rewards must lie in [0, 1]")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    new = P * (1.0 - delta * m)
    return new / new.sum()


def hedge_regret_check(history: Sequence[tuple], delta: float) -> bool:
    """Check ``sum_t m_t.P_t <= (1 + delta) min_j sum_t m_tj + ln g / delta`` on a recorded run."""
    if not history:
        return True
    P = np.array([h[0] for h in history], dtype=float)
    M = np.array([h[1] for h in history], dtype=float)
    g = P.shape[1]
    lhs = float(np.sum(P * M))
    rhs = (1 + delta) * float(M.sum(axis=0).min()) + math.log(g) / delta
    return lhs <= rhs + 1e-9 * max(1.0, abs(rhs))


def outer_rounds_for_epsilon(g: int, epsilon: float) -> int:
    return max(1, math.ceil(9 * math.log(g) / epsilon**2))


def default_delta(g: int, T: int) -> float:
    # with one group the update is a no-op; any value in (0, 1) will do
    if g < 2:
        return 0.5
    return min(0.5, math.sqrt(math.log(g) / T))


@dataclass(frozen=True)
class OuterConfig:
    rounds: int
    delta: float
    inner_rounds: int
    eta: float

    def __post_init__(self):
        if int(self.rounds) != self.rounds or self.rounds < 1:
            raise ValueError(f"rounds must be a positive integer, got {self.rounds}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if int(self.inner_rounds) != self.inner_rounds or self.inner_rounds < 1:
            raise ValueError(f"inner_rounds must be a positive integer, got {self.inner_rounds}")
        if not 0 < self.eta <= 0.5:
            raise ValueError(f"eta must lie in (0, 1/2], got {self.eta}")

    @classmethod
    def from_epsilon(cls, epsilon: float, g: int, k: int, *, rounds=None, delta=None,
                     inner_rounds=None, eta=None, inner_constant: float = 36.0) -> "OuterConfig":
        """Defaults T = ceil(9 ln g / eps^2), T' = ceil(36 ln k / eps^2), delta = sqrt(ln g / T)."""
        T = rounds if rounds is not None else outer_rounds_for_epsilon(g, epsilon)
        T2 = inner_rounds if inner_rounds is not None else rounds_for_epsilon(k, epsilon, inner_constant)
        if delta is None:
            delta = default_delta(g, T)
        if eta is None:
            eta = default_eta(k, T2) if k >= 2 else 0.5
        return cls(T, delta, T2, eta)

    def inner(self, sample_weights=None) -> InnerConfig:
        return InnerConfig(self.inner_rounds, self.eta, sample_weights)


@dataclass
class MultiRobustReport:
    per_group_avg_loss: tuple
    per_group_maj_loss: tuple
    opt_max: float | None = None
    group_weights: list = field(default_factory=list)  # P^t for t = 1..T
    group_losses: list = field(default_factory=list)  # loss_j(h_t) for t = 1..T
    sample_weights: list = field(default_factory=list)  # p^t handed to the inner loop
    inner_indices: list | None = None
    max_inner_normalization_error: float = 0.0
    max_group_normalization_error: float = 0.0
    overlap_weighted: bool = False

    def rewards(self) -> list:
        return [np.clip(1.0 - np.asarray(l), 0.0, 1.0) for l in self.group_losses]

    def hedge_history(self) -> list:
        return list(zip(self.group_weights, self.rewards()))


def sample_weights_for(d: GroupedDataset, P) -> np.ndarray:
    """p_i = sum over the example's groups of P_j / |G_j| (one term for disjoint groups)."""
    P = np.asarray(P, dtype=float)
    sizes = d.group_sizes
    if np.any(sizes == 0):
        raise ValueError(f"empty group {int(np.flatnonzero(sizes == 0)[0])}")
    return d.membership.astype(float) @ (P / sizes)


def run_group_boost(d: GroupedDataset, cfg: OuterConfig, oracle: ErmOracle, *,
                    allow_overlap: bool = False, check_normalization: bool = False,
                    inner_trace: bool = False):
    if not allow_overlap and not is_disjoint(d):
        raise ValueError("group_boost needs disjoint groups; use groups.to_disjoint or allow_overlap=True")
    require_valid(d)
    g = d.g
    y = d.variant_labels
    solver = oracle.bind(d.variants, d.variant_labels)
    P = np.full(g, 1.0 / g)
    report = MultiRobustReport((), (), overlap_weighted=not is_disjoint(d))
    outer = []
    all_indices = []
    loss_sum = np.zeros(g)
    maj_votes = np.zeros(len(y), dtype=np.int64)
    for _ in range(cfg.rounds):
        group_err = abs(P.sum() - 1.0)
        report.max_group_normalization_error = max(report.max_group_normalization_error, group_err)
        if check_normalization and (group_err > NORMALIZATION_TOL or np.any(P <= 0)):
            raise AssertionError(f"group weights invalid: {P}")
        p = sample_weights_for(d, P)
        inner = run_fms(d, cfg.inner(p), oracle, solver=solver,
                        check_normalization=check_normalization, trace=inner_trace)
        report.max_inner_normalization_error = max(report.max_inner_normalization_error,
                                                   inner.max_normalization_error)
        h_pred = majority_from_votes(inner.positive_votes, inner.rounds)
        mistakes = d.per_example_max(h_pred != y)
        losses = group_losses_from_mistakes(mistakes, d)
        report.group_weights.append(P.copy())
        report.group_losses.append(losses)
        report.sample_weights.append(p)
        all_indices.append(inner.indices)
        outer.append(inner.ensemble)
        loss_sum += losses
        maj_votes += h_pred == 1
        rewards = np.clip(1.0 - losses, 0.0, 1.0)
        P = hedge_update(P, rewards, cfg.delta)
    T = cfg.rounds
    final_pred = majority_from_votes(maj_votes, T)
    final_mistakes = d.per_example_max(final_pred != y)
    report.per_group_avg_loss = tuple(float(v) for v in loss_sum / T)
    report.per_group_maj_loss = tuple(float(v) for v in group_losses_from_mistakes(final_mistakes, d))
    if all(ix is not None for ix in all_indices):
        report.inner_indices = all_indices
    return Ensemble(tuple(outer)), report


def group_boost(d: GroupedDataset, cfg: OuterConfig, oracle: ErmOracle, *,
                allow_overlap: bool = False, opt_max: float | None = None):
    """Return the T round hypotheses (each an inner majority vote) and a per-group report.

    Overlapping membership is rejected unless ``allow_overlap`` is set, in
    which case sample weights follow ``groups.overlap_weights``.
    """
    ensemble, report = run_group_boost(d, cfg, oracle, allow_overlap=allow_overlap)
    if opt_max is not None:
        report = replace(report, opt_max=opt_max)
    return ensemble, report


def outer_trace_rows(report: MultiRobustReport) -> list[list]:
    g = len(report.per_group_avg_loss)
    header = (["round"] + [f"P_{j}" for j in range(g)] + [f"loss_{j}" for j in range(g)]
              + [f"avg_loss_{j}" for j in range(g)])
    rows = [header]
    running = np.zeros(g)
    for t, (P, losses) in enumerate(zip(report.group_weights, report.group_losses), start=1):
        running += losses
        rows.append([t, *map(float, P), *map(float, losses), *map(float, running / t)])
    return rows
