"""Robust-loss metrics and exhaustive optimality oracles."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hypothesis import prediction_matrix
from .inner_boost import Ensemble
from .perturbation import GroupedDataset, is_disjoint

BRUTE_FORCE_LIMIT = 10**7


class OracleGuardError(RuntimeError):
    """Raised when an exhaustive scan would exceed its size guard."""


@dataclass(frozen=True)
class RobustLossSummary:
    overall: float
    per_group: tuple
    mistakes: tuple  # per example: some perturbation is misclassified

    def to_dict(self) -> dict:
        return {"overall": self.overall, "per_group": list(self.per_group), "mistakes": list(self.mistakes)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


def robust_mistakes(h, d: GroupedDataset) -> np.ndarray:
    wrong = h.predict_many(d.variants) != d.variant_labels
    return d.per_example_max(wrong) > 0


def group_losses_from_mistakes(mistakes: np.ndarray, d: GroupedDataset) -> np.ndarray:
    """Per-group mean of a per-example robust mistake indicator (or rate)."""
    mem = d.membership.astype(float)
    sizes = mem.sum(axis=0)
    if np.any(sizes == 0):
        raise ValueError(f"empty group {int(np.flatnonzero(sizes == 0)[0])}")
    return (np.asarray(mistakes, dtype=float) @ mem) / sizes


def robust_loss(h, d: GroupedDataset) -> RobustLossSummary:
    mistakes = robust_mistakes(h, d)
    per_group = group_losses_from_mistakes(mistakes, d)
    return RobustLossSummary(float(mistakes.mean()), tuple(float(v) for v in per_group), tuple(bool(b) for b in mistakes))


def group_robust_loss(h, d: GroupedDataset, j: int) -> float:
    members = d.members(j)
    if members.size == 0:
        raise ValueError(f"empty group {j}")
    return float(robust_mistakes(h, d)[members].mean())


def mixed_robust_loss(e: Ensemble, d: GroupedDataset, sample_weights=None) -> float:
    """Worst-variant loss of the uniform mixture over the ensemble.

    The maximization over per-example variant distributions separates over
    examples, so it is attained by each example's worst single variant.
    """
    mistakes = np.zeros(len(d.variant_labels))
    for h in e.hypotheses:
        mistakes += h.predict_many(d.variants) != d.variant_labels
    worst = d.per_example_max(mistakes / len(e))
    if sample_weights is None:
        return float(worst.mean())
    return float(np.asarray(sample_weights, dtype=float) @ worst)


def _guard(hypotheses: Sequence, d: GroupedDataset):
    if not len(hypotheses):
        raise ValueError("empty hypothesis class")
    cost = len(hypotheses) * d.m * max(d.k, 1)
    if cost > BRUTE_FORCE_LIMIT:
        raise OracleGuardError(f"exhaustive scan of {cost} evaluations exceeds the limit of {BRUTE_FORCE_LIMIT}")


def class_robust_mistakes(hypotheses: Sequence, d: GroupedDataset) -> np.ndarray:
    """Boolean (n_class, m) matrix of robust mistakes."""
    wrong = prediction_matrix(hypotheses, d.variants) != d.variant_labels[None, :]
    return np.maximum.reduceat(wrong, d.offsets[:-1], axis=1)


def brute_force_opt(d: GroupedDataset, hypotheses: Sequence) -> tuple[float, int]:
    """Smallest empirical robust loss over the class and its first minimizer."""
    _guard(hypotheses, d)
    losses = class_robust_mistakes(hypotheses, d).mean(axis=1)
    i = int(np.argmin(losses))
    return float(losses[i]), i


def brute_force_opt_max(d: GroupedDataset, hypotheses: Sequence) -> tuple[float, int]:
    """Smallest worst-group robust loss over the class and its first minimizer."""
    if not is_disjoint(d):
        raise ValueError("brute_force_opt_max requires disjoint groups; reduce with groups.to_disjoint first")
    _guard(hypotheses, d)
    mist = class_robust_mistakes(hypotheses, d).astype(float)
    per_group = mist @ d.membership.astype(float) / d.group_sizes
    worst = per_group.max(axis=1)
    i = int(np.argmin(worst))
    return float(worst[i]), i


def brute_force_weighted_opt(d: GroupedDataset, hypotheses: Sequence, sample_weights) -> tuple[float, int]:
    """Smallest ``sum_i p_i * robust_mistake_i`` over the class."""
    _guard(hypotheses, d)
    losses = class_robust_mistakes(hypotheses, d).astype(float) @ np.asarray(sample_weights, dtype=float)
    i = int(np.argmin(losses))
    return float(losses[i]), i
