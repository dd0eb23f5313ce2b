"""Multiplicative weights over perturbations against a weighted ERM oracle.

Each example keeps a distribution over its perturbation set. Every round the
oracle is called on all (variant, label) pairs weighted by
``p_i * P_i(z)``; variants the returned hypothesis misclassifies have their
weight multiplied by ``1 + eta``. The output is the sequence of oracle
hypotheses, used either as a uniform mixture or through a majority vote.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hypothesis import NEGATIVE, POSITIVE, ErmOracle, _as_matrix, as_point
from .perturbation import GroupedDataset, require_valid

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class Ensemble:
    """Ordered hypotheses; predicts by strict majority, ties go to -1."""

    hypotheses: tuple

    def __post_init__(self):
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        if not self.hypotheses:
            raise ValueError("ensemble must contain at least one hypothesis")

    def __len__(self):
        return len(self.hypotheses)

    def votes(self, Z) -> np.ndarray:
        """Number of members predicting +1 at each row of ``Z``."""
        Z = _as_matrix(Z)
        count = np.zeros(len(Z), dtype=np.int64)
        for h in self.hypotheses:
            count += h.predict_many(Z) == POSITIVE
        return count

    def predict_many(self, Z) -> np.ndarray:
        return majority_from_votes(self.votes(Z), len(self.hypotheses))

    def predict(self, z) -> int:
        return int(self.predict_many(np.array([as_point(z)]))[0])

    def to_dict(self) -> dict:
        return {"kind": "majority", "hypotheses": [h.to_dict() for h in self.hypotheses]}


def majority_from_votes(positive_votes, n_voters: int) -> np.ndarray:
    return np.where(2 * np.asarray(positive_votes) > n_voters, POSITIVE, NEGATIVE).astype(np.int8)


def majority_predict(e: Ensemble, z) -> int:
    return e.predict(z)


def default_eta(k: int, T: int) -> float:
    """Step size min(1/2, sqrt(ln k / T))."""
    if k < 2:
        raise ValueError(f"default_eta needs k >= 2, got {k}")
    if T < 1:
        raise ValueError(f"default_eta needs T >= 1, got {T}")
    return min(0.5, math.sqrt(math.log(k) / T))


def rounds_for_epsilon(k: int, epsilon: float, constant: float = 32.0) -> int:
    """``ceil(constant * ln k / epsilon^2)``, at least one round."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return max(1, math.ceil(constant * math.log(max(k, 1)) / epsilon**2))


@dataclass(frozen=True)
class InnerConfig:
    rounds: int
    eta: float
    sample_weights: tuple | None = None  # None means uniform 1/m

    def __post_init__(self):
        if int(self.rounds) != self.rounds or self.rounds < 1:
            raise ValueError(f"rounds must be a positive integer, got {self.rounds}")
        if not 0 < self.eta <= 0.5:
            raise ValueError(f"eta must lie in (0, 1/2], got {self.eta}")
        if self.sample_weights is not None:
            p = np.asarray(self.sample_weights, dtype=float)
            if np.any(p < 0) or not np.all(np.isfinite(p)):
                raise ValueError("sample weights must be finite and nonnegative")
            if abs(p.sum() - 1.0) > NORMALIZATION_TOL:
                raise ValueError(f"sample weights must sum to 1, got {p.sum()!r}")
            object.__setattr__(self, "sample_weights", tuple(float(v) for v in p))

    @classmethod
    def default(cls, k: int, rounds: int, sample_weights=None) -> "InnerConfig":
        # a single variant per example leaves nothing to reweight; any eta works
        eta = default_eta(k, rounds) if k >= 2 else 0.5
        return cls(rounds, eta, sample_weights)

    def weights_for(self, m: int) -> np.ndarray:
        if self.sample_weights is None:
            return np.full(m, 1.0 / m)
        if len(self.sample_weights) != m:
            raise ValueError(f"{len(self.sample_weights)} sample weights for {m} examples")
        return np.asarray(self.sample_weights, dtype=float)


@dataclass(frozen=True)
class PerturbationWeights:
    """Per-variant weights, stored as logarithms so long runs cannot overflow.

    Variants of example i occupy ``offsets[i]:offsets[i+1]``.
    """

    log_w: np.ndarray
    offsets: np.ndarray

    @classmethod
    def uniform(cls, offsets) -> "PerturbationWeights":
        offsets = np.asarray(offsets, dtype=np.intp)
        return cls(np.zeros(offsets[-1]), offsets)

    @property
    def w(self) -> np.ndarray:
        return np.exp(self.log_w)

    @property
    def P(self) -> np.ndarray:
        starts = self.offsets[:-1]
        shift = np.repeat(np.maximum.reduceat(self.log_w, starts), np.diff(self.offsets))
        e = np.exp(self.log_w - shift)
        return e / np.repeat(np.add.reduceat(e, starts), np.diff(self.offsets))

    def normalization_error(self) -> float:
        sums = np.add.reduceat(self.P, self.offsets[:-1])
        return float(np.max(np.abs(sums - 1.0)))


def update_weights(w: PerturbationWeights, mistakes: np.ndarray, eta: float) -> PerturbationWeights:
    """Multiply the weight of every misclassified variant by (1 + eta)."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    return PerturbationWeights(w.log_w + math.log1p(eta) * np.asarray(mistakes, dtype=float), w.offsets)


def weight_update_round(w: PerturbationWeights, h, eta: float, d: GroupedDataset) -> PerturbationWeights:
    mistakes = h.predict_many(d.variants) != d.variant_labels
    return update_weights(w, mistakes, eta)


def batch_weights(d: GroupedDataset, p: np.ndarray, w: PerturbationWeights) -> np.ndarray:
    """ERM weight of every variant: sample weight of its example times P(z)."""
    return np.asarray(p, dtype=float)[d.variant_owner] * w.P


@dataclass
class InnerRound:
    round: int
    erm_loss: float
    mixed_loss: float
    maj_loss: float
    normalization_error: float


@dataclass
class InnerRun:
    """Everything a boosting run produced; ``ensemble`` is the public output."""

    ensemble: Ensemble
    indices: list | None  # class indices when the oracle scans a finite class
    positive_votes: np.ndarray  # per variant, number of rounds predicting +1
    mistake_counts: np.ndarray  # per variant, number of rounds misclassifying it
    max_normalization_error: float
    trace: list = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return len(self.ensemble)


def run_fms(
    d: GroupedDataset,
    cfg: InnerConfig,
    oracle: ErmOracle,
    *,
    solver=None,
    trace: bool = False,
    check_normalization: bool = False,
) -> InnerRun:
    """Run the boosting loop and keep the per-variant statistics.

    ``solver`` may be a pre-bound oracle (``oracle.bind(d.variants, d.variant_labels)``)
    so outer loops do not rebuild prediction matrices every call.
    """
    p = cfg.weights_for(d.m)
    if solver is None:
        solver = oracle.bind(d.variants, d.variant_labels)
    y = d.variant_labels
    w = PerturbationWeights.uniform(d.offsets)
    log_step = math.log1p(cfg.eta)
    pos_votes = np.zeros(len(y), dtype=np.int64)
    mistake_counts = np.zeros(len(y), dtype=np.int64)
    hypotheses, indices = [], []
    max_err = 0.0
    records = []
    for t in range(1, cfg.rounds + 1):
        res = solver(batch_weights(d, p, w))
        hypotheses.append(res.hypothesis)
        indices.append(res.index)
        wrong = res.predictions != y
        pos_votes += res.predictions == POSITIVE
        mistake_counts += wrong
        w = PerturbationWeights(w.log_w + log_step * wrong, w.offsets)
        if check_normalization or trace:
            err = w.normalization_error()
            max_err = max(max_err, err)
            if check_normalization and err > NORMALIZATION_TOL:
                raise AssertionError(f"perturbation distribution off by {err} at round {t}")
        if trace:
            mixed = float(p @ d.per_example_max(mistake_counts / t))
            maj_wrong = majority_from_votes(pos_votes, t) != y
            maj = float(p @ d.per_example_max(maj_wrong))
            records.append(InnerRound(t, res.loss, mixed, maj, err))
    has_index = all(i is not None for i in indices)
    return InnerRun(
        Ensemble(tuple(hypotheses)),
        indices if has_index else None,
        pos_votes,
        mistake_counts,
        max_err,
        records,
    )


def fms_boost(d: GroupedDataset, cfg: InnerConfig, oracle: ErmOracle) -> Ensemble:
    """Boost robustness over the perturbation sets of ``d``; returns h_1..h_T in round order."""
    require_valid(d)
    return run_fms(d, cfg, oracle).ensemble


def inner_trace_rows(records: Sequence[InnerRound]) -> list[list]:
    header = ["round", "erm_loss", "mixed_robust_loss", "maj_robust_loss"]
    return [header] + [[r.round, r.erm_loss, r.mixed_loss, r.maj_loss] for r in records]
