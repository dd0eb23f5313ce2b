"""Binary hypotheses and exact weighted ERM oracles.

Two hypothesis families are supported: thresholds on the real line and
finite lookup tables over an enumerated universe of points. Every oracle
returns an exact minimizer of the weighted 0/1 loss, with deterministic
tie-breaking so that whole boosting runs are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

POSITIVE = 1
NEGATIVE = -1

# Losses within this fraction of the total batch weight are treated as tied.
TIE_RTOL = 1e-12

Point = tuple  # tuple[float, ...]


def as_label(value) -> int:
    v = int(value)
    if v not in (NEGATIVE, POSITIVE) or v != value:
        raise ValueError(f"label must be -1 or +1, got {value!r}")
    return v


def as_point(coords) -> Point:
    if np.isscalar(coords):
        coords = (coords,)
    pt = tuple(float(c) for c in coords)
    if not pt:
        raise ValueError("point must have at least one coordinate")
    if not all(math.isfinite(c) for c in pt):
        raise ValueError(f"point has non-finite coordinates: {pt}")
    return pt


def _as_matrix(Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    return Z


@dataclass(frozen=True)
class ThresholdHypothesis:
    """Predicts +1 iff ``z >= tau`` ("above") or ``z < tau`` ("below")."""

    tau: float
    orientation: str = "above"

    def __post_init__(self):
        if self.orientation not in ("above", "below"):
            raise ValueError(f"orientation must be 'above' or 'below', got {self.orientation!r}")
        if not math.isfinite(self.tau):
            raise ValueError("tau must be finite")

    def predict(self, z) -> int:
        z = as_point(z)
        if len(z) != 1:
            raise ValueError("threshold hypotheses are defined on 1-D points only")
        above = z[0] >= self.tau
        return POSITIVE if above == (self.orientation == "above") else NEGATIVE

    def predict_many(self, Z) -> np.ndarray:
        Z = _as_matrix(Z)
        if Z.shape[1] != 1:
            raise ValueError("threshold hypotheses are defined on 1-D points only")
        above = Z[:, 0] >= self.tau
        if self.orientation == "below":
            above = ~above
        return np.where(above, POSITIVE, NEGATIVE).astype(np.int8)

    def to_dict(self) -> dict:
        return {"kind": "threshold", "tau": self.tau, "orientation": self.orientation}


@dataclass(frozen=True)
class TableHypothesis:
    """A lookup table assigning a label to every point of a finite universe."""

    universe: tuple
    outputs: tuple
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        universe = tuple(as_point(p) for p in self.universe)
        outputs = tuple(as_label(o) for o in self.outputs)
        if len(universe) != len(outputs):
            raise ValueError("universe and outputs differ in length")
        index = {p: i for i, p in enumerate(universe)}
        if len(index) != len(universe):
            raise ValueError("universe entries must be distinct")
        object.__setattr__(self, "universe", universe)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "_index", index)

    def _lookup(self, z: Point) -> int:
        try:
            return self._index[z]
        except KeyError:
            raise KeyError(f"point {z} is outside the table's universe") from None

    def predict(self, z) -> int:
        return self.outputs[self._lookup(as_point(z))]

    def predict_many(self, Z) -> np.ndarray:
        Z = _as_matrix(Z)
        out = np.asarray(self.outputs, dtype=np.int8)
        idx = [self._lookup(tuple(row)) for row in Z.tolist()]
        return out[np.asarray(idx, dtype=np.intp)]

    def to_dict(self) -> dict:
        return {
            "kind": "table",
            "universe": [list(p) for p in self.universe],
            "outputs": list(self.outputs),
        }


def predict(h, z) -> int:
    return h.predict(z)


def hypothesis_to_dict(h) -> dict:
    return h.to_dict()


def hypothesis_from_dict(obj: dict):
    kind = obj.get("kind")
    if kind == "threshold":
        return ThresholdHypothesis(float(obj["tau"]), obj["orientation"])
    if kind == "table":
        return TableHypothesis(tuple(map(tuple, obj["universe"])), tuple(obj["outputs"]))
    if kind == "majority":
        from .inner_boost import Ensemble

        return Ensemble(tuple(hypothesis_from_dict(h) for h in obj["hypotheses"]))
    raise ValueError(f"unknown hypothesis kind {kind!r}")


@dataclass(frozen=True)
class WeightedPoint:
    z: Point
    y: int
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "z", as_point(self.z))
        object.__setattr__(self, "y", as_label(self.y))
        if not (self.weight >= 0 and math.isfinite(self.weight)):
            raise ValueError(f"weight must be finite and >= 0, got {self.weight}")


def _unpack(batch: Sequence[WeightedPoint]):
    if not batch:
        raise ValueError("empty batch")
    Z = np.array([wp.z for wp in batch], dtype=float)
    y = np.array([wp.y for wp in batch], dtype=np.int8)
    w = np.array([wp.weight for wp in batch], dtype=float)
    return Z, y, w


def first_min(losses: np.ndarray, total_weight: float) -> int:
    """Index of the first entry within the tie tolerance of the minimum."""
    best = losses.min()
    tol = TIE_RTOL * max(total_weight, 0.0)
    return int(np.flatnonzero(losses <= best + tol)[0])


def threshold_candidates(coords: np.ndarray) -> np.ndarray:
    """Candidate thresholds: one below the minimum, midpoints, one above the maximum."""
    c = np.unique(coords)
    mids = (c[:-1] + c[1:]) / 2.0
    return np.concatenate([[c[0] - 1.0], mids, [c[-1] + 1.0]])


def _threshold_losses(z: np.ndarray, y: np.ndarray, w: np.ndarray):
    """Weighted losses of every candidate, shape (n_candidates, 2) [above, below]."""
    c, inv = np.unique(z, return_inverse=True)
    pos = np.bincount(inv, weights=np.where(y == POSITIVE, w, 0.0), minlength=len(c))
    neg = np.bincount(inv, weights=np.where(y == NEGATIVE, w, 0.0), minlength=len(c))
    # j = number of distinct coordinates strictly below the candidate threshold
    cpos = np.concatenate([[0.0], np.cumsum(pos)])
    cneg = np.concatenate([[0.0], np.cumsum(neg)])
    above = cpos + (cneg[-1] - cneg)
    below = cneg + (cpos[-1] - cpos)
    taus = np.concatenate([[c[0] - 1.0], (c[:-1] + c[1:]) / 2.0, [c[-1] + 1.0]])
    return taus, np.stack([above, below], axis=1)


def erm_threshold_arrays(z, y, w) -> tuple[ThresholdHypothesis, float]:
    z = np.asarray(z, dtype=float)
    if z.ndim == 2:
        if z.shape[1] != 1:
            raise ValueError("threshold ERM requires 1-D points")
        z = z[:, 0]
    if z.size == 0:
        raise ValueError("empty batch")
    w = np.asarray(w, dtype=float)
    taus, losses = _threshold_losses(z, np.asarray(y), w)
    flat = losses.ravel()
    i = first_min(flat, float(w.sum()))
    j, o = divmod(i, 2)
    return ThresholdHypothesis(float(taus[j]), "above" if o == 0 else "below"), float(flat[i])


def erm_threshold(batch: Sequence[WeightedPoint]) -> ThresholdHypothesis:
    """Exact weighted-0/1 ERM over all thresholds and both orientations.

    Ties go to the smallest threshold, then to the "above" orientation.
    """
    Z, y, w = _unpack(batch)
    if Z.shape[1] != 1:
        raise ValueError("threshold ERM requires 1-D points")
    return erm_threshold_arrays(Z[:, 0], y, w)[0]


def prediction_matrix(hypotheses: Sequence, Z) -> np.ndarray:
    """Predictions of every hypothesis on every row of ``Z``; shape (len(hypotheses), len(Z))."""
    Z = _as_matrix(Z)
    if not len(hypotheses):
        return np.empty((0, len(Z)), dtype=np.int8)
    return np.stack([h.predict_many(Z) for h in hypotheses])


def erm_table(batch: Sequence[WeightedPoint], hypotheses: Sequence[TableHypothesis]) -> int:
    """Index of the class member with the smallest weighted 0/1 loss (first on ties)."""
    if not hypotheses:
        raise ValueError("empty hypothesis class")
    Z, y, w = _unpack(batch)
    mistakes = prediction_matrix(hypotheses, Z) != y[None, :]
    losses = mistakes.astype(float) @ w
    return first_min(losses, float(w.sum()))


@dataclass(frozen=True)
class ErmResult:
    hypothesis: object
    loss: float
    predictions: np.ndarray
    index: int | None = None


class ErmOracle:
    """Base class for weighted ERM oracles.

    ``bind(Z, y)`` fixes the points and labels of a batch and returns a
    function from a weight vector to an :class:`ErmResult`. Boosting loops
    call ``bind`` once and reweight many times.
    """

    def bind(self, Z, y) -> Callable[[np.ndarray], ErmResult]:
        raise NotImplementedError

    def fit(self, Z, y, w) -> ErmResult:
        return self.bind(Z, y)(np.asarray(w, dtype=float))


class ThresholdOracle(ErmOracle):
    """ERM over all 1-D thresholds (an infinite class searched exactly)."""

    def bind(self, Z, y):
        Z = _as_matrix(Z)
        if Z.shape[1] != 1:
            raise ValueError("threshold ERM requires 1-D points")
        z = Z[:, 0].copy()
        y = np.asarray(y, dtype=np.int8)
        if z.size == 0:
            raise ValueError("empty batch")

        def solve(w):
            h, loss = erm_threshold_arrays(z, y, w)
            return ErmResult(h, loss, h.predict_many(Z))

        return solve


class FiniteClassOracle(ErmOracle):
    """ERM by exhaustive scan over an explicit finite class."""

    def __init__(self, hypotheses: Iterable):
        self.hypotheses = tuple(hypotheses)
        if not self.hypotheses:
            raise ValueError("empty hypothesis class")

    def bind(self, Z, y):
        preds = prediction_matrix(self.hypotheses, Z)
        y = np.asarray(y, dtype=np.int8)
        mistakes = (preds != y[None, :]).astype(float)

        def solve(w):
            w = np.asarray(w, dtype=float)
            losses = mistakes @ w
            i = first_min(losses, float(w.sum()))
            return ErmResult(self.hypotheses[i], float(losses[i]), preds[i], i)

        return solve
