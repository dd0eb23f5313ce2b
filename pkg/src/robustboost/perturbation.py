"""Finite perturbation sets, labeled examples and the grouped dataset container."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .hypothesis import as_label, as_point


@dataclass(frozen=True)
class LabeledExample:
    x: tuple
    y: int
    u: tuple  # the enumerated perturbation set U(x); x itself is included only if listed

    @classmethod
    def make(cls, x, y, u) -> "LabeledExample":
        return cls(as_point(x), as_label(y), tuple(as_point(z) for z in u))


@dataclass(frozen=True)
class Violation:
    invariant: str
    index: int | None
    message: str

    def __str__(self):
        return self.message


class InvalidDataset(ValueError):
    pass


@dataclass(frozen=True)
class GroupedDataset:
    """Examples with per-example group membership.

    Membership is stored per example so overlapping groups are first class.
    ``k`` is the declared bound on perturbation-set size and is stored, not
    recomputed.
    """

    examples: tuple
    groups: tuple  # groups[i] is a sorted tuple of group indices of example i
    g: int
    k: int
    meta: dict | None = None

    @classmethod
    def build(cls, examples: Sequence[LabeledExample], groups=None, g=None, k=None, meta=None):
        examples = tuple(examples)
        if groups is None:
            groups = [(0,)] * len(examples)
        groups = tuple(tuple(sorted(set(int(j) for j in gs))) for gs in groups)
        if g is None:
            g = 1 + max((max(gs) for gs in groups if gs), default=-1)
        if k is None:
            k = max((len(e.u) for e in examples), default=0)
        return cls(examples, groups, int(g), int(k), meta)

    @property
    def m(self) -> int:
        return len(self.examples)

    @property
    def dim(self) -> int:
        return len(self.examples[0].x)

    # Flattened views: variants of example i occupy rows offsets[i]:offsets[i+1].
    @cached_property
    def offsets(self) -> np.ndarray:
        sizes = [len(e.u) for e in self.examples]
        return np.concatenate([[0], np.cumsum(sizes)]).astype(np.intp)

    @cached_property
    def variants(self) -> np.ndarray:
        return np.array([z for e in self.examples for z in e.u], dtype=float).reshape(-1, self.dim)

    @cached_property
    def variant_labels(self) -> np.ndarray:
        return np.repeat(np.array([e.y for e in self.examples], dtype=np.int8), np.diff(self.offsets))

    @cached_property
    def variant_owner(self) -> np.ndarray:
        return np.repeat(np.arange(self.m), np.diff(self.offsets))

    @cached_property
    def labels(self) -> np.ndarray:
        return np.array([e.y for e in self.examples], dtype=np.int8)

    @cached_property
    def membership(self) -> np.ndarray:
        """Boolean (m, g) membership matrix."""
        mat = np.zeros((self.m, self.g), dtype=bool)
        for i, gs in enumerate(self.groups):
            for j in gs:
                if 0 <= j < self.g:
                    mat[i, j] = True
        return mat

    @cached_property
    def group_sizes(self) -> np.ndarray:
        return self.membership.sum(axis=0)

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.membership[:, j])

    def per_example_max(self, per_variant: np.ndarray) -> np.ndarray:
        """Maximum of a per-variant quantity within each example's perturbation set."""
        return np.maximum.reduceat(np.asarray(per_variant, dtype=float), self.offsets[:-1])

    def to_dict(self) -> dict:
        out = {
            "k": self.k,
            "g": self.g,
            "examples": [
                {
                    "x": list(e.x),
                    "y": e.y,
                    "u": [list(z) for z in e.u],
                    "groups": list(gs),
                }
                for e, gs in zip(self.examples, self.groups)
            ],
        }
        if self.meta is not None:
            out["meta"] = self.meta
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, obj: dict) -> "GroupedDataset":
        examples = []
        groups = []
        for e in obj["examples"]:
            examples.append(LabeledExample.make(e["x"], e["y"], e["u"]))
            groups.append(e.get("groups", [0]))
        groups = tuple(tuple(sorted(set(int(j) for j in gs))) for gs in groups)
        return cls(tuple(examples), groups, int(obj["g"]), int(obj["k"]), obj.get("meta"))

    @classmethod
    def from_json(cls, text: str) -> "GroupedDataset":
        return cls.from_dict(json.loads(text))


def is_disjoint(d: GroupedDataset) -> bool:
    return all(len(gs) == 1 for gs in d.groups)


def validate(d: GroupedDataset) -> Violation | None:
    """Return the first violated invariant, or None if the dataset is valid."""
    if d.m == 0:
        return Violation("nonempty", None, "dataset has no examples")
    if d.g < 1:
        return Violation("group count", None, f"group count must be >= 1, got {d.g}")
    dim = len(d.examples[0].x)
    for i, e in enumerate(d.examples):
        if e.y not in (-1, 1):
            return Violation("label", i, f"label {e.y!r} at {i} is not -1/+1")
        if len(e.x) != dim:
            return Violation("dimension", i, f"x has dimension {len(e.x)} at {i}, expected {dim}")
        if not e.u:
            return Violation("nonempty U(x)", i, f"empty U(x) at {i}")
        if len(e.u) > d.k:
            return Violation("|U(x)| <= k", i, f"|U(x)| = {len(e.u)} exceeds k = {d.k} at {i}")
        for z in (e.x, *e.u):
            if len(z) != dim:
                return Violation("dimension", i, f"perturbation of dimension {len(z)} at {i}, expected {dim}")
            if not all(math.isfinite(c) for c in z):
                return Violation("finite", i, f"non-finite coordinate at {i}")
    if d.k != max(len(e.u) for e in d.examples):
        return Violation("k = max |U(x)|", None, f"declared k = {d.k} but largest U(x) has {max(len(e.u) for e in d.examples)}")
    if len(d.groups) != d.m:
        return Violation("membership", None, "group membership list does not match example count")
    for i, gs in enumerate(d.groups):
        if not gs:
            return Violation("membership", i, f"example {i} belongs to no group")
        for j in gs:
            if not 0 <= j < d.g:
                return Violation("group range", i, f"group index {j} out of range [0,{d.g}) at {i}")
    sizes = d.group_sizes
    for j in range(d.g):
        if sizes[j] == 0:
            return Violation("nonempty group", j, f"empty group {j}")
    return None


def require_valid(d: GroupedDataset) -> GroupedDataset:
    v = validate(d)
    if v is not None:
        raise InvalidDataset(str(v))
    return d
