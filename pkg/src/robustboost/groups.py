"""Reduction from overlapping groups to disjoint ones.

The copy construction materializes one example per (example, group)
membership. The weight formula reaches the same ERM objective without
copies and is what ``group_boost(..., allow_overlap=True)`` uses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .outer_boost import sample_weights_for
from .perturbation import GroupedDataset, require_valid


@dataclass(frozen=True)
class ReductionMap:
    sources: tuple  # sources[c] = (original example index, group index) of copy c

    def to_dict(self) -> dict:
        return {"sources": [list(s) for s in self.sources]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, obj: dict) -> "ReductionMap":
        return cls(tuple((int(i), int(j)) for i, j in obj["sources"]))


def to_disjoint(d: GroupedDataset) -> tuple[GroupedDataset, ReductionMap]:
    """One copy per membership, emitted in (example, ascending group) order."""
    require_valid(d)
    examples, groups, sources = [], [], []
    for i, (e, gs) in enumerate(zip(d.examples, d.groups)):
        for j in gs:
            examples.append(e)
            groups.append((j,))
            sources.append((i, j))
    out = GroupedDataset(tuple(examples), tuple(groups), d.g, d.k, d.meta)
    return out, ReductionMap(tuple(sources))


def overlap_weights(d: GroupedDataset, P) -> np.ndarray:
    """p_i = sum of P_j / |G_j| over the groups containing example i."""
    P = np.asarray(P, dtype=float)
    if P.shape != (d.g,):
        raise ValueError(f"expected {d.g} group weights, got shape {P.shape}")
    return sample_weights_for(d, P)


def aggregate_copies(values: np.ndarray, rmap: ReductionMap, m: int) -> np.ndarray:
    """Sum per-copy values back onto the original examples."""
    owners = np.array([i for i, _ in rmap.sources], dtype=np.intp)
    return np.bincount(owners, weights=np.asarray(values, dtype=float), minlength=m)
