"""
Overlapping groups two ways
===========================

Copying each example once per group it belongs to, or weighting it by the sum
of its groups' shares, hands the oracle the same objective.
"""

# %%
import numpy as np

from robustboost import FiniteClassOracle, OuterConfig
from robustboost.datagen import gen_random
from robustboost.groups import overlap_weights, to_disjoint
from robustboost.outer_boost import run_group_boost

d, hyps = gen_random(10, 3, 3, 40, seed=4, overlap=0.8)
copies, rmap = to_disjoint(d)
print("memberships:", d.groups)
print(f"{d.m} examples became {copies.m} copies")

# %%
P = np.array([0.5, 0.3, 0.2])
print("weights without copies:", overlap_weights(d, P).round(4))

# %%
cfg = OuterConfig.from_epsilon(0.5, d.g, d.k, rounds=6, inner_rounds=60)
_, a = run_group_boost(d, cfg, FiniteClassOracle(hyps), allow_overlap=True)
_, b = run_group_boost(copies, cfg, FiniteClassOracle(hyps))
print("same hypotheses every round:", a.inner_indices == b.inner_indices)
print("group losses:", a.per_group_maj_loss, b.per_group_maj_loss)
