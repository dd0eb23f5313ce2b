"""
Patch attacks handled by masking
================================

If every patch fits inside some mask placement, a classifier that is right on
all masked copies of an image cannot be fooled by the patch. The finite set of
masked copies is the perturbation set.
"""

# %%
from robustboost import FiniteClassOracle, InnerConfig, fms_boost, robust_loss
from robustboost.datagen import covers_all_patches, gen_masked_grid
from robustboost.metrics import brute_force_opt

side, patch, mask = 5, 2, 3
print("2x2 patches covered by 3x3 masks:", covers_all_patches(side, patch, mask))

# %%
d, hyps = gen_masked_grid(side, patch, mask, seed=0, m=30)
print(f"{d.m} grids, {d.k} masked copies each, {len(hyps)} count-threshold rules")
opt, _ = brute_force_opt(d, hyps)
e = fms_boost(d, InnerConfig.default(d.k, 200), FiniteClassOracle(hyps))
print(f"best single rule {opt:.3f}, boosted majority {robust_loss(e, d).overall:.3f}")
