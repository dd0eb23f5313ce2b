"""
Why augmenting with perturbations is not enough
===============================================

Plain ERM over every perturbation treated as its own labeled point picks a
threshold that is robustly wrong on almost half the sample, while a
different threshold is robustly wrong on a single example.
"""

# %%
import numpy as np

from robustboost import ThresholdOracle, robust_loss
from robustboost.datagen import gen_example1
from robustboost.metrics import brute_force_opt

# %%
for n in (4, 25, 50):
    d, hyps = gen_example1(n, n)
    erm = ThresholdOracle().fit(d.variants, d.variant_labels, np.ones(len(d.variant_labels))).hypothesis
    opt, best = brute_force_opt(d, hyps)
    print(f"n={n:3d}  augmented ERM tau={erm.tau:+.3f} robust loss={robust_loss(erm, d).overall:.4f}"
          f"   best tau={hyps[best].tau:+.3f} robust loss={opt:.4f}")
