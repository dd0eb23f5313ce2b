"""
Protecting every group, not just the average
============================================

On this instance the member with the best overall robust loss gives up the
small group. Hedging over groups drives every group's loss toward the best
achievable worst-group loss.
"""

# %%
from robustboost import FiniteClassOracle, OuterConfig, group_boost, robust_loss
from robustboost.datagen import gen_two_group_adversarial
from robustboost.metrics import brute_force_opt, brute_force_opt_max

d, hyps = gen_two_group_adversarial(0)
opt, avg_best = brute_force_opt(d, hyps)
opt_max, bal_best = brute_force_opt_max(d, hyps)
print("best on average :", robust_loss(hyps[avg_best], d).per_group)
print("best worst-group:", robust_loss(hyps[bal_best], d).per_group, "OPT_max =", opt_max)

# %%
cfg = OuterConfig.from_epsilon(0.3, d.g, d.k)
ens, report = group_boost(d, cfg, FiniteClassOracle(hyps), opt_max=opt_max)
print(f"T={cfg.rounds} outer rounds, T'={cfg.inner_rounds} inner rounds, delta={cfg.delta:.3f}")
print("average over rounds per group:", report.per_group_avg_loss)
print("majority vote per group      :", report.per_group_maj_loss)
print("final group weights          :", report.group_weights[-1].round(3))
