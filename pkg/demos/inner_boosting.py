"""
Boosting a plain ERM oracle into a robust learner
=================================================

Each round reweights perturbations that the last hypothesis got wrong, so the
oracle keeps being pushed toward the hard variants. The majority vote over all
rounds is the robust predictor.
"""

# %%
from robustboost import InnerConfig, ThresholdOracle, robust_loss
from robustboost.datagen import gen_example1
from robustboost.inner_boost import inner_trace_rows, rounds_for_epsilon, run_fms

d, _ = gen_example1(4, 4)
T = rounds_for_epsilon(d.k, 0.3)
run = run_fms(d, InnerConfig.default(d.k, T), ThresholdOracle(), trace=True)

# %%
# loss of the running mixture and of the running majority vote
rows = inner_trace_rows(run.trace)
print(rows[0])
for row in rows[1::max(1, T // 10)]:
    print(row)
print("final majority robust loss:", robust_loss(run.ensemble, d).overall)
