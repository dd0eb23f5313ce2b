"""Agnostic robust learning and multi-group robustness from a plain ERM oracle."""

from .hypothesis import (
    ErmOracle,
    FiniteClassOracle,
    TableHypothesis,
    ThresholdHypothesis,
    ThresholdOracle,
    WeightedPoint,
    erm_table,
    erm_threshold,
    hypothesis_from_dict,
    predict,
)
from .perturbation import GroupedDataset, LabeledExample, is_disjoint, validate
from .inner_boost import Ensemble, InnerConfig, default_eta, fms_boost, majority_predict
from .metrics import (
    brute_force_opt,
    brute_force_opt_max,
    mixed_robust_loss,
    robust_loss,
)
from .outer_boost import OuterConfig, group_boost, hedge_regret_check, hedge_update
from .groups import overlap_weights, to_disjoint

__version__ = "0.1.0"
