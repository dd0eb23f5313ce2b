"""End-to-end acceptance runs, one test per criterion.

Each test prints a single ``criterion N PASS|FAIL`` line (also repeated in the
pytest terminal summary) and then asserts. Tolerances are pinned here.
"""

import math
import time

import numpy as np
import pytest

from robustboost.datagen import gen_example1, gen_random, gen_two_group_adversarial
from robustboost.groups import overlap_weights, to_disjoint
from robustboost.hypothesis import FiniteClassOracle, ThresholdOracle
from robustboost.inner_boost import Ensemble, InnerConfig, batch_weights, run_fms
from robustboost.metrics import brute_force_opt, brute_force_opt_max, mixed_robust_loss, robust_loss
from robustboost.outer_boost import OuterConfig, hedge_regret_check, hedge_update, run_group_boost
from robustboost.perturbation import GroupedDataset, LabeledExample

pytestmark = pytest.mark.acceptance

EPS = 0.3
NORM_TOL = 1e-9
BATCH_TOL = 1e-12

# normalization errors observed by every run in this module, for criterion 9
NORM_LOG = []


def inner_rounds(k, eps=EPS, c=32.0):
    return math.ceil(c * math.log(k) / eps**2)


def _inner(d, oracle, T, p=None):
    run = run_fms(d, InnerConfig.default(d.k, T, p), oracle, check_normalization=True)
    NORM_LOG.append(("inner", run.max_normalization_error))
    return run


def _outer(d, oracle, cfg, **kw):
    ens, report = run_group_boost(d, cfg, oracle, check_normalization=True, **kw)
    NORM_LOG.append(("inner", report.max_inner_normalization_error))
    NORM_LOG.append(("group", report.max_group_normalization_error))
    return ens, report


def small_family(n_seeds, base):
    """(m <= 10, 2 <= k <= 4, class <= 100) single-group instances."""
    out = []
    for seed in range(n_seeds):
        rng = np.random.default_rng(base + seed)
        m, k, size = int(rng.integers(4, 11)), int(rng.integers(2, 5)), int(rng.integers(20, 101))
        out.append(gen_random(m, k, 1, size, seed))
    return out


# 1 -------------------------------------------------------------------------

@pytest.mark.parametrize("n", [4, 25, 50])
def test_criterion_1_example1_gap(n, acceptance_line):
    start = time.perf_counter()
    d, hyps = gen_example1(n, n)
    erm = ThresholdOracle().fit(d.variants, d.variant_labels, np.ones(len(d.variant_labels))).hypothesis
    erm_loss = robust_loss(erm, d).overall
    opt, _ = brute_force_opt(d, hyps)
    elapsed = time.perf_counter() - start
    ok = erm_loss == (n - 1) / (2 * n) and opt == 1 / (2 * n) and elapsed < 1.0
    acceptance_line(1, f"example1 gap n={n}", ok,
                    f"erm={erm_loss} opt={opt} expected=({(n - 1) / (2 * n)}, {1 / (2 * n)}) {elapsed:.3f}s")
    assert ok


# 2 -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def inner_guarantee_runs():
    start = time.perf_counter()
    cases = [gen_example1(4, 4)] + small_family(50, 1000)
    rows = []
    for d, hyps in cases:
        T = inner_rounds(d.k)
        oracle = ThresholdOracle() if d.meta["generator"] == "example1" else FiniteClassOracle(hyps)
        run = _inner(d, oracle, T)
        opt, _ = brute_force_opt(d, hyps)
        rows.append((robust_loss(run.ensemble, d).overall, opt))
    return rows, time.perf_counter() - start


def test_criterion_2_inner_guarantee(inner_guarantee_runs, acceptance_line):
    rows, elapsed = inner_guarantee_runs
    failures = sum(maj > 2 * opt + EPS for maj, opt in rows)
    ok = failures == 0 and elapsed < 30.0
    acceptance_line(2, "MAJ <= 2 OPT + eps", ok, f"{len(rows)} instances, {failures} failures, {elapsed:.1f}s")
    assert ok


# 3 -------------------------------------------------------------------------

def test_criterion_3_regret_bound(acceptance_line):
    start = time.perf_counter()
    violations, monotone = 0, 0
    cases = small_family(50, 1000)
    for d, hyps in cases:
        opt, _ = brute_force_opt(d, hyps)
        oracle = FiniteClassOracle(hyps)
        slacks = []
        for T in (50, 200, 800):
            mixed = mixed_robust_loss(_inner(d, oracle, T).ensemble, d)
            violations += mixed > opt + 2 * math.sqrt(math.log(d.k) / T) + 1e-12
            slacks.append(mixed - opt)
        monotone += slacks[0] >= slacks[1] >= slacks[2]
    elapsed = time.perf_counter() - start
    frac = monotone / len(cases)
    ok = violations == 0 and frac >= 0.8 and elapsed < 60.0
    acceptance_line(3, "mixed <= OPT + 2 sqrt(ln k / T)", ok,
                    f"{violations} violations, monotone slack on {frac:.0%} of seeds, {elapsed:.1f}s")
    assert ok


# 4, 5, 7 -------------------------------------------------------------------

def outer_family():
    cases = [gen_two_group_adversarial(0)]
    for seed in range(20):
        rng = np.random.default_rng(2000 + seed)
        g = int(rng.integers(2, 5))
        m, k, size = int(rng.integers(g + 2, 13)), int(rng.integers(2, 4)), int(rng.integers(20, 101))
        cases.append(gen_random(m, k, g, size, seed))
    return cases


@pytest.fixture(scope="module")
def outer_runs():
    start = time.perf_counter()
    runs = []
    for d, hyps in outer_family():
        opt_max, _ = brute_force_opt_max(d, hyps)
        cfg = OuterConfig.from_epsilon(EPS, d.g, d.k)
        _, report = _outer(d, FiniteClassOracle(hyps), cfg)
        runs.append((d, hyps, opt_max, cfg, report))
    return runs, time.perf_counter() - start


def test_criterion_4_average_multi_robust(outer_runs, acceptance_line):
    runs, elapsed = outer_runs
    failures = sum(max(r.per_group_avg_loss) > opt_max + EPS for _, _, opt_max, _, r in runs)
    d0, hyps0, opt0, _, r0 = runs[0]
    # the adversarial instance really separates the two optima
    separated = brute_force_opt(d0, hyps0)[1] != brute_force_opt_max(d0, hyps0)[1]
    ok = failures == 0 and separated and elapsed < 300.0
    acceptance_line(4, "avg group loss <= OPT_max + eps", ok,
                    f"{len(runs)} runs, {failures} failures, adversarial OPT_max={opt0} "
                    f"worst avg={max(r0.per_group_avg_loss):.4f}, {elapsed:.1f}s")
    assert ok


def test_criterion_5_majority_multi_robust(outer_runs, acceptance_line):
    runs, _ = outer_runs
    failures = sum(max(r.per_group_maj_loss) > 2 * (opt_max + EPS) for _, _, opt_max, _, r in runs)
    ok = failures == 0
    acceptance_line(5, "MAJ group loss <= 2 (OPT_max + eps)", ok, f"{len(runs)} runs, {failures} failures")
    assert ok


def adversarial_streams(n, seed=0):
    """Reward streams that react to the learner's current weights, plus some fixed patterns."""
    rng = np.random.default_rng(seed)
    out = []
    for s in range(n):
        g = int(rng.integers(2, 7))
        T = int(rng.integers(20, 400))
        delta = float(min(0.5, math.sqrt(math.log(g) / T))) if s % 2 else float(rng.uniform(0.05, 0.95))
        kind = s % 4
        P = np.full(g, 1 / g)
        history = []
        for t in range(T):
            if kind == 0:  # reward only the currently least trusted group
                m = np.zeros(g)
                m[np.argmin(P)] = 1.0
            elif kind == 1:  # punish the favourite, reward everyone else
                m = np.ones(g)
                m[np.argmax(P)] = 0.0
            elif kind == 2:  # alternate a good block with a bad block
                m = np.zeros(g)
                m[: g // 2] = 1.0 if (t // 7) % 2 else 0.0
                m[g // 2:] = 1.0 - m[0]
            else:
                m = rng.random(g)
            history.append((P, m))
            P = hedge_update(P, m, delta)
        out.append((history, delta))
    return out


def test_criterion_7_hedge_regret(outer_runs, acceptance_line):
    runs, _ = outer_runs
    recorded = [hedge_regret_check(r.hedge_history(), cfg.delta) for _, _, _, cfg, r in runs]
    synthetic = [hedge_regret_check(h, delta) for h, delta in adversarial_streams(100)]
    ok = all(recorded) and all(synthetic)
    acceptance_line(7, "hedge regret", ok,
                    f"recorded {sum(recorded)}/{len(recorded)}, synthetic {sum(synthetic)}/{len(synthetic)}")
    assert ok


# 6 -------------------------------------------------------------------------

def test_criterion_6_majority_factor_two(acceptance_line):
    rng = np.random.default_rng(6)
    failures = 0
    for trial in range(500):
        m, k, g = int(rng.integers(2, 13)), int(rng.integers(1, 5)), int(rng.integers(1, 3))
        d, hyps = gen_random(max(m, g), k, g, int(rng.integers(2, 30)), trial)
        size = int(rng.integers(1, 12))
        e = Ensemble(tuple(hyps[i] for i in rng.integers(len(hyps), size=size)))
        failures += robust_loss(e, d).overall > 2 * mixed_robust_loss(e, d)
    ok = failures == 0
    acceptance_line(6, "MAJ <= 2 mixed (exact)", ok, f"500 pairs, {failures} failures")
    assert ok


# 8 -------------------------------------------------------------------------

class RecordingOracle:
    def __init__(self, inner):
        self.inner = inner
        self.batches = []

    def bind(self, Z, y):
        solve = self.inner.bind(Z, y)

        def wrapped(w):
            self.batches.append(np.array(w))
            return solve(w)

        return wrapped


def variant_owner_map(copies: GroupedDataset, sources, original: GroupedDataset):
    """Row of the original variant matrix that each copy-variant duplicates."""
    rows = []
    for c, (i, _) in enumerate(sources):
        n = copies.offsets[c + 1] - copies.offsets[c]
        rows.extend(range(original.offsets[i], original.offsets[i] + n))
    return np.array(rows, dtype=np.intp)


def test_criterion_8_overlap_equivalence(acceptance_line):
    worst, mismatched, checked = 0.0, 0, 0
    for seed in range(50):
        rng = np.random.default_rng(8000 + seed)
        g = int(rng.integers(2, 5))
        d, hyps = gen_random(int(rng.integers(g + 2, 11)), int(rng.integers(2, 4)), g,
                             int(rng.integers(10, 60)), seed, overlap=0.7)
        copies, rmap = to_disjoint(d)
        cfg = OuterConfig.from_epsilon(0.5, g, d.k, rounds=5, inner_rounds=40)
        direct, via_copies = RecordingOracle(FiniteClassOracle(hyps)), RecordingOracle(FiniteClassOracle(hyps))
        _, rep_a = _outer(d, direct, cfg, allow_overlap=True)
        _, rep_b = _outer(copies, via_copies, cfg)
        rows = variant_owner_map(copies, rmap.sources, d)
        for a, b in zip(direct.batches, via_copies.batches):
            folded = np.bincount(rows, weights=b, minlength=len(a))
            worst = max(worst, float(np.abs(folded - a).max()))
        for P, p in zip(rep_a.group_weights, rep_a.sample_weights):
            worst = max(worst, float(np.abs(overlap_weights(d, P) - p).max()))
        mismatched += rep_a.inner_indices != rep_b.inner_indices
        mismatched += len(direct.batches) != len(via_copies.batches)
        checked += 1
    ok = worst <= BATCH_TOL and mismatched == 0
    acceptance_line(8, "overlap weights == copy reduction", ok,
                    f"{checked} instances, max batch diff {worst:.2e}, {mismatched} sequence mismatches")
    assert ok


# 9 -------------------------------------------------------------------------

def test_criterion_9_normalization(inner_guarantee_runs, outer_runs, acceptance_line):
    # every run above used check_normalization=True, which raises on the
    # first bad round; the log keeps the largest error seen per run
    worst = max(err for _, err in NORM_LOG)
    ok = len(NORM_LOG) > 0 and worst <= NORM_TOL
    acceptance_line(9, "distributions sum to 1", ok, f"{len(NORM_LOG)} runs, max error {worst:.2e}")
    assert ok


# 10 ------------------------------------------------------------------------

SUPPORT = np.linspace(-1.0, 1.0, 40)
P_POS = np.where(SUPPORT > 0.1, 0.9, 0.1)
SHIFTS = (-0.15, 0.0, 0.15)


def sample_population(m, rng):
    idx = rng.integers(len(SUPPORT), size=m)
    y = np.where(rng.random(m) < P_POS[idx], 1, -1)
    exs = [LabeledExample.make((SUPPORT[i],), int(yi), [(SUPPORT[i] + s,) for s in SHIFTS])
           for i, yi in zip(idx, y)]
    return GroupedDataset.build(exs)


def population_robust_loss(e: Ensemble) -> float:
    Z = np.array([[x + s] for x in SUPPORT for s in SHIFTS])
    pred = e.predict_many(Z).reshape(len(SUPPORT), len(SHIFTS))
    wrong_if_pos = np.any(pred != 1, axis=1)
    wrong_if_neg = np.any(pred != -1, axis=1)
    return float(np.mean(P_POS * wrong_if_pos + (1 - P_POS) * wrong_if_neg))


def test_criterion_10_generalization_gap(acceptance_line):
    start = time.perf_counter()
    T = inner_rounds(3)
    gaps = {200: [], 2000: []}
    for seed in range(20):
        for m in gaps:
            rng = np.random.default_rng([seed, m])
            d = sample_population(m, rng)
            e = _inner(d, ThresholdOracle(), T).ensemble
            gaps[m].append(abs(population_robust_loss(e) - robust_loss(e, d).overall))
    small, large = float(np.mean(gaps[200])), float(np.mean(gaps[2000]))
    elapsed = time.perf_counter() - start
    ok = large <= small and elapsed < 300.0
    acceptance_line(10, "train/test gap shrinks with m", ok,
                    f"mean gap m=200 {small:.4f}, m=2000 {large:.4f}, {elapsed:.1f}s")
    assert ok
