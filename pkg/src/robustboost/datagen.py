"""Seeded synthetic instances.

Every generator returns ``(dataset, hypothesis_class)``; the class is a
finite list that the exhaustive oracles in :mod:`robustboost.metrics` can
scan. Randomness comes only from ``numpy.random.default_rng(seed)``.
"""

from __future__ import annotations

import itertools

import numpy as np

from .hypothesis import TableHypothesis, ThresholdHypothesis, threshold_candidates
from .perturbation import GroupedDataset, LabeledExample


def threshold_class(coords) -> list[ThresholdHypothesis]:
    """Thresholds at every candidate cut of ``coords``, ordered by tau then orientation."""
    taus = threshold_candidates(np.asarray(coords, dtype=float))
    return [ThresholdHypothesis(float(t), o) for t in taus for o in ("above", "below")]


def threshold_class_for(d: GroupedDataset) -> list[ThresholdHypothesis]:
    if d.dim != 1:
        raise ValueError("threshold class needs 1-D data")
    return threshold_class(d.variants[:, 0])


def gen_example1(n: int, k: int, include_x: bool = False):
    """The line instance on which ERM over the augmented set is robustly suboptimal.

    n positives at +1 and n negatives at -1. Negatives 1..n-1 have every
    perturbation at -0.75, the last negative has all of them at 0. Positives
    1..n-1 have one perturbation at 0 and the rest at 0.75; the last positive
    has all of them at 0.75.
    """
    if n < 2 or k < 2:
        raise ValueError(f"gen_example1 needs n >= 2 and k >= 2, got n={n}, k={k}")
    examples = []
    for i in range(n):
        u = [0.75] * k if i == n - 1 else [0.0] + [0.75] * (k - 1)
        examples.append((1.0, 1, u))
    for i in range(n):
        u = [0.0] * k if i == n - 1 else [-0.75] * k
        examples.append((-1.0, -1, u))
    if include_x:
        examples = [(x, y, [x] + u) for x, y, u in examples]
    exs = [LabeledExample.make((x,), y, [(z,) for z in u]) for x, y, u in examples]
    meta = {"generator": "example1", "params": {"n": n, "k": k, "include_x": include_x}, "seed": 0}
    d = GroupedDataset.build(exs, meta=meta)
    return d, threshold_class_for(d)


def _grid_points(grid: int, dim: int) -> list[tuple]:
    return [tuple(float(c) for c in p) for p in itertools.product(range(grid), repeat=dim)]


def _noisy_tables(rng, universe, base, count, lo, hi):
    tables = []
    for _ in range(count):
        q = rng.uniform(lo, hi)
        flips = rng.random(len(base)) < q
        tables.append(TableHypothesis(universe, tuple(int(v) for v in np.where(flips, -base, base))))
    return tables


def gen_random(m: int, k: int, g: int, class_size: int, seed: int, *, dim: int = 2,
               grid: int = 5, overlap: float = 0.0, include_x: bool = True,
               planted: bool | None = None, label_noise: float = 0.2):
    """Random finite instance on an integer grid with a table class over the whole grid.

    With probability 1/2 (or when ``planted`` is forced) labels follow a base
    table, every perturbation agrees with it, and the base table is placed in
    the class, so the instance is robustly realizable. ``overlap`` is the
    probability that an example also joins one extra random group.
    """
    if min(m, k, g, class_size) < 1:
        raise ValueError("m, k, g and class_size must all be >= 1")
    if g > m:
        raise ValueError(f"g = {g} exceeds m = {m}")
    rng = np.random.default_rng(seed)
    universe = _grid_points(grid, dim)
    if k > len(universe):
        raise ValueError("k exceeds the number of grid points")
    index = {p: i for i, p in enumerate(universe)}
    coords = np.array(universe)
    base = rng.choice(np.array([-1, 1], dtype=np.int64), size=len(universe))
    if planted is None:
        planted = bool(rng.random() < 0.5)

    examples, groups = [], []
    for i in range(m):
        xi = int(rng.integers(len(universe)))
        x = universe[xi]
        y = int(base[xi])
        if not planted and rng.random() < label_noise:
            y = -y
        dist = np.abs(coords - coords[xi]).max(axis=1)
        order = np.lexsort((rng.random(len(universe)), dist))
        pool = [j for j in order if j != xi and (not planted or base[j] == y)]
        n_other = k - 1 if include_x else k
        chosen = [universe[j] for j in pool[:n_other]]
        u = ([x] if include_x else []) + chosen
        examples.append(LabeledExample.make(x, y, u))
        gs = {i % g}
        if overlap > 0 and g > 1 and rng.random() < overlap:
            gs.add(int(rng.integers(g)))
        groups.append(tuple(sorted(gs)))

    hyps = _noisy_tables(rng, tuple(universe), base, class_size, 0.05, 0.5)
    if planted:
        hyps[int(rng.integers(class_size))] = TableHypothesis(tuple(universe), tuple(int(v) for v in base))
    meta = {
        "generator": "random",
        "params": {"m": m, "k": k, "g": g, "class_size": class_size, "dim": dim, "grid": grid,
                   "overlap": overlap, "include_x": include_x, "planted": planted},
        "seed": seed,
    }
    d = GroupedDataset.build(examples, groups, g=g, k=max(len(e.u) for e in examples), meta=meta)
    assert all(z in index for e in d.examples for z in e.u)
    return d, hyps


def gen_two_group_adversarial(seed: int, *, n_major: int = 20, n_minor: int = 10, fillers: int = 40):
    """Two disjoint groups where the best-on-average member sacrifices the small group.

    Every example owns two private points (x and one perturbation), so tables
    can place robust mistakes example by example. The class holds:

    * an average-optimal table: no robust mistakes on the large group, two on the small one;
    * a balanced table: robust mistakes on 10% of each group (2 and 1 by default);
    * noisy filler tables with per-point flip rates in [0.35, 0.6].
    """
    rng = np.random.default_rng(seed)
    m = n_major + n_minor
    universe, examples = [], []
    truth = []
    for i in range(m):
        y = int(rng.choice([-1, 1]))
        x, z = (float(i), 0.0), (float(i), 1.0)
        universe += [x, z]
        truth += [y, y]
        examples.append(LabeledExample.make(x, y, [x, z]))
    groups = [(0,)] * n_major + [(1,)] * n_minor
    truth = np.array(truth, dtype=np.int64)
    universe = tuple(universe)

    def table_with_mistakes(bad_examples):
        out = truth.copy()
        for i in bad_examples:
            out[2 * i + int(rng.integers(2))] *= -1
        return TableHypothesis(universe, tuple(int(v) for v in out))

    major = np.arange(n_major)
    minor = np.arange(n_major, m)
    n_bal_major = max(1, round(0.1 * n_major))
    n_bal_minor = max(1, round(0.1 * n_minor))
    h_avg = table_with_mistakes(rng.choice(minor, size=2, replace=False))
    h_bal = table_with_mistakes(list(rng.choice(major, size=n_bal_major, replace=False))
                                + list(rng.choice(minor, size=n_bal_minor, replace=False)))
    hyps = _noisy_tables(rng, universe, truth, fillers, 0.35, 0.6) + [h_avg, h_bal]
    perm = rng.permutation(len(hyps))
    hyps = [hyps[i] for i in perm]
    where = {int(p): pos for pos, p in enumerate(perm)}
    meta = {
        "generator": "two-group-adversarial",
        "params": {"n_major": n_major, "n_minor": n_minor, "fillers": fillers,
                   "average_member": where[fillers], "balanced_member": where[fillers + 1]},
        "seed": seed,
    }
    return GroupedDataset.build(examples, groups, g=2, k=2, meta=meta), hyps


def mask_placements(side: int, mask: int) -> list[tuple[int, int]]:
    return [(r, c) for r in range(side - mask + 1) for c in range(side - mask + 1)]


def covers_all_patches(side: int, patch: int, mask: int) -> bool:
    """Exhaustively check that every patch placement lies inside some mask placement."""
    masks = mask_placements(side, mask)
    for r, c in mask_placements(side, patch):
        if not any(a <= r and r + patch <= a + mask and b <= c and c + patch <= b + mask
                   for a, b in masks):
            return False
    return True


def gen_masked_grid(side: int, patch: int, mask: int, seed: int, *, m: int = 20, density: float = 0.5):
    """Binary side x side grids whose perturbation set is every placement of a zero mask.

    Labels are +1 iff more than half the cells are set. The class consists of
    count-threshold rules (predict by the number of set cells), written as
    tables over every masked grid that occurs.
    """
    if not (1 <= patch <= mask <= side):
        raise ValueError(f"need 1 <= patch <= mask <= side, got patch={patch}, mask={mask}, side={side}")
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    placements = mask_placements(side, mask)
    examples = []
    for _ in range(m):
        grid = (rng.random((side, side)) < density).astype(float)
        y = 1 if grid.sum() * 2 > side * side else -1
        variants = []
        for r, c in placements:
            masked = grid.copy()
            masked[r:r + mask, c:c + mask] = 0.0
            variants.append(tuple(masked.ravel()))
        examples.append(LabeledExample.make(tuple(grid.ravel()), y, variants))
    universe = tuple(sorted({z for e in examples for z in e.u}))
    counts = np.array([sum(p) for p in universe])
    hyps = []
    for cut in range(side * side + 2):
        above = np.where(counts >= cut, 1, -1)
        hyps.append(TableHypothesis(universe, tuple(int(v) for v in above)))
        hyps.append(TableHypothesis(universe, tuple(int(v) for v in -above)))
    meta = {
        "generator": "masked-grid",
        "params": {"side": side, "patch": patch, "mask": mask, "m": m, "density": density},
        "seed": seed,
    }
    return GroupedDataset.build(examples, k=len(placements), meta=meta), hyps
