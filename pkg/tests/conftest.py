"""Independent reference scans used as ground truth.

These are deliberately written as plain Python loops over examples and
variants, calling only ``h.predict`` on single points, so they share no
vectorized code with the library paths they check.
"""

import math

import pytest


def naive_robust_mistake(h, example):
    for z in example.u:
        if h.predict(z) != example.y:
            return True
    return False


def naive_robust_loss(h, d):
    bad = 0
    for e in d.examples:
        if naive_robust_mistake(h, e):
            bad += 1
    return bad / len(d.examples)


def naive_group_loss(h, d, j):
    members = [e for e, gs in zip(d.examples, d.groups) if j in gs]
    return sum(naive_robust_mistake(h, e) for e in members) / len(members)


def naive_opt(d, hyps):
    """Example-major scan: accumulate robust mistakes per hypothesis."""
    totals = [0] * len(hyps)
    for e in d.examples:
        for c, h in enumerate(hyps):
            if naive_robust_mistake(h, e):
                totals[c] += 1
    best = min(totals)
    return best / len(d.examples), totals.index(best)


def naive_opt_max(d, hyps):
    best, arg = math.inf, None
    for c, h in enumerate(hyps):
        worst = max(naive_group_loss(h, d, j) for j in range(d.g))
        if worst < best:
            best, arg = worst, c
    return best, arg


def naive_mixed_loss(hyps, d, weights=None):
    m = len(d.examples)
    weights = weights or [1.0 / m] * m
    total = 0.0
    for p, e in zip(weights, d.examples):
        worst = 0.0
        for z in e.u:
            rate = sum(h.predict(z) != e.y for h in hyps) / len(hyps)
            worst = max(worst, rate)
        total += p * worst
    return total


def naive_majority(hyps, z):
    plus = sum(h.predict(z) == 1 for h in hyps)
    return 1 if 2 * plus > len(hyps) else -1


def naive_threshold_losses(zs, ys, ws):
    """Weighted loss of every candidate threshold; returns list of (loss, tau, orientation)."""
    coords = sorted(set(zs))
    taus = [coords[0] - 1.0]
    taus += [(a + b) / 2 for a, b in zip(coords, coords[1:])]
    taus.append(coords[-1] + 1.0)
    out = []
    for tau in taus:
        for orient in ("above", "below"):
            loss = 0.0
            for z, y, w in zip(zs, ys, ws):
                pred = 1 if (z >= tau) == (orient == "above") else -1
                if pred != y:
                    loss += w
            out.append((loss, tau, orient))
    return out


@pytest.fixture
def oracles():
    class _Oracles:
        robust_loss = staticmethod(naive_robust_loss)
        group_loss = staticmethod(naive_group_loss)
        opt = staticmethod(naive_opt)
        opt_max = staticmethod(naive_opt_max)
        mixed = staticmethod(naive_mixed_loss)
        majority = staticmethod(naive_majority)
        threshold_losses = staticmethod(naive_threshold_losses)

    return _Oracles


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line; echoed immediately and again in the terminal summary."""

    def record(number, name, passed, detail=""):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}  {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
