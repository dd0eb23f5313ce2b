"""Command-line harness: generate instances, run the learners, verify results.

Exit codes: 0 pass, 1 usage or validation error, 2 brute-force guard refusal,
3 bound violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import datagen
from .groups import to_disjoint
from .hypothesis import FiniteClassOracle, ThresholdOracle, hypothesis_from_dict, prediction_matrix
from .inner_boost import InnerConfig, inner_trace_rows, majority_from_votes, rounds_for_epsilon, run_fms
from .metrics import (
    OracleGuardError,
    brute_force_opt,
    brute_force_opt_max,
    group_losses_from_mistakes,
    robust_loss,
)
from .outer_boost import OuterConfig, hedge_regret_check, hedge_update, outer_trace_rows, run_group_boost
from .perturbation import GroupedDataset, InvalidDataset, is_disjoint, validate

EXIT_OK, EXIT_USAGE, EXIT_GUARD, EXIT_VIOLATION = 0, 1, 2, 3
FLOAT_TOL = 1e-12


class UsageError(Exception):
    pass


def dump_json(obj, path: str | None):
    text = json.dumps(obj, separators=(",", ":")) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def write_csv(rows, path: str):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)


def load_dataset(path: str) -> GroupedDataset:
    try:
        d = GroupedDataset.from_json(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InvalidDataset(f"cannot read dataset {path}: {exc}") from exc
    v = validate(d)
    if v is not None:
        raise InvalidDataset(f"{path}: {v}")
    return d


def class_to_dict(hyps) -> dict:
    return {"hypotheses": [h.to_dict() for h in hyps]}


def load_class(path: str | None, d: GroupedDataset):
    if path is None:
        return None
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return [hypothesis_from_dict(h) for h in obj["hypotheses"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InvalidDataset(f"cannot read class {path}: {exc}") from exc


def threads_from_env() -> int:
    raw = os.environ.get("ROBUSTBOOST_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"ROBUSTBOOST_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"ROBUSTBOOST_THREADS must be a positive integer, got {raw!r}")
    return n


# ---------------------------------------------------------------- gen

def cmd_gen(args) -> int:
    kind = args.generator
    if kind == "example1":
        d, hyps = datagen.gen_example1(args.n, args.k, include_x=args.include_x)
    elif kind == "random":
        d, hyps = datagen.gen_random(args.m, args.k, args.g, args.class_size, args.seed,
                                     overlap=args.overlap, include_x=not args.exclude_x)
    elif kind == "two-group":
        d, hyps = datagen.gen_two_group_adversarial(args.seed)
    elif kind == "masked-grid":
        d, hyps = datagen.gen_masked_grid(args.side, args.patch or args.mask, args.mask, args.seed, m=args.m)
    else:
        raise UsageError(f"unknown generator {kind}")
    v = validate(d)
    if v is not None:
        raise InvalidDataset(str(v))
    dump_json(d.to_dict(), args.out)
    if args.class_out:
        dump_json(class_to_dict(hyps), args.class_out)
    return EXIT_OK


# ---------------------------------------------------------------- run

def _oracle(d: GroupedDataset, hyps):
    if hyps is not None:
        return FiniteClassOracle(hyps)
    if d.dim != 1:
        raise UsageError("a --class file is required for datasets that are not 1-D")
    return ThresholdOracle()


def _encode_ensemble(hyps_or_ensemble, indices):
    if indices is not None:
        return {"class_indices": list(indices)}
    return {"hypotheses": [h.to_dict() for h in hyps_or_ensemble]}


def cmd_run(args) -> int:
    d = load_dataset(args.dataset)
    hyps = load_class(args.class_path, d)
    oracle = _oracle(d, hyps)
    threads = threads_from_env()
    eps = args.epsilon
    if not eps > 0:
        raise UsageError("--epsilon must be positive")
    result = {"config": {"mode": args.mode, "epsilon": eps, "seed": args.seed, "threads": threads,
                         "finite_class": hyps is not None, "k": d.k, "g": d.g, "m": d.m}}
    cfg = result["config"]

    if args.mode == "plain-erm":
        if args.trace or args.rounds or args.eta or args.delta or args.inner_rounds:
            raise UsageError("plain-erm takes no round, step or trace options")
        res = oracle.fit(d.variants, d.variant_labels, np.ones(len(d.variant_labels)))
        summary = robust_loss(res.hypothesis, d)
        result["erm_loss"] = res.loss
        result["hypothesis"] = _encode_ensemble([res.hypothesis], None if res.index is None else [res.index])
    elif args.mode == "inner":
        if args.delta is not None or args.inner_rounds is not None:
            raise UsageError("--delta and --inner-rounds apply to outer mode only")
        T = args.rounds or rounds_for_epsilon(d.k, eps, 32.0)
        icfg = InnerConfig.default(d.k, T) if args.eta is None else InnerConfig(T, args.eta)
        run = run_fms(d, icfg, oracle, trace=bool(args.trace), check_normalization=True)
        if args.trace:
            write_csv(inner_trace_rows(run.trace), args.trace)
        cfg.update(rounds=T, eta=icfg.eta)
        summary = robust_loss(run.ensemble, d)
        result["mixed_robust_loss"] = float(np.mean(d.per_example_max(run.mistake_counts / T)))
        result["maj_robust_loss"] = summary.overall
        result["ensemble"] = _encode_ensemble(run.ensemble.hypotheses, run.indices)
    elif args.mode == "outer":
        ocfg = OuterConfig.from_epsilon(eps, d.g, d.k, rounds=args.rounds, delta=args.delta,
                                        inner_rounds=args.inner_rounds, eta=args.eta)
        if not is_disjoint(d):
            result["notice"] = "overlapping groups: sample weights follow the overlap weight formula"
        ensemble, report = run_group_boost(d, ocfg, oracle, allow_overlap=True, check_normalization=True)
        if args.trace:
            write_csv(outer_trace_rows(report), args.trace)
        cfg.update(rounds=ocfg.rounds, inner_rounds=ocfg.inner_rounds, eta=ocfg.eta, delta=ocfg.delta)
        summary = robust_loss(ensemble, d)
        result["per_group_avg_loss"] = list(report.per_group_avg_loss)
        result["per_group_maj_loss"] = list(report.per_group_maj_loss)
        result["group_weights"] = [list(map(float, P)) for P in report.group_weights]
        result["group_losses"] = [list(map(float, l)) for l in report.group_losses]
        if report.inner_indices is not None:
            result["ensemble"] = {"class_indices": report.inner_indices}
        else:
            result["ensemble"] = {"hypotheses": [[h.to_dict() for h in e.hypotheses] for e in ensemble.hypotheses]}
    else:
        raise UsageError(f"unknown mode {args.mode}")
    result["summary"] = summary.to_dict()
    result["per_group"] = list(summary.per_group)
    dump_json(result, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- verify

def _decode_rounds(enc: dict, hyps, d: GroupedDataset, nested: bool):
    """Per-round prediction matrices on the dataset's variants."""
    if "class_indices" in enc:
        if hyps is None:
            raise UsageError("result references class indices; pass --class")
        table = prediction_matrix(hyps, d.variants)
        idx = enc["class_indices"]
        if nested:
            return [table[np.asarray(r, dtype=np.intp)] for r in idx]
        return table[np.asarray(idx, dtype=np.intp)]
    objs = enc["hypotheses"]
    if nested:
        return [prediction_matrix([hypothesis_from_dict(h) for h in r], d.variants) for r in objs]
    return prediction_matrix([hypothesis_from_dict(h) for h in objs], d.variants)


def _close(a, b) -> bool:
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=0, atol=1e-9)


def verify_result(d: GroupedDataset, hyps, result: dict) -> list[tuple[str, bool, str]]:
    """Recompute everything a result claims; returns (check name, passed, detail) triples."""
    checks = []

    def check(name, ok, detail=""):
        checks.append((name, bool(ok), detail))

    cfg = result["config"]
    mode = cfg["mode"]
    y = d.variant_labels
    opt_class = hyps if hyps is not None else datagen.threshold_class_for(d)
    eps = float(cfg["epsilon"])

    if mode == "plain-erm":
        preds = _decode_rounds(result["hypothesis"], hyps, d, nested=False)
        final = preds[0]
        mistakes = d.per_example_max(final != y)
        erm_losses = (prediction_matrix(opt_class, d.variants) != y).sum(axis=1)
        check("erm optimality", (final != y).sum() <= erm_losses.min(), f"erm mistakes {(final != y).sum()} vs min {erm_losses.min()}")
    elif mode == "inner":
        preds = _decode_rounds(result["ensemble"], hyps, d, nested=False)
        T = preds.shape[0]
        check("round count", T == cfg["rounds"], f"{T} hypotheses for {cfg['rounds']} rounds")
        rate = (preds != y).sum(axis=0) / T
        mixed = float(np.mean(d.per_example_max(rate)))
        final = majority_from_votes((preds == 1).sum(axis=0), T)
        mistakes = d.per_example_max(final != y)
        opt, _ = brute_force_opt(d, opt_class)
        check("mixed loss consistency", abs(mixed - result["mixed_robust_loss"]) <= FLOAT_TOL,
              f"recorded {result['mixed_robust_loss']} recomputed {mixed}")
        bound = opt + 2 * math.sqrt(math.log(d.k) / T) if d.k >= 2 else opt
        check("regret bound", mixed <= bound + FLOAT_TOL, f"mixed {mixed} vs OPT + 2 sqrt(ln k / T) = {bound}")
        maj = float(mistakes.mean())
        check("majority factor 2", maj <= 2 * mixed + FLOAT_TOL, f"maj {maj} vs 2 * mixed {2 * mixed}")
        check("maj loss consistency", abs(maj - result["maj_robust_loss"]) <= FLOAT_TOL,
              f"recorded {result['maj_robust_loss']} recomputed {maj}")
    elif mode == "outer":
        rounds = _decode_rounds(result["ensemble"], hyps, d, nested=True)
        T = len(rounds)
        check("round count", T == cfg["rounds"], f"{T} outer rounds for {cfg['rounds']}")
        round_preds = np.stack([majority_from_votes((r == 1).sum(axis=0), r.shape[0]) for r in rounds])
        losses = np.stack([group_losses_from_mistakes(d.per_example_max(p != y), d) for p in round_preds])
        avg = losses.mean(axis=0)
        final = majority_from_votes((round_preds == 1).sum(axis=0), T)
        mistakes = d.per_example_max(final != y)
        maj_groups = group_losses_from_mistakes(mistakes, d)
        check("group loss consistency", _close(losses, result["group_losses"]), "per-round group losses against recomputation")
        check("average loss consistency", _close(avg, result["per_group_avg_loss"]), "per-group averages against recomputation")
        check("maj loss consistency", _close(maj_groups, result["per_group_maj_loss"]), "per-group MAJ losses against recomputation")
        P = np.full(d.g, 1.0 / d.g)
        history = []
        for l in losses:
            history.append((P, np.clip(1 - l, 0, 1)))
            P = hedge_update(P, np.clip(1 - l, 0, 1), cfg["delta"])
        check("group weight consistency", _close([h[0] for h in history], result["group_weights"]),
              "recorded group weights against the hedge update")
        check("hedge regret", hedge_regret_check(history, cfg["delta"]), f"delta = {cfg['delta']}, {len(history)} rounds")
        dd = d if is_disjoint(d) else to_disjoint(d)[0]
        opt_max, _ = brute_force_opt_max(dd, opt_class)
        worst_avg = float(avg.max())
        check("average multi-robustness", worst_avg <= opt_max + eps + FLOAT_TOL,
              f"max group average {worst_avg} vs OPT_max + eps = {opt_max + eps}")
        worst_maj = float(maj_groups.max())
        check("2-multi-robustness", worst_maj <= 2 * (opt_max + eps) + FLOAT_TOL,
              f"max group MAJ loss {worst_maj} vs 2 (OPT_max + eps) = {2 * (opt_max + eps)}")
    else:
        raise UsageError(f"unknown mode {mode!r}")

    summary = result["summary"]
    check("summary consistency",
          abs(float(mistakes.mean()) - summary["overall"]) <= FLOAT_TOL
          and list(map(bool, mistakes)) == list(summary["mistakes"])
          and _close(group_losses_from_mistakes(mistakes, d), summary["per_group"]),
          "recorded robust-loss summary against recomputation")
    return checks


def cmd_verify(args) -> int:
    d = load_dataset(args.dataset)
    hyps = load_class(args.class_path, d)
    try:
        result = json.loads(Path(args.result).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InvalidDataset(f"cannot read result {args.result}: {exc}") from exc
    try:
        checks = verify_result(d, hyps, result)
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        checks = [("result format", False, f"malformed result: {exc!r}")]
    failed = [c for c in checks if not c[1]]
    report = {"passed": not failed, "checks": [{"name": n, "passed": ok, "detail": det} for n, ok, det in checks]}
    dump_json(report, args.out)
    for name, ok, det in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}" + ("" if ok else f": {det}"), file=sys.stderr)
    return EXIT_OK if not failed else EXIT_VIOLATION


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustboost", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic instance")
    gsub = gen.add_subparsers(dest="generator", required=True)

    def gen_common(p):
        p.add_argument("--out", default="-", help="dataset JSON path (default stdout)")
        p.add_argument("--class-out", help="write the companion hypothesis class here")
        p.add_argument("--seed", type=int, default=0)

    p = gsub.add_parser("example1", help="the ERM failure instance on the line")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--include-x", action="store_true", help="add x itself to each perturbation set")
    gen_common(p)
    p = gsub.add_parser("random", help="random grid instance with a table class")
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--g", type=int, default=1)
    p.add_argument("--class-size", type=int, default=60)
    p.add_argument("--overlap", type=float, default=0.0)
    p.add_argument("--exclude-x", action="store_true")
    gen_common(p)
    p = gsub.add_parser("two-group", help="two-group instance where average-optimal is group-unfair")
    gen_common(p)
    p = gsub.add_parser("masked-grid", help="binary grids with single-mask perturbation sets")
    p.add_argument("--side", type=int, required=True)
    p.add_argument("--mask", type=int, required=True)
    p.add_argument("--patch", type=int, default=None, help="patch size (defaults to mask)")
    p.add_argument("--m", type=int, default=20)
    gen_common(p)

    run = sub.add_parser("run", help="run a learner on a dataset")
    run.add_argument("--dataset", required=True)
    run.add_argument("--class", dest="class_path", help="finite hypothesis class JSON")
    run.add_argument("--mode", choices=["inner", "outer", "plain-erm"], required=True)
    run.add_argument("--epsilon", type=float, default=0.3)
    run.add_argument("--rounds", type=int, help="T (inner rounds in inner mode, outer rounds in outer mode)")
    run.add_argument("--inner-rounds", type=int, help="T' for outer mode")
    run.add_argument("--eta", type=float)
    run.add_argument("--delta", type=float)
    run.add_argument("--trace", help="per-round CSV path")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default="-")

    ver = sub.add_parser("verify", help="check a result file against exhaustive oracles")
    ver.add_argument("--dataset", required=True)
    ver.add_argument("--class", dest="class_path")
    ver.add_argument("--result", required=True)
    ver.add_argument("--out", default="-")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    handlers = {"gen": cmd_gen, "run": cmd_run, "verify": cmd_verify}
    try:
        return handlers[args.command](args)
    except OracleGuardError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (UsageError, InvalidDataset, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
