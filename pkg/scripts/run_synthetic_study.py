#!/usr/bin/env python3
"""Desk-scale study: the full pipeline on synthetic blobs, tables printed.

Generates overlapping Gaussian classes, runs prepare/train, then reports
per-learner accuracy, the ensemble classification report, indeterminacy by
prediction correctness, the threshold sweep with its recommended tau, and
per-class adaptive thresholds with their calibration flag rates.

Usage: python3 scripts/run_synthetic_study.py [--seed 42] [--sigma 1.0]
"""

import argparse


from sentriage.abstention import (
    best_youden,
    fit_class_thresholds,
    indeterminacy_by_correctness,
    render_sweep_csv,
    sweep_thresholds,
)
from sentriage.metrics import classification_report
from sentriage.pipeline import prepare_dataset, score_with_bundle, train_bundle
from sentriage.preprocess import (
    SyntheticConfig,
    default_class_means,
    generate_synthetic,
    stratified_split,
)


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--sigma", type=float, default=1.0, help="class overlap")
    parser.add_argument("--separation", type=float, default=2.33)
    parser.add_argument("--classes", type=int, default=3)
    parser.add_argument("--samples", type=int, default=2000, help="per class")
    parser.add_argument("--dim", type=int, default=8)
    parser.add_argument("--trees", type=int, default=30)
    parser.add_argument("--percentile", type=float, default=80.0)
    args = parser.parse_args()

    cfg = SyntheticConfig(
        class_count=args.classes,
        samples_per_class=args.samples,
        feature_dim=args.dim,
        class_means=default_class_means(args.classes, args.dim, args.separation),
        overlap_sigma=args.sigma,
        seed=args.seed,
    )
    full = generate_synthetic(cfg)
    names = list(full.encoding.class_names)
    calibration_half, evaluation_half = stratified_split(full, 0.5, args.seed)

    print("== class distribution (full synthetic set) ==")
    for c, n in enumerate(full.class_counts()):
        print(f"  {names[c]}: {n}")

    prepared = prepare_dataset(calibration_half, holdout_fraction=0.2, seed=args.seed)
    bundle = train_bundle(
        prepared.train_balanced,
        prepared.standardizer,
        n_trees=args.trees,
        max_depth=12,
        seed=args.seed,
    )

    ev = score_with_bundle(bundle, evaluation_half)
    c = full.encoding.class_count
    print("\n== per-learner accuracy (evaluation half) ==")
    for model_id, probs in ev.member_probs.items():
        acc = (probs.argmax(axis=1) == evaluation_half.labels).mean()
        print(f"  {model_id}: {acc:.4f}")

    print("\n== ensemble classification report ==")
    report = classification_report(evaluation_half.labels, ev.ensemble_labels, c)
    print(report.to_text(names))

    summary = indeterminacy_by_correctness(ev.scored)
    print("== mean indeterminacy by prediction correctness ==")
    print(f"  correct:   {summary.mean_i_correct:.4f}  (n={summary.n_correct})")
    print(f"  incorrect: {summary.mean_i_incorrect:.4f}  (n={summary.n_incorrect})")

    grid = [round(0.1 + 0.05 * k, 2) for k in range(17)]
    rows = sweep_thresholds(ev.scored, grid)
    print("\n== threshold sweep (tau, accuracy, coverage, youden) ==")
    print(render_sweep_csv(rows), end="")
    print(f"recommended tau (peak youden): {best_youden(rows)}")

    cal = score_with_bundle(bundle, calibration_half)
    policy = fit_class_thresholds(
        cal.scored, args.percentile, class_count=c, global_tau=0.4
    )
    print(f"\n== per-class adaptive thresholds (percentile {args.percentile:g}) ==")
    for k in range(c):
        group = [p for p in cal.scored if p.predicted_class == k]
        tau = policy.per_class_tau[k]
        rate = sum(1 for p in group if p.score.indeterminacy > tau) / len(group) if group else 0.0
        print(f"  {names[k]}: tau={tau:.4f}  calibration flag rate={rate:.1%}")


if __name__ == "__main__":
    main()
