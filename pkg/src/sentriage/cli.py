"""Operator entry point: prepare, train, evaluate, sweep, calibrate, simulate, serve.

Every command is deterministic given (flags, seed) except serve's
timestamps. Each output directory gets a manifest.json carrying the run
configuration, the sha256 of the input, and per-artifact hashes.

Exit codes: 0 success, 2 input error, 3 validation error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import socket
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .abstention import (
    best_youden,
    fit_class_thresholds,
    indeterminacy_by_correctness,
    nearest_rank_percentile,
    render_sweep_csv,
    sweep_thresholds,
)
from .errors import PipelineError
from .learners.external import load_external_probabilities
from .metrics import classification_report, confusion_matrix
from .pipeline import prepare_dataset, score_with_bundle, train_bundle
from .preprocess import (
    Standardizer,
    SyntheticConfig,
    default_class_means,
    generate_synthetic,
    load_dataset_csv,
    save_dataset_csv,
)
from .service.api import create_app
from .service.bundle import dumps_canonical, load_bundle, save_bundle
from .service.engine import DecisionEngine

INPUT_CODES = frozenset(
    {
        "PARSE_ERROR",
        "CLASS_MISMATCH",
        "MISSING_ARTIFACT",
        "BUNDLE_LOAD_FAILURE",
        "UNSUPPORTED_BUNDLE_VERSION",
        "EXTERNAL_COVERAGE",
    }
)

RUNTIME_CODES = frozenset({"PORT_IN_USE", "NOT_CONVERGED"})


def exit_code_for(code: str) -> int:
    if code in INPUT_CODES:
        return 2
    if code in RUNTIME_CODES:
        return 4
    return 3  # everything else is a validation failure


@dataclass(frozen=True)
class RunConfig:
    """Verbatim record of the flags a command ran with (provenance)."""

    command: str
    args: dict

    def to_dict(self) -> dict:
        return {"command": self.command, **self.args}


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _run_config(args: argparse.Namespace) -> RunConfig:
    skip = {"func", "command"}
    return RunConfig(
        command=args.command,
        args={k: v for k, v in sorted(vars(args).items()) if k not in skip},
    )


def _write_manifest(out_dir: Path, config: RunConfig, input_path: Path | None) -> None:
    artifacts = {
        p.name: _sha256_file(p)
        for p in sorted(out_dir.iterdir())
        if p.is_file() and p.name != "manifest.json"
    }
    doc = {
        "run_config": config.to_dict(),
        "input_sha256": _sha256_file(input_path) if input_path else None,
        "artifacts": artifacts,
    }
    (out_dir / "manifest.json").write_text(dumps_canonical(doc), encoding="utf-8")


def _provenance(config: RunConfig, input_path: Path | None) -> dict:
    return {
        "run_config": config.to_dict(),
        "input_sha256": _sha256_file(input_path) if input_path else None,
    }


def parse_grid(spec: str) -> list[float]:
    """start:end:step, inclusive; exact decimal stepping."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise PipelineError("INVALID_CONFIG", f"grid must be start:end:step, got {spec!r}")
    try:
        start, end, step = (Fraction(p) for p in parts)
    except ValueError:
        raise PipelineError("INVALID_CONFIG", f"non-numeric grid component in {spec!r}") from None
    if step <= 0 or start > end:
        raise PipelineError("INVALID_CONFIG", f"grid {spec!r} is empty or descending")
    values = []
    v = start
    while v <= end:
        values.append(float(v))
        v += step
    return values


def _out_dir(args: argparse.Namespace) -> Path:
    if not args.out:
        raise PipelineError("INVALID_CONFIG", "--out is required for this command")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_labeled_csv(args: argparse.Namespace):
    if not args.input:
        raise PipelineError("INVALID_CONFIG", "--input is required for this command")
    return load_dataset_csv(args.input, label_column=args.label_col)


def _check_encoding(bundle, dataset) -> None:
    if dataset.encoding.class_names != bundle.encoding.class_names:
        raise PipelineError(
            "CLASS_MISMATCH",
            f"dataset classes {dataset.encoding.class_names} do not match "
            f"bundle classes {bundle.encoding.class_names}",
        )


def _load_external_sets(bundle, args):
    paths = list(bundle.external_refs)
    if getattr(args, "external", None):
        paths.append(args.external)
    sets = []
    for p in paths:
        sets.extend(load_external_probabilities(p, bundle.encoding))
    return tuple(sets)


# -- commands ----------------------------------------------------------------


def cmd_prepare(args: argparse.Namespace) -> int:
    config = _run_config(args)
    dataset = _load_labeled_csv(args)
    out = _out_dir(args)
    prepared = prepare_dataset(
        dataset,
        holdout_fraction=args.holdout,
        seed=args.seed,
        k_neighbors=args.k,
        min_count=args.min_count,
    )
    counts = prepared.filtered.class_counts()
    order = sorted(
        range(prepared.filtered.encoding.class_count),
        key=lambda c: (-counts[c], prepared.filtered.encoding.decode(c)),
    )
    table_lines = ["class,count"]
    for c in order:
        table_lines.append(f"{prepared.filtered.encoding.decode(c)},{counts[c]}")
    (out / "class_distribution.csv").write_text("\n".join(table_lines) + "\n", encoding="utf-8")
    save_dataset_csv(prepared.train, out / "train.csv", label_column=args.label_col)
    save_dataset_csv(prepared.holdout, out / "holdout.csv", label_column=args.label_col)
    save_dataset_csv(prepared.train_balanced, out / "train_balanced.csv", label_column=args.label_col)
    std_doc = {
        "means": list(prepared.standardizer.means),
        "stddevs": list(prepared.standardizer.stddevs),
        "zero_variance": list(prepared.standardizer.zero_variance),
        "provenance": _provenance(config, Path(args.input)),
    }
    (out / "standardizer.json").write_text(dumps_canonical(std_doc), encoding="utf-8")
    _write_manifest(out, config, Path(args.input))
    print(f"prepared {prepared.filtered.n_samples} rows "
          f"({prepared.train.n_samples} train / {prepared.holdout.n_samples} holdout, "
          f"balanced to {prepared.train_balanced.n_samples}) -> {out}")
    for c in order:
        print(f"  {prepared.filtered.encoding.decode(c)}: {counts[c]}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _run_config(args)
    if not args.input:
        raise PipelineError("INVALID_CONFIG", "--input must point at a prepared directory")
    prepared_dir = Path(args.input)
    balanced_path = prepared_dir / "train_balanced.csv"
    std_path = prepared_dir / "standardizer.json"
    for p in (balanced_path, std_path):
        if not p.exists():
            raise PipelineError("MISSING_ARTIFACT", f"prepared artifact {p} not found; run prepare first")
    train_balanced = load_dataset_csv(balanced_path, label_column=args.label_col)
    std_doc = json.loads(std_path.read_text(encoding="utf-8"))
    standardizer = Standardizer(
        means=tuple(float(m) for m in std_doc["means"]),
        stddevs=tuple(float(s) for s in std_doc["stddevs"]),
    )
    external_refs = ()
    if args.external:
        external_path = Path(args.external).resolve()
        # fail fast if unreadable / inconsistent
        load_external_probabilities(external_path, train_balanced.encoding)
        external_refs = (str(external_path),)
    out = _out_dir(args)
    bundle = train_bundle(
        train_balanced,
        standardizer,
        l2_lambda=args.l2_lambda,
        max_iters=args.max_iters,
        n_trees=args.trees,
        max_depth=args.max_depth,
        seed=args.seed,
        global_tau=args.tau,
        external_refs=external_refs,
        metadata=_provenance(config, balanced_path),
    )
    save_bundle(bundle, out / "bundle.json")
    _write_manifest(out, config, balanced_path)
    diag = bundle.logistic.diagnostics
    print(f"trained bundle -> {out / 'bundle.json'}")
    print(f"  logistic: {'converged' if diag.converged else 'NOT_CONVERGED'} "
          f"in {diag.n_iters} iters (grad max-norm {diag.final_grad_max_norm:.2e})")
    print(f"  forest: {bundle.forest.n_trees} trees, depth <= {bundle.forest.max_depth}")
    print(f"  policy: GLOBAL tau={bundle.policy.global_tau} v{bundle.policy.version}")
    return 0


def _percentile_summary(values: list[float]) -> dict:
    return {
        "count": len(values),
        "mean": float(np.mean(values)) if values else None,
        "min": min(values) if values else None,
        "p25": nearest_rank_percentile(values, 25) if values else None,
        "median": nearest_rank_percentile(values, 50) if values else None,
        "p75": nearest_rank_percentile(values, 75) if values else None,
        "max": max(values) if values else None,
    }


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _run_config(args)
    bundle = load_bundle(args.bundle)
    dataset = _load_labeled_csv(args)
    _check_encoding(bundle, dataset)
    out = _out_dir(args)
    external_sets = _load_external_sets(bundle, args)
    scores = score_with_bundle(bundle, dataset, external_sets)
    names = list(dataset.encoding.class_names)
    c = dataset.encoding.class_count
    provenance = _provenance(config, Path(args.input))

    # per-learner and ensemble reports + confusion matrices
    predicted = {m: probs.argmax(axis=1) for m, probs in scores.member_probs.items()}
    predicted["ensemble"] = scores.ensemble_labels
    for model_id, y_pred in predicted.items():
        report = classification_report(dataset.labels, y_pred, c)
        doc = {"model": model_id, "report": report.to_dict(names), "provenance": provenance}
        (out / f"report_{model_id}.json").write_text(dumps_canonical(doc), encoding="utf-8")
        (out / f"report_{model_id}.txt").write_text(report.to_text(names), encoding="utf-8")
        matrix = confusion_matrix(dataset.labels, y_pred, c)
        lines = ["true\\pred," + ",".join(names)]
        for i in range(c):
            lines.append(names[i] + "," + ",".join(str(int(v)) for v in matrix[i]))
        (out / f"confusion_{model_id}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    i_values = [p.score.indeterminacy for p in scores.scored]

    # indeterminacy histogram (20 bins over [0, 1])
    hist, edges = np.histogram(i_values, bins=20, range=(0.0, 1.0))
    lines = ["bin_start,bin_end,count"]
    for k in range(20):
        lines.append(f"{edges[k]:.6f},{edges[k + 1]:.6f},{int(hist[k])}")
    (out / "indeterminacy_histogram.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    # class distribution of high-indeterminacy predictions (I > tau)
    flagged = [p for p in scores.scored if p.score.indeterminacy > args.tau]
    counts = [0] * c
    for p in flagged:
        counts[p.predicted_class] += 1
    lines = ["class,count"]
    for k in range(c):
        lines.append(f"{names[k]},{counts[k]}")
    (out / "high_indeterminacy_classes.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    # mean indeterminacy by prediction correctness
    summary = indeterminacy_by_correctness(scores.scored)
    doc = {
        "mean_i_correct": summary.mean_i_correct,
        "mean_i_incorrect": summary.mean_i_incorrect,
        "n_correct": summary.n_correct,
        "n_incorrect": summary.n_incorrect,
        "provenance": provenance,
    }
    (out / "indeterminacy_by_correctness.json").write_text(dumps_canonical(doc), encoding="utf-8")

    # per-class indeterminacy distribution summaries
    per_class: dict[int, list[float]] = {k: [] for k in range(c)}
    for p in scores.scored:
        per_class[p.predicted_class].append(p.score.indeterminacy)
    lines = ["class,count,mean,min,p25,median,p75,max"]
    for k in range(c):
        s = _percentile_summary(per_class[k])
        fields = [names[k], str(s["count"])]
        for key in ("mean", "min", "p25", "median", "p75", "max"):
            fields.append("" if s[key] is None else f"{s[key]:.6f}")
        lines.append(",".join(fields))
    (out / "per_class_indeterminacy.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    _write_manifest(out, config, Path(args.input))
    ens_report = classification_report(dataset.labels, scores.ensemble_labels, c)
    print(f"evaluated {dataset.n_samples} samples -> {out}")
    print(f"  ensemble accuracy: {ens_report.accuracy:.4f}")
    print(f"  mean I (correct): {summary.mean_i_correct}")
    print(f"  mean I (incorrect): {summary.mean_i_incorrect}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _run_config(args)
    bundle = load_bundle(args.bundle)
    dataset = _load_labeled_csv(args)
    _check_encoding(bundle, dataset)
    out = _out_dir(args)
    external_sets = _load_external_sets(bundle, args)
    scores = score_with_bundle(bundle, dataset, external_sets)
    grid = parse_grid(args.grid)
    rows = sweep_thresholds(scores.scored, grid)
    recommended = best_youden(rows)
    (out / "sweep.csv").write_text(render_sweep_csv(rows), encoding="utf-8")
    doc = {"recommended_tau": recommended, "provenance": _provenance(config, Path(args.input))}
    (out / "recommended.json").write_text(dumps_canonical(doc), encoding="utf-8")
    _write_manifest(out, config, Path(args.input))
    print(f"swept {len(rows)} thresholds -> {out / 'sweep.csv'}")
    print(f"  recommended tau (peak youden): {recommended}")
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    config = _run_config(args)
    bundle = load_bundle(args.bundle)
    dataset = _load_labeled_csv(args)
    _check_encoding(bundle, dataset)
    out = _out_dir(args)
    external_sets = _load_external_sets(bundle, args)
    scores = score_with_bundle(bundle, dataset, external_sets)
    policy = fit_class_thresholds(
        scores.scored,
        args.percentile,
        class_count=bundle.encoding.class_count,
        global_tau=bundle.policy.global_tau,
        base_version=bundle.policy.version,
    )
    updated = bundle.with_policy(policy)
    save_bundle(updated, out / "bundle.json")

    names = bundle.encoding.class_names
    flag_rates = {}
    for c in range(bundle.encoding.class_count):
        group = [p for p in scores.scored if p.predicted_class == c]
        if group:
            tau = policy.per_class_tau[c]
            flag_rates[names[c]] = sum(1 for p in group if p.score.indeterminacy > tau) / len(group)
        else:
            flag_rates[names[c]] = None
    doc = {
        "percentile": args.percentile,
        "policy_version": policy.version,
        "per_class_tau": {names[c]: t for c, t in sorted(policy.per_class_tau.items())},
        "calibration_flag_rates": flag_rates,
        "provenance": _provenance(config, Path(args.input)),
    }
    (out / "calibration_report.json").write_text(dumps_canonical(doc), encoding="utf-8")
    _write_manifest(out, config, Path(args.input))
    print(f"calibrated PER_CLASS policy v{policy.version} at percentile {args.percentile} -> {out}")
    for c in sorted(policy.per_class_tau):
        rate = flag_rates[names[c]]
        rate_text = "n/a" if rate is None else f"{rate:.1%}"
        print(f"  {names[c]}: tau={policy.per_class_tau[c]:.6f} (flags {rate_text})")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _run_config(args)
    out = _out_dir(args)
    synth_config = SyntheticConfig(
        class_count=args.classes,
        samples_per_class=args.samples,
        feature_dim=args.dim,
        class_means=default_class_means(args.classes, args.dim, args.separation),
        overlap_sigma=args.sigma,
        seed=args.seed,
    )
    dataset = generate_synthetic(synth_config)
    save_dataset_csv(dataset, out / "synthetic.csv", label_column=args.label_col)
    _write_manifest(out, config, None)
    print(f"simulated {dataset.n_samples} rows ({args.classes} classes x {args.samples}, "
          f"dim {args.dim}, sigma {args.sigma}) -> {out / 'synthetic.csv'}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    bundle = load_bundle(args.bundle)
    store_dir = _out_dir(args)
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as probe:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            probe.bind((args.host, args.port))
        except OSError as e:
            raise PipelineError("PORT_IN_USE", f"cannot bind {args.host}:{args.port}: {e}") from e
    engine = DecisionEngine(bundle, store_dir, external_base=Path(args.bundle).parent)
    app = create_app(engine)
    print(f"serving bundle {args.bundle} on {args.host}:{args.port} (store: {store_dir})")
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    finally:
        engine.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sentriage",
        description="Indeterminacy-aware intrusion detection pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, needs_input=False, needs_bundle=False):
        if needs_input:
            p.add_argument("--input", required=True, help="input path")
        if needs_bundle:
            p.add_argument("--bundle", required=True, help="model bundle JSON")
        p.add_argument("--label-col", default="what", help="label column name (default: what)")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("prepare", help="filter, encode, impute, split, SMOTE, standardize")
    common(p, needs_input=True)
    p.add_argument("--holdout", type=float, default=0.2, help="holdout fraction (default: 0.2)")
    p.add_argument("--k", type=int, default=5, help="SMOTE neighbors (default: 5)")
    p.add_argument("--min-count", type=int, default=2, help="rare-class cutoff (default: 2)")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train learners on a prepared directory")
    common(p, needs_input=True)
    p.add_argument("--external", help="external probabilities CSV to attach")
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=20)
    p.add_argument("--l2-lambda", type=float, default=1e-3)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--tau", type=float, default=0.4, help="initial global threshold (default: 0.4)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="reports, confusion matrices, indeterminacy analyses")
    common(p, needs_input=True, needs_bundle=True)
    p.add_argument("--external", help="external probabilities CSV")
    p.add_argument("--tau", type=float, default=0.4, help="high-I cutoff for the class table")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="threshold sweep and recommended tau")
    common(p, needs_input=True, needs_bundle=True)
    p.add_argument("--external", help="external probabilities CSV")
    p.add_argument("--grid", default="0.1:0.9:0.05", help="start:end:step (default: 0.1:0.9:0.05)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", help="fit per-class thresholds at a percentile")
    common(p, needs_input=True, needs_bundle=True)
    p.add_argument("--external", help="external probabilities CSV")
    p.add_argument("--percentile", type=float, default=80.0)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("simulate", help="generate a synthetic dataset CSV")
    common(p)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--samples", type=int, default=1000, help="samples per class")
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--sigma", type=float, default=1.0, help="class spread (overlap)")
    p.add_argument("--separation", type=float, default=4.0, help="distance scale between means")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="run the decision service")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True, help="store directory (audit log lives here)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8470)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as e:
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e.code)


if __name__ == "__main__":
    sys.exit(main())
