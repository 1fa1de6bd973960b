"""Model bundle: one self-describing versioned document for the whole engine.

The bundle embeds learner parameters, the label encoding, the fitted
standardizer, the active threshold policy and creation metadata. It is
canonical JSON (sorted keys, fixed indentation, repr-exact floats), so
save -> load -> save is byte-identical and identical training runs give
identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..domain import LabelEncoding, PolicyMode, ThresholdPolicy
from ..errors import PipelineError
from ..learners.forest import ForestModel, Tree
from ..learners.logistic import LogisticModel, TrainingDiagnostics
from ..preprocess import Standardizer

FORMAT_VERSION = "1.0"


@dataclass(frozen=True, eq=False)
class ModelBundle:
    logistic: LogisticModel | None
    forest: ForestModel | None
    external_refs: tuple[str, ...]
    standardizer: Standardizer
    encoding: LabelEncoding
    policy: ThresholdPolicy
    metadata: dict
    format_version: str = FORMAT_VERSION

    def with_policy(self, policy: ThresholdPolicy) -> "ModelBundle":
        return replace(self, policy=policy)


def _policy_doc(policy: ThresholdPolicy) -> dict:
    return {
        "mode": policy.mode.value,
        "global_tau": policy.global_tau,
        "per_class_tau": {str(c): t for c, t in sorted(policy.per_class_tau.items())},
        "percentile": policy.percentile,
        "version": policy.version,
    }


def policy_from_doc(doc: dict) -> ThresholdPolicy:
    return ThresholdPolicy(
        global_tau=float(doc["global_tau"]),
        per_class_tau={int(k): float(v) for k, v in doc["per_class_tau"].items()},
        percentile=float(doc["percentile"]),
        mode=PolicyMode(doc["mode"]),
        version=int(doc["version"]),
    )


def _logistic_doc(model: LogisticModel) -> dict:
    d = model.diagnostics
    return {
        "weights": model.weights.tolist(),
        "biases": model.biases.tolist(),
        "l2_lambda": model.l2_lambda,
        "class_weights": model.class_weights.tolist(),
        "diagnostics": {
            "converged": d.converged,
            "n_iters": d.n_iters,
            "final_grad_max_norm": d.final_grad_max_norm,
            "loss_history": list(d.loss_history),
        },
    }


def _logistic_from_doc(doc: dict, encoding: LabelEncoding) -> LogisticModel:
    d = doc["diagnostics"]
    return LogisticModel(
        weights=np.asarray(doc["weights"], dtype=float),
        biases=np.asarray(doc["biases"], dtype=float),
        l2_lambda=float(doc["l2_lambda"]),
        class_weights=np.asarray(doc["class_weights"], dtype=float),
        encoding=encoding,
        diagnostics=TrainingDiagnostics(
            converged=bool(d["converged"]),
            n_iters=int(d["n_iters"]),
            final_grad_max_norm=float(d["final_grad_max_norm"]),
            loss_history=tuple(float(x) for x in d["loss_history"]),
        ),
    )


def _forest_doc(model: ForestModel) -> dict:
    return {
        "n_trees": model.n_trees,
        "max_depth": model.max_depth,
        "features_per_split": model.features_per_split,
        "seed": model.seed,
        "n_features": model.n_features,
        "class_weights": model.class_weights.tolist(),
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "hist": t.hist.tolist(),
            }
            for t in model.trees
        ],
    }


def _forest_from_doc(doc: dict, encoding: LabelEncoding) -> ForestModel:
    trees = tuple(
        Tree(
            feature=np.asarray(t["feature"], dtype=np.int64),
            threshold=np.asarray(t["threshold"], dtype=float),
            left=np.asarray(t["left"], dtype=np.int64),
            right=np.asarray(t["right"], dtype=np.int64),
            hist=np.asarray(t["hist"], dtype=float),
        )
        for t in doc["trees"]
    )
    return ForestModel(
        trees=trees,
        n_trees=int(doc["n_trees"]),
        max_depth=int(doc["max_depth"]),
        features_per_split=int(doc["features_per_split"]),
        class_weights=np.asarray(doc["class_weights"], dtype=float),
        seed=int(doc["seed"]),
        encoding=encoding,
        n_features=int(doc["n_features"]),
    )


def bundle_to_doc(bundle: ModelBundle) -> dict:
    learners: dict = {}
    if bundle.logistic is not None:
        learners["logistic"] = _logistic_doc(bundle.logistic)
    if bundle.forest is not None:
        learners["forest"] = _forest_doc(bundle.forest)
    learners["external"] = [{"path": p} for p in bundle.external_refs]
    return {
        "format_version": bundle.format_version,
        "encoding": {"class_names": list(bundle.encoding.class_names)},
        "standardizer": {
            "means": list(bundle.standardizer.means),
            "stddevs": list(bundle.standardizer.stddevs),
        },
        "policy": _policy_doc(bundle.policy),
        "learners": learners,
        "metadata": bundle.metadata,
    }


def bundle_from_doc(doc: dict) -> ModelBundle:
    version = str(doc.get("format_version", ""))
    major = version.split(".", 1)[0]
    if major != FORMAT_VERSION.split(".", 1)[0]:
        raise PipelineError(
            "UNSUPPORTED_BUNDLE_VERSION", f"cannot load bundle format {version!r}"
        )
    encoding = LabelEncoding(tuple(doc["encoding"]["class_names"]))
    learners = doc.get("learners", {})
    logistic = (
        _logistic_from_doc(learners["logistic"], encoding) if "logistic" in learners else None
    )
    forest = _forest_from_doc(learners["forest"], encoding) if "forest" in learners else None
    return ModelBundle(
        logistic=logistic,
        forest=forest,
        external_refs=tuple(e["path"] for e in learners.get("external", [])),
        standardizer=Standardizer(
            means=tuple(float(m) for m in doc["standardizer"]["means"]),
            stddevs=tuple(float(s) for s in doc["standardizer"]["stddevs"]),
        ),
        encoding=encoding,
        policy=policy_from_doc(doc["policy"]),
        metadata=dict(doc.get("metadata", {})),
        format_version=version,
    )


def dumps_canonical(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def save_bundle(bundle: ModelBundle, path: str | Path) -> None:
    Path(path).write_text(dumps_canonical(bundle_to_doc(bundle)), encoding="utf-8")


def load_bundle(path: str | Path) -> ModelBundle:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise PipelineError("BUNDLE_LOAD_FAILURE", f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise PipelineError("BUNDLE_LOAD_FAILURE", f"{path} is not valid JSON: {e}") from e
    try:
        return bundle_from_doc(doc)
    except (KeyError, TypeError, ValueError) as e:
        raise PipelineError("BUNDLE_LOAD_FAILURE", f"{path} is malformed: {e}") from e
