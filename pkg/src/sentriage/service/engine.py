"""The deployable decision engine: streaming scoring, review queue, audit log.

Persistence is file-based and replay-driven: an append-only audit log is
the single source of truth, and the review store plus the active policy
are rebuilt from it at startup. Decisions read an immutable policy
snapshot; policy installation swaps the reference atomically, so every
decision is made under exactly one policy version.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..abstention import ScoredPrediction, decide, fit_class_thresholds, nearest_rank_percentile
from ..domain import Decision, NeutrosophicScore, ProbabilityVector, ThresholdPolicy
from ..ensemble import soft_vote
from ..errors import PipelineError
from ..learners.external import ExternalProbabilities, load_external_probabilities
from ..learners.forest import predict_proba_forest_batch
from ..learners.logistic import predict_proba_logistic_batch
from ..domain import validate_probability_vector
from ..preprocess import standardize_apply_matrix
from .bundle import ModelBundle, policy_from_doc, _policy_doc


class ReviewStatus(Enum):
    PENDING = "PENDING"
    CONFIRMED = "CONFIRMED"
    RELABELED = "RELABELED"


class AuditOrigin(Enum):
    AUTO = "AUTO"
    REVIEW_VERDICT = "REVIEW_VERDICT"
    RECALIBRATION = "RECALIBRATION"


@dataclass(frozen=True)
class ReviewItem:
    """A flagged prediction awaiting (or past) an analyst verdict."""

    id: str
    sample_id: str
    features: tuple[float, ...]
    decision: Decision
    status: ReviewStatus
    analyst_label: int | None
    created_at: str
    resolved_at: str | None

    def __post_init__(self):
        if self.status is ReviewStatus.RELABELED and self.analyst_label is None:
            raise PipelineError("INVALID_VERDICT", "RELABELED requires an analyst label")
        if self.status is ReviewStatus.PENDING and self.analyst_label is not None:
            raise PipelineError("INVALID_VERDICT", "PENDING items cannot carry a label")


def _utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def _decision_snapshot(d: Decision) -> dict:
    return {
        "label": d.predicted_class,
        "T": d.score.truth,
        "I": d.score.indeterminacy,
        "F": d.score.falsity,
        "abstained": d.abstained,
        "threshold": d.applied_threshold,
        "policy_version": d.policy_version,
    }


def _decision_from_snapshot(snapshot: dict, sample_id: str) -> Decision:
    return Decision(
        sample_id=sample_id,
        predicted_class=int(snapshot["label"]),
        score=NeutrosophicScore(
            truth=float(snapshot["T"]),
            indeterminacy=float(snapshot["I"]),
            falsity=float(snapshot["F"]),
        ),
        abstained=bool(snapshot["abstained"]),
        applied_threshold=float(snapshot["threshold"]),
        policy_version=int(snapshot["policy_version"]),
    )


class DecisionEngine:
    """Scores samples against a bundle, queues abstentions, logs everything.

    The decision path runs concurrently against immutable snapshots; audit
    appends and review-store mutations are serialized behind one lock.
    """

    def __init__(
        self,
        bundle: ModelBundle,
        store_dir: str | Path,
        clock: Callable[[], str] = _utc_now_iso,
        external_base: str | Path | None = None,
    ):
        self.bundle = bundle
        self.store_dir = Path(store_dir)
        self.store_dir.mkdir(parents=True, exist_ok=True)
        self.audit_path = self.store_dir / "audit.log"
        self._external_base = Path(external_base) if external_base is not None else None
        self._clock = clock
        self._lock = threading.RLock()
        self._policy: ThresholdPolicy = bundle.policy
        self._seq = 0
        self._items: dict[str, ReviewItem] = {}
        self._item_order: list[str] = []
        self._decisions = 0
        self._abstentions = 0
        # per predicted class: counts and recorded I values from AUTO records
        c = bundle.encoding.class_count
        self._decided_per_class = [0] * c
        self._flagged_per_class = [0] * c
        self._i_per_class: list[list[float]] = [[] for _ in range(c)]
        self._external = self._load_external(bundle)
        self._replay()
        self._audit_file = open(self.audit_path, "a", encoding="utf-8")

    def _load_external(self, bundle: ModelBundle) -> tuple[ExternalProbabilities, ...]:
        sets: list[ExternalProbabilities] = []
        for ref in bundle.external_refs:
            path = Path(ref)
            if not path.is_absolute() and self._external_base is not None:
                path = self._external_base / path
            sets.extend(load_external_probabilities(path, bundle.encoding))
        return tuple(sets)

    # -- policy ------------------------------------------------------------

    @property
    def policy(self) -> ThresholdPolicy:
        return self._policy

    # -- audit plumbing ----------------------------------------------------

    def _append(self, record: dict, timestamp: str) -> None:
        self._seq += 1
        record = {"seq": self._seq, "timestamp": timestamp, **record}
        line = json.dumps(record, sort_keys=True)
        self._audit_file.write(line + "\n")
        self._audit_file.flush()

    def close(self) -> None:
        with self._lock:
            if not self._audit_file.closed:
                self._audit_file.flush()
                self._audit_file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def iter_audit_records(self):
        if not self.audit_path.exists():
            return
        with open(self.audit_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)

    # -- replay ------------------------------------------------------------

    def _replay(self) -> None:
        for record in self.iter_audit_records():
            self._seq = max(self._seq, int(record["seq"]))
            origin = AuditOrigin(record["origin"])
            if origin is AuditOrigin.AUTO:
                decision = _decision_from_snapshot(record["decision"], record["sample_id"])
                self._register_decision(decision)
                if decision.abstained:
                    self._enqueue(
                        decision,
                        tuple(float(x) for x in record["features"]),
                        created_at=record["timestamp"],
                    )
            elif origin is AuditOrigin.REVIEW_VERDICT:
                item = self._items[record["item_id"]]
                label = record["analyst_label"]
                self._items[record["item_id"]] = replace(
                    item,
                    status=ReviewStatus(record["status"]),
                    analyst_label=None if label is None else int(label),
                    resolved_at=record["timestamp"],
                )
            elif origin is AuditOrigin.RECALIBRATION:
                self._policy = policy_from_doc(record["policy"])

    def _register_decision(self, decision: Decision) -> None:
        self._decisions += 1
        c = decision.predicted_class
        self._decided_per_class[c] += 1
        self._i_per_class[c].append(decision.score.indeterminacy)
        if decision.abstained:
            self._abstentions += 1
            self._flagged_per_class[c] += 1

    def _enqueue(self, decision: Decision, features: tuple[float, ...], created_at: str) -> ReviewItem:
        item = ReviewItem(
            id=f"rev-{len(self._item_order) + 1:06d}",
            sample_id=decision.sample_id,
            features=features,
            decision=decision,
            status=ReviewStatus.PENDING,
            analyst_label=None,
            created_at=created_at,
            resolved_at=None,
        )
        self._items[item.id] = item
        self._item_order.append(item.id)
        return item

    # -- scoring -----------------------------------------------------------

    def member_probabilities(self, features: Sequence[float], sample_id: str):
        """(model_id, ProbabilityVector) pairs for every available member."""
        raw = np.asarray(features, dtype=float).reshape(1, -1)
        z = standardize_apply_matrix(self.bundle.standardizer, raw)
        members: list[tuple[str, ProbabilityVector]] = []
        if self.bundle.logistic is not None:
            probs = predict_proba_logistic_batch(self.bundle.logistic, z)[0]
            members.append(("logistic", validate_probability_vector(probs)))
        if self.bundle.forest is not None:
            probs = predict_proba_forest_batch(self.bundle.forest, z)[0]
            members.append(("forest", validate_probability_vector(probs)))
        for ext in self._external:
            vector = ext.vector_for(sample_id)
            if vector is not None:
                members.append((ext.model_id, vector))
        if not members:
            raise PipelineError("BUNDLE_NOT_LOADED", "bundle has no usable learners")
        return members

    def score_sample(self, features: Sequence[float], sample_id: str) -> Decision:
        """standardize -> learners -> soft vote -> score -> decide, logged."""
        members = self.member_probabilities(features, sample_id)
        policy = self._policy  # one immutable snapshot per decision
        pred = soft_vote([m[1] for m in members], model_ids=[m[0] for m in members])
        decision = decide(pred, policy, sample_id)
        raw_features = tuple(float(x) for x in features)
        with self._lock:
            ts = self._clock()
            record = {
                "origin": AuditOrigin.AUTO.value,
                "sample_id": sample_id,
                "decision": _decision_snapshot(decision),
            }
            if decision.abstained:
                # feature snapshot persisted so the review store replays from
                # the log alone
                record["features"] = list(raw_features)
            self._register_decision(decision)
            self._append(record, ts)
            if decision.abstained:
                self._enqueue(decision, raw_features, created_at=ts)
        return decision

    # -- review queue ------------------------------------------------------

    def list_review(
        self,
        status: ReviewStatus | None = None,
        page: int = 1,
        page_size: int = 50,
    ) -> list[ReviewItem]:
        """Matching items, newest first, stable pagination (1-based pages)."""
        if page < 1 or page_size < 1:
            raise PipelineError("INVALID_CONFIG", "page and page_size must be >= 1")
        with self._lock:
            items = [self._items[i] for i in reversed(self._item_order)]
        if status is not None:
            items = [i for i in items if i.status is status]
        start = (page - 1) * page_size
        return items[start : start + page_size]

    def submit_verdict(
        self,
        item_id: str,
        verdict: str,
        analyst_label: int | None = None,
    ) -> ReviewItem:
        """Resolve one PENDING item with confirm or relabel (single-shot)."""
        with self._lock:
            item = self._items.get(item_id)
            if item is None:
                raise PipelineError("NOT_FOUND", f"no review item {item_id!r}")
            if item.status is not ReviewStatus.PENDING:
                raise PipelineError("ALREADY_RESOLVED", f"{item_id} is {item.status.value}")
            if verdict == "confirm":
                status = ReviewStatus.CONFIRMED
                label = None
            elif verdict == "relabel":
                if analyst_label is None:
                    raise PipelineError("INVALID_VERDICT", "relabel requires a label")
                if not 0 <= analyst_label < self.bundle.encoding.class_count:
                    raise PipelineError("UNKNOWN_CLASS", f"label {analyst_label} out of range")
                status = ReviewStatus.RELABELED
                label = analyst_label
            else:
                raise PipelineError("INVALID_VERDICT", f"unknown verdict {verdict!r}")
            resolved_at = self._clock()
            updated = replace(item, status=status, analyst_label=label, resolved_at=resolved_at)
            self._items[item_id] = updated
            self._append(
                {
                    "origin": AuditOrigin.REVIEW_VERDICT.value,
                    "item_id": item_id,
                    "sample_id": item.sample_id,
                    "status": status.value,
                    "analyst_label": label,
                },
                resolved_at,
            )
            return updated

    # -- recalibration -----------------------------------------------------

    def resolved_scored_predictions(self) -> list[ScoredPrediction]:
        """Calibration pool: resolved review items, confirmed = correct."""
        out = []
        with self._lock:
            for item_id in self._item_order:
                item = self._items[item_id]
                if item.status is ReviewStatus.PENDING:
                    continue
                true_class = (
                    item.decision.predicted_class
                    if item.status is ReviewStatus.CONFIRMED
                    else item.analyst_label
                )
                out.append(
                    ScoredPrediction(
                        sample_id=item.sample_id,
                        predicted_class=item.decision.predicted_class,
                        score=item.decision.score,
                        true_class=true_class,
                    )
                )
        return out

    def recalibrate(self, percentile: float) -> ThresholdPolicy:
        """Refit per-class thresholds from resolved verdicts; swap atomically."""
        pool = self.resolved_scored_predictions()
        if not pool:
            raise PipelineError("INSUFFICIENT_DATA", "no resolved review items to calibrate on")
        with self._lock:
            current = self._policy
            policy = fit_class_thresholds(
                pool,
                percentile,
                class_count=self.bundle.encoding.class_count,
                global_tau=current.global_tau,
                base_version=current.version,
            )
            self._policy = policy
            self._append(
                {
                    "origin": AuditOrigin.RECALIBRATION.value,
                    "percentile": float(percentile),
                    "policy": _policy_doc(policy),
                },
                self._clock(),
            )
            return policy

    # -- metrics -----------------------------------------------------------

    def metrics(self, preview_percentile: float | None = None) -> dict:
        enc = self.bundle.encoding
        with self._lock:
            pending = sum(
                1 for i in self._items.values() if i.status is ReviewStatus.PENDING
            )
            out = {
                "decisions": self._decisions,
                "abstentions": self._abstentions,
                "pending_reviews": pending,
                "per_class_flag_rates": {
                    enc.decode(c): (
                        self._flagged_per_class[c] / self._decided_per_class[c]
                        if self._decided_per_class[c]
                        else 0.0
                    )
                    for c in range(enc.class_count)
                },
                "policy_version": self._policy.version,
                "preview": None,
            }
            if preview_percentile is not None:
                projected = {}
                for c in range(enc.class_count):
                    values = self._i_per_class[c]
                    if values:
                        tau = nearest_rank_percentile(values, preview_percentile)
                        projected[enc.decode(c)] = sum(1 for v in values if v > tau) / len(values)
                    else:
                        projected[enc.decode(c)] = 0.0
                out["preview"] = {
                    "percentile": float(preview_percentile),
                    "projected_flag_rates": projected,
                }
        return out
