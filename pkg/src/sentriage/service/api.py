"""HTTP surface of the decision engine.

JSON over HTTP on a local port. Every mutation maps to exactly one engine
operation; errors carry the pipeline's stable codes in the body.
"""

from __future__ import annotations

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..domain import Decision
from ..errors import PipelineError
from .engine import DecisionEngine, ReviewItem, ReviewStatus

_STATUS_BY_CODE = {
    "NOT_FOUND": 404,
    "ALREADY_RESOLVED": 409,
    "INSUFFICIENT_DATA": 400,
    "DIMENSION_MISMATCH": 422,
    "UNKNOWN_CLASS": 422,
    "INVALID_VERDICT": 422,
    "PERCENTILE_OUT_OF_RANGE": 422,
    "INVALID_CONFIG": 422,
}


class DecideRequest(BaseModel):
    sample_id: str
    features: list[float]


class VerdictRequest(BaseModel):
    verdict: str
    label: str | None = None


class RecalibrateRequest(BaseModel):
    percentile: float = 80.0


def create_app(engine: DecisionEngine) -> FastAPI:
    app = FastAPI(title="sentriage decision service")
    encoding = engine.bundle.encoding
    normal_classes = {
        c for c in range(encoding.class_count) if encoding.decode(c).lower() == "normal"
    }

    def binary_view(decision: Decision) -> str:
        if decision.abstained:
            return "indeterminate"
        return "normal" if decision.predicted_class in normal_classes else "malicious"

    def decision_json(decision: Decision) -> dict:
        return {
            "sample_id": decision.sample_id,
            "label": decision.predicted_class,
            "label_name": encoding.decode(decision.predicted_class),
            "binary_view": binary_view(decision),
            "T": decision.score.truth,
            "I": decision.score.indeterminacy,
            "F": decision.score.falsity,
            "abstained": decision.abstained,
            "applied_threshold": decision.applied_threshold,
            "policy_version": decision.policy_version,
        }

    def item_json(item: ReviewItem) -> dict:
        return {
            "id": item.id,
            "sample_id": item.sample_id,
            "features": list(item.features),
            "decision": decision_json(item.decision),
            "status": item.status.value.lower(),
            "analyst_label": (
                encoding.decode(item.analyst_label) if item.analyst_label is not None else None
            ),
            "created_at": item.created_at,
            "resolved_at": item.resolved_at,
        }

    def policy_json() -> dict:
        policy = engine.policy
        return {
            "mode": policy.mode.value,
            "global_tau": policy.global_tau,
            "percentile": policy.percentile,
            "version": policy.version,
            "per_class_tau": {
                encoding.decode(c): t for c, t in sorted(policy.per_class_tau.items())
            },
        }

    @app.exception_handler(PipelineError)
    async def pipeline_error_handler(_: Request, exc: PipelineError):
        return JSONResponse(
            status_code=_STATUS_BY_CODE.get(exc.code, 400),
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.post("/v1/decide")
    def post_decide(body: DecideRequest):
        decision = engine.score_sample(body.features, body.sample_id)
        return decision_json(decision)

    @app.get("/v1/review")
    def get_review(
        status: str | None = Query(default=None),
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=50, ge=1, le=500),
    ):
        status_filter = None
        if status:
            try:
                status_filter = ReviewStatus(status.upper())
            except ValueError:
                raise PipelineError("INVALID_CONFIG", f"unknown status filter {status!r}")
        items = engine.list_review(status=status_filter, page=page, page_size=page_size)
        return [item_json(i) for i in items]

    @app.post("/v1/review/{item_id}/verdict")
    def post_verdict(item_id: str, body: VerdictRequest):
        analyst_label = None
        if body.label is not None:
            analyst_label = encoding.encode(body.label)
        item = engine.submit_verdict(item_id, body.verdict, analyst_label)
        return item_json(item)

    @app.post("/v1/policy/recalibrate")
    def post_recalibrate(body: RecalibrateRequest):
        engine.recalibrate(body.percentile)
        return policy_json()

    @app.get("/v1/policy")
    def get_policy():
        return policy_json()

    @app.get("/v1/metrics")
    def get_metrics(preview_percentile: float | None = Query(default=None)):
        return engine.metrics(preview_percentile=preview_percentile)

    return app
