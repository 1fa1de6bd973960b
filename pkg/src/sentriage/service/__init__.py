from .bundle import ModelBundle, load_bundle, save_bundle
from .engine import AuditOrigin, DecisionEngine, ReviewItem, ReviewStatus

__all__ = [
    "AuditOrigin",
    "DecisionEngine",
    "ModelBundle",
    "ReviewItem",
    "ReviewStatus",
    "load_bundle",
    "save_bundle",
]
