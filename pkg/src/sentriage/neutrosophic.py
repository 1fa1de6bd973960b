"""Decomposition of a class distribution into truth / indeterminacy / falsity.

Truth is the mass on the predicted (argmax) class, falsity the mass on
everything else, and indeterminacy the Shannon entropy of the whole
distribution scaled into [0, 1]. Indeterminacy is computed from the full
distribution, independently of truth and falsity.
"""

from __future__ import annotations

import math

from .domain import NeutrosophicScore, ProbabilityVector

#: Entries below this are treated as exact zeros inside the entropy sum,
#: avoiding log-underflow noise on near-one-hot vectors.
ZERO_ENTRY = 1e-15


def normalized_entropy(p: ProbabilityVector) -> float:
    """Shannon entropy of p divided by log(class_count).

    The log base cancels in the ratio; natural log is used internally.
    Returns 0 for a one-hot vector and 1 for the uniform distribution.
    """
    acc = 0.0
    for v in p.values:
        if v >= ZERO_ENTRY:
            acc -= v * math.log(v)
    eta = acc / math.log(p.class_count)
    # Guard float spill just outside [0, 1] (e.g. uniform rounding).
    return min(max(eta, 0.0), 1.0)


def neutrosophic_score(p: ProbabilityVector) -> NeutrosophicScore:
    """Score a distribution: T = argmax mass, F = 1 - T, I = normalized entropy."""
    t = min(max(p.values), 1.0)
    return NeutrosophicScore(truth=t, indeterminacy=normalized_entropy(p), falsity=1.0 - t)
