"""Stable, machine-readable error codes shared across the pipeline."""

from __future__ import annotations


class PipelineError(Exception):
    """Contract violation carrying a stable error code.

    Codes are part of the public surface (tests and the HTTP API match on
    them); messages are free text for humans.
    """

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
