"""Shared exception base for domain failures.

Every error a caller is expected to handle derives from SdlcError so the
CLI can map domain failures to exit code 1 and the service can map them
to structured error bodies.
"""


class SdlcError(Exception):
    """Base class for all domain-level failures."""

    code = "domain_error"

    def __init__(self, message: str, detail: object = None):
        super().__init__(message)
        self.message = message
        self.detail = detail
