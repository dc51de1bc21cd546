"""Exception hierarchy shared by the library and the CLI."""


class LongsumError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(LongsumError):
    """Invalid or inconsistent configuration (bad flag, unknown key, ...)."""


class DataError(LongsumError):
    """Unreadable, malformed or unusable input data."""


class MissingReferenceError(DataError):
    """A reference-length policy was applied to a document without a reference."""

    def __init__(self, doc_id):
        super().__init__(
            f"configuration error: document {doc_id!r} has no reference summary "
            "but the M-policy is reference_length"
        )
        self.doc_id = doc_id


class BackendError(LongsumError):
    """A remote backend call failed (transport, status or schema)."""

    def __init__(self, message, *, doc_id=None, attempts=0, status=None):
        where = f" [doc={doc_id}]" if doc_id is not None else ""
        super().__init__(f"{message}{where} after {attempts} attempt(s)")
        self.doc_id = doc_id
        self.attempts = attempts
        self.status = status


class BackendAuthError(BackendError):
    """No bearer token could be found for a backend that requires one."""
