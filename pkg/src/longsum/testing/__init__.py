"""Test fixtures shipped with the package (mock backends)."""

from .mock_server import CapturedRequest, MockBackendServer

__all__ = ["CapturedRequest", "MockBackendServer"]
