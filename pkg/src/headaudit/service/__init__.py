"""HTTP service wrapping the audit toolkit."""

from .app import create_app

__all__ = ["create_app"]
