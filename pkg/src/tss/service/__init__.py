"""HTTP layer over the core package."""

from tss.service.app import app, create_app

__all__ = ["app", "create_app"]
