"""HTTP facade for the annotation/review workflow."""

from .app import create_app

__all__ = ["create_app"]
