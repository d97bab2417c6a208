"""FastAPI service wrapping the experiment harness.

The CLI talks to the same handler functions in-process; running
``ctt serve`` exposes them over HTTP with the schemas in
:mod:`cttfed.service.schemas`.
"""

from cttfed.service.app import create_app

__all__ = ["create_app"]
