"""HTTP review service (FastAPI) over a project store."""
from .app import ApiError, create_app

__all__ = ["ApiError", "create_app"]
