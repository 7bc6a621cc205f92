"""Garment-state classifier bridge.

Serves classification requests over newline-delimited JSON, either on
stdio or a TCP socket.  One request per line:

    {"id": 7, "image": "...", "features": {...}}

and one reply per request, in order:

    {"id": 7, "category": "closed|partly_opened|opened", "confidence": 0.93}

Malformed requests get {"id": ..., "error": "..."} and the connection
stays open.
"""

from .conformance import check_endpoint
from .models import MockModel, load_model
from .protocol import CATEGORIES, handle_request, serve_stream

__version__ = "0.1.0"

__all__ = [
    "CATEGORIES",
    "MockModel",
    "check_endpoint",
    "handle_request",
    "load_model",
    "serve_stream",
    "__version__",
]
