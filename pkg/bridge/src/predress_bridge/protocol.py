"""Wire protocol: one JSON object per line, replies in request order."""

import json

from .models import CATEGORIES


def _error(req_id, message):
    return {"id": req_id, "error": message}


def handle_request(model, obj):
    """Classify one parsed request; never raises."""
    if not isinstance(obj, dict):
        return _error(None, "request must be a JSON object")
    req_id = obj.get("id")
    if isinstance(req_id, bool) or not isinstance(req_id, int):
        safe_id = req_id if isinstance(req_id, (str, float)) else None
        return _error(safe_id, "id must be an integer")
    image = obj.get("image")
    if not isinstance(image, str):
        return _error(req_id, "image must be a string")
    features = obj.get("features")
    if not isinstance(features, dict):
        return _error(req_id, "features must be an object")
    try:
        category, confidence = model.classify(image, features)
    except Exception as exc:
        return _error(req_id, "classifier failed: %s" % exc)
    if category not in CATEGORIES:
        return _error(req_id, "classifier produced unknown category %r" % (category,))
    try:
        confidence = float(confidence)
    except (TypeError, ValueError):
        return _error(req_id, "classifier produced a non-numeric confidence")
    if not 0.0 <= confidence <= 1.0:
        return _error(req_id, "classifier confidence %r outside [0, 1]" % confidence)
    return {"id": req_id, "category": category, "confidence": confidence}


def handle_line(model, line):
    """Raw request line in, reply dict out."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        return _error(None, "malformed JSON: %s" % exc)
    return handle_request(model, obj)


def serve_stream(model, rfile, wfile):
    """Serve byte streams until EOF; requests are handled sequentially."""
    for raw in rfile:
        line = raw.strip()
        if not line:
            continue
        reply = handle_line(model, line)
        wfile.write((json.dumps(reply, sort_keys=True) + "\n").encode())
        wfile.flush()
