"""Conformance harness for classifier-bridge endpoints.

Drives any bridge over a pair of binary streams and checks the protocol
promises: ids echo the request, replies come back one per line in request
order, malformed traffic gets an error reply without killing the
connection, and a long pipelined burst is answered completely.  The
harness returns a list of failure strings; an empty list means the
endpoint conforms.
"""

import json

from .models import CATEGORIES

SOAK_REQUESTS = 1000


def _send(wfile, payload):
    if isinstance(payload, (bytes, bytearray)):
        line = bytes(payload)
    else:
        line = json.dumps(payload, sort_keys=True).encode()
    wfile.write(line + b"\n")
    wfile.flush()


def _recv(rfile):
    line = rfile.readline()
    if not line:
        raise ConnectionError("bridge closed the connection")
    return json.loads(line.decode())


def _expect_reply(failures, reply, req_id, category=None, what=""):
    if reply.get("id") != req_id:
        failures.append("%s: reply id %r, want %r" % (what, reply.get("id"), req_id))
    if "error" in reply:
        failures.append("%s: unexpected error reply: %s" % (what, reply["error"]))
        return
    if reply.get("category") not in CATEGORIES:
        failures.append("%s: category %r not in %s" % (what, reply.get("category"), CATEGORIES))
    elif category is not None and reply["category"] != category:
        failures.append("%s: category %r, want %r" % (what, reply["category"], category))
    conf = reply.get("confidence")
    if not isinstance(conf, (int, float)) or not 0.0 <= float(conf) <= 1.0:
        failures.append("%s: confidence %r outside [0, 1]" % (what, conf))


def _expect_error(failures, reply, what, req_id=None):
    if "error" not in reply:
        failures.append("%s: expected an error reply, got %r" % (what, reply))
    if req_id is not None and reply.get("id") != req_id:
        failures.append("%s: error reply id %r, want %r" % (what, reply.get("id"), req_id))


def _request(req_id, truth="opened"):
    return {"id": req_id, "image": "synthetic://conformance", "features": {"truth": truth}}


def check_endpoint(rfile, wfile, n_soak=SOAK_REQUESTS):
    """Run every conformance check over one open connection.

    ``rfile``/``wfile`` are binary file objects (subprocess pipes or socket
    makefiles).  Returns the list of failures (empty when conformant).
    """
    failures = []
    try:
        # id matching and the mock identity mapping, one category at a time
        for i, category in enumerate(CATEGORIES, start=1):
            _send(wfile, _request(i, category))
            _expect_reply(failures, _recv(rfile), i, category, "identity[%s]" % category)

        # malformed traffic: each gets an error reply, the connection lives on
        bad_cases = [
            (b"this is not json", None, "non-JSON line"),
            (b"[1, 2, 3]", None, "non-object request"),
            ({"image": "x", "features": {"truth": "opened"}}, None, "missing id"),
            ({"id": True, "image": "x", "features": {"truth": "opened"}}, None, "boolean id"),
            ({"id": 44, "features": {"truth": "opened"}}, 44, "missing image"),
            ({"id": 45, "image": "x"}, 45, "missing features"),
            ({"id": 46, "image": "x", "features": {"truth": "torn"}}, 46, "unknown truth"),
        ]
        for payload, want_id, what in bad_cases:
            _send(wfile, payload)
            _expect_error(failures, _recv(rfile), what, want_id)
            probe = 1000 + len(failures)
            _send(wfile, _request(probe))
            _expect_reply(failures, _recv(rfile), probe, "opened", "%s (recovery)" % what)

        # pipelined soak: ids must come back complete and in request order.
        # The in-flight window is bounded so OS pipe buffers cannot fill up
        # and deadlock both sides when the endpoint is a subprocess.
        truths = [CATEGORIES[i % len(CATEGORIES)] for i in range(n_soak)]
        window = 256
        received = 0
        for sent, truth in enumerate(truths):
            _send(wfile, _request(10_000 + sent, truth))
            while sent - received >= window:
                _expect_reply(failures, _recv(rfile), 10_000 + received,
                              truths[received], "soak[%d]" % received)
                received += 1
                if len(failures) > 20:
                    failures.append("soak: aborted after too many failures")
                    return failures
        while received < len(truths):
            _expect_reply(failures, _recv(rfile), 10_000 + received,
                          truths[received], "soak[%d]" % received)
            received += 1
            if len(failures) > 20:
                failures.append("soak: aborted after too many failures")
                return failures
    except (ConnectionError, OSError, ValueError) as exc:
        failures.append("transport failed: %s" % exc)
    return failures
