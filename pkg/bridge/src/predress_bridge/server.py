"""TCP front end; each connection is served sequentially."""

import socketserver

from .protocol import serve_stream


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        serve_stream(self.server.model, self.rfile, self.wfile)


class BridgeServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, model):
        super().__init__(address, _Handler)
        self.model = model


def serve_tcp(host, port, model):
    """Bind and return the server; call serve_forever() on it to run."""
    return BridgeServer((host, port), model)
