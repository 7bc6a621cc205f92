"""Bridge entry point.

Exit codes: 0 clean shutdown, 1 usage problems, 2 runtime failure.
"""

import argparse
import sys

from .models import load_model
from .protocol import serve_stream
from .server import serve_tcp


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser():
    parser = _Parser(prog="predress-bridge", description=__doc__)
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--stdio", action="store_true",
                      help="serve requests on stdin/stdout (default)")
    mode.add_argument("--listen", metavar="HOST:PORT",
                      help="serve requests on a TCP socket")
    parser.add_argument("--model", default="mock",
                        help='"mock" or "module:attr" naming a classifier')
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        model = load_model(args.model)
        if args.listen:
            host, sep, port = args.listen.rpartition(":")
            if not sep or not host:
                raise _UsageError("--listen needs HOST:PORT")
            try:
                port = int(port)
            except ValueError:
                raise _UsageError("--listen port must be an integer") from None
            server = serve_tcp(host, port, model)
            print("listening on %s:%d" % server.server_address[:2], file=sys.stderr, flush=True)
            try:
                server.serve_forever()
            except KeyboardInterrupt:
                pass
            finally:
                server.server_close()
            return 0
        serve_stream(model, sys.stdin.buffer, sys.stdout.buffer)
        return 0
    except _UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
