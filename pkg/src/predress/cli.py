"""Command line entry points.

Exit codes: 0 success, 1 usage problems, 2 validation or invariant
failures, 3 I/O or bridge failures.
"""

import argparse
import os
import sys

import numpy as np

from . import dmp, io
from .episodes import (
    load_config,
    load_report,
    render_report,
    report_to_json,
    run_batch,
)
from .errors import EstimatorError, PredressError
from .primitives import QUASI_STATIC, generate, load_primitive, load_registry, save_primitive

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_IO = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parse_mask(text, n):
    parts = text.split(",")
    if len(parts) != n:
        raise _UsageError("essential mask needs %d comma-separated entries" % n)
    mask = []
    for p in parts:
        p = p.strip()
        if p not in ("0", "1"):
            raise _UsageError("essential mask entries must be 0 or 1")
        mask.append(p == "1")
    return mask


def _parse_point(text, n, what):
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise _UsageError("%s must be comma-separated numbers" % what) from None
    if len(vals) != n:
        raise _UsageError("%s needs %d values" % (what, n))
    return np.array(vals)


def _cmd_preprocess(args):
    kind = io.demo_kind(args.demo)
    if kind == "pair":
        left, right = io.read_pair_demo(args.demo)
        essential = None
        if args.essential:
            essential = _parse_mask(args.essential, left.n_channels)
        spec = dmp.PreprocessSpec(args.target_rate, args.cutoff, essential)
        left = dmp.resample_and_filter(left, spec)
        right = dmp.resample_and_filter(right, spec)
        io.write_pair_demo(args.out, left, right)
        n = len(left)
    else:
        demo = io.read_demo(args.demo)
        essential = None
        if args.essential:
            essential = _parse_mask(args.essential, demo.n_channels)
        spec = dmp.PreprocessSpec(args.target_rate, args.cutoff, essential)
        demo = dmp.resample_and_filter(demo, spec)
        io.write_demo(args.out, demo)
        n = len(demo)
    print("wrote %s (%d samples at %g Hz)" % (args.out, n, args.target_rate))
    return EXIT_OK


def _cmd_fit(args):
    kind = io.demo_kind(args.demo)
    if kind == "single":
        if not args.out:
            raise _UsageError("single-stream demos need --out MODEL.json")
        demo = io.read_demo(args.demo)
        model = dmp.fit(demo, n_basis=args.n_basis, alpha_z=args.alpha_z)
        io.save_model(args.out, model)
        print("wrote %s (%d channels, %d basis functions)" % (args.out, model.n_channels, model.n_basis))
        return EXIT_OK
    if not args.out_dir:
        raise _UsageError("paired demos need --out-dir PRIMITIVE_DIR")
    for flag, value in (("--name", args.name), ("--axis", args.axis), ("--d-max", args.d_max)):
        if value is None:
            raise _UsageError("paired fits need %s" % flag)
    if args.name != os.path.basename(args.out_dir):
        raise _UsageError(
            "--name %r must match the primitive directory name %r"
            % (args.name, os.path.basename(args.out_dir))
        )
    left_demo, right_demo = io.read_pair_demo(args.demo)
    left = dmp.fit(left_demo, n_basis=args.n_basis, alpha_z=args.alpha_z)
    right = dmp.fit(right_demo, n_basis=args.n_basis, alpha_z=args.alpha_z)
    save_primitive(
        os.path.dirname(os.path.abspath(args.out_dir)) or ".",
        os.path.basename(args.out_dir),
        left,
        right,
        main_rotation_axis=args.axis,
        d_max=args.d_max,
        limits_ref=args.limits_ref,
    )
    # reload through the registry path so the result is validated
    spec = load_primitive(os.path.basename(args.out_dir), os.path.dirname(os.path.abspath(args.out_dir)))
    print("wrote %s (axis %s, d_max %g)" % (args.out_dir, spec.main_rotation_axis, spec.d_max))
    return EXIT_OK


def _cmd_rollout(args):
    model = io.load_model(args.model)
    limits = io.load_limits(args.limits) if args.limits else None
    start = _parse_point(args.start, model.n_channels, "--start") if args.start else None
    goal = _parse_point(args.goal, model.n_channels, "--goal") if args.goal else None
    traj = dmp.rollout(model, start=start, goal=goal, dt=args.dt, limits=limits)
    io.write_trajectory_csv(args.out, traj)
    print("wrote %s (%d samples, %.3f s)" % (args.out, len(traj), traj.duration))
    return EXIT_OK


def _cmd_validate_registry(args):
    registry = load_registry(args.registry)
    failures = []
    for name in registry.names():
        spec = registry.get(name)
        try:
            pair = generate(spec, dt=args.dt)
            dmp.check_limits(pair.left, spec.limits)
            dmp.check_limits(pair.right, spec.limits)
            sep = pair.max_separation()
            if sep > spec.d_max + 1e-9:
                raise PredressError("max separation %.6f exceeds d_max %.6f" % (sep, spec.d_max))
            for arm in (pair.left, pair.right):
                if arm.quats is not None:
                    norms = np.linalg.norm(arm.quats, axis=1)
                    if np.any(np.abs(norms - 1.0) > 1e-9):
                        raise PredressError("orientation track is not unit-norm")
            extra = "quasi-static" if spec.kind == QUASI_STATIC else "axis %s" % spec.main_rotation_axis
            print(
                "%s: ok (%d samples, %.3f s, max separation %.4f, %s)"
                % (name, len(pair), pair.duration, sep, extra)
            )
        except PredressError as exc:
            failures.append("%s: %s" % (name, exc))
            print("%s: FAIL (%s)" % (name, exc))
    if failures:
        raise PredressError("%d primitive(s) failed validation" % len(failures))
    return EXIT_OK


def _cmd_simulate(args):
    cfg = load_config(args.config)
    if args.n is not None:
        cfg.n_episodes = args.n
    if args.seed is not None:
        cfg.seed = args.seed
    if args.max_iterations is not None:
        cfg.max_iterations = args.max_iterations
    if args.workers is not None:
        cfg.workers = args.workers
    if args.estimator is not None:
        cfg.estimator = args.estimator
    env_bridge = os.environ.get("PREDRESS_BRIDGE")
    if env_bridge:
        cfg.estimator = env_bridge
    if cfg.n_episodes < 1:
        raise _UsageError("--n must be >= 1")
    if cfg.max_iterations < 1:
        raise _UsageError("--max-iterations must be >= 1")
    if cfg.workers < 1:
        raise _UsageError("--workers must be >= 1")

    report = run_batch(cfg)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report_to_json(report))
    sys.stdout.write(render_report(report, args.format))
    return EXIT_OK


def _cmd_report(args):
    report = load_report(args.infile)
    text = render_report(report, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="predress", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("preprocess",
                       help="resample and low-pass a demonstration")
    p.add_argument("--demo", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--target-rate", type=float, default=500.0)
    p.add_argument("--cutoff", type=float, default=8.0)
    p.add_argument("--essential", help="comma list of 0/1 per channel")
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("fit",
                       help="fit a movement model to a demonstration")
    p.add_argument("--demo", required=True)
    p.add_argument("--n-basis", type=int, default=dmp.DEFAULT_N_BASIS)
    p.add_argument("--alpha-z", type=float, default=dmp.ALPHA_Z)
    p.add_argument("--out", help="output model JSON (single-stream demos)")
    p.add_argument("--out-dir", help="output primitive directory (paired demos)")
    p.add_argument("--name", help="primitive name (paired)")
    p.add_argument("--axis", choices=("X", "Y", "Z"), help="declared main rotation axis")
    p.add_argument("--d-max", type=float, help="separation cap (paired)")
    p.add_argument("--limits-ref", default="../limits.json",
                   help="limits file, relative to the primitive directory")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("rollout",
                       help="replay a fitted model to CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--limits")
    p.add_argument("--start", help="comma-separated start override")
    p.add_argument("--goal", help="comma-separated goal override")
    p.add_argument("--dt", type=float, default=dmp.DEFAULT_DT)
    p.set_defaults(func=_cmd_rollout)

    p = sub.add_parser("validate-registry",
                       help="check every primitive in a registry")
    p.add_argument("--registry", required=True)
    p.add_argument("--dt", type=float, default=dmp.DEFAULT_DT)
    p.set_defaults(func=_cmd_validate_registry)

    p = sub.add_parser("simulate",
                       help="run calibrated episodes and report statistics")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int, help="episodes per (condition, plan) pair")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--estimator",
                   help='"mock", "bridge:stdio", or "bridge:HOST:PORT" '
                        "(PREDRESS_BRIDGE env overrides)")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--out", help="also write the canonical JSON report here")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("report",
                       help="render a saved report")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except _UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except EstimatorError as exc:
        print("bridge error: %s" % exc, file=sys.stderr)
        return EXIT_IO
    except PredressError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print("i/o error: %s" % exc, file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
