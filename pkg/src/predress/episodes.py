"""Episode engine: run iteration plans against the calibrated response model.

One episode executes a plan repeatedly on a simulated gown whose reaction
is drawn from the response model; the world otherwise only advances time.
Per-episode random generators are derived from (seed, pair index, episode
index), so results are identical whether pairs run sequentially or on a
process pool.
"""

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dmp import DEFAULT_DT
from .errors import ConfigError, EstimatorError, LimitViolation
from .garment import (
    CONDITIONS,
    GarmentCategory,
    calibrate,
    make_estimator,
    observe,
    sample_outcome,
)
from .io import read_table_csv
from .primitives import compose, generate, load_registry

STOP_REACHED = "reached_opened"
STOP_MAX = "max_iterations"
STOP_STALL = "no_improvement"
STOP_ESTIMATOR = "estimator_error"

REPORT_FORMAT = "predress-report"
REPORT_VERSION = 1


@dataclass(frozen=True)
class IterationRecord:
    index: int
    steps: tuple
    category: GarmentCategory
    confidence: float
    arms_forward: bool
    sleeves_visible: bool


@dataclass
class EpisodeTrace:
    condition: str
    label: str
    iterations: list
    stop_reason: str
    first_partly: object
    reached_opened: bool
    error: str = None


@dataclass(frozen=True)
class PairResult:
    condition: str
    label: str
    n_episodes: int
    opened_count: int
    partly_count: int
    arms_count: int
    first_partly_sum: int
    first_partly_n: int

    @property
    def opened_pct(self):
        return 100.0 * self.opened_count / self.n_episodes

    @property
    def partly_pct(self):
        return 100.0 * self.partly_count / self.n_episodes

    @property
    def arms_fwd_pct(self):
        return 100.0 * self.arms_count / self.n_episodes

    @property
    def mean_iterations(self):
        if self.first_partly_n == 0:
            return None
        return self.first_partly_sum / self.first_partly_n


@dataclass
class BatchReport:
    seed: int
    n_episodes: int
    max_iterations: int
    estimator: str
    dt: float
    registry: str
    rows: list


class TrajectoryExecutor:
    """Builds, validates, and caches one paired trajectory per primitive."""

    def __init__(self, registry, dt=DEFAULT_DT):
        self.registry = registry
        self.dt = dt
        self._cache = {}

    def trajectory(self, name):
        pair = self._cache.get(name)
        if pair is None:
            spec = self.registry.get(name)
            pair = generate(spec, dt=self.dt)
            from .dmp import check_limits

            check_limits(pair.left, spec.limits)
            check_limits(pair.right, spec.limits)
            if pair.max_separation() > spec.d_max + 1e-9:
                raise LimitViolation(
                    "%s: arms drift %.6f apart, cap is %.6f"
                    % (name, pair.max_separation(), spec.d_max)
                )
            self._cache[name] = pair
        return pair

    def execute(self, plan):
        """Ensure every step's trajectory exists; returns the step labels."""
        for name in plan.steps:
            self.trajectory(name)
        return plan.steps

    def plan_duration(self, plan):
        return sum(self.trajectory(name).duration for name in plan.steps)


def episode_rng(seed, pair_index, episode_index):
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(pair_index, episode_index))
    return np.random.default_rng(seq)


def run_episode(plan, condition, response_model, estimator, executor, rng, max_iterations):
    """One simulated attempt at opening the gown with the given plan.

    Stops on full opening, on two non-improving looks after the first
    partial opening, or when the iteration budget runs out.
    """
    terminal, arms_sampled, k_improve = sample_outcome(response_model, condition, plan, rng)

    records = []
    first_partly = None
    reached = False
    stop = STOP_MAX
    stagnant = 0
    prev_cat = None
    error = None

    for it in range(1, max_iterations + 1):
        steps = executor.execute(plan)
        truth = terminal if it >= k_improve else GarmentCategory.CLOSED
        try:
            cat, conf = estimator.estimate_state(
                image="synthetic://%s/%s" % (condition, plan.label),
                features={"truth": truth.wire},
            )
        except EstimatorError as exc:
            stop = STOP_ESTIMATOR
            error = str(exc)
            break
        obs = observe(truth, arms_sampled, category=cat, confidence=conf)
        records.append(
            IterationRecord(
                index=it,
                steps=steps,
                category=obs.category,
                confidence=obs.confidence,
                arms_forward=obs.arms_forward,
                sleeves_visible=obs.sleeves_visible,
            )
        )
        if first_partly is None and obs.category >= GarmentCategory.PARTLY_OPENED:
            first_partly = it
        if obs.category == GarmentCategory.OPENED:
            reached = True
            stop = STOP_REACHED
            break
        if first_partly is not None:
            if it == first_partly or (prev_cat is not None and obs.category > prev_cat):
                stagnant = 0
            else:
                stagnant += 1
            if stagnant >= 2:
                stop = STOP_STALL
                break
        prev_cat = obs.category

    return EpisodeTrace(
        condition=condition,
        label=plan.label,
        iterations=records,
        stop_reason=stop,
        first_partly=first_partly,
        reached_opened=reached,
        error=error,
    )


def _run_pair(pair_index, condition, plan, response_model, estimator, executor,
              n_episodes, seed, max_iterations):
    opened = partly = arms = 0
    first_sum = 0
    first_n = 0
    for ep in range(n_episodes):
        rng = episode_rng(seed, pair_index, ep)
        trace = run_episode(
            plan, condition, response_model, estimator, executor, rng, max_iterations
        )
        if trace.stop_reason == STOP_ESTIMATOR:
            raise EstimatorError(
                "pair %d (%s / %s), episode %d: %s"
                % (pair_index, condition, plan.label, ep, trace.error)
            )
        final = trace.iterations[-1]
        if final.category == GarmentCategory.OPENED:
            opened += 1
        elif final.category == GarmentCategory.PARTLY_OPENED:
            partly += 1
        if final.arms_forward:
            arms += 1
        if trace.first_partly is not None:
            first_sum += trace.first_partly
            first_n += 1
    return PairResult(
        condition=condition,
        label=plan.label,
        n_episodes=n_episodes,
        opened_count=opened,
        partly_count=partly,
        arms_count=arms,
        first_partly_sum=first_sum,
        first_partly_n=first_n,
    )


@dataclass
class ExperimentConfig:
    registry: str
    tables: list
    runs: list
    n_episodes: int
    seed: int
    max_iterations: int = 5
    dt: float = DEFAULT_DT
    estimator: str = "mock"
    workers: int = 1


def load_config(path):
    base = os.path.dirname(os.path.abspath(path))

    def _resolve(p):
        return p if os.path.isabs(p) else os.path.normpath(os.path.join(base, p))

    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("%s: %s" % (path, exc)) from exc
    if not isinstance(d, dict):
        raise ConfigError("%s: config must be an object" % path)
    try:
        registry = _resolve(str(d["registry"]))
        tables = [_resolve(str(p)) for p in d["tables"]]
        raw_runs = d["runs"]
        n_episodes = int(d["n_episodes"])
        seed = int(d["seed"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("%s: missing or bad field: %s" % (path, exc)) from exc
    if not tables:
        raise ConfigError("%s: at least one table is required" % path)
    if not isinstance(raw_runs, list) or not raw_runs:
        raise ConfigError("%s: runs must be a non-empty list" % path)
    runs = []
    for i, run in enumerate(raw_runs):
        if not isinstance(run, dict) or "condition" not in run or "plan" not in run:
            raise ConfigError("%s: run %d needs condition and plan" % (path, i))
        condition = run["condition"]
        if condition not in CONDITIONS:
            raise ConfigError(
                "%s: run %d condition %r not one of %s"
                % (path, i, condition, ", ".join(CONDITIONS))
            )
        plan = run["plan"]
        if not isinstance(plan, list) or not plan or not all(isinstance(s, str) for s in plan):
            raise ConfigError("%s: run %d plan must be a list of primitive names" % (path, i))
        runs.append((condition, tuple(plan)))
    if n_episodes < 1:
        raise ConfigError("%s: n_episodes must be >= 1" % path)
    if seed < 0:
        raise ConfigError("%s: seed must be >= 0" % path)
    cfg = ExperimentConfig(
        registry=registry,
        tables=tables,
        runs=runs,
        n_episodes=n_episodes,
        seed=seed,
        max_iterations=int(d.get("max_iterations", 5)),
        dt=float(d.get("dt", DEFAULT_DT)),
        estimator=str(d.get("estimator", "mock")),
        workers=int(d.get("workers", 1)),
    )
    if cfg.max_iterations < 1:
        raise ConfigError("%s: max_iterations must be >= 1" % path)
    if cfg.dt <= 0:
        raise ConfigError("%s: dt must be positive" % path)
    if cfg.workers < 1:
        raise ConfigError("%s: workers must be >= 1" % path)
    return cfg


def _load_model_rows(table_paths):
    rows = []
    for p in table_paths:
        rows.extend(read_table_csv(p))
    return calibrate(rows)


def _pair_task(args):
    (registry_root, table_paths, condition, steps, pair_index,
     n_episodes, seed, max_iterations, dt, estimator_spec) = args
    model = _load_model_rows(table_paths)
    registry = load_registry(registry_root)
    executor = TrajectoryExecutor(registry, dt=dt)
    plan = compose(steps, registry)
    model.lookup(condition, plan.label)
    estimator = make_estimator(estimator_spec)
    try:
        return _run_pair(
            pair_index, condition, plan, model, estimator, executor,
            n_episodes, seed, max_iterations,
        )
    finally:
        estimator.close()


def run_batch(cfg):
    """Run every configured (condition, plan) pair; returns a BatchReport."""
    model = _load_model_rows(cfg.tables)
    registry = load_registry(cfg.registry)
    plans = [compose(steps, registry) for _, steps in cfg.runs]
    for (condition, _), plan in zip(cfg.runs, plans):
        model.lookup(condition, plan.label)

    if cfg.workers <= 1:
        executor = TrajectoryExecutor(registry, dt=cfg.dt)
        estimator = make_estimator(cfg.estimator)
        rows = []
        try:
            for pair_index, ((condition, _), plan) in enumerate(zip(cfg.runs, plans)):
                rows.append(
                    _run_pair(
                        pair_index, condition, plan, model, estimator, executor,
                        cfg.n_episodes, cfg.seed, cfg.max_iterations,
                    )
                )
        finally:
            estimator.close()
    else:
        tasks = [
            (
                cfg.registry, tuple(cfg.tables), condition, steps, pair_index,
                cfg.n_episodes, cfg.seed, cfg.max_iterations, cfg.dt, cfg.estimator,
            )
            for pair_index, (condition, steps) in enumerate(cfg.runs)
        ]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_pair_task, tasks))

    return BatchReport(
        seed=cfg.seed,
        n_episodes=cfg.n_episodes,
        max_iterations=cfg.max_iterations,
        estimator=cfg.estimator,
        dt=cfg.dt,
        registry=cfg.registry,
        rows=rows,
    )


# ---------------------------------------------------------------- reports


def report_to_dict(report):
    return {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "seed": report.seed,
        "n_episodes": report.n_episodes,
        "max_iterations": report.max_iterations,
        "estimator": report.estimator,
        "dt": report.dt,
        "registry": report.registry,
        "rows": [
            {
                "condition": r.condition,
                "label": r.label,
                "n_episodes": r.n_episodes,
                "opened_count": r.opened_count,
                "partly_count": r.partly_count,
                "arms_count": r.arms_count,
                "first_partly_sum": r.first_partly_sum,
                "first_partly_n": r.first_partly_n,
                "opened_pct": r.opened_pct,
                "partly_pct": r.partly_pct,
                "arms_fwd_pct": r.arms_fwd_pct,
                "mean_iterations": r.mean_iterations,
            }
            for r in report.rows
        ],
    }


def report_to_json(report):
    return json.dumps(report_to_dict(report), sort_keys=True, separators=(",", ":")) + "\n"


def report_from_dict(d):
    if not isinstance(d, dict) or d.get("format") != REPORT_FORMAT:
        raise ConfigError("not a report file")
    if d.get("version") != REPORT_VERSION:
        raise ConfigError("report version %r unsupported" % d.get("version"))
    rows = [
        PairResult(
            condition=r["condition"],
            label=r["label"],
            n_episodes=int(r["n_episodes"]),
            opened_count=int(r["opened_count"]),
            partly_count=int(r["partly_count"]),
            arms_count=int(r["arms_count"]),
            first_partly_sum=int(r["first_partly_sum"]),
            first_partly_n=int(r["first_partly_n"]),
        )
        for r in d["rows"]
    ]
    return BatchReport(
        seed=int(d["seed"]),
        n_episodes=int(d["n_episodes"]),
        max_iterations=int(d["max_iterations"]),
        estimator=str(d["estimator"]),
        dt=float(d["dt"]),
        registry=str(d["registry"]),
        rows=rows,
    )


def load_report(path):
    try:
        with open(path) as fh:
            return report_from_dict(json.load(fh))
    except json.JSONDecodeError as exc:
        raise ConfigError("%s: %s" % (path, exc)) from exc


def render_text(report):
    head = ("condition", "plan", "opened%", "partly%", "arms_fwd%", "mean_it", "n")
    lines = ["%-12s %-22s %8s %8s %10s %8s %7s" % head]
    for r in report.rows:
        mean = "-" if r.mean_iterations is None else "%.2f" % r.mean_iterations
        lines.append(
            "%-12s %-22s %8.2f %8.2f %10.2f %8s %7d"
            % (r.condition, r.label, r.opened_pct, r.partly_pct, r.arms_fwd_pct, mean, r.n_episodes)
        )
    lines.append(
        "(seed=%d, episodes per pair=%d, max iterations=%d, estimator=%s)"
        % (report.seed, report.n_episodes, report.max_iterations, report.estimator)
    )
    return "\n".join(lines) + "\n"


def render_csv(report):
    lines = ["condition,label,opened_pct,partly_pct,arms_fwd_pct,mean_iterations,n_episodes"]
    for r in report.rows:
        mean = "" if r.mean_iterations is None else "%.2f" % r.mean_iterations
        lines.append(
            "%s,%s,%.2f,%.2f,%.2f,%s,%d"
            % (
                r.condition,
                r.label,
                r.opened_pct,
                r.partly_pct,
                r.arms_fwd_pct,
                mean,
                r.n_episodes,
            )
        )
    return "\n".join(lines) + "\n"


def render_report(report, fmt="text"):
    """Render a batch report as "text", "csv", or canonical "json"."""
    if fmt == "text":
        return render_text(report)
    if fmt == "csv":
        return render_csv(report)
    if fmt == "json":
        return report_to_json(report)
    raise ConfigError("unknown report format %r" % (fmt,))
