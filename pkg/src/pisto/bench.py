"""Benchmark harness: experiment configs, scene generation, seeded runs,
CSV persistence, and aggregation.

All results funnel into a single CSV with a fixed header; iteration rows and
per-run summary rows are distinguished by the ``row_type`` column. Solution
trajectories are persisted as JSON sidecar files referenced from the summary
rows, so downstream tools never need this package's internals.

Non-finite floats are written as ``Infinity`` / ``-Infinity``, which both
``float()`` and JavaScript's ``Number()`` parse.
"""
from __future__ import annotations

import csv
import json
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from statistics import median

import numpy as np

from . import dynamics, scenes
from .errors import SceneGenerationError
from .optimizer import OptimizerConfig, OptimizeResult, Problem, ProximalSchedule, optimize
from .prior import CONTROL, PLANNING, make_prior

CSV_COLUMNS = [
    "row_type",
    "task",
    "method",
    "seed",
    "iteration",
    "best_cost",
    "mean_cost",
    "sigma_k",
    "eta_k",
    "update_norm",
    "success",
    "path_length",
    "clearance",
    "final_cost",
    "wall_time_ms",
    "solution_file",
]

# Sampling-scale targets used when sigma_init/sigma_final are "auto": the
# largest per-node perturbation standard deviation starts at the explore
# value and anneals to the exploit value. Planning values are fractions of
# the workspace extent; control values are fractions of the control range.
PLANNING_EXPLORE_STD = 0.20
PLANNING_EXPLOIT_STD = 0.01
CONTROL_EXPLORE_FRAC = 0.25
CONTROL_EXPLOIT_FRAC = 0.02
CONTROL_RIDGE_FRAC = 1e-3


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark specification: a task, one or more methods, seeds, and
    every optimizer knob. Mirrors the JSON config schema field for field
    (the JSON key for ``lam`` is ``lambda``)."""

    task: str
    seeds: tuple[int, ...]
    methods: tuple[str, ...] = ("pisto",)
    out: str = "results.csv"
    m_samples: int = 64
    k_max: int = 100
    sigma_init: float | str = "auto"
    sigma_final: float | str = "auto"
    eta_init: float = 0.5
    eta_final: float = 20.0
    tau: float = 1.0
    elite_fraction: float = 0.5
    beta: float = 0.3
    lam: float = 1.0
    lambda_mppi: float = 0.1
    smoothing: str = "momentum"
    scale_regularizer: bool = False
    n_free: int = 30
    cost: str = "sdf"  # planning potential: "sdf" | "indicator"
    # None resolves per task type: 0 for planning, CONTROL_RIDGE_FRAC * tr(R)/n
    # for control (flattens the lowest prior modes so exploration can carry
    # mid-frequency oscillations, e.g. energy pumping)
    ridge: float | None = None
    model_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("seed list must be non-empty")
        if self.cost not in ("sdf", "indicator"):
            raise ValueError(f"cost must be 'sdf' or 'indicator', got {self.cost!r}")
        for m in self.methods:
            if m not in ("pisto", "stomp", "cem", "mppi"):
                raise ValueError(f"unknown method {m!r}")


_CONFIG_KEYS = {
    "task", "method", "seeds", "out", "m_samples", "k_max", "sigma_init",
    "sigma_final", "eta_init", "eta_final", "tau", "elite_fraction", "beta",
    "lambda", "lambda_mppi", "smoothing", "scale_regularizer", "n_free",
    "cost", "ridge", "model_overrides",
}


def config_from_dict(data: dict) -> ExperimentConfig:
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    if "task" not in data or "seeds" not in data:
        raise ValueError("config requires at least 'task' and 'seeds'")
    method = data.get("method", "pisto")
    methods = tuple([method] if isinstance(method, str) else method)
    kwargs = {k: v for k, v in data.items() if k not in ("method", "lambda", "seeds")}
    if "lambda" in data:
        kwargs["lam"] = data["lambda"]
    if "model_overrides" in kwargs:
        kwargs["model_overrides"] = dict(kwargs["model_overrides"])
    return ExperimentConfig(methods=methods, seeds=tuple(data["seeds"]), **kwargs)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        cfg = config_from_dict(json.load(fh))
    if not _is_builtin_task(cfg.task) and not Path(cfg.task).exists():
        raise ValueError(f"task {cfg.task!r} is not a builtin model or an existing path")
    return cfg


def _is_builtin_task(task: str) -> bool:
    return task in ("point_mass_2d", "pendulum_swingup", "cartpole_balance")


# -- problem assembly ---------------------------------------------------------


@dataclass
class PlanningTask:
    scene: scenes.Scene
    scene_path: str
    line: np.ndarray  # straight-line interior nodes (n_free, 2)
    problem: Problem

    def full_path(self, y: np.ndarray) -> np.ndarray:
        nodes = self.line + y
        start = np.asarray(self.scene.start)[None]
        goal = np.asarray(self.scene.goal)[None]
        return np.vstack([start, nodes, goal])


@dataclass
class ControlTask:
    model: dynamics.DynamicsModel
    problem: Problem


def _auto_sigma(prior, explore_std: float, exploit_std: float):
    """Sigma endpoints giving the requested worst-node perturbation stds."""
    unit_var = float(np.max(np.sum(prior.noise_chol**2, axis=1)))
    return explore_std**2 / unit_var, exploit_std**2 / unit_var


def _resolve_schedule(cfg: ExperimentConfig, prior, explore_std, exploit_std):
    sigma_init, sigma_final = cfg.sigma_init, cfg.sigma_final
    auto_init, auto_final = _auto_sigma(prior, explore_std, exploit_std)
    if sigma_init == "auto":
        sigma_init = auto_init
    if sigma_final == "auto":
        sigma_final = auto_final
    return ProximalSchedule(
        eta_init=cfg.eta_init,
        eta_final=cfg.eta_final,
        tau=cfg.tau,
        sigma_init=float(sigma_init),
        sigma_final=float(sigma_final),
        k_max=cfg.k_max,
    )


def build_planning_task(cfg: ExperimentConfig, scene_path: str) -> tuple[PlanningTask, ProximalSchedule]:
    """Plan in deviation coordinates around the straight start-goal line.

    The straight line has zero acceleration, so deviations carry the exact
    N(0, R^{-1}) smoothness prior with no endpoint offset, and the initial
    mean (zero deviation) is the straight-line path.
    """
    scene = scenes.load_scene(scene_path)
    ridge = 0.0 if cfg.ridge is None else cfg.ridge
    prior = make_prior(cfg.n_free, dt=1.0, mode=PLANNING, ridge=ridge)
    start = np.asarray(scene.start)
    goal = np.asarray(scene.goal)
    alphas = np.arange(1, cfg.n_free + 1) / (cfg.n_free + 1)
    line = start[None] + alphas[:, None] * (goal - start)[None]
    ends = np.vstack([start[None], goal[None]])
    lo = np.asarray(scene.bounds_min)
    hi = np.asarray(scene.bounds_max)

    def bounds_term(paths):
        # hinge on the margin to the workspace boundary (negative outside),
        # same weight and margin as the obstacle term; keeps success's
        # in-bounds requirement inside the optimized objective
        margin = np.minimum(paths - lo, hi - paths).min(axis=-1)
        h = np.maximum(scene.delta - margin, 0.0)
        return scene.sigma_obs * np.sum(h * h, axis=-1)

    if cfg.cost == "sdf":
        def cost_fn(batch):
            paths = _with_endpoints(line + batch, ends)
            return scenes.potential_sdf(paths, scene) + bounds_term(paths)
    else:
        def cost_fn(batch):
            paths = _with_endpoints(line + batch, ends)
            return scenes.potential_indicator(paths, scene) + scene.w_obs * np.sum(
                np.any((paths < lo) | (paths > hi), axis=-1), axis=-1
            )

    problem = Problem(cost_fn=cost_fn, prior=prior, y0=np.zeros((cfg.n_free, 2)))
    schedule = _resolve_schedule(
        cfg,
        prior,
        PLANNING_EXPLORE_STD * _extent(scene),
        PLANNING_EXPLOIT_STD * _extent(scene),
    )
    return PlanningTask(scene=scene, scene_path=scene_path, line=line, problem=problem), schedule


def _extent(scene: scenes.Scene) -> float:
    lo = np.asarray(scene.bounds_min)
    hi = np.asarray(scene.bounds_max)
    return float(np.min(hi - lo))


def _with_endpoints(batch: np.ndarray, ends: np.ndarray) -> np.ndarray:
    b, _, _ = batch.shape
    start = np.broadcast_to(ends[0], (b, 1, 2))
    goal = np.broadcast_to(ends[1], (b, 1, 2))
    return np.concatenate([start, batch, goal], axis=1)


def build_control_task(cfg: ExperimentConfig) -> tuple[ControlTask, ProximalSchedule]:
    """Optimize a control sequence under the zero-padded smoothness prior.

    Sampled candidates are clamped to the admissible set before rollout; the
    iterated mean stays unclamped and the returned solution is clamped.
    """
    model = dynamics.make_builtin(cfg.task, **cfg.model_overrides)
    if cfg.ridge is None:
        base = make_prior(model.horizon, dt=1.0, mode=CONTROL)
        ridge = CONTROL_RIDGE_FRAC * float(np.trace(base.r_mat)) / model.horizon
    else:
        ridge = cfg.ridge
    prior = make_prior(model.horizon, dt=1.0, mode=CONTROL, ridge=ridge)

    def cost_fn(batch):
        costs, ok = dynamics.batch_rollout_costs(model, model.x0, batch)
        return dynamics.apply_divergence_penalty(costs, ok)

    def project(batch):
        return dynamics.clamp_controls(batch, model)

    problem = Problem(
        cost_fn=cost_fn,
        prior=prior,
        y0=np.zeros((model.horizon, model.d_u)),
        project=project,
    )
    half_range = float(np.min(model.u_max - model.u_min)) / 2.0
    schedule = _resolve_schedule(
        cfg,
        prior,
        CONTROL_EXPLORE_FRAC * 2 * half_range,
        CONTROL_EXPLOIT_FRAC * 2 * half_range,
    )
    return ControlTask(model=model, problem=problem), schedule


def optimizer_config_for(
    cfg: ExperimentConfig, method: str, schedule: ProximalSchedule, seed: int
) -> OptimizerConfig:
    """Per-method optimizer settings at a matched sampling budget.

    All methods share M, K_max, and the sigma schedule; only the update rule
    and its own knobs differ. STOMP is the plain exponentiated-cost update
    (no elites, no momentum); CEM uses the elite fraction; MPPI its
    temperature.
    """
    common = dict(schedule=schedule, m_samples=cfg.m_samples, seed=seed, method=method)
    if method == "pisto":
        return OptimizerConfig(
            elite_fraction=cfg.elite_fraction,
            beta=cfg.beta,
            lam=cfg.lam,
            smoothing=cfg.smoothing,
            scale_regularizer=cfg.scale_regularizer,
            adaptive_temperature=True,
            **common,
        )
    if method == "stomp":
        return OptimizerConfig(**common)
    if method == "cem":
        return OptimizerConfig(elite_fraction=cfg.elite_fraction, **common)
    return OptimizerConfig(
        lambda_mppi=cfg.lambda_mppi, adaptive_temperature=True, **common
    )


# -- scene generation ---------------------------------------------------------

SCENE_DELTA = 0.04
SCENE_W_OBS = 100.0
SCENE_SIGMA_OBS = 100.0
_GEN_RETRIES = 400


def _connected(scene: scenes.Scene, clearance: float, n_grid: int = 81) -> bool:
    """4-connected grid reachability start -> goal through cells with at
    least ``clearance`` of signed distance."""
    lo = np.asarray(scene.bounds_min)
    hi = np.asarray(scene.bounds_max)
    xs = np.linspace(lo[0], hi[0], n_grid)
    ys = np.linspace(lo[1], hi[1], n_grid)
    grid = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1)
    free = scenes.sdf_batch(scene, grid.reshape(-1, 2)).reshape(n_grid, n_grid) > clearance

    def cell(p):
        ij = np.clip(
            np.round((np.asarray(p) - lo) / (hi - lo) * (n_grid - 1)).astype(int),
            0,
            n_grid - 1,
        )
        return int(ij[0]), int(ij[1])

    s, g = cell(scene.start), cell(scene.goal)
    if not (free[s] and free[g]):
        return False
    seen = np.zeros_like(free)
    seen[s] = True
    queue = deque([s])
    while queue:
        i, j = queue.popleft()
        if (i, j) == g:
            return True
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ni, nj = i + di, j + dj
            if 0 <= ni < n_grid and 0 <= nj < n_grid and free[ni, nj] and not seen[ni, nj]:
                seen[ni, nj] = True
                queue.append((ni, nj))
    return False


def _line_min_sdf(scene: scenes.Scene, n_pts: int = 200) -> float:
    a = np.asarray(scene.start)
    b = np.asarray(scene.goal)
    ts = np.linspace(0.0, 1.0, n_pts)[:, None]
    return float(np.min(scenes.sdf_batch(scene, a[None] + ts * (b - a)[None])))


def random_scene(rng: np.random.Generator, difficulty: int) -> scenes.Scene:
    """One rejection-sampled scene on the unit square.

    Difficulty scales the obstacle count. Accepted scenes always have
    collision-free endpoints and a corridor of clearance > delta connecting
    them; at difficulty >= 2 the straight start-goal line must additionally
    be in collision, so planners have to deform the path.
    """
    n_obs = 3 * difficulty
    for _ in range(_GEN_RETRIES):
        obstacles = []
        for _ in range(n_obs):
            if rng.random() < 0.5:
                center = rng.uniform([0.18, 0.08], [0.82, 0.92])
                obstacles.append(
                    scenes.Circle(center=tuple(center), radius=float(rng.uniform(0.06, 0.14)))
                )
            else:
                center = rng.uniform([0.18, 0.08], [0.82, 0.92])
                half = rng.uniform(0.05, 0.12, size=2)
                obstacles.append(
                    scenes.Box(
                        min_corner=tuple(center - half), max_corner=tuple(center + half)
                    )
                )
        start = rng.uniform([0.02, 0.1], [0.1, 0.9])
        goal = rng.uniform([0.9, 0.1], [0.98, 0.9])
        try:
            scene = scenes.make_scene(
                bounds_min=(0.0, 0.0),
                bounds_max=(1.0, 1.0),
                start=start,
                goal=goal,
                delta=SCENE_DELTA,
                w_obs=SCENE_W_OBS,
                sigma_obs=SCENE_SIGMA_OBS,
                obstacles=obstacles,
            )
        except ValueError:
            continue
        if min(scenes.sdf_eval(scene, start), scenes.sdf_eval(scene, goal)) < SCENE_DELTA:
            continue
        if not _connected(scene, clearance=SCENE_DELTA + 0.01):
            continue
        if difficulty >= 2 and _line_min_sdf(scene) > 0.0:
            continue
        return scene
    raise SceneGenerationError(
        f"no feasible scene after {_GEN_RETRIES} attempts (difficulty={difficulty})"
    )


def generate_scenes(seed: int, count: int, difficulty: int, out_dir) -> list[str]:
    """Write ``count`` deterministic scene files; returns their paths."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if difficulty < 0:
        raise ValueError(f"difficulty must be >= 0, got {difficulty}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    for i in range(count):
        scene = random_scene(rng, difficulty)
        path = out / f"scene_{i:03d}.json"
        scenes.save_scene(scene, path)
        paths.append(str(path))
    return paths


# -- running experiments -------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if np.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return repr(v)


def write_rows(path, rows: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in CSV_COLUMNS})


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _expand_tasks(task: str) -> list[str]:
    if _is_builtin_task(task):
        return [task]
    p = Path(task)
    if p.is_dir():
        found = sorted(str(f) for f in p.glob("*.json"))
        if not found:
            raise ValueError(f"no scene files in directory {task!r}")
        return found
    if not p.exists():
        raise ValueError(f"task {task!r} not found")
    return [str(p)]


def _solution_path(out_csv: Path, task: str, method: str, seed: int) -> Path:
    stem = Path(task).stem if not _is_builtin_task(task) else task
    return out_csv.parent / "solutions" / f"{stem}__{method}__{seed}.json"


def _run_one(cfg: ExperimentConfig, task: str, method: str, seed: int, out_csv: Path):
    """One (task, method, seed) run: returns (iteration rows, summary row)."""
    planning = not _is_builtin_task(task)
    if planning:
        task_obj, schedule = build_planning_task(cfg, task)
    else:
        task_obj, schedule = build_control_task(cfg)
    ocfg = optimizer_config_for(cfg, method, schedule, seed)

    t0 = time.perf_counter()
    result: OptimizeResult = optimize(task_obj.problem, ocfg)
    wall_ms = (time.perf_counter() - t0) * 1e3

    sol_path = _solution_path(out_csv, task, method, seed)
    sol_path.parent.mkdir(parents=True, exist_ok=True)
    base = {"task": task, "method": method, "seed": seed}

    if planning:
        path_nodes = task_obj.full_path(result.best_y)
        m = scenes.metrics(path_nodes, task_obj.scene)
        success, length, clearance = m.success, m.path_length, m.clearance
        solution = {
            **base,
            "kind": "path",
            "scene": task_obj.scene_path,
            "nodes": path_nodes.tolist(),
        }
    else:
        rr = dynamics.rollout(task_obj.model, task_obj.model.x0, result.best_y)
        success, length, clearance = rr.ok, None, None
        solution = {
            **base,
            "kind": "controls",
            "model": task_obj.model.name,
            "controls": result.best_y.tolist(),
            "states": rr.states.tolist(),
        }
    with open(sol_path, "w") as fh:
        json.dump(solution, fh, indent=2, sort_keys=True)
        fh.write("\n")

    iter_rows = [
        {
            "row_type": "iteration",
            **base,
            "iteration": rec.iteration,
            "best_cost": rec.best_cost,
            "mean_cost": rec.mean_cost,
            "sigma_k": rec.sigma_k,
            "eta_k": rec.eta_k,
            "update_norm": rec.update_norm,
        }
        for rec in result.history
    ]
    summary = {
        "row_type": "summary",
        **base,
        "success": success,
        "path_length": length,
        "clearance": clearance,
        "final_cost": result.best_cost,
        "wall_time_ms": wall_ms,
        "solution_file": str(sol_path),
    }
    return iter_rows, summary


def run_experiment(cfg: ExperimentConfig, echo=None) -> list[dict]:
    """Run every (task, method, seed) combination and write the CSV.

    Returns the row dicts. Raises on the first aborted run; CSV rows for
    completed runs are still written.
    """
    out_csv = Path(cfg.out)
    tasks = _expand_tasks(cfg.task)
    rows: list[dict] = []
    try:
        for task in tasks:
            for method in cfg.methods:
                for seed in cfg.seeds:
                    iter_rows, summary = _run_one(cfg, task, method, seed, out_csv)
                    rows.extend(iter_rows)
                    rows.append(summary)
                    if echo:
                        echo(
                            f"{task} {method} seed={seed}: "
                            f"success={summary['success']} "
                            f"final_cost={summary['final_cost']:.4g} "
                            f"({summary['wall_time_ms']:.0f} ms)"
                        )
    finally:
        write_rows(out_csv, rows)
    return rows


# -- aggregation ----------------------------------------------------------------


def _as_bool(v) -> bool:
    return v is True or v == "true"


def _as_float(v) -> float:
    if v is None or v == "":
        return float("nan")
    return float(v)


def summarize_rows(rows: list[dict]) -> dict[str, dict]:
    """Per-method aggregates over summary rows.

    Accepts either raw row dicts (as returned by ``run_experiment``) or rows
    parsed back from the CSV.
    """
    by_method: dict[str, list[dict]] = {}
    for row in rows:
        if row["row_type"] == "summary":
            by_method.setdefault(row["method"], []).append(row)
    out = {}
    for method, group in sorted(by_method.items()):
        succ = [_as_bool(r["success"]) for r in group]
        lengths = [
            _as_float(r["path_length"])
            for r in group
            if r["path_length"] not in (None, "")
        ]
        clears = [
            _as_float(r["clearance"])
            for r in group
            if r["clearance"] not in (None, "")
        ]
        walls = [_as_float(r["wall_time_ms"]) for r in group]
        finals = [_as_float(r["final_cost"]) for r in group]
        out[method] = {
            "n_runs": len(group),
            "success_rate": sum(succ) / len(succ),
            "median_path_length": median(lengths) if lengths else None,
            "median_clearance": median(clears) if clears else None,
            "median_wall_time_ms": median(walls),
            "median_final_cost": median(finals),
        }
    return out


def summarize(csv_path, echo=print) -> dict[str, dict]:
    """Aggregate a results CSV and print one line per method."""
    stats = summarize_rows(read_rows(csv_path))
    for method, s in stats.items():
        parts = [
            f"{method}: n={s['n_runs']}",
            f"success={100.0 * s['success_rate']:.1f}%",
        ]
        if s["median_path_length"] is not None:
            parts.append(f"median_path_length={s['median_path_length']:.4f}")
        if s["median_clearance"] is not None:
            parts.append(f"median_clearance={s['median_clearance']:.4f}")
        parts.append(f"median_final_cost={s['median_final_cost']:.4g}")
        parts.append(f"median_wall_time_ms={s['median_wall_time_ms']:.1f}")
        echo("  ".join(parts))
    return stats
