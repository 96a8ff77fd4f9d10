"""Planar scenes: obstacle primitives, signed distances, and collision costs.

A scene is a rectangle-bounded 2D workspace with circle and axis-aligned box
obstacles, a start and a goal. Two state potentials are provided: a smooth
hinge penalty on signed distance (active within a safety margin ``delta``)
and a discontinuous per-node collision indicator. Both are pure functions of
the node positions, so batches of candidate paths can be scored concurrently.

The robot is a planar point: the workspace check-point of a node is the node
itself. ``workspace_map`` arguments exist so an articulated model (mapping a
configuration to several check-points) can reuse the same cost contracts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np

from .backend import kernels

_EMPTY_CIRCLES = np.zeros((0, 3))
_EMPTY_BOXES = np.zeros((0, 4))


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class Box:
    min_corner: tuple[float, float]
    max_corner: tuple[float, float]


Obstacle = Union[Circle, Box]


@dataclass(frozen=True)
class Scene:
    """Immutable workspace description; safe for concurrent queries."""

    bounds_min: tuple[float, float]
    bounds_max: tuple[float, float]
    start: tuple[float, float]
    goal: tuple[float, float]
    delta: float  # hinge safety margin (m)
    w_obs: float  # indicator penalty weight per colliding node
    sigma_obs: float  # hinge weight per node
    obstacles: tuple[Obstacle, ...]

    @cached_property
    def circle_array(self) -> np.ndarray:
        rows = [(*o.center, o.radius) for o in self.obstacles if isinstance(o, Circle)]
        return np.array(rows, dtype=np.float64) if rows else _EMPTY_CIRCLES

    @cached_property
    def box_array(self) -> np.ndarray:
        rows = [
            (*o.min_corner, *o.max_corner)
            for o in self.obstacles
            if isinstance(o, Box)
        ]
        return np.array(rows, dtype=np.float64) if rows else _EMPTY_BOXES


@dataclass(frozen=True)
class PathMetrics:
    path_length: float
    clearance: float
    success: bool


def identity_map(config: np.ndarray) -> np.ndarray:
    """Point-robot forward map: one check-point, the configuration itself."""
    return np.asarray(config, dtype=np.float64).reshape(1, 2)


def _validate(scene: Scene) -> Scene:
    lo, hi = np.asarray(scene.bounds_min), np.asarray(scene.bounds_max)
    if not np.all(lo < hi):
        raise ValueError(f"bounds min {scene.bounds_min} must be < max {scene.bounds_max}")
    if scene.delta < 0:
        raise ValueError(f"delta must be >= 0, got {scene.delta}")
    for obs in scene.obstacles:
        if isinstance(obs, Circle):
            if obs.radius <= 0:
                raise ValueError(f"circle radius must be > 0, got {obs.radius}")
        else:
            if not all(a < b for a, b in zip(obs.min_corner, obs.max_corner)):
                raise ValueError(
                    f"box min {obs.min_corner} must be < max {obs.max_corner}"
                )
    for label, p in (("start", scene.start), ("goal", scene.goal)):
        p = np.asarray(p, dtype=np.float64)
        if not (np.all(p >= lo) and np.all(p <= hi)):
            raise ValueError(f"{label} {tuple(p)} lies outside workspace bounds")
        if sdf_eval(scene, p) <= 0:
            raise ValueError(f"{label} {tuple(p)} is in collision")
    return scene


def make_scene(
    bounds_min,
    bounds_max,
    start,
    goal,
    delta: float,
    w_obs: float,
    sigma_obs: float,
    obstacles,
) -> Scene:
    """Construct and validate a Scene."""
    return _validate(
        Scene(
            bounds_min=tuple(float(v) for v in bounds_min),
            bounds_max=tuple(float(v) for v in bounds_max),
            start=tuple(float(v) for v in start),
            goal=tuple(float(v) for v in goal),
            delta=float(delta),
            w_obs=float(w_obs),
            sigma_obs=float(sigma_obs),
            obstacles=tuple(obstacles),
        )
    )


# -- signed distances and potentials ---------------------------------------


def sdf_eval(scene: Scene, point) -> float:
    """Exact signed distance from ``point`` to the nearest obstacle surface.

    Positive outside obstacles, negative inside; obstacles combine by
    minimum. +inf when the scene has no obstacles.
    """
    pt = np.asarray(point, dtype=np.float64).reshape(1, 2)
    return float(kernels.sdf_points(pt, scene.circle_array, scene.box_array)[0])


def sdf_batch(scene: Scene, points) -> np.ndarray:
    """Vectorized ``sdf_eval`` over points of shape (..., 2)."""
    return kernels.sdf_points(
        np.ascontiguousarray(points, dtype=np.float64),
        scene.circle_array,
        scene.box_array,
    )


def hinge(d: float, delta: float):
    """Margin penalty max(delta - d, 0); accepts scalars or arrays."""
    if np.any(np.asarray(delta) < 0):
        raise ValueError("delta must be >= 0")
    return np.maximum(delta - d, 0.0)


def _as_path_batch(nodes) -> tuple[np.ndarray, bool]:
    arr = np.ascontiguousarray(nodes, dtype=np.float64)
    if arr.ndim == 2:
        return arr[None], True
    if arr.ndim == 3:
        return arr, False
    raise ValueError(f"expected (N, 2) or (B, N, 2) nodes, got shape {arr.shape}")


def _mapped_points(nodes: np.ndarray, workspace_map) -> np.ndarray:
    pts = [workspace_map(cfg) for cfg in nodes]
    return np.concatenate(pts, axis=0)


def potential_sdf(nodes, scene: Scene, workspace_map: Optional[Callable] = None):
    """Hinge-on-SDF state potential, summed over nodes.

    sum_t sigma_obs * max(delta - sdf(F(node_t)), 0)^2. Accepts one path
    (N, 2) -> float or a batch (B, N, 2) -> (B,).
    """
    batch, single = _as_path_batch(nodes)
    if workspace_map is not None:
        batch = np.stack([_mapped_points(path, workspace_map) for path in batch])
    hinge_sq, _, _ = kernels.scene_stats(
        batch, scene.circle_array, scene.box_array, scene.delta
    )
    out = scene.sigma_obs * hinge_sq
    return float(out[0]) if single else out


def potential_indicator(nodes, scene: Scene, workspace_map: Optional[Callable] = None):
    """Discontinuous collision-count potential.

    sum_t w_obs * 1{sdf(F(node_t)) <= 0}; a node exactly on an obstacle
    boundary counts as colliding. Same shapes as ``potential_sdf``.
    """
    batch, single = _as_path_batch(nodes)
    if workspace_map is not None:
        batch = np.stack([_mapped_points(path, workspace_map) for path in batch])
    _, n_coll, _ = kernels.scene_stats(
        batch, scene.circle_array, scene.box_array, scene.delta
    )
    out = scene.w_obs * n_coll.astype(np.float64)
    return float(out[0]) if single else out


def metrics(nodes, scene: Scene) -> PathMetrics:
    """Path length, worst-case clearance, and the success flag.

    Success requires strictly positive clearance (a node exactly on an
    obstacle boundary fails) and every node inside workspace bounds.
    """
    path = np.asarray(nodes, dtype=np.float64)
    if path.ndim != 2 or path.shape[0] < 2:
        raise ValueError("metrics needs at least 2 nodes of shape (N, 2)")
    seg = np.diff(path, axis=0)
    length = float(np.sum(np.hypot(seg[:, 0], seg[:, 1])))
    clearance = float(np.min(sdf_batch(scene, path)))
    lo, hi = np.asarray(scene.bounds_min), np.asarray(scene.bounds_max)
    in_bounds = bool(np.all(path >= lo) and np.all(path <= hi))
    return PathMetrics(
        path_length=length,
        clearance=clearance,
        success=bool(clearance > 0.0 and in_bounds),
    )


# -- serialization -----------------------------------------------------------

_SCENE_FIELDS = {"bounds", "start", "goal", "delta", "w_obs", "sigma_obs", "obstacles"}


def scene_from_dict(data: dict) -> Scene:
    """Parse the scene-file schema; unknown fields are rejected."""
    unknown = set(data) - _SCENE_FIELDS
    if unknown:
        raise ValueError(f"unknown scene fields: {sorted(unknown)}")
    missing = _SCENE_FIELDS - set(data)
    if missing:
        raise ValueError(f"missing scene fields: {sorted(missing)}")
    bounds = data["bounds"]
    if set(bounds) != {"min", "max"}:
        raise ValueError("bounds must have exactly the fields 'min' and 'max'")
    obstacles = []
    for i, od in enumerate(data["obstacles"]):
        kind = od.get("type")
        if kind == "circle":
            if set(od) != {"type", "center", "radius"}:
                raise ValueError(f"obstacle {i}: circle fields must be type/center/radius")
            obstacles.append(Circle(center=tuple(od["center"]), radius=float(od["radius"])))
        elif kind == "box":
            if set(od) != {"type", "min", "max"}:
                raise ValueError(f"obstacle {i}: box fields must be type/min/max")
            obstacles.append(Box(min_corner=tuple(od["min"]), max_corner=tuple(od["max"])))
        else:
            raise ValueError(f"obstacle {i}: unknown type {kind!r}")
    return make_scene(
        bounds_min=bounds["min"],
        bounds_max=bounds["max"],
        start=data["start"],
        goal=data["goal"],
        delta=data["delta"],
        w_obs=data["w_obs"],
        sigma_obs=data["sigma_obs"],
        obstacles=obstacles,
    )


def scene_to_dict(scene: Scene) -> dict:
    obstacles = []
    for o in scene.obstacles:
        if isinstance(o, Circle):
            obstacles.append(
                {"type": "circle", "center": list(o.center), "radius": o.radius}
            )
        else:
            obstacles.append(
                {"type": "box", "min": list(o.min_corner), "max": list(o.max_corner)}
            )
    return {
        "bounds": {"min": list(scene.bounds_min), "max": list(scene.bounds_max)},
        "start": list(scene.start),
        "goal": list(scene.goal),
        "delta": scene.delta,
        "w_obs": scene.w_obs,
        "sigma_obs": scene.sigma_obs,
        "obstacles": obstacles,
    }


def load_scene(path) -> Scene:
    with open(path) as fh:
        return scene_from_dict(json.load(fh))


def save_scene(scene: Scene, path) -> None:
    with open(path, "w") as fh:
        json.dump(scene_to_dict(scene), fh, indent=2, sort_keys=True)
        fh.write("\n")
