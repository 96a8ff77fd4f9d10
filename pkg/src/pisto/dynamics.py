"""Control-space tasks: one-step dynamics, rollouts, and rollout costs.

A model turns a control sequence U (T, d_u) into a state trajectory by
recursive application of its one-step map, accumulating a stage cost at each
step. Three built-in models are provided (2D double integrator, torque-limited
pendulum swing-up, cart-pole balance), all integrated with semi-implicit
Euler: velocities update first, then positions with the new velocities.

Built-in models dispatch to the kernel backend for batched cost evaluation;
models with custom step/stage-cost callables run through the generic NumPy
path. Rollouts are pure: no shared mutable state, so batches may be evaluated
concurrently.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .backend import kernels

DIVERGENCE_PENALTY_FACTOR = 10.0
# Used when every sample in a batch diverged and no finite cost exists.
DIVERGENCE_FALLBACK_COST = 1e12


@dataclass(frozen=True)
class DynamicsModel:
    """Immutable model description.

    ``step`` and ``stage_cost`` operate on batched arrays: step(x, u) maps
    (B, d_x), (B, d_u) -> (B, d_x); stage_cost(x, u) -> (B,). ``params`` is
    the flat coefficient vector consumed by the kernel backend; ``kernel`` is
    the backend dispatch key (None for custom models).
    """

    name: str
    d_x: int
    d_u: int
    u_min: np.ndarray
    u_max: np.ndarray
    dt: float
    horizon: int
    x0: np.ndarray
    step: Callable[[np.ndarray, np.ndarray], np.ndarray]
    stage_cost: Callable[[np.ndarray, np.ndarray], np.ndarray]
    params: Optional[np.ndarray] = None
    kernel: Optional[str] = None


@dataclass(frozen=True)
class RolloutResult:
    states: np.ndarray  # (T+1, d_x)
    per_step_cost: np.ndarray  # (T,)
    total: float
    ok: bool  # False if any state went non-finite


def clamp_controls(u, model: DynamicsModel) -> np.ndarray:
    """Componentwise clamp to the admissible set [u_min, u_max].

    Accepts (T, d_u) or a batch (..., T, d_u).
    """
    u = np.asarray(u, dtype=np.float64)
    if u.shape[-1] != model.d_u:
        raise ValueError(f"controls have {u.shape[-1]} dims, model has {model.d_u}")
    return np.clip(u, model.u_min, model.u_max)


def rollout(model: DynamicsModel, x0, u) -> RolloutResult:
    """Roll a single control sequence through the dynamics.

    ``u`` must already satisfy the control bounds (apply ``clamp_controls``
    first). A non-finite state marks the result failed; the caller decides
    the penalty (see ``apply_divergence_penalty``).
    """
    x0 = np.asarray(x0, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2 or u.shape[1] != model.d_u:
        raise ValueError(f"expected controls (T, {model.d_u}), got {u.shape}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial state must be finite")
    if model.kernel is not None:
        full = getattr(kernels, f"rollout_full_{model.kernel}")
        states, per_step, ok = full(u, x0, model.params)
    else:
        t_steps = u.shape[0]
        states = np.empty((t_steps + 1, model.d_x))
        per_step = np.empty(t_steps)
        states[0] = x0
        for t in range(t_steps):
            xt = states[t][None]
            ut = u[t][None]
            per_step[t] = model.stage_cost(xt, ut)[0]
            states[t + 1] = model.step(xt, ut)[0]
        ok = bool(np.all(np.isfinite(states)))
    return RolloutResult(
        states=states,
        per_step_cost=per_step,
        total=float(np.sum(per_step)),
        ok=ok,
    )


def batch_rollout_costs(model: DynamicsModel, x0, u_batch):
    """Total rollout cost for each control sequence in a (B, T, d_u) batch.

    Returns (costs, ok); costs are NaN where ok is False.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    u_batch = np.ascontiguousarray(u_batch, dtype=np.float64)
    if model.kernel is not None:
        fn = getattr(kernels, f"rollout_costs_{model.kernel}")
        return fn(u_batch, x0, model.params)
    b, t_steps, _ = u_batch.shape
    x = np.tile(x0, (b, 1))
    costs = np.zeros(b)
    ok = np.ones(b, dtype=bool)
    for t in range(t_steps):
        ut = u_batch[:, t, :]
        costs += model.stage_cost(x, ut)
        x = model.step(x, ut)
        ok &= np.all(np.isfinite(x), axis=-1)
    costs[~ok] = np.nan
    return costs, ok


def apply_divergence_penalty(costs: np.ndarray, ok: np.ndarray) -> np.ndarray:
    """Replace diverged-sample costs so importance weights stay defined.

    Failed rollouts get 10x the worst finite cost in the batch (or a large
    constant if nothing finite remains).
    """
    if np.all(ok):
        return costs
    out = np.array(costs, copy=True)
    finite = costs[ok]
    penalty = (
        DIVERGENCE_PENALTY_FACTOR * float(np.max(finite))
        if finite.size
        else DIVERGENCE_FALLBACK_COST
    )
    out[~ok] = penalty
    return out


# -- built-in models ---------------------------------------------------------

# Coefficient fixtures; none of these are calibrated against any external
# benchmark suite and all are overridable per run.
POINT_MASS_DEFAULTS = dict(
    dt=0.1, horizon=40, u_lim=2.0, goal=(1.0, 0.5), w_goal=1.0, w_u=0.01
)
PENDULUM_DEFAULTS = dict(
    dt=0.1, horizon=60, u_lim=2.5, g=9.81, m=1.0, length=1.0,
    w_up=1.0, w_om=0.1, w_u=0.01,
)
CARTPOLE_DEFAULTS = dict(
    dt=0.05, horizon=60, u_lim=10.0, g=9.81, m_cart=1.0, m_pole=0.1,
    length=0.5, w_th=10.0, w_x=1.0, w_u=0.01, theta0=0.2,
)


def make_point_mass(**overrides) -> DynamicsModel:
    """2D double integrator driving toward a goal position.

    State (px, py, vx, vy), control (fx, fy). Stage cost: squared distance
    to goal plus a control penalty.
    """
    c = {**POINT_MASS_DEFAULTS, **overrides}
    dt, (gx, gy), w_goal, w_u = c["dt"], c["goal"], c["w_goal"], c["w_u"]
    params = np.array([dt, gx, gy, w_goal, w_u])

    def step(x, u):
        v = x[:, 2:] + u * dt
        return np.concatenate([x[:, :2] + v * dt, v], axis=1)

    def stage_cost(x, u):
        dxg = x[:, 0] - gx
        dyg = x[:, 1] - gy
        return w_goal * (dxg * dxg + dyg * dyg) + w_u * np.sum(u * u, axis=1)

    return DynamicsModel(
        name="point_mass_2d",
        d_x=4,
        d_u=2,
        u_min=np.array([-c["u_lim"], -c["u_lim"]]),
        u_max=np.array([c["u_lim"], c["u_lim"]]),
        dt=dt,
        horizon=c["horizon"],
        x0=np.zeros(4),
        step=step,
        stage_cost=stage_cost,
        params=params,
        kernel="point_mass",
    )


def make_pendulum(**overrides) -> DynamicsModel:
    """Torque-limited pendulum swing-up.

    State (theta, omega) with theta = 0 hanging down and theta = pi upright.
    The upright error (1 + cos(theta))^2 vanishes at the inverted position;
    the torque limit is well below the gravity torque, so the solver has to
    pump energy over several swings.
    """
    c = {**PENDULUM_DEFAULTS, **overrides}
    dt, g, m, length = c["dt"], c["g"], c["m"], c["length"]
    w_up, w_om, w_u = c["w_up"], c["w_om"], c["w_u"]
    params = np.array([dt, g, m, length, w_up, w_om, w_u])
    ml2 = m * length * length

    def step(x, u):
        om = x[:, 1] + (-(g / length) * np.sin(x[:, 0]) + u[:, 0] / ml2) * dt
        return np.stack([x[:, 0] + om * dt, om], axis=1)

    def stage_cost(x, u):
        e = 1.0 + np.cos(x[:, 0])
        return w_up * e * e + w_om * x[:, 1] * x[:, 1] + w_u * u[:, 0] * u[:, 0]

    return DynamicsModel(
        name="pendulum_swingup",
        d_x=2,
        d_u=1,
        u_min=np.array([-c["u_lim"]]),
        u_max=np.array([c["u_lim"]]),
        dt=dt,
        horizon=c["horizon"],
        x0=np.zeros(2),
        step=step,
        stage_cost=stage_cost,
        params=params,
        kernel="pendulum",
    )


def make_cartpole(**overrides) -> DynamicsModel:
    """Cart-pole balance from a perturbed start.

    State (x, xdot, theta, omega) with theta = 0 upright; the run starts with
    the pole tilted by ``theta0``. Stage cost penalizes pole angle, cart
    offset, and control effort, and is exactly zero at the upright resting
    equilibrium.
    """
    c = {**CARTPOLE_DEFAULTS, **overrides}
    dt, g, mc, mp, length = c["dt"], c["g"], c["m_cart"], c["m_pole"], c["length"]
    w_th, w_x, w_u = c["w_th"], c["w_x"], c["w_u"]
    params = np.array([dt, g, mc, mp, length, w_th, w_x, w_u])
    total_m = mc + mp

    def step(x, u):
        pos, xd, th, om = x[:, 0], x[:, 1], x[:, 2], x[:, 3]
        sin_t, cos_t = np.sin(th), np.cos(th)
        tmp = (u[:, 0] + mp * length * om * om * sin_t) / total_m
        th_acc = (g * sin_t - cos_t * tmp) / (
            length * (4.0 / 3.0 - mp * cos_t * cos_t / total_m)
        )
        x_acc = tmp - mp * length * th_acc * cos_t / total_m
        xd = xd + x_acc * dt
        om = om + th_acc * dt
        return np.stack([pos + xd * dt, xd, th + om * dt, om], axis=1)

    def stage_cost(x, u):
        return (
            w_th * x[:, 2] * x[:, 2]
            + w_x * x[:, 0] * x[:, 0]
            + w_u * u[:, 0] * u[:, 0]
        )

    return DynamicsModel(
        name="cartpole_balance",
        d_x=4,
        d_u=1,
        u_min=np.array([-c["u_lim"]]),
        u_max=np.array([c["u_lim"]]),
        dt=dt,
        horizon=c["horizon"],
        x0=np.array([0.0, 0.0, c["theta0"], 0.0]),
        step=step,
        stage_cost=stage_cost,
        params=params,
        kernel="cartpole",
    )


_FACTORIES = {
    "point_mass_2d": (make_point_mass, POINT_MASS_DEFAULTS),
    "pendulum_swingup": (make_pendulum, PENDULUM_DEFAULTS),
    "cartpole_balance": (make_cartpole, CARTPOLE_DEFAULTS),
}


def builtin_models() -> dict[str, DynamicsModel]:
    """Fresh instances of the three built-in models with default settings."""
    return {name: fac() for name, (fac, _) in _FACTORIES.items()}


def make_builtin(name: str, **overrides) -> DynamicsModel:
    """Build a built-in model by name, optionally overriding coefficients.

    Recognized per-model keys are the entries of the corresponding
    ``*_DEFAULTS`` dict (e.g. horizon, dt, u_lim, cost weights).
    """
    if name not in _FACTORIES:
        raise ValueError(
            f"unknown model {name!r}; available: {sorted(_FACTORIES)}"
        )
    factory, defaults = _FACTORIES[name]
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise ValueError(f"unknown {name} overrides: {sorted(unknown)}")
    return factory(**overrides)


def with_start_state(model: DynamicsModel, x0) -> DynamicsModel:
    """Copy of the model with a different default initial state."""
    return replace(model, x0=np.asarray(x0, dtype=np.float64))
