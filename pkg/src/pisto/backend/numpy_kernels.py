"""Pure-NumPy implementations of the hot kernels.

These are the reference semantics for the compiled extension in
``_ckernels.pyx``; both backends expose the same functions. Batch kernels
accumulate per-sample costs sequentially over time so the two backends agree
to floating-point noise.

Array layouts (all float64, C-contiguous):
  circles : (nc, 3)  columns cx, cy, radius
  boxes   : (nb, 4)  columns xmin, ymin, xmax, ymax
  params  : flat coefficient vectors, one fixed layout per model (see
            ``pisto.dynamics``)
"""
import numpy as np

BACKEND_NAME = "numpy"


def sdf_points(points, circles, boxes):
    """Signed distance from each point to the nearest obstacle surface.

    points is (..., 2); returns (...). Positive outside, negative inside;
    +inf when the scene has no obstacles.
    """
    pts = np.asarray(points, dtype=np.float64)
    px, py = pts[..., 0], pts[..., 1]
    d = np.full(px.shape, np.inf)
    for cx, cy, r in circles:
        d = np.minimum(d, np.hypot(px - cx, py - cy) - r)
    for xmin, ymin, xmax, ymax in boxes:
        hx, hy = 0.5 * (xmax - xmin), 0.5 * (ymax - ymin)
        qx = np.abs(px - 0.5 * (xmin + xmax)) - hx
        qy = np.abs(py - 0.5 * (ymin + ymax)) - hy
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        inside = np.minimum(np.maximum(qx, qy), 0.0)
        d = np.minimum(d, outside + inside)
    return d


def scene_stats(points, circles, boxes, delta):
    """Per-sample collision statistics for a batch of node paths.

    points is (B, N, 2). Returns (hinge_sq, n_colliding, min_sdf), each (B,):
    the sum over nodes of max(delta - sdf, 0)^2, the count of nodes with
    sdf <= 0, and the minimum sdf over nodes.
    """
    d = sdf_points(points, circles, boxes)
    hinge = np.maximum(delta - d, 0.0)
    return (
        np.sum(hinge * hinge, axis=-1),
        np.sum(d <= 0.0, axis=-1).astype(np.int64),
        np.min(d, axis=-1),
    )


def _finite_rows(x):
    return np.all(np.isfinite(x), axis=-1)


def rollout_costs_point_mass(u, x0, params):
    """Batched 2D double-integrator rollout, totals only.

    u is (B, T, 2), x0 is (4,) = (px, py, vx, vy). Returns (costs, ok) with
    ok False where the state went non-finite (cost then undefined).
    """
    dt, gx, gy, w_goal, w_u = params
    b, t_steps, _ = u.shape
    x = np.tile(np.asarray(x0, dtype=np.float64), (b, 1))
    costs = np.zeros(b)
    ok = np.ones(b, dtype=bool)
    for t in range(t_steps):
        ut = u[:, t, :]
        dxg = x[:, 0] - gx
        dyg = x[:, 1] - gy
        costs += w_goal * (dxg * dxg + dyg * dyg) + w_u * (
            ut[:, 0] * ut[:, 0] + ut[:, 1] * ut[:, 1]
        )
        vx = x[:, 2] + ut[:, 0] * dt
        vy = x[:, 3] + ut[:, 1] * dt
        x = np.stack([x[:, 0] + vx * dt, x[:, 1] + vy * dt, vx, vy], axis=1)
        ok &= _finite_rows(x)
    costs[~ok] = np.nan
    return costs, ok


def rollout_costs_pendulum(u, x0, params):
    """Batched torque-limited pendulum rollout (theta=0 hanging, pi upright)."""
    dt, g, m, length, w_up, w_om, w_u = params
    b, t_steps, _ = u.shape
    th = np.full(b, float(x0[0]))
    om = np.full(b, float(x0[1]))
    costs = np.zeros(b)
    ok = np.ones(b, dtype=bool)
    ml2 = m * length * length
    for t in range(t_steps):
        ut = u[:, t, 0]
        e = 1.0 + np.cos(th)
        costs += w_up * e * e + w_om * om * om + w_u * ut * ut
        om = om + (-(g / length) * np.sin(th) + ut / ml2) * dt
        th = th + om * dt
        ok &= np.isfinite(th) & np.isfinite(om)
    costs[~ok] = np.nan
    return costs, ok


def rollout_costs_cartpole(u, x0, params):
    """Batched cart-pole rollout (theta=0 upright)."""
    dt, g, mc, mp, length, w_th, w_x, w_u = params
    b, t_steps, _ = u.shape
    x = np.full(b, float(x0[0]))
    xd = np.full(b, float(x0[1]))
    th = np.full(b, float(x0[2]))
    om = np.full(b, float(x0[3]))
    costs = np.zeros(b)
    ok = np.ones(b, dtype=bool)
    total_m = mc + mp
    for t in range(t_steps):
        ut = u[:, t, 0]
        costs += w_th * th * th + w_x * x * x + w_u * ut * ut
        sin_t = np.sin(th)
        cos_t = np.cos(th)
        tmp = (ut + mp * length * om * om * sin_t) / total_m
        th_acc = (g * sin_t - cos_t * tmp) / (
            length * (4.0 / 3.0 - mp * cos_t * cos_t / total_m)
        )
        x_acc = tmp - mp * length * th_acc * cos_t / total_m
        xd = xd + x_acc * dt
        om = om + th_acc * dt
        x = x + xd * dt
        th = th + om * dt
        ok &= (
            np.isfinite(x) & np.isfinite(xd) & np.isfinite(th) & np.isfinite(om)
        )
    costs[~ok] = np.nan
    return costs, ok


def rollout_full_point_mass(u, x0, params):
    """Single rollout returning all states and per-step costs."""
    dt, gx, gy, w_goal, w_u = params
    t_steps = u.shape[0]
    states = np.empty((t_steps + 1, 4))
    per_step = np.empty(t_steps)
    states[0] = x0
    for t in range(t_steps):
        px, py, vx, vy = states[t]
        ux, uy = u[t]
        per_step[t] = w_goal * ((px - gx) ** 2 + (py - gy) ** 2) + w_u * (
            ux * ux + uy * uy
        )
        vx, vy = vx + ux * dt, vy + uy * dt
        states[t + 1] = (px + vx * dt, py + vy * dt, vx, vy)
    ok = bool(np.all(np.isfinite(states)))
    return states, per_step, ok


def rollout_full_pendulum(u, x0, params):
    dt, g, m, length, w_up, w_om, w_u = params
    t_steps = u.shape[0]
    states = np.empty((t_steps + 1, 2))
    per_step = np.empty(t_steps)
    states[0] = x0
    ml2 = m * length * length
    for t in range(t_steps):
        th, om = states[t]
        ut = u[t, 0]
        e = 1.0 + np.cos(th)
        per_step[t] = w_up * e * e + w_om * om * om + w_u * ut * ut
        om = om + (-(g / length) * np.sin(th) + ut / ml2) * dt
        states[t + 1] = (th + om * dt, om)
    ok = bool(np.all(np.isfinite(states)))
    return states, per_step, ok


def rollout_full_cartpole(u, x0, params):
    dt, g, mc, mp, length, w_th, w_x, w_u = params
    t_steps = u.shape[0]
    states = np.empty((t_steps + 1, 4))
    per_step = np.empty(t_steps)
    states[0] = x0
    total_m = mc + mp
    for t in range(t_steps):
        x, xd, th, om = states[t]
        ut = u[t, 0]
        per_step[t] = w_th * th * th + w_x * x * x + w_u * ut * ut
        sin_t, cos_t = np.sin(th), np.cos(th)
        tmp = (ut + mp * length * om * om * sin_t) / total_m
        th_acc = (g * sin_t - cos_t * tmp) / (
            length * (4.0 / 3.0 - mp * cos_t * cos_t / total_m)
        )
        x_acc = tmp - mp * length * th_acc * cos_t / total_m
        xd = xd + x_acc * dt
        om = om + th_acc * dt
        states[t + 1] = (x + xd * dt, xd, th + om * dt, om)
    ok = bool(np.all(np.isfinite(states)))
    return states, per_step, ok
