# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: batched SDF collision statistics and dynamics
rollouts. Mirrors ``numpy_kernels`` function for function; see that module
for the array-layout contract."""
import numpy as np

cimport numpy as cnp
from libc.math cimport NAN, cos, sin, sqrt, fabs, isfinite, INFINITY

cnp.import_array()

BACKEND_NAME = "compiled"


cdef inline double _sdf_one(double px, double py,
                            double[:, ::1] circles,
                            double[:, ::1] boxes) nogil:
    cdef double d = INFINITY
    cdef double dx, dy, hx, hy, qx, qy, ox, oy, cand
    cdef Py_ssize_t i
    for i in range(circles.shape[0]):
        dx = px - circles[i, 0]
        dy = py - circles[i, 1]
        cand = sqrt(dx * dx + dy * dy) - circles[i, 2]
        if cand < d:
            d = cand
    for i in range(boxes.shape[0]):
        hx = 0.5 * (boxes[i, 2] - boxes[i, 0])
        hy = 0.5 * (boxes[i, 3] - boxes[i, 1])
        qx = fabs(px - 0.5 * (boxes[i, 0] + boxes[i, 2])) - hx
        qy = fabs(py - 0.5 * (boxes[i, 1] + boxes[i, 3])) - hy
        ox = qx if qx > 0.0 else 0.0
        oy = qy if qy > 0.0 else 0.0
        cand = sqrt(ox * ox + oy * oy)
        cand += min(max(qx, qy), 0.0)
        if cand < d:
            d = cand
    return d


def sdf_points(points, circles, boxes):
    pts = np.ascontiguousarray(points, dtype=np.float64)
    shape = pts.shape[:-1]
    cdef double[:, ::1] flat = pts.reshape(-1, 2)
    cdef double[:, ::1] circ = np.ascontiguousarray(circles, dtype=np.float64).reshape(-1, 3)
    cdef double[:, ::1] box = np.ascontiguousarray(boxes, dtype=np.float64).reshape(-1, 4)
    out = np.empty(flat.shape[0])
    cdef double[::1] out_v = out
    cdef Py_ssize_t i
    for i in range(flat.shape[0]):
        out_v[i] = _sdf_one(flat[i, 0], flat[i, 1], circ, box)
    return out.reshape(shape)


def scene_stats(points, circles, boxes, double delta):
    pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef double[:, :, ::1] p = pts
    cdef double[:, ::1] circ = np.ascontiguousarray(circles, dtype=np.float64).reshape(-1, 3)
    cdef double[:, ::1] box = np.ascontiguousarray(boxes, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t b = p.shape[0], n = p.shape[1]
    hinge_sq = np.zeros(b)
    n_coll = np.zeros(b, dtype=np.int64)
    min_sdf = np.empty(b)
    cdef double[::1] hs = hinge_sq
    cdef long long[::1] nc = n_coll
    cdef double[::1] ms = min_sdf
    cdef double d, h, lo
    cdef Py_ssize_t i, t
    for i in range(b):
        lo = INFINITY
        for t in range(n):
            d = _sdf_one(p[i, t, 0], p[i, t, 1], circ, box)
            if d < lo:
                lo = d
            h = delta - d
            if h > 0.0:
                hs[i] += h * h
            if d <= 0.0:
                nc[i] += 1
        ms[i] = lo
    return hinge_sq, n_coll, min_sdf


def rollout_costs_point_mass(u, x0, params):
    uc = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[:, :, ::1] uv = uc
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(params, dtype=np.float64)
    cdef double dt = pv[0], gx = pv[1], gy = pv[2], w_goal = pv[3], w_u = pv[4]
    cdef Py_ssize_t b = uv.shape[0], t_steps = uv.shape[1]
    costs = np.empty(b)
    ok = np.ones(b, dtype=np.uint8)
    cdef double[::1] cv = costs
    cdef cnp.uint8_t[::1] okv = ok
    cdef double px, py, vx, vy, ux, uy, c, dxg, dyg
    cdef Py_ssize_t i, t
    for i in range(b):
        px = x0v[0]; py = x0v[1]; vx = x0v[2]; vy = x0v[3]
        c = 0.0
        for t in range(t_steps):
            ux = uv[i, t, 0]; uy = uv[i, t, 1]
            dxg = px - gx; dyg = py - gy
            c += w_goal * (dxg * dxg + dyg * dyg) + w_u * (ux * ux + uy * uy)
            vx += ux * dt; vy += uy * dt
            px += vx * dt; py += vy * dt
            if not (isfinite(px) and isfinite(py) and isfinite(vx) and isfinite(vy)):
                okv[i] = 0
                break
        cv[i] = c if okv[i] else NAN
    return costs, ok.astype(bool)


def rollout_costs_pendulum(u, x0, params):
    uc = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[:, :, ::1] uv = uc
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(params, dtype=np.float64)
    cdef double dt = pv[0], g = pv[1], m = pv[2], length = pv[3]
    cdef double w_up = pv[4], w_om = pv[5], w_u = pv[6]
    cdef double ml2 = m * length * length
    cdef Py_ssize_t b = uv.shape[0], t_steps = uv.shape[1]
    costs = np.empty(b)
    ok = np.ones(b, dtype=np.uint8)
    cdef double[::1] cv = costs
    cdef cnp.uint8_t[::1] okv = ok
    cdef double th, om, ut, c, e
    cdef Py_ssize_t i, t
    for i in range(b):
        th = x0v[0]; om = x0v[1]
        c = 0.0
        for t in range(t_steps):
            ut = uv[i, t, 0]
            e = 1.0 + cos(th)
            c += w_up * e * e + w_om * om * om + w_u * ut * ut
            om += (-(g / length) * sin(th) + ut / ml2) * dt
            th += om * dt
            if not (isfinite(th) and isfinite(om)):
                okv[i] = 0
                break
        cv[i] = c if okv[i] else NAN
    return costs, ok.astype(bool)


def rollout_costs_cartpole(u, x0, params):
    uc = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[:, :, ::1] uv = uc
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(params, dtype=np.float64)
    cdef double dt = pv[0], g = pv[1], mc = pv[2], mp = pv[3], length = pv[4]
    cdef double w_th = pv[5], w_x = pv[6], w_u = pv[7]
    cdef double total_m = mc + mp
    cdef Py_ssize_t b = uv.shape[0], t_steps = uv.shape[1]
    costs = np.empty(b)
    ok = np.ones(b, dtype=np.uint8)
    cdef double[::1] cv = costs
    cdef cnp.uint8_t[::1] okv = ok
    cdef double x, xd, th, om, ut, c, sin_t, cos_t, tmp, th_acc, x_acc
    cdef Py_ssize_t i, t
    for i in range(b):
        x = x0v[0]; xd = x0v[1]; th = x0v[2]; om = x0v[3]
        c = 0.0
        for t in range(t_steps):
            ut = uv[i, t, 0]
            c += w_th * th * th + w_x * x * x + w_u * ut * ut
            sin_t = sin(th); cos_t = cos(th)
            tmp = (ut + mp * length * om * om * sin_t) / total_m
            th_acc = (g * sin_t - cos_t * tmp) / (
                length * (4.0 / 3.0 - mp * cos_t * cos_t / total_m))
            x_acc = tmp - mp * length * th_acc * cos_t / total_m
            xd += x_acc * dt
            om += th_acc * dt
            x += xd * dt
            th += om * dt
            if not (isfinite(x) and isfinite(xd) and isfinite(th) and isfinite(om)):
                okv[i] = 0
                break
        cv[i] = c if okv[i] else NAN
    return costs, ok.astype(bool)


def rollout_full_point_mass(u, x0, params):
    uc = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[:, ::1] uv = uc
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(params, dtype=np.float64)
    cdef double dt = pv[0], gx = pv[1], gy = pv[2], w_goal = pv[3], w_u = pv[4]
    cdef Py_ssize_t t_steps = uv.shape[0]
    states = np.empty((t_steps + 1, 4))
    per_step = np.empty(t_steps)
    cdef double[:, ::1] sv = states
    cdef double[::1] psv = per_step
    cdef double px = x0v[0], py = x0v[1], vx = x0v[2], vy = x0v[3]
    cdef double ux, uy, dxg, dyg
    cdef Py_ssize_t t
    cdef bint ok = True
    sv[0, 0] = px; sv[0, 1] = py; sv[0, 2] = vx; sv[0, 3] = vy
    for t in range(t_steps):
        ux = uv[t, 0]; uy = uv[t, 1]
        dxg = px - gx; dyg = py - gy
        psv[t] = w_goal * (dxg * dxg + dyg * dyg) + w_u * (ux * ux + uy * uy)
        vx += ux * dt; vy += uy * dt
        px += vx * dt; py += vy * dt
        sv[t + 1, 0] = px; sv[t + 1, 1] = py; sv[t + 1, 2] = vx; sv[t + 1, 3] = vy
        if not (isfinite(px) and isfinite(py) and isfinite(vx) and isfinite(vy)):
            ok = False
    return states, per_step, ok


def rollout_full_pendulum(u, x0, params):
    uc = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[:, ::1] uv = uc
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(params, dtype=np.float64)
    cdef double dt = pv[0], g = pv[1], m = pv[2], length = pv[3]
    cdef double w_up = pv[4], w_om = pv[5], w_u = pv[6]
    cdef double ml2 = m * length * length
    cdef Py_ssize_t t_steps = uv.shape[0]
    states = np.empty((t_steps + 1, 2))
    per_step = np.empty(t_steps)
    cdef double[:, ::1] sv = states
    cdef double[::1] psv = per_step
    cdef double th = x0v[0], om = x0v[1], ut, e
    cdef Py_ssize_t t
    cdef bint ok = True
    sv[0, 0] = th; sv[0, 1] = om
    for t in range(t_steps):
        ut = uv[t, 0]
        e = 1.0 + cos(th)
        psv[t] = w_up * e * e + w_om * om * om + w_u * ut * ut
        om += (-(g / length) * sin(th) + ut / ml2) * dt
        th += om * dt
        sv[t + 1, 0] = th; sv[t + 1, 1] = om
        if not (isfinite(th) and isfinite(om)):
            ok = False
    return states, per_step, ok


def rollout_full_cartpole(u, x0, params):
    uc = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[:, ::1] uv = uc
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(params, dtype=np.float64)
    cdef double dt = pv[0], g = pv[1], mc = pv[2], mp = pv[3], length = pv[4]
    cdef double w_th = pv[5], w_x = pv[6], w_u = pv[7]
    cdef double total_m = mc + mp
    cdef Py_ssize_t t_steps = uv.shape[0]
    states = np.empty((t_steps + 1, 4))
    per_step = np.empty(t_steps)
    cdef double[:, ::1] sv = states
    cdef double[::1] psv = per_step
    cdef double x = x0v[0], xd = x0v[1], th = x0v[2], om = x0v[3]
    cdef double ut, sin_t, cos_t, tmp, th_acc, x_acc
    cdef Py_ssize_t t
    cdef bint ok = True
    sv[0, 0] = x; sv[0, 1] = xd; sv[0, 2] = th; sv[0, 3] = om
    for t in range(t_steps):
        ut = uv[t, 0]
        psv[t] = w_th * th * th + w_x * x * x + w_u * ut * ut
        sin_t = sin(th); cos_t = cos(th)
        tmp = (ut + mp * length * om * om * sin_t) / total_m
        th_acc = (g * sin_t - cos_t * tmp) / (
            length * (4.0 / 3.0 - mp * cos_t * cos_t / total_m))
        x_acc = tmp - mp * length * th_acc * cos_t / total_m
        xd += x_acc * dt
        om += th_acc * dt
        x += xd * dt
        th += om * dt
        sv[t + 1, 0] = x; sv[t + 1, 1] = xd; sv[t + 1, 2] = th; sv[t + 1, 3] = om
        if not (isfinite(x) and isfinite(xd) and isfinite(th) and isfinite(om)):
            ok = False
    return states, per_step, ok
