"""Finite-difference smoothness prior and correlated perturbation sampling.

The prior penalizes squared accelerations of a discretized trajectory: an
operator ``A`` applies the second-difference stencil (1, -2, 1)/dt^2, and
``R = A^T A (+ ridge I)`` is the resulting quadratic cost matrix. Sampling
from N(0, sigma * R^{-1}) produces smooth, trajectory-shaped perturbations.

Two boundary treatments are supported:

* ``planning``: the first and last trajectory nodes are fixed (start/goal).
  ``A`` acts on the free interior nodes only and the fixed endpoints enter
  the acceleration as a constant offset, which keeps ``R`` positive definite.
* ``control``: all nodes are free; the stencil is applied at every alignment
  over the sequence zero-padded at both ends, which softly biases boundary
  values toward zero and likewise keeps ``R`` positive definite.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.special import ndtri

from .errors import NumericalError

PLANNING = "planning"
CONTROL = "control"


@dataclass(frozen=True)
class SmoothnessPrior:
    """Immutable bundle of the acceleration operator and derived factors.

    ``noise_chol`` is lower triangular with
    ``noise_chol @ noise_chol.T == inv(r_mat)``, so ``noise_chol @ z`` with
    standard-normal ``z`` is a draw from N(0, R^{-1}). Safe to share across
    threads; nothing here is mutated after construction.
    """

    n_free: int
    dt: float
    mode: str
    accel: np.ndarray  # (n_rows, n_free) stencil applications
    boundary: Optional[np.ndarray]  # (n_rows, 2) start/goal columns, planning only
    r_mat: np.ndarray  # (n_free, n_free)
    noise_chol: np.ndarray  # (n_free, n_free) lower triangular
    ridge: float


@dataclass(frozen=True)
class PerturbationBatch:
    """A batch of correlated perturbations plus its reproducibility record."""

    eps: np.ndarray  # (m_samples, n_free, n_dims)
    sigma_k: float
    seed_tag: tuple  # (base seed, iteration index)


@dataclass
class TrajectoryMean:
    """Decision variable: free nodes (n_free, n_dims) plus fixed endpoints.

    ``start``/``goal`` are None in control mode, where every node is free.
    """

    free: np.ndarray
    start: Optional[np.ndarray] = None
    goal: Optional[np.ndarray] = None

    def full_path(self) -> np.ndarray:
        """Free nodes with the fixed endpoints prepended/appended."""
        if self.start is None:
            return self.free
        return np.vstack([self.start[None, :], self.free, self.goal[None, :]])


def build_acceleration_operator(n_free: int, dt: float, mode: str):
    """Build the stencil operator for ``n_free`` free nodes.

    Returns ``(accel, boundary)``. ``accel`` has one row per stencil
    application; ``boundary`` maps the fixed (start, goal) values to their
    additive contribution per row (planning mode) or is None (control mode).
    """
    if n_free < 2:
        raise ValueError(f"n_free must be >= 2, got {n_free}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if mode not in (PLANNING, CONTROL):
        raise ValueError(f"mode must be 'planning' or 'control', got {mode!r}")
    s = 1.0 / (dt * dt)
    if mode == PLANNING:
        # Stencil centered at each free node of the full path
        # (start, free_0..free_{n-1}, goal); endpoint columns split off.
        accel = np.zeros((n_free, n_free))
        boundary = np.zeros((n_free, 2))
        for r in range(n_free):
            accel[r, r] = -2.0 * s
            if r - 1 >= 0:
                accel[r, r - 1] = s
            else:
                boundary[r, 0] = s
            if r + 1 <= n_free - 1:
                accel[r, r + 1] = s
            else:
                boundary[r, 1] = s
        return accel, boundary
    # Control mode: stencil slides across the sequence padded with two
    # virtual zeros at each end, one row per alignment that touches a node.
    accel = np.zeros((n_free + 2, n_free))
    for r in range(n_free + 2):
        for k, coeff in enumerate((1.0, -2.0, 1.0)):
            col = r + k - 2
            if 0 <= col < n_free:
                accel[r, col] = coeff * s
    return accel, None


def build_prior(
    accel: np.ndarray,
    ridge: float = 0.0,
    *,
    dt: float = 1.0,
    mode: str = CONTROL,
    boundary: Optional[np.ndarray] = None,
) -> SmoothnessPrior:
    """Assemble ``R = A^T A + ridge I`` and its inverse-covariance factor.

    Raises ``NumericalError`` if R fails to factor (not positive definite).
    """
    accel = np.asarray(accel, dtype=np.float64)
    if accel.ndim != 2:
        raise ValueError("accel must be a 2-D operator matrix")
    if ridge < 0:
        raise ValueError(f"ridge must be >= 0, got {ridge}")
    n_free = accel.shape[1]
    r_mat = accel.T @ accel + ridge * np.eye(n_free)
    try:
        chol_r = np.linalg.cholesky(r_mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"R is not positive definite (n_free={n_free}, ridge={ridge}); "
            "check the operator or add a ridge term"
        ) from exc
    # L with L L^T = R^{-1}: invert the factor of R and transpose.
    noise_chol = scipy.linalg.solve_triangular(
        chol_r, np.eye(n_free), lower=True
    ).T
    return SmoothnessPrior(
        n_free=n_free,
        dt=dt,
        mode=mode,
        accel=accel,
        boundary=None if boundary is None else np.asarray(boundary, dtype=np.float64),
        r_mat=r_mat,
        noise_chol=np.ascontiguousarray(noise_chol),
        ridge=ridge,
    )


def make_prior(n_free: int, dt: float, mode: str, ridge: float = 0.0) -> SmoothnessPrior:
    """Convenience: operator construction plus factorization in one call."""
    accel, boundary = build_acceleration_operator(n_free, dt, mode)
    return build_prior(accel, ridge, dt=dt, mode=mode, boundary=boundary)


def _counter_normals(seed: int, iteration: int, m_samples: int, width: int) -> np.ndarray:
    """Standard normals addressed by counter blocks.

    Sample m consumes raw words [m*width, (m+1)*width) of a Philox stream
    keyed on (seed, iteration), mapped through the inverse normal CDF, so its
    values depend only on (seed, iteration, m, width) and never on how many
    other samples were generated or in what order.
    """
    key = np.array([seed, iteration], dtype=np.uint64)
    raw = np.random.Philox(key=key).random_raw(m_samples * width)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u).reshape(m_samples, width)


def sample_perturbations(
    prior: SmoothnessPrior,
    sigma_k: float,
    m_samples: int,
    n_dims: int,
    seed: int,
    iteration: int = 0,
) -> PerturbationBatch:
    """Draw ``m_samples`` perturbations from N(0, sigma_k * R^{-1}) per dim.

    Each perturbation is sqrt(sigma_k) * L @ z with independent standard
    normals per dimension. Deterministic per (seed, iteration, sample index);
    see ``_counter_normals``.
    """
    if sigma_k <= 0:
        raise ValueError(f"sigma_k must be positive, got {sigma_k}")
    if m_samples < 1:
        raise ValueError(f"m_samples must be >= 1, got {m_samples}")
    z = _counter_normals(seed, iteration, m_samples, prior.n_free * n_dims)
    z = z.reshape(m_samples, prior.n_free, n_dims)
    eps = np.sqrt(sigma_k) * np.einsum("ij,mjd->mid", prior.noise_chol, z)
    return PerturbationBatch(
        eps=eps, sigma_k=float(sigma_k), seed_tag=(seed, iteration)
    )


def control_energy(y, prior: SmoothnessPrior) -> float:
    """Quadratic smoothness energy 0.5 * sum_d y_d^T R y_d.

    ``y`` may be a TrajectoryMean or a bare (n_free, n_dims) array. In
    planning mode the fixed endpoints contribute the linear and constant
    terms of 0.5 * ||A y_d + b_d||^2, so the value is the true squared
    acceleration of the full path (plus any ridge term).
    """
    if isinstance(y, TrajectoryMean):
        free, start, goal = y.free, y.start, y.goal
    else:
        free, start, goal = np.asarray(y, dtype=np.float64), None, None
    if free.ndim == 1:
        free = free[:, None]
    if free.shape[0] != prior.n_free:
        raise ValueError(
            f"trajectory has {free.shape[0]} free nodes, prior expects {prior.n_free}"
        )
    total = 0.5 * float(np.einsum("id,ij,jd->", free, prior.r_mat, free))
    if prior.boundary is not None and start is not None:
        ends = np.stack([np.atleast_1d(start), np.atleast_1d(goal)])  # (2, n_dims)
        b = prior.boundary @ ends  # (n_rows, n_dims)
        total += float(np.einsum("rd,ri,id->", b, prior.accel, free))
        total += 0.5 * float(np.sum(b * b))
    return total
