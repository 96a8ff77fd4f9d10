"""Proximal importance-weighted mean updates for trajectory distributions.

Each iteration maintains a Gaussian proposal N(Y_k, sigma_k R^{-1}) over
trajectories (or control sequences), scores sampled perturbations by
exponentiated cost, and moment-matches the mean to a surrogate distribution
that geometrically interpolates between the cost-tilted smoothness prior and
the current proposal. The interpolation exponent is gamma = eta / (eta + 1),
where eta is a proximal step size: small eta keeps the update close to the
current mean (a trust region), eta -> infinity recovers the plain
cost-weighted update (``stomp_weights``).

Everything here is derivative-free: the cost enters only through its values
at sampled candidates, so discontinuous potentials (collision indicators)
need no special handling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np

from .errors import DegenerateWeightsError, NumericalError
from .prior import SmoothnessPrior, sample_perturbations

METHODS = ("pisto", "stomp", "cem", "mppi")


@dataclass(frozen=True)
class ProximalSchedule:
    """Iteration schedules: proximal step size eta, temperature tau, and the
    sampling-covariance scale sigma."""

    eta_init: float = 0.5
    eta_final: float = 20.0
    tau: float = 1.0
    sigma_init: float = 1.0
    sigma_final: float = 0.1
    k_max: int = 100

    def __post_init__(self):
        for name in ("eta_init", "eta_final", "tau", "sigma_init", "sigma_final"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.k_max < 1:
            raise ValueError(f"k_max must be >= 1, got {self.k_max}")


def gamma(eta: float) -> float:
    """Interpolation exponent eta / (eta + 1), strictly increasing in eta."""
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    return eta / (eta + 1.0)


def sigma_schedule(k: int, sched: ProximalSchedule) -> float:
    """Cosine-annealed covariance scale: sigma_init at k=0, sigma_final at k_max."""
    if not 0 <= k <= sched.k_max:
        raise ValueError(f"iteration {k} outside [0, {sched.k_max}]")
    return sched.sigma_final + 0.5 * (sched.sigma_init - sched.sigma_final) * (
        1.0 + math.cos(math.pi * k / sched.k_max)
    )


def eta_schedule(k: int, sched: ProximalSchedule) -> float:
    """Exponential interpolation from eta_init to eta_final."""
    if not 0 <= k <= sched.k_max:
        raise ValueError(f"iteration {k} outside [0, {sched.k_max}]")
    return sched.eta_init * (sched.eta_final / sched.eta_init) ** (k / sched.k_max)


# -- importance weights ------------------------------------------------------


def _regularizer_terms(eps: np.ndarray, r_mat: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-sample smoothness coupling eps_m^T R y, summed over dimensions."""
    ry = r_mat @ y
    return np.einsum("mid,id->m", eps, ry)


def _softmax(exponents: np.ndarray) -> np.ndarray:
    shift = np.max(exponents)
    if not np.isfinite(shift):
        raise DegenerateWeightsError("weight exponents are not finite")
    w = np.exp(exponents - shift)
    total = w.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise DegenerateWeightsError("all importance weights underflowed")
    return w / total


def _check_weight_inputs(costs, tau=None):
    costs = np.asarray(costs, dtype=np.float64)
    if not np.all(np.isfinite(costs)):
        raise ValueError("costs must be finite (substitute diverged samples first)")
    if tau is not None and tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    return costs


def pisto_weights(
    costs,
    eps: np.ndarray,
    r_mat: np.ndarray,
    y_k: np.ndarray,
    gamma_val: float,
    tau: float,
    scale_regularizer: bool = False,
) -> np.ndarray:
    """Normalized proximal importance weights.

    Default exponent: -(gamma/tau) * S_m - eps_m^T R Y_k. With
    ``scale_regularizer`` the smoothness coupling is scaled by gamma as well,
    which makes the weights target the interpolated surrogate exactly (the
    temperature still divides only the cost term).
    """
    costs = _check_weight_inputs(costs, tau)
    reg = _regularizer_terms(eps, r_mat, y_k)
    if scale_regularizer:
        exps = -(gamma_val / tau) * costs - gamma_val * reg
    else:
        exps = -(gamma_val / tau) * costs - reg
    return _softmax(exps)


def stomp_weights(costs, eps: np.ndarray, r_mat: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Plain exponentiated-cost importance weights exp(-(S_m + eps_m^T R Y)).

    This is the gamma = 1, tau = 1 limit of ``pisto_weights``.
    """
    costs = _check_weight_inputs(costs)
    reg = _regularizer_terms(eps, r_mat, y)
    exps = -costs - reg
    return _softmax(exps)


def elite_filter(costs, elite_fraction: float) -> np.ndarray:
    """Indices of the ceil(fraction * M) lowest-cost samples.

    Ties break toward the lower sample index. The returned indices are in
    ascending cost order.
    """
    if not 0.0 < elite_fraction <= 1.0:
        raise ValueError(f"elite_fraction must be in (0, 1], got {elite_fraction}")
    costs = np.asarray(costs)
    n_elite = math.ceil(elite_fraction * costs.shape[0])
    return np.argsort(costs, kind="stable")[:n_elite]


def weighted_update(y_k: np.ndarray, eps: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Candidate mean Y_k + sum_m w_m eps_m."""
    return y_k + np.einsum("m,mid->id", weights, eps)


# -- smoothing of the mean update --------------------------------------------


@dataclass
class OptimizerState:
    """Mutable loop state: current mean, momentum buffer, optional Adam
    moment accumulators, and the iteration counter."""

    y: np.ndarray
    v: np.ndarray
    k: int = 0
    adam_m: Optional[np.ndarray] = None
    adam_v: Optional[np.ndarray] = None


def momentum_step(
    state: OptimizerState, delta: np.ndarray, beta: float, lam: float
) -> OptimizerState:
    """EMA-smoothed step: v <- beta v + (1-beta) delta; y <- y + lam v.

    beta = 0, lam = 1 reduces to the plain update y <- y + delta.
    """
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must be in [0, 1), got {beta}")
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"lam must be in (0, 1], got {lam}")
    v = beta * state.v + (1.0 - beta) * delta
    return replace(state, y=state.y + lam * v, v=v, k=state.k + 1)


def adam_step(
    state: OptimizerState,
    delta: np.ndarray,
    lam: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> OptimizerState:
    """Adam-style alternative treating -delta as a stochastic gradient."""
    g = -delta
    m = state.adam_m if state.adam_m is not None else np.zeros_like(delta)
    v = state.adam_v if state.adam_v is not None else np.zeros_like(delta)
    m = beta1 * m + (1.0 - beta1) * g
    v = beta2 * v + (1.0 - beta2) * g * g
    t = state.k + 1
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    y = state.y - lam * m_hat / (np.sqrt(v_hat) + eps)
    return replace(state, y=y, adam_m=m, adam_v=v, k=t)


# -- the optimization loop ----------------------------------------------------


@dataclass(frozen=True)
class OptimizerConfig:
    """Everything a single optimization run needs besides the problem."""

    schedule: ProximalSchedule = field(default_factory=ProximalSchedule)
    method: str = "pisto"
    m_samples: int = 64
    elite_fraction: float = 1.0
    beta: float = 0.0
    lam: float = 1.0
    smoothing: str = "momentum"  # "momentum" | "adam"
    lambda_mppi: float = 0.1
    seed: int = 0
    scale_regularizer: bool = False
    # Rescale the temperature each iteration by the spread of the elite
    # costs, making weight peakedness independent of the cost magnitude.
    # Applies to pisto's tau and mppi's lambda; stomp and cem are unaffected.
    adaptive_temperature: bool = False
    # Loop budget; None runs the full annealing horizon schedule.k_max.
    # 0 is allowed and returns the initial mean untouched.
    iterations: Optional[int] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.m_samples < 1:
            raise ValueError(f"m_samples must be >= 1, got {self.m_samples}")
        if self.iterations is not None and not (
            0 <= self.iterations <= self.schedule.k_max
        ):
            raise ValueError(
                f"iterations must be in [0, k_max={self.schedule.k_max}], "
                f"got {self.iterations}"
            )
        if not 0.0 < self.elite_fraction <= 1.0:
            raise ValueError(
                f"elite_fraction must be in (0, 1], got {self.elite_fraction}"
            )
        if self.lambda_mppi <= 0:
            raise ValueError(f"lambda_mppi must be positive, got {self.lambda_mppi}")
        if self.smoothing not in ("momentum", "adam"):
            raise ValueError(f"unknown smoothing {self.smoothing!r}")


@dataclass(frozen=True)
class Problem:
    """A cost to minimize over trajectory-shaped decision variables.

    ``cost_fn`` maps a candidate batch (B, n_free, n_dims) to (B,) finite
    costs; it must be pure (batch entries are scored independently and may be
    evaluated in any order). ``project`` is applied to candidates before
    evaluation and to the returned solution (e.g. control clamping); the
    iterated mean itself is never projected.
    """

    cost_fn: Callable[[np.ndarray], np.ndarray]
    prior: SmoothnessPrior
    y0: np.ndarray
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    best_cost: float  # best candidate cost seen so far (non-increasing)
    mean_cost: float  # cost of the updated mean
    sigma_k: float
    eta_k: float
    update_norm: float
    degenerate: bool = False


@dataclass
class OptimizeResult:
    best_y: np.ndarray  # lowest-cost candidate ever evaluated (projected)
    best_cost: float
    final_y: np.ndarray  # final mean (unprojected)
    history: List[IterationRecord]


def _temperature_scale(costs: np.ndarray, elite_idx: np.ndarray) -> float:
    """Per-iteration temperature rescale: the elite-cost standard deviation,
    guarded so flat batches keep scale 1."""
    spread = float(np.std(costs[elite_idx]))
    return spread if spread > 1e-300 else 1.0


def _method_weights(method, costs, eps, r_mat, y, gamma_val, tau, scale_reg, elite_idx):
    """Importance weights over the full batch with non-elites zeroed.

    Computing the softmax over the elite subset is the numerically safe form
    of zeroing non-elite weights and renormalizing.
    """
    reg = _regularizer_terms(eps, r_mat, y)
    if method == "pisto":
        if scale_reg:
            exps = -(gamma_val / tau) * costs - gamma_val * reg
        else:
            exps = -(gamma_val / tau) * costs - reg
    elif method == "stomp":
        exps = -costs - reg
    else:
        raise ValueError(f"no importance weights for method {method!r}")
    if elite_idx.shape[0] == costs.shape[0]:
        return _softmax(exps)
    idx = np.sort(elite_idx)
    w = np.zeros_like(exps)
    w[idx] = _softmax(exps[idx])
    return w


def optimize(problem: Problem, config: OptimizerConfig) -> OptimizeResult:
    """Run the sampling loop for ``k_max`` iterations.

    Tracks the lowest-cost candidate over all evaluated samples and mean
    iterates and returns it alongside the final mean. Degenerate weights at
    an iteration fall back to uniform weights over the elite set and are
    flagged in the history; a non-finite mean aborts.
    """
    from .baselines import cem_update, mppi_update

    sched = config.schedule
    y = np.array(problem.y0, dtype=np.float64)
    if y.ndim != 2:
        raise ValueError(f"y0 must be (n_free, n_dims), got shape {y.shape}")
    n_dims = y.shape[1]
    project = problem.project if problem.project is not None else lambda a: a
    state = OptimizerState(y=y, v=np.zeros_like(y))
    history: List[IterationRecord] = []

    best_y = project(y.copy())
    best_cost = float(problem.cost_fn(best_y[None])[0])

    n_iter = sched.k_max if config.iterations is None else config.iterations
    for k in range(n_iter):
        sig_k = sigma_schedule(k, sched)
        eta_k = eta_schedule(k, sched)
        gamma_k = gamma(eta_k)
        batch = sample_perturbations(
            problem.prior, sig_k, config.m_samples, n_dims, config.seed, iteration=k
        )
        cands = state.y[None] + batch.eps
        cands_eval = project(cands)
        costs = np.asarray(problem.cost_fn(cands_eval), dtype=np.float64)
        if not np.all(np.isfinite(costs)):
            raise NumericalError(f"non-finite candidate costs at iteration {k}")

        i_best = int(np.argmin(costs))
        if costs[i_best] < best_cost:
            best_cost = float(costs[i_best])
            best_y = np.array(cands_eval[i_best])

        degenerate = False
        if config.method in ("pisto", "stomp"):
            elite_idx = elite_filter(costs, config.elite_fraction)
            tau_k = sched.tau
            if config.method == "pisto" and config.adaptive_temperature:
                tau_k = sched.tau * _temperature_scale(costs, elite_idx)
            try:
                w = _method_weights(
                    config.method,
                    costs,
                    batch.eps,
                    problem.prior.r_mat,
                    state.y,
                    gamma_k,
                    tau_k,
                    config.scale_regularizer,
                    elite_idx,
                )
            except DegenerateWeightsError:
                degenerate = True
                w = np.zeros(config.m_samples)
                w[elite_idx] = 1.0 / elite_idx.shape[0]
            delta = weighted_update(state.y, batch.eps, w) - state.y
        elif config.method == "cem":
            delta = cem_update(cands, costs, config.elite_fraction) - state.y
        else:  # mppi
            lam_k = config.lambda_mppi
            if config.adaptive_temperature:
                lam_k = config.lambda_mppi * _temperature_scale(
                    costs, np.arange(costs.shape[0])
                )
            delta = mppi_update(cands, costs, lam_k, state.y) - state.y

        prev_y = state.y
        if config.smoothing == "adam":
            state = adam_step(state, delta, config.lam)
        else:
            state = momentum_step(state, delta, config.beta, config.lam)
        if not np.all(np.isfinite(state.y)):
            raise NumericalError(
                f"optimizer mean became non-finite at iteration {k} "
                f"(method={config.method})"
            )

        mean_cost = float(problem.cost_fn(project(state.y.copy())[None])[0])
        if mean_cost < best_cost:
            best_cost = mean_cost
            best_y = project(state.y.copy())
        history.append(
            IterationRecord(
                iteration=k,
                best_cost=best_cost,
                mean_cost=mean_cost,
                sigma_k=sig_k,
                eta_k=eta_k,
                update_norm=float(np.linalg.norm(state.y - prev_y)),
                degenerate=degenerate,
            )
        )

    return OptimizeResult(
        best_y=best_y, best_cost=best_cost, final_y=state.y, history=history
    )


# -- closed-form checks self-contained enough to live with the optimizer ------


def _chol_or_error(mat: np.ndarray, label: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"{label} must be positive definite") from exc


def gaussian_kl(mu0, cov0, mu1, cov1) -> float:
    """KL divergence between multivariate normals KL(N0 || N1), closed form."""
    mu0 = np.atleast_1d(np.asarray(mu0, dtype=np.float64))
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=np.float64))
    cov0 = np.atleast_2d(np.asarray(cov0, dtype=np.float64))
    cov1 = np.atleast_2d(np.asarray(cov1, dtype=np.float64))
    k = mu0.shape[0]
    l0 = _chol_or_error(cov0, "cov0")
    l1 = _chol_or_error(cov1, "cov1")
    solve1 = np.linalg.solve
    trace_term = float(np.trace(solve1(cov1, cov0)))
    dm = mu1 - mu0
    quad = float(dm @ solve1(cov1, dm))
    logdet0 = 2.0 * float(np.sum(np.log(np.diag(l0))))
    logdet1 = 2.0 * float(np.sum(np.log(np.diag(l1))))
    return 0.5 * (trace_term + quad - k + logdet1 - logdet0)


def _gaussian_logpdf(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> float:
    k = x.shape[0]
    l = _chol_or_error(cov, "covariance")
    dx = x - mean
    sol = np.linalg.solve(cov, dx)
    logdet = 2.0 * float(np.sum(np.log(np.diag(l))))
    return -0.5 * (k * math.log(2.0 * math.pi) + logdet + float(dx @ sol))


def surrogate_logdensity(
    y_tilde,
    y_k,
    eta: float,
    r_mat: np.ndarray,
    s_value: float,
    form: str = "interpolation",
    cov: Optional[np.ndarray] = None,
) -> float:
    """Unnormalized log density of the proximal surrogate target.

    ``interpolation`` evaluates the geometric mixture
    gamma * log[exp(-S) N(0, R^{-1})] + (1-gamma) * log N(Y_k, Sigma);
    ``tilted`` evaluates the equivalent completed-square form
    -gamma S - 0.5 (y - mu_k)^T P (y - mu_k) with
    P = gamma R + (1-gamma) Sigma^{-1} and mu_k = (1-gamma) P^{-1} Sigma^{-1} Y_k.
    The two differ by a constant independent of ``y_tilde``. Sigma defaults
    to R^{-1}, in which case P = R and mu_k = (1-gamma) Y_k.
    """
    y_tilde = np.atleast_1d(np.asarray(y_tilde, dtype=np.float64))
    y_k = np.atleast_1d(np.asarray(y_k, dtype=np.float64))
    r_mat = np.atleast_2d(np.asarray(r_mat, dtype=np.float64))
    g = gamma(eta)
    r_inv = np.linalg.inv(r_mat)
    sigma = r_inv if cov is None else np.atleast_2d(np.asarray(cov, dtype=np.float64))
    if form == "interpolation":
        target = -float(s_value) + _gaussian_logpdf(
            y_tilde, np.zeros_like(y_tilde), r_inv
        )
        prox = _gaussian_logpdf(y_tilde, y_k, sigma)
        return g * target + (1.0 - g) * prox
    if form == "tilted":
        sigma_inv = np.linalg.inv(sigma)
        p_mat = g * r_mat + (1.0 - g) * sigma_inv
        try:
            np.linalg.cholesky(p_mat)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("tilted-form precision matrix is not PD") from exc
        mu_k = (1.0 - g) * np.linalg.solve(p_mat, sigma_inv @ y_k)
        dy = y_tilde - mu_k
        return -g * float(s_value) - 0.5 * float(dy @ p_mat @ dy)
    raise ValueError(f"form must be 'interpolation' or 'tilted', got {form!r}")
