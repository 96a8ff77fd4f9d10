"""Derivative-free trajectory optimization via proximal importance-weighted
mean updates, with STOMP/CEM/MPPI baselines, planar SDF planning scenes,
rollout-based control tasks, and a benchmark CLI."""
from .backend import backend_name
from .baselines import cem_update, mppi_update
from .dynamics import (
    DynamicsModel,
    RolloutResult,
    batch_rollout_costs,
    builtin_models,
    clamp_controls,
    make_builtin,
    rollout,
)
from .errors import DegenerateWeightsError, NumericalError, SceneGenerationError
from .optimizer import (
    OptimizeResult,
    OptimizerConfig,
    OptimizerState,
    Problem,
    ProximalSchedule,
    adam_step,
    elite_filter,
    eta_schedule,
    gamma,
    gaussian_kl,
    momentum_step,
    optimize,
    pisto_weights,
    sigma_schedule,
    stomp_weights,
    surrogate_logdensity,
    weighted_update,
)
from .prior import (
    PerturbationBatch,
    SmoothnessPrior,
    TrajectoryMean,
    build_acceleration_operator,
    build_prior,
    control_energy,
    make_prior,
    sample_perturbations,
)
from .scenes import (
    Box,
    Circle,
    PathMetrics,
    Scene,
    hinge,
    load_scene,
    make_scene,
    metrics,
    potential_indicator,
    potential_sdf,
    save_scene,
    sdf_batch,
    sdf_eval,
)

__version__ = "0.1.0"
