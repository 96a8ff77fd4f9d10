"""CEM and MPPI mean-update rules.

Both consume the same sampled candidates, costs, and covariance schedule as
the proximal optimizer, so benchmark comparisons isolate the update rule.
The CEM variant is mean-only (no covariance fitting); MPPI uses plain
exponentiated-cost weighting without a control-affine correction term.
"""
from __future__ import annotations

import numpy as np

from .optimizer import elite_filter


def cem_update(samples: np.ndarray, costs, elite_fraction: float) -> np.ndarray:
    """Unweighted mean of the lowest-cost ``ceil(fraction * M)`` samples.

    Cost ties break toward the lower sample index.
    """
    samples = np.asarray(samples, dtype=np.float64)
    idx = elite_filter(costs, elite_fraction)
    return samples[idx].mean(axis=0)


def mppi_update(samples: np.ndarray, costs, lambda_temp: float, y_k=None) -> np.ndarray:
    """Softmax-weighted mean with weights exp(-(cost - min cost) / lambda).

    ``y_k`` (the current mean) is accepted for interface symmetry with the
    other update rules; the weighted sample mean does not depend on it.
    Falls back to uniform weights if every weight underflows.
    """
    if lambda_temp <= 0:
        raise ValueError(f"lambda_temp must be positive, got {lambda_temp}")
    samples = np.asarray(samples, dtype=np.float64)
    costs = np.asarray(costs, dtype=np.float64)
    if not np.all(np.isfinite(costs)):
        raise ValueError("costs must be finite")
    w = np.exp(-(costs - np.min(costs)) / lambda_temp)
    total = w.sum()
    if not np.isfinite(total) or total <= 0.0:
        w = np.full(costs.shape[0], 1.0 / costs.shape[0])
    else:
        w = w / total
    return np.einsum("m,m...->...", w, samples)
