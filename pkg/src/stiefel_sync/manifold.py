"""Stiefel-manifold layer: validated points and ensembles, Haar sampling,
polar retraction, tangent-space checks, and ensemble distance functionals.

A *point* is an (n, p) float64 array with orthonormal columns. An *ensemble*
is an (N, n, p) stack of such points sharing dimensions.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, ValidationError
from .linalg import polar_factor, qr_thin
from .tolerances import DEFAULT, Tolerances


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def validate_stiefel(x, tol: Tolerances = DEFAULT, name: str = "point") -> np.ndarray:
    """Check orthonormal columns: ||x^T x - I|| and ||x|| - sqrt(p) within tolerance."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {x.shape}")
    n, p = x.shape
    if p > n:
        raise DimensionError(f"{name} needs p <= n, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError(f"{name} contains NaN or Inf entries")
    defect = np.linalg.norm(x.T @ x - np.eye(p))
    if defect > tol.orth_construction:
        raise ValidationError(f"{name} is off the manifold: ||x^T x - I|| = {defect:.3e}")
    norm_gap = abs(np.linalg.norm(x) - np.sqrt(p))
    if norm_gap > tol.orth_construction:
        raise ValidationError(f"{name} has wrong norm: | ||x|| - sqrt(p) | = {norm_gap:.3e}")
    return x


def validate_ensemble(states, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Validate an (N, n, p) stack of Stiefel points."""
    states = np.asarray(states, dtype=float)
    if states.ndim != 3:
        raise DimensionError(f"ensemble must be (N, n, p), got shape {states.shape}")
    if states.shape[0] < 1:
        raise DimensionError("ensemble needs at least one agent")
    for i in range(states.shape[0]):
        validate_stiefel(states[i], tol, name=f"agent {i}")
    return states


def orthonormality_drift(states) -> float:
    """max_i ||S_i^T S_i - I||, the distance of an ensemble from the manifold."""
    states = np.asarray(states, dtype=float)
    gram = np.swapaxes(states, -2, -1) @ states
    gram = gram - np.eye(states.shape[-1])
    return float(np.max(np.sqrt(np.sum(gram * gram, axis=(-2, -1)))))


def random_stiefel(n: int, p: int, seed=None) -> np.ndarray:
    """Haar-distributed point: sign-fixed thin QR of an n x p standard Gaussian."""
    if not 1 <= p <= n:
        raise DimensionError(f"need 1 <= p <= n, got n={n}, p={p}")
    rng = _as_rng(seed)
    q, _ = qr_thin(rng.standard_normal((n, p)))
    return q


def random_ensemble(n: int, p: int, count: int, seed=None) -> np.ndarray:
    """Stack of independent Haar points."""
    rng = _as_rng(seed)
    return np.stack([random_stiefel(n, p, rng) for _ in range(count)])


def random_tangent(point, seed=None, norm: float | None = None) -> np.ndarray:
    """Random tangent vector at ``point``: a Gaussian with the symmetric part
    of the horizontal component removed, optionally rescaled to ``norm``."""
    rng = _as_rng(seed)
    g = rng.standard_normal(point.shape)
    v = tangent_project(point, g)
    if norm is not None:
        size = np.linalg.norm(v)
        if size == 0.0:
            raise ValidationError("degenerate zero tangent sample")
        v = v * (norm / size)
    return v


def tangent_project(point, v) -> np.ndarray:
    """Orthogonal projection of v onto the tangent space at ``point``."""
    m = point.T @ np.asarray(v, dtype=float)
    return v - point @ ((m + m.T) / 2.0)


def near_consensus_ensemble(
    n: int, p: int, count: int, radius: float, seed=None
) -> np.ndarray:
    """Ensemble clustered around one random base point.

    Each agent is the retraction of base + (random tangent of norm
    ``radius``), so the ensemble diameter is at most about 2 * radius.
    """
    rng = _as_rng(seed)
    base = random_stiefel(n, p, rng)
    agents = [retract(base + random_tangent(base, rng, norm=radius)) for _ in range(count)]
    return np.stack(agents)


def perturb_ensemble(states, radius: float, seed=None) -> np.ndarray:
    """Displace every agent along an independent random tangent of norm
    ``radius`` and retract; yields a nearby ensemble for pairwise runs."""
    states = np.asarray(states, dtype=float)
    rng = _as_rng(seed)
    moved = [
        retract(states[i] + random_tangent(states[i], rng, norm=radius))
        for i in range(states.shape[0])
    ]
    return np.stack(moved)


def retract(x, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Closest-point (polar) retraction onto the manifold, validated."""
    u = polar_factor(x, tol)
    if u.ndim == 2:
        return validate_stiefel(u, tol, name="retracted point")
    return validate_ensemble(u, tol)


def tangent_residual(point, v) -> float:
    """||s^T v + v^T s||; zero exactly when v is tangent at s."""
    point = np.asarray(point, dtype=float)
    v = np.asarray(v, dtype=float)
    if v.shape != point.shape:
        raise DimensionError(f"direction shape {v.shape} != point shape {point.shape}")
    m = point.T @ v
    return float(np.linalg.norm(m + m.T))


def ensemble_diameter(states) -> float:
    """Largest pairwise Frobenius distance max_{i,j} ||S_i - S_j||.

    Computed from explicit differences (not Gram identities) so small
    diameters keep full relative precision.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 3:
        raise DimensionError(f"ensemble must be (N, n, p), got shape {states.shape}")
    if states.shape[0] == 1:
        return 0.0
    diffs = states[:, None] - states[None, :]
    return float(np.max(np.sqrt(np.sum(diffs * diffs, axis=(-2, -1)))))


def ensemble_lp_distance(e1, e2, p_exp: float) -> float:
    """(sum_i ||S_i - T_i||^p)^(1/p) between two aligned ensembles."""
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    if e1.shape != e2.shape or e1.ndim != 3:
        raise DimensionError(f"ensemble shapes differ: {e1.shape} vs {e2.shape}")
    if p_exp < 1:
        raise ValidationError(f"p_exp must be >= 1, got {p_exp}")
    diffs = e1 - e2
    norms = np.sqrt(np.sum(diffs * diffs, axis=(-2, -1)))
    if p_exp == 1:
        return float(np.sum(norms))
    if p_exp == 2:
        return float(np.sqrt(np.sum(norms * norms)))
    return float(np.sum(norms ** p_exp) ** (1.0 / p_exp))
