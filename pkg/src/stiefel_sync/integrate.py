"""Fixed-step 4th-order Runge-Kutta integration in the ambient matrix space
with polar retraction back onto the manifold, plus trajectory recording and
the finite-difference derivative estimator used by the inequality audits.

The step size is fixed so that two runs over the same horizon share their
time grid bitwise, which the pairwise diagnostics rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    DivergenceError,
    InsufficientDataError,
    ValidationError,
)
from .linalg import _polar_unchecked
from .manifold import ensemble_diameter, orthonormality_drift, validate_ensemble
from .model import ModelConfig, _check_state_shape, rhs

RETRACTION_POLICIES = ("every_step", "on_drift", "never")


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size, horizon, retraction policy, and recording stride.

    ``on_drift`` retracts only when the orthonormality defect exceeds
    ``drift_threshold``; ``never`` disables retraction (used to measure raw
    integrator drift). Snapshots are kept every ``record_stride`` steps, and
    the final step is always recorded.
    """

    h: float = 1e-3
    t_end: float = 50.0
    retraction: str = "every_step"
    drift_threshold: float = 1e-8
    record_stride: int = 10

    def __post_init__(self):
        if self.h <= 0:
            raise ValidationError(f"step size must be positive, got {self.h}")
        if self.t_end < 0:
            raise ValidationError(f"horizon must be nonnegative, got {self.t_end}")
        if self.retraction not in RETRACTION_POLICIES:
            raise ValidationError(
                f"retraction must be one of {RETRACTION_POLICIES}, got {self.retraction!r}"
            )
        if self.retraction == "on_drift" and self.drift_threshold <= 0:
            raise ValidationError("drift_threshold must be positive for on_drift")
        if self.record_stride < 1:
            raise ValidationError("record_stride must be a positive integer")


@dataclass(frozen=True)
class Trajectory:
    """Recorded snapshots of an integration run.

    times: (K,) strictly increasing; states: (K, N, n, p);
    drift: (K,) orthonormality defects; diameters: (K,) ensemble diameters.
    """

    times: np.ndarray
    states: np.ndarray
    drift: np.ndarray
    diameters: np.ndarray

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def initial(self) -> np.ndarray:
        return self.states[0]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def spacing(self) -> float:
        """Grid spacing of the recorded series (h * record_stride)."""
        if len(self) < 2:
            raise InsufficientDataError("trajectory has fewer than two snapshots")
        return float(self.times[1] - self.times[0])


def integrate(initial, cfg: ModelConfig, icfg: IntegratorConfig) -> Trajectory:
    """Integrate the system from ``initial`` over [0, t_end].

    The horizon is rounded to a whole number of steps. Raises
    :class:`DivergenceError` carrying the last good time when any state
    entry becomes non-finite.
    """
    s = validate_ensemble(initial)
    s = _check_state_shape(s, cfg)
    h = icfg.h
    n_steps = int(round(icfg.t_end / h))

    record_at = list(range(0, n_steps + 1, icfg.record_stride))
    if record_at[-1] != n_steps:
        record_at.append(n_steps)
    total = len(record_at)
    times = np.empty(total)
    states = np.empty((total,) + s.shape)
    drift = np.empty(total)
    diameters = np.empty(total)

    def record(slot: int, step: int, state: np.ndarray) -> None:
        times[slot] = step * h
        states[slot] = state
        drift[slot] = orthonormality_drift(state)
        diameters[slot] = ensemble_diameter(state)

    record(0, 0, s)
    slot = 1
    next_record = record_at[slot] if total > 1 else None

    # overflow in a diverging step is reported through DivergenceError, not
    # as a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, n_steps + 1):
            k1 = rhs(s, cfg)
            k2 = rhs(s + (0.5 * h) * k1, cfg)
            k3 = rhs(s + (0.5 * h) * k2, cfg)
            k4 = rhs(s + h * k3, cfg)
            s = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(s)):
                raise DivergenceError(
                    f"non-finite state at t = {step * h:.6g}",
                    last_good_time=(step - 1) * h,
                )
            if icfg.retraction == "every_step":
                s = _polar_unchecked(s)
            elif icfg.retraction == "on_drift":
                if orthonormality_drift(s) > icfg.drift_threshold:
                    s = _polar_unchecked(s)
            if step == next_record:
                record(slot, step, s)
                slot += 1
                next_record = record_at[slot] if slot < total else None

    return Trajectory(times=times, states=states, drift=drift, diameters=diameters)


def integrate_pair(
    init1, init2, cfg: ModelConfig, icfg: IntegratorConfig
) -> tuple[Trajectory, Trajectory]:
    """Integrate two initial ensembles under one configuration; the returned
    trajectories share their time grid bitwise."""
    init1 = np.asarray(init1, dtype=float)
    init2 = np.asarray(init2, dtype=float)
    if init1.shape != init2.shape:
        raise DimensionError(
            f"paired ensembles must match: {init1.shape} vs {init2.shape}"
        )
    traj1 = integrate(init1, cfg, icfg)
    traj2 = integrate(init2, cfg, icfg)
    return traj1, traj2


def _require_uniform(times: np.ndarray) -> float:
    if times.shape[0] < 2:
        raise InsufficientDataError("need at least two samples")
    h = float(times[1] - times[0])
    gaps = np.diff(times)
    if h <= 0 or np.max(np.abs(gaps - h)) > 1e-9 * max(h, 1.0):
        raise ValidationError("series is not on a uniform time grid")
    return h


def dini_derivative(series_t, series_y, index: int) -> float:
    """Finite-difference derivative estimate of a sampled series: central
    difference at interior points (O(h^2)), forward difference at the left
    edge. The final point is out of range."""
    t = np.asarray(series_t, dtype=float)
    y = np.asarray(series_y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise DimensionError(f"series shapes differ: {t.shape} vs {y.shape}")
    h = _require_uniform(t)
    last = t.shape[0] - 1
    if index == 0:
        return float((y[1] - y[0]) / h)
    if 1 <= index <= last - 1:
        return float((y[index + 1] - y[index - 1]) / (2.0 * h))
    raise IndexError(f"index {index} out of differentiable range [0, {last - 1}]")


def dini_derivative_series(series_t, series_y) -> np.ndarray:
    """Central-difference derivative at every interior grid point (vectorized
    companion of :func:`dini_derivative`; same stencil)."""
    t = np.asarray(series_t, dtype=float)
    y = np.asarray(series_y, dtype=float)
    h = _require_uniform(t)
    if t.shape[0] < 3:
        raise InsufficientDataError("need at least three samples for interior slopes")
    return (y[2:] - y[:-2]) / (2.0 * h)
