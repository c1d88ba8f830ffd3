"""Measured counterparts of everything the theory predicts: pairwise
correlation matrices and the gap between two solutions' correlation sets,
consensus detection, exponential-rate fitting, uniform stability gains,
differential-inequality audits, and the cubic whose roots fence the running
diameter.

Each audit compares a finite-difference derivative of a recorded series
against the corresponding bound evaluated on the same grid. The audits
accept a named ``mutation`` that deliberately weakens their bound; a healthy
implementation must fail under the mutation on an adversarial run, which is
how the test suite proves the audits can detect violations at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    InsufficientDataError,
    UndefinedGainError,
    ValidationError,
)
from .integrate import Trajectory, dini_derivative_series
from .manifold import ensemble_lp_distance
from .model import (
    ModelConfig,
    check_framework,
    contraction_slack,
    cubic_coefficient,
    cubic_invariant_roots,
    diameter_threshold,
)

# distances below this are treated as zero: the norm is not differentiable
# there and the per-agent inequality is vacuous
DISTANCE_FLOOR = 1e-12

# values are floored here before taking logs in rate fits
LOG_FLOOR = 1e-300


def audit_tolerance(spacing: float) -> float:
    """Violation allowance for an audit on a grid with the given spacing:
    an absolute floor plus the O(h^2) finite-difference error."""
    return 1e-6 + 10.0 * spacing ** 2


# ---------------------------------------------------------------------------
# correlations


def correlations(states) -> np.ndarray:
    """All pairwise products A[j, i] = S_j^T S_i as an (N, N, p, p) array.

    Each product is computed once and mirrored, so A[i, j] equals the
    transpose of A[j, i] bit for bit.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 3:
        raise DimensionError(f"ensemble must be (N, n, p), got shape {states.shape}")
    count, _, p = states.shape
    a = np.empty((count, count, p, p))
    for j in range(count):
        for i in range(j, count):
            m = states[j].T @ states[i]
            a[j, i] = m
            if i != j:
                a[i, j] = m.T
    return a


def _correlation_stack(states) -> np.ndarray:
    # fast unmirrored variant for series work
    return np.einsum("jab,iac->jibc", states, states)


def correlation_gap_components(s1, s2) -> tuple[float, float]:
    """Squared l2 gaps between two ensembles' correlation sets: the plain
    gap sum_ij ||A_ji - B_ji||^2 and the gap of their skew parts."""
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    if s1.shape != s2.shape or s1.ndim != 3:
        raise DimensionError(f"ensemble shapes differ: {s1.shape} vs {s2.shape}")
    da = _correlation_stack(s1) - _correlation_stack(s2)
    plain = float(np.sum(da * da))
    skew = da - np.swapaxes(da, -2, -1)
    return plain, float(np.sum(skew * skew))


def correlation_diameter(s1, s2) -> float:
    """Squared correlation gap: plain component plus skew component.

    This is a squared quantity by definition; it is the value whose
    exponential decay certifies that every pairwise correlation converges.
    """
    plain, skew = correlation_gap_components(s1, s2)
    return plain + skew


def correlation_gap_series(traj1: Trajectory, traj2: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Per-snapshot gap components between two aligned trajectories."""
    _require_aligned(traj1, traj2)
    total = len(traj1)
    plain = np.empty(total)
    skew = np.empty(total)
    for k in range(total):
        plain[k], skew[k] = correlation_gap_components(traj1.states[k], traj2.states[k])
    return plain, skew


def _require_aligned(traj1: Trajectory, traj2: Trajectory) -> None:
    if traj1.states.shape != traj2.states.shape or not np.array_equal(
        traj1.times, traj2.times
    ):
        raise DimensionError("trajectories are not on identical time grids")


# ---------------------------------------------------------------------------
# consensus detection


@dataclass(frozen=True)
class ConsensusStatus:
    """Outcome of trailing-window consensus detection.

    kind: "complete" (all correlations settle at the identity), "partial"
    (all correlations settle but not at the identity), or "none".
    ``limits`` holds the trailing-average correlations when they settle.
    """

    kind: str
    limits: np.ndarray | None
    max_identity_gap: float
    max_variation: float


def consensus_status(traj: Trajectory, window: float, tol: float = 1e-6) -> ConsensusStatus:
    """Classify the trailing ``window`` time units of a trajectory."""
    times = traj.times
    if window <= 0:
        raise ValidationError("window must be positive")
    span = float(times[-1] - times[0])
    if window >= span:
        raise InsufficientDataError(
            f"window {window} does not fit inside the trajectory span {span}"
        )
    mask = times >= times[-1] - window
    picked = np.nonzero(mask)[0]
    if picked.shape[0] < 2:
        raise InsufficientDataError("fewer than two snapshots in the window")

    count, _, p = traj.states[0].shape
    stack = np.empty((picked.shape[0],) + (count, count, p, p))
    for slot, k in enumerate(picked):
        stack[slot] = _correlation_stack(traj.states[k])

    eye = np.eye(p)
    identity_gap = np.sqrt(np.sum((stack - eye) ** 2, axis=(-2, -1)))
    max_identity_gap = float(np.max(identity_gap))
    mean = stack.mean(axis=0)
    variation = np.sqrt(np.sum((stack - mean) ** 2, axis=(-2, -1)))
    max_variation = float(np.max(variation))

    if max_identity_gap <= tol:
        kind = "complete"
    elif max_variation <= tol:
        kind = "partial"
    else:
        kind = "none"
    limits = mean if kind in ("complete", "partial") else None
    return ConsensusStatus(
        kind=kind,
        limits=limits,
        max_identity_gap=max_identity_gap,
        max_variation=max_variation,
    )


# ---------------------------------------------------------------------------
# rate fitting and stability gain


def fit_decay_rate(times, values, fit_window: tuple[float, float]) -> tuple[float, float]:
    """Least-squares slope of log(values) against time over the window,
    negated so decay is positive, together with the fit's r^2."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise DimensionError(f"series shapes differ: {times.shape} vs {values.shape}")
    lo, hi = fit_window
    mask = (times >= lo) & (times <= hi)
    if int(np.count_nonzero(mask)) < 3:
        raise InsufficientDataError("fewer than three points in the fit window")
    t = times[mask]
    logs = np.log(np.maximum(values[mask], LOG_FLOOR))
    slope, intercept = np.polyfit(t, logs, 1)
    predicted = slope * t + intercept
    ss_res = float(np.sum((logs - predicted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    scale = (1.0 + abs(float(logs.mean()))) ** 2
    if ss_tot <= 1e-24 * scale:
        # constant series: a flat fit is perfect, anything else is no fit
        r_squared = 1.0 if ss_res <= 1e-18 * scale else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    return float(-slope), float(r_squared)


def stability_gain(traj1: Trajectory, traj2: Trajectory, p_exp: float) -> float:
    """Largest ratio over the grid of the lp ensemble distance to its
    initial value. Raises :class:`UndefinedGainError` when the initial
    distance is zero."""
    _require_aligned(traj1, traj2)
    d0 = ensemble_lp_distance(traj1.initial, traj2.initial, p_exp)
    if d0 == 0.0:
        raise UndefinedGainError("identical initial data: gain undefined")
    diffs = traj1.states - traj2.states
    norms = np.sqrt(np.sum(diffs * diffs, axis=(-2, -1)))  # (K, N)
    if p_exp == 1:
        dist = norms.sum(axis=1)
    else:
        dist = (norms ** p_exp).sum(axis=1) ** (1.0 / p_exp)
    return float(np.max(dist) / d0)


# ---------------------------------------------------------------------------
# inequality audits


@dataclass(frozen=True)
class InequalityAudit:
    """Result of checking measured slopes against a bound on a grid.

    ``lhs``/``rhs`` are aligned with ``times`` (interior grid points); for
    per-agent audits they are 2-D with one column per agent. ``audited``
    marks where the comparison was meaningful. ``max_violation`` is
    max(lhs - rhs) over audited points, clipped at zero.
    """

    name: str
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    audited: np.ndarray
    max_violation: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol


def _finish_audit(name, times, lhs, rhs, audited, tol) -> InequalityAudit:
    gap = np.where(audited, lhs - rhs, -np.inf)
    max_violation = float(max(0.0, np.max(gap))) if gap.size else 0.0
    return InequalityAudit(
        name=name,
        times=times,
        lhs=lhs,
        rhs=rhs,
        audited=audited,
        max_violation=max_violation,
        tol=tol,
    )


def audit_diameter_bound_series(
    times, diameters, cfg: ModelConfig, mutation: str | None = None
) -> InequalityAudit:
    """Series-level core of :func:`audit_diameter_bound`; takes the recorded
    time grid and diameter series directly (used by the CSV re-audit)."""
    stats = cfg.topology.xi_stats()
    if mutation not in (None, "drop_cubic_term"):
        raise ValidationError(f"unknown mutation {mutation!r}")
    times = np.asarray(times, dtype=float)
    d = np.asarray(diameters, dtype=float)
    lhs = dini_derivative_series(times, d)
    interior = d[1:-1]
    half = cfg.kappa * stats.xi_min ** 2 / 2.0
    rhs = -half * interior + 2.0 * np.sqrt(cfg.p) * cfg.freq_spread
    if mutation != "drop_cubic_term":
        rhs = rhs + (half / 2.0) * interior ** 3
    audited = np.ones_like(lhs, dtype=bool)
    spacing = float(times[1] - times[0])
    return _finish_audit(
        "diameter_bound", times[1:-1], lhs, rhs, audited, audit_tolerance(spacing)
    )


def audit_diameter_bound(
    traj: Trajectory, cfg: ModelConfig, mutation: str | None = None
) -> InequalityAudit:
    """Check that the measured slope of the ensemble diameter D(t) stays
    below -k xi_min^2 / 2 * D + k xi_min^2 / 4 * D^3 + 2 sqrt(p) * spread.

    mutation="drop_cubic_term" removes the D^3 term (sensitivity check).
    """
    return audit_diameter_bound_series(traj.times, traj.diameters, cfg, mutation)


def audit_correlation_contraction_series(
    times,
    plain,
    skewed,
    diam1,
    diam2,
    cfg: ModelConfig,
    mutation: str | None = None,
) -> InequalityAudit:
    """Series-level core of :func:`audit_correlation_contraction`: takes the
    plain/skew gap components and both diameter series on one grid."""
    stats = cfg.topology.xi_stats()
    if mutation not in (None, "slack_factor_one"):
        raise ValidationError(f"unknown mutation {mutation!r}")
    times = np.asarray(times, dtype=float)
    plain = np.asarray(plain, dtype=float)
    skewed = np.asarray(skewed, dtype=float)
    gap = plain + skewed
    lhs = dini_derivative_series(times, gap)
    d1 = np.asarray(diam1, dtype=float)[1:-1]
    d2 = np.asarray(diam2, dtype=float)[1:-1]
    if mutation == "slack_factor_one":
        # deliberately weakened slack: leading diameter factor 5 -> 1
        slack = (
            cfg.kappa * stats.xi_max ** 2 * np.sqrt(cfg.p) * (d1 + d2)
            + 3.0 * cfg.kappa * stats.xi_max * stats.spread
            + cfg.freq_spread
        )
    else:
        slack = np.array(
            [contraction_slack(cfg, float(a), float(b)) for a, b in zip(d1, d2)]
        )
    rate_plain = 4.0 * (cfg.kappa * stats.xi_min * stats.xi_mean - slack)
    rate_skew = cfg.kappa * (4.0 * stats.xi_min * stats.xi_mean - stats.xi_max ** 2)
    rhs = -rate_plain * plain[1:-1] - rate_skew * skewed[1:-1]
    audited = np.ones_like(lhs, dtype=bool)
    spacing = float(times[1] - times[0])
    return _finish_audit(
        "correlation_contraction", times[1:-1], lhs, rhs, audited, audit_tolerance(spacing)
    )


def audit_correlation_contraction(
    traj1: Trajectory,
    traj2: Trajectory,
    cfg: ModelConfig,
    mutation: str | None = None,
) -> InequalityAudit:
    """Check the contraction inequality for the squared correlation gap
    between two solutions:

        d/dt (X + Y) <= -4 (k xi_min xi_mean - slack(t)) X
                        - k (4 xi_min xi_mean - xi_max^2) Y

    with X the plain gap, Y the skew-part gap, and slack(t) evaluated at the
    two recorded diameters. mutation="slack_factor_one" weakens the slack's
    leading diameter factor from 5 to 1 (sensitivity check).
    """
    _require_aligned(traj1, traj2)
    plain, skewed = correlation_gap_series(traj1, traj2)
    return audit_correlation_contraction_series(
        traj1.times, plain, skewed, traj1.diameters, traj2.diameters, cfg, mutation
    )


def audit_agent_distance_bound_series(
    times, agent_dists, z, cfg: ModelConfig, mutation: str | None = None
) -> InequalityAudit:
    """Series-level core of :func:`audit_agent_distance_bound`: takes the
    (K, N) per-agent distance series and the running maximum-diameter
    series Z."""
    if mutation not in (None, "drop_state_term"):
        raise ValidationError(f"unknown mutation {mutation!r}")
    times = np.asarray(times, dtype=float)
    dists = np.asarray(agent_dists, dtype=float)
    if dists.ndim != 2 or dists.shape[0] != times.shape[0]:
        raise DimensionError(
            f"agent distances must be (len(times), N), got {dists.shape}"
        )
    count = dists.shape[1]
    if count != cfg.agent_count:
        raise DimensionError(
            f"distance columns ({count}) do not match agent count ({cfg.agent_count})"
        )
    spacing = float(times[1] - times[0])
    lhs = (dists[2:] - dists[:-2]) / (2.0 * spacing)  # (K-2, N)

    weights = cfg.topology.weights
    row_sums = weights.sum(axis=1)
    interior = dists[1:-1]
    neighbor_term = interior @ weights / count  # (1/N) sum_k a_ik x_k
    self_term = interior * row_sums / count
    rhs = cfg.kappa * (neighbor_term - self_term)
    if mutation != "drop_state_term":
        z_interior = np.asarray(z, dtype=float)[1:-1]
        rhs = rhs + cfg.kappa * z_interior[:, None] * self_term
    audited = interior >= DISTANCE_FLOOR
    return _finish_audit(
        "agent_distance_bound", times[1:-1], lhs, rhs, audited, audit_tolerance(spacing)
    )


def audit_agent_distance_bound(
    traj1: Trajectory,
    traj2: Trajectory,
    cfg: ModelConfig,
    mutation: str | None = None,
) -> InequalityAudit:
    """Check, for every agent i, that the measured slope of x_i = ||S_i - T_i||
    stays below

        (k/N) sum_k a_ik x_k - (k/N) sum_k a_ik x_i
        + (k Z(t)/N) sum_k a_ik x_i,

    with Z(t) the larger of the two diameters. Holds for any symmetric
    topology. Points with x_i below the distance floor are skipped (the norm
    is not differentiable at zero and the bound is vacuous there).
    mutation="drop_state_term" removes the Z(t) term (sensitivity check).
    """
    _require_aligned(traj1, traj2)
    diffs = traj1.states - traj2.states
    dists = np.sqrt(np.sum(diffs * diffs, axis=(-2, -1)))  # (K, N)
    z = np.maximum(traj1.diameters, traj2.diameters)
    return audit_agent_distance_bound_series(traj1.times, dists, z, cfg, mutation)


# ---------------------------------------------------------------------------
# cubic invariant-region analysis


@dataclass(frozen=True)
class CubicReport:
    """Analysis of f(r) = r^3 - 2r + coefficient on (0, sqrt(2)).

    When f is negative at the diameter threshold, the two interior roots
    bracket it and the sub-threshold region is positively invariant for the
    running diameter.
    """

    coefficient: float
    roots_in_range: tuple[float, ...]
    threshold: float
    f_at_bound: float
    invariant_region_ok: bool


def cubic_analysis(cfg: ModelConfig) -> CubicReport:
    """Locate the invariant-region roots and evaluate f at the diameter
    threshold. An empty root tuple with ``invariant_region_ok`` False means
    the coefficient is too large for any invariant region."""
    coeff = cubic_coefficient(cfg)
    roots = cubic_invariant_roots(coeff)
    threshold = diameter_threshold(cfg)
    f_at_bound = threshold ** 3 - 2.0 * threshold + coeff
    return CubicReport(
        coefficient=coeff,
        roots_in_range=roots,
        threshold=threshold,
        f_at_bound=f_at_bound,
        invariant_region_ok=bool(f_at_bound < 0.0),
    )


def diameter_below_threshold(traj: Trajectory, cfg: ModelConfig) -> bool:
    """True when every recorded diameter stays strictly below the threshold.

    Precondition: the sufficient conditions hold at the start of the
    trajectory (raises :class:`ValidationError` otherwise).
    """
    report = check_framework(cfg, traj.initial)
    if not report.satisfied:
        failing = [c.name for c in report.conditions() if not c.satisfied]
        raise ValidationError(
            f"sufficient conditions violated at t=0: {', '.join(failing)}"
        )
    return bool(np.all(traj.diameters < diameter_threshold(cfg)))


# ---------------------------------------------------------------------------
# weighted power-mean gap


def holder_gap(xi, x, p_exp: float) -> float:
    """sum_ik xi_i xi_k x_k x_i^(p-1) - sum_ik xi_i xi_k x_i^p.

    Nonpositive for xi > 0, x >= 0, p_exp >= 1 (weighted power-mean
    comparison). Evaluated in the pairwise-symmetrized form
    sum_{i<k} xi_i xi_k (x_k - x_i)(x_i^(p-1) - x_k^(p-1)), whose terms are
    individually nonpositive, so the result is exactly zero at the equality
    cases (all x equal, or p_exp = 1) and never spuriously positive.
    """
    xi = np.asarray(xi, dtype=float)
    x = np.asarray(x, dtype=float)
    if xi.shape != x.shape or xi.ndim != 1:
        raise DimensionError(f"length mismatch: {xi.shape} vs {x.shape}")
    if np.any(xi <= 0):
        raise ValidationError("weights xi must be strictly positive")
    if np.any(x < 0):
        raise ValidationError("values x must be nonnegative")
    if p_exp < 1:
        raise ValidationError(f"p_exp must be >= 1, got {p_exp}")
    powers = x ** (p_exp - 1.0)
    pair = np.outer(xi, xi) * (x[None, :] - x[:, None]) * (powers[:, None] - powers[None, :])
    return float(np.sum(np.triu(pair, k=1)))
