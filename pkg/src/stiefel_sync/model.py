"""The coupled dynamical system on the Stiefel manifold.

N agents S_1..S_N in St(p, n) evolve by

    dS_i/dt = S_i W_i + kappa * (C_i - (S_i S_i^T C_i + S_i C_i^T S_i) / 2),
    C_i = (1/N) * sum_k a_ik S_k,

where W_i is a p x p skew generator (the agent's intrinsic rotation) and
(a_ik) is a symmetric nonnegative coupling topology. This module holds the
topology and configuration types, the right-hand side, the quadratic
disagreement potential, the co-rotating frame transform, and the
sufficient-condition checker for consensus together with its derived
contraction-rate bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionError,
    DisconnectedTopologyError,
    UnsupportedTopologyError,
    ValidationError,
)
from .linalg import expm_skew, require_skew
from .manifold import ensemble_diameter
from .tolerances import DEFAULT, Tolerances


# ---------------------------------------------------------------------------
# topology


def _connected(weights: np.ndarray) -> bool:
    """Union-find connectivity over strictly positive off-diagonal weights."""
    n = weights.shape[0]
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if weights[i, j] > 0.0:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    root = find(0)
    return all(find(i) == root for i in range(n))


@dataclass(frozen=True)
class XiStats:
    """Statistics of the separable weight factors."""

    xi_min: float
    xi_max: float
    xi_mean: float

    @property
    def spread(self) -> float:
        return self.xi_max - self.xi_min


@dataclass(frozen=True)
class Topology:
    """Symmetric nonnegative coupling weights, optionally of separable
    (rank-one) form a_ik = xi_i * xi_k with xi_i > 0.

    Construct through :meth:`separable` or :meth:`general`; both validate
    symmetry, nonnegativity, and connectivity of the positive-weight graph.
    """

    weights: np.ndarray
    xi: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DimensionError(f"weights must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValidationError("weights contain NaN or Inf entries")
        asym = np.max(np.abs(w - w.T))
        if asym > DEFAULT.algebraic * max(1.0, float(np.max(np.abs(w)))):
            raise ValidationError(f"weights are not symmetric (defect {asym:.3e})")
        w = (w + w.T) / 2.0
        if np.any(w < 0.0):
            raise ValidationError("weights must be nonnegative")
        if not _connected(w):
            raise DisconnectedTopologyError(
                "positive-weight edges do not connect all agents"
            )
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.xi is not None:
            xi = np.asarray(self.xi, dtype=float)
            if xi.ndim != 1 or xi.shape[0] != w.shape[0]:
                raise DimensionError(f"xi must have length {w.shape[0]}, got {xi.shape}")
            if np.any(xi <= 0.0):
                raise ValidationError("separable factors must be strictly positive")
            mismatch = np.max(np.abs(w - np.outer(xi, xi)))
            if mismatch > DEFAULT.separable_match * max(1.0, float(np.max(w))):
                raise ValidationError(
                    f"weights do not match outer(xi, xi) (defect {mismatch:.3e})"
                )
            xi.setflags(write=False)
            object.__setattr__(self, "xi", xi)

    @classmethod
    def separable(cls, xi) -> "Topology":
        xi = np.asarray(xi, dtype=float)
        return cls(weights=np.outer(xi, xi), xi=xi)

    @classmethod
    def general(cls, weights) -> "Topology":
        return cls(weights=np.asarray(weights, dtype=float), xi=None)

    @property
    def kind(self) -> str:
        return "separable" if self.xi is not None else "general"

    @property
    def agent_count(self) -> int:
        return self.weights.shape[0]

    def xi_stats(self) -> XiStats:
        if self.xi is None:
            raise UnsupportedTopologyError("xi statistics need a separable topology")
        return XiStats(
            xi_min=float(np.min(self.xi)),
            xi_max=float(np.max(self.xi)),
            xi_mean=float(np.mean(self.xi)),
        )


# ---------------------------------------------------------------------------
# frequencies


def frequency_spread(freqs) -> float:
    """Largest pairwise Frobenius distance among the skew generators."""
    freqs = np.asarray(freqs, dtype=float)
    if freqs.ndim != 3:
        raise DimensionError(f"frequencies must be (N, p, p), got shape {freqs.shape}")
    if freqs.shape[0] == 1:
        return 0.0
    diffs = freqs[:, None] - freqs[None, :]
    return float(np.max(np.sqrt(np.sum(diffs * diffs, axis=(-2, -1)))))


def zero_frequencies(count: int, p: int) -> np.ndarray:
    return np.zeros((count, p, p))


def common_frequencies(skew, count: int) -> np.ndarray:
    skew = require_skew(skew)
    return np.repeat(skew[None, :, :], count, axis=0)


def random_skew(p: int, seed=None, scale: float = 1.0) -> np.ndarray:
    """Random skew generator with Frobenius norm ``scale`` (zero when p = 1)."""
    if p == 1:
        return np.zeros((1, 1))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g = rng.standard_normal((p, p))
    s = (g - g.T) / 2.0
    norm = np.linalg.norm(s)
    return s * (scale / norm) if norm > 0 else s


def random_frequencies(count: int, p: int, spread: float, seed=None, common=None) -> np.ndarray:
    """Skew generators with max pairwise distance exactly ``spread``.

    Deviations around the (optional) common part are centered and rescaled so
    the realized heterogeneity matches the request. p = 1 admits only zero
    generators, so any positive spread is rejected there.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    base = np.zeros((p, p)) if common is None else require_skew(common)
    if spread < 0:
        raise ValidationError("spread must be nonnegative")
    if spread == 0.0 or count == 1:
        return np.repeat(base[None, :, :], count, axis=0)
    if p == 1:
        raise ValidationError("1 x 1 skew generators are zero; positive spread impossible")
    devs = np.stack([(lambda g: (g - g.T) / 2.0)(rng.standard_normal((p, p))) for _ in range(count)])
    devs -= devs.mean(axis=0)
    current = frequency_spread(devs)
    if current == 0.0:
        raise ValidationError("degenerate frequency sample; retry with another seed")
    return base[None, :, :] + devs * (spread / current)


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ModelConfig:
    """Full system specification: coupling strength, topology, and the
    per-agent skew generators, with dimensions pinned explicitly."""

    kappa: float
    topology: Topology
    freqs: np.ndarray
    n: int
    p: int
    freq_spread: float = field(init=False)

    def __post_init__(self):
        if self.kappa < 0:
            raise ValidationError(f"kappa must be nonnegative, got {self.kappa}")
        if not 1 <= self.p <= self.n:
            raise DimensionError(f"need 1 <= p <= n, got p={self.p}, n={self.n}")
        freqs = np.asarray(self.freqs, dtype=float)
        count = self.topology.agent_count
        if freqs.shape != (count, self.p, self.p):
            raise DimensionError(
                f"frequencies must be ({count}, {self.p}, {self.p}), got {freqs.shape}"
            )
        for i in range(count):
            require_skew(freqs[i], name=f"frequency generator {i}")
        freqs.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "freq_spread", frequency_spread(freqs))

    @property
    def agent_count(self) -> int:
        return self.topology.agent_count


def _check_state_shape(states: np.ndarray, cfg: ModelConfig) -> np.ndarray:
    states = np.asarray(states, dtype=float)
    expected = (cfg.agent_count, cfg.n, cfg.p)
    if states.shape != expected:
        raise DimensionError(f"state must have shape {expected}, got {states.shape}")
    return states


# ---------------------------------------------------------------------------
# dynamics


def rhs(states, cfg: ModelConfig) -> np.ndarray:
    """Velocity of every agent; each output lies in the tangent space at
    its agent whenever the agent is on the manifold.

    The weighted mean C is formed by one fixed-order matrix product, so
    repeated evaluations are bitwise deterministic.
    """
    s = _check_state_shape(states, cfg)
    count, n, p = s.shape
    c = (cfg.topology.weights @ s.reshape(count, n * p)).reshape(count, n, p) / count
    st = s.transpose(0, 2, 1)
    m1 = st @ c
    m2 = c.transpose(0, 2, 1) @ s
    coupling = c - 0.5 * (s @ m1 + s @ m2)
    return s @ cfg.freqs + cfg.kappa * coupling


def potential(states, topology: Topology) -> float:
    """Weighted total squared disagreement (1/N) * sum_ik a_ik ||S_i - S_k||^2.

    Nonnegative; zero exactly on consensus of every connected component
    (a single one, by construction)."""
    states = np.asarray(states, dtype=float)
    count = topology.agent_count
    if states.ndim != 3 or states.shape[0] != count:
        raise DimensionError(f"state must be ({count}, n, p), got {states.shape}")
    diffs = states[:, None] - states[None, :]
    sq = np.sum(diffs * diffs, axis=(-2, -1))
    return float(np.sum(topology.weights * sq) / count)


def moving_frame(states, common_skew, t: float) -> np.ndarray:
    """Observe the ensemble in the frame co-rotating with exp(t * skew):
    right-multiplies every agent by exp(-t * skew). Stays on the manifold."""
    states = np.asarray(states, dtype=float)
    rot = expm_skew(-t * require_skew(common_skew))
    return states @ rot


# ---------------------------------------------------------------------------
# sufficient conditions for consensus


@dataclass(frozen=True)
class FrameworkCondition:
    """One strict inequality lhs < rhs with its evaluated sides."""

    name: str
    lhs: float
    rhs: float

    @property
    def satisfied(self) -> bool:
        return self.lhs < self.rhs

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


@dataclass(frozen=True)
class FrameworkReport:
    """Evaluated margins of the four sufficient conditions.

    ``delta_lower`` is a certified lower bound on the exponential contraction
    rate of the correlation gap between nearby solutions, or None when the
    conditions fail or leave no positive margin. It is computed from the
    worst-case running diameter max(initial diameter, lower cubic root),
    which the invariant-region argument shows is never exceeded.
    """

    weight_ratio: FrameworkCondition
    weight_spread: FrameworkCondition
    coupling_margin: FrameworkCondition
    initial_diameter: FrameworkCondition
    delta_lower: float | None

    def conditions(self) -> tuple[FrameworkCondition, ...]:
        return (
            self.weight_ratio,
            self.weight_spread,
            self.coupling_margin,
            self.initial_diameter,
        )

    @property
    def satisfied(self) -> bool:
        return all(c.satisfied for c in self.conditions())


def _require_separable(cfg: ModelConfig) -> XiStats:
    if cfg.topology.xi is None:
        raise UnsupportedTopologyError(
            "sufficient conditions are stated for separable topologies only"
        )
    return cfg.topology.xi_stats()


def coupling_margin_threshold(cfg: ModelConfig) -> float:
    """Upper bound required of freq_spread / kappa (third condition)."""
    stats = _require_separable(cfg)
    shrink = 2.0 - 1.0 / (100.0 * cfg.p)
    numer = (stats.xi_min * stats.xi_mean - 3.0 * stats.xi_max * stats.spread) * shrink
    denom = 80.0 * stats.xi_max ** 2 * cfg.p / stats.xi_min ** 2 + shrink
    return numer / denom


def diameter_threshold(cfg: ModelConfig) -> float:
    """Initial-diameter bound of the fourth condition; also the level that
    the running diameter provably never reaches."""
    stats = _require_separable(cfg)
    if cfg.kappa <= 0:
        raise ValidationError("diameter threshold needs kappa > 0")
    numer = (
        stats.xi_min * stats.xi_mean
        - 3.0 * stats.xi_max * stats.spread
        - cfg.freq_spread / cfg.kappa
    )
    return numer / (10.0 * stats.xi_max ** 2 * math.sqrt(cfg.p))


def contraction_slack(cfg: ModelConfig, diam1: float, diam2: float) -> float:
    """Perturbation term eating into the contraction rate of the correlation
    gap, evaluated at the two solutions' instantaneous diameters:

        5 kappa xi_max^2 sqrt(p) (d1 + d2) + 3 kappa xi_max spread + freq_spread
    """
    stats = _require_separable(cfg)
    if diam1 < 0 or diam2 < 0:
        raise ValidationError("diameters must be nonnegative")
    return (
        5.0 * cfg.kappa * stats.xi_max ** 2 * math.sqrt(cfg.p) * (diam1 + diam2)
        + 3.0 * cfg.kappa * stats.xi_max * stats.spread
        + cfg.freq_spread
    )


def decay_rate_bound(cfg: ModelConfig, slack_sup: float) -> float:
    """Guaranteed contraction rate of the correlation gap given an upper
    bound on the slack: min(4 (kappa xi_min xi_mean - slack_sup),
    kappa (4 xi_min xi_mean - xi_max^2)). Positive only under the
    sufficient conditions with positive slack margin."""
    stats = _require_separable(cfg)
    return min(
        4.0 * (cfg.kappa * stats.xi_min * stats.xi_mean - slack_sup),
        cfg.kappa * (4.0 * stats.xi_min * stats.xi_mean - stats.xi_max ** 2),
    )


# largest constant term for which r^3 - 2r + c still has two roots in (0, sqrt(2))
CUBIC_COEFF_LIMIT = 4.0 * math.sqrt(2.0) / (3.0 * math.sqrt(3.0))


def cubic_coefficient(cfg: ModelConfig) -> float:
    """Constant term 8 sqrt(p) freq_spread / (kappa xi_min^2) of the cubic
    r^3 - 2r + c that bounds the diameter derivative."""
    stats = _require_separable(cfg)
    if cfg.kappa <= 0:
        raise ValidationError("cubic coefficient needs kappa > 0")
    return 8.0 * math.sqrt(cfg.p) * cfg.freq_spread / (cfg.kappa * stats.xi_min ** 2)


def _bisect_newton(f, fprime, lo: float, hi: float) -> float:
    """Root of f in [lo, hi] with f(lo), f(hi) of opposite sign: bisection to
    width 1e-8, then safeguarded Newton polish."""
    flo = f(lo)
    for _ in range(200):
        if hi - lo <= 1e-8:
            break
        mid = (lo + hi) / 2.0
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (flo < 0) == (fmid < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    r = (lo + hi) / 2.0
    for _ in range(8):
        fr = f(r)
        if abs(fr) <= 1e-14:
            break
        step = fr / fprime(r)
        candidate = r - step
        if not lo <= candidate <= hi:
            candidate = (lo + hi) / 2.0
        r = candidate
    return r


def cubic_invariant_roots(c: float) -> tuple[float, ...]:
    """Interior roots of r^3 - 2r + c on (0, sqrt(2)), ascending.

    Two roots exist for 0 < c < CUBIC_COEFF_LIMIT; the open interval holds
    none at c = 0 (they sit on the boundary) or past the limit."""
    if c < 0:
        raise ValidationError("cubic coefficient must be nonnegative")
    if c == 0.0 or c >= CUBIC_COEFF_LIMIT:
        return ()
    crit = math.sqrt(2.0 / 3.0)
    f = lambda r: r ** 3 - 2.0 * r + c
    fprime = lambda r: 3.0 * r ** 2 - 2.0
    if f(crit) >= 0.0:
        return ()
    r1 = _bisect_newton(f, fprime, 0.0, crit)
    r2 = _bisect_newton(f, fprime, crit, math.sqrt(2.0))
    return (r1, r2)


def check_framework(
    cfg: ModelConfig, initial, tol: Tolerances = DEFAULT
) -> FrameworkReport:
    """Evaluate the four sufficient conditions for the given configuration
    and initial ensemble.

    Raises :class:`UnsupportedTopologyError` for general (non-separable)
    topologies: the conditions are formulated in terms of the separable
    factors and generalizing them would change their meaning.
    """
    stats = _require_separable(cfg)
    if cfg.kappa <= 0:
        raise ValidationError("the coupling-margin condition needs kappa > 0")
    initial = _check_state_shape(initial, cfg)

    weight_ratio = FrameworkCondition(
        "weight_ratio",
        lhs=stats.xi_max ** 2,
        rhs=4.0 * stats.xi_min * stats.xi_mean,
    )
    weight_spread = FrameworkCondition(
        "weight_spread",
        lhs=stats.spread,
        rhs=stats.xi_min * stats.xi_mean / (3.0 * stats.xi_max),
    )
    coupling = FrameworkCondition(
        "coupling_margin",
        lhs=cfg.freq_spread / cfg.kappa,
        rhs=coupling_margin_threshold(cfg),
    )
    diam = FrameworkCondition(
        "initial_diameter",
        lhs=ensemble_diameter(initial),
        rhs=diameter_threshold(cfg),
    )
    report_conditions = (weight_ratio, weight_spread, coupling, diam)

    delta_lower = None
    if all(c.satisfied for c in report_conditions):
        roots = cubic_invariant_roots(cubic_coefficient(cfg))
        running_bound = max(diam.lhs, roots[0] if roots else 0.0)
        slack = contraction_slack(cfg, running_bound, running_bound)
        delta = decay_rate_bound(cfg, slack)
        if delta > 0:
            delta_lower = delta

    return FrameworkReport(
        weight_ratio=weight_ratio,
        weight_spread=weight_spread,
        coupling_margin=coupling,
        initial_diameter=diam,
        delta_lower=delta_lower,
    )
