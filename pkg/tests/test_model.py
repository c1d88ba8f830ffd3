"""Model tests: topology validation, dynamics, potential, frame transform,
sufficient conditions, and the derived rate quantities."""

import math

import numpy as np
import pytest

from stiefel_sync.errors import (
    DimensionError,
    DisconnectedTopologyError,
    UnsupportedTopologyError,
    ValidationError,
)
from stiefel_sync.linalg import expm_skew, frobenius
from stiefel_sync.manifold import (
    near_consensus_ensemble,
    random_ensemble,
    random_stiefel,
    tangent_residual,
)
from stiefel_sync.model import (
    ModelConfig,
    Topology,
    check_framework,
    common_frequencies,
    contraction_slack,
    coupling_margin_threshold,
    cubic_coefficient,
    cubic_invariant_roots,
    decay_rate_bound,
    diameter_threshold,
    frequency_spread,
    moving_frame,
    potential,
    random_frequencies,
    random_skew,
    rhs,
    zero_frequencies,
)

from conftest import make_framework_config


def uniform_config(count=4, n=4, p=2, kappa=2.0, freqs=None):
    topo = Topology.separable(np.ones(count))
    if freqs is None:
        freqs = zero_frequencies(count, p)
    return ModelConfig(kappa=kappa, topology=topo, freqs=freqs, n=n, p=p)


class TestTopology:
    def test_separable_outer_product(self):
        xi = np.array([1.0, 2.0, 0.5])
        topo = Topology.separable(xi)
        assert np.max(np.abs(topo.weights - np.outer(xi, xi))) == 0.0
        assert topo.kind == "separable"

    def test_stats(self):
        stats = Topology.separable(np.array([0.5, 1.0, 1.5])).xi_stats()
        assert stats.xi_min == 0.5
        assert stats.xi_max == 1.5
        assert stats.xi_mean == 1.0
        assert stats.spread == 1.0

    def test_rejects_asymmetric(self):
        w = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(ValidationError):
            Topology.general(w)

    def test_rejects_negative(self):
        w = np.array([[0.0, -1.0], [-1.0, 0.0]])
        with pytest.raises(ValidationError):
            Topology.general(w)

    def test_rejects_disconnected(self):
        w = np.zeros((4, 4))
        w[0, 1] = w[1, 0] = 1.0
        w[2, 3] = w[3, 2] = 1.0
        with pytest.raises(DisconnectedTopologyError):
            Topology.general(w)

    def test_rejects_nonpositive_xi(self):
        with pytest.raises(ValidationError):
            Topology.separable(np.array([1.0, 0.0]))

    def test_rejects_mismatched_outer_product(self):
        xi = np.array([1.0, 1.0])
        weights = np.outer(xi, xi)
        weights[0, 1] = weights[1, 0] = 1.5
        with pytest.raises(ValidationError):
            Topology(weights=weights, xi=xi)

    def test_general_stats_unsupported(self):
        topo = Topology.general(np.ones((3, 3)))
        with pytest.raises(UnsupportedTopologyError):
            topo.xi_stats()


class TestFrequencies:
    def test_spread_zero_for_common(self):
        freqs = common_frequencies(random_skew(3, seed=1), 5)
        assert frequency_spread(freqs) == 0.0

    def test_spread_matches_brute_force(self):
        freqs = random_frequencies(5, 3, 0.8, seed=2)
        best = 0.0
        for i in range(5):
            for j in range(5):
                best = max(best, frobenius(freqs[i] - freqs[j]))
        assert abs(frequency_spread(freqs) - best) <= 1e-15

    def test_requested_spread_is_exact(self):
        freqs = random_frequencies(6, 2, 0.37, seed=3)
        assert abs(frequency_spread(freqs) - 0.37) <= 1e-13

    def test_p1_spread_impossible(self):
        with pytest.raises(ValidationError):
            random_frequencies(4, 1, 0.1, seed=4)

    def test_config_validates_skewness(self):
        bad = np.zeros((2, 2, 2))
        bad[0, 0, 0] = 1.0
        with pytest.raises(ValidationError):
            uniform_config(count=2, freqs=bad)


class TestRhs:
    def test_consensus_is_coupling_equilibrium(self):
        s = random_stiefel(5, 2, seed=5)
        states = np.stack([s] * 4)
        rng = np.random.default_rng(6)
        w = rng.uniform(0.5, 1.5, (4, 4))
        topo = Topology.general((w + w.T) / 2)
        cfg = ModelConfig(kappa=3.0, topology=topo, freqs=zero_frequencies(4, 2), n=5, p=2)
        assert np.max(np.abs(rhs(states, cfg))) <= 1e-12

    def test_kappa_zero_gives_pure_drift(self):
        freqs = random_frequencies(3, 2, 0.5, seed=7)
        cfg = uniform_config(count=3, kappa=0.0, freqs=freqs)
        states = random_ensemble(4, 2, 3, seed=8)
        assert np.array_equal(rhs(states, cfg), states @ freqs)

    def test_matches_scalar_kuramoto_form(self):
        # on St(1,2) the flow reduces to dtheta_i = (k/N) sum a_ik sin(theta_k - theta_i)
        thetas = np.array([0.3, 1.1, -2.0])
        states = np.stack([[[np.cos(t)], [np.sin(t)]] for t in thetas])
        kappa = 1.7
        cfg = ModelConfig(
            kappa=kappa,
            topology=Topology.separable(np.ones(3)),
            freqs=zero_frequencies(3, 1),
            n=2,
            p=1,
        )
        v = rhs(states, cfg)
        for i in range(3):
            rate = kappa / 3.0 * np.sum(np.sin(thetas - thetas[i]))
            normal = np.array([[-np.sin(thetas[i])], [np.cos(thetas[i])]])
            assert frobenius(v[i] - rate * normal) <= 1e-13

    def test_tangency_fuzz(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            count = int(rng.integers(2, 7))
            n = int(rng.integers(2, 7))
            p = int(rng.integers(1, min(n, 3) + 1))
            xi = rng.uniform(0.6, 1.4, count)
            spread = float(rng.uniform(0, 1.0)) if p > 1 else 0.0
            freqs = (
                random_frequencies(count, p, spread, int(rng.integers(1e6)))
                if spread > 0
                else zero_frequencies(count, p)
            )
            cfg = ModelConfig(
                kappa=float(rng.uniform(0, 10)),
                topology=Topology.separable(xi),
                freqs=freqs,
                n=n,
                p=p,
            )
            states = random_ensemble(n, p, count, rng)
            v = rhs(states, cfg)
            for i in range(count):
                assert tangent_residual(states[i], v[i]) <= 1e-12

    def test_shape_mismatch(self):
        cfg = uniform_config()
        with pytest.raises(DimensionError):
            rhs(random_ensemble(4, 2, 3, seed=10), cfg)


class TestPotential:
    def test_consensus_zero(self):
        s = random_stiefel(4, 2, seed=11)
        topo = Topology.separable(np.ones(3))
        assert potential(np.stack([s, s, s]), topo) <= 1e-25

    def test_two_agent_formula(self):
        states = random_ensemble(4, 2, 2, seed=12)
        d = frobenius(states[0] - states[1])
        topo = Topology.general(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert abs(potential(states, topo) - d ** 2) <= 1e-12

    def test_matches_double_loop(self):
        states = random_ensemble(4, 2, 5, seed=13)
        rng = np.random.default_rng(14)
        w = rng.uniform(0.1, 2.0, (5, 5))
        topo = Topology.general((w + w.T) / 2)
        expected = 0.0
        for i in range(5):
            for k in range(5):
                expected += topo.weights[i, k] * frobenius(states[i] - states[k]) ** 2
        expected /= 5
        assert abs(potential(states, topo) - expected) <= 1e-12


class TestMovingFrame:
    def test_time_zero_identity(self):
        states = random_ensemble(4, 2, 3, seed=15)
        out = moving_frame(states, random_skew(2, seed=16), 0.0)
        assert np.max(np.abs(out - states)) <= 1e-15

    def test_zero_generator_identity(self):
        states = random_ensemble(4, 2, 3, seed=17)
        out = moving_frame(states, np.zeros((2, 2)), 5.0)
        assert np.array_equal(out, states)

    def test_preserves_manifold(self):
        states = random_ensemble(5, 3, 4, seed=18)
        out = moving_frame(states, random_skew(3, seed=19), 2.5)
        gram = np.swapaxes(out, -2, -1) @ out
        assert np.max(np.abs(gram - np.eye(3))) <= 1e-12

    def test_frame_equivariance_for_commuting_generators(self):
        # generators proportional to a common skew commute with it; observing
        # in the rotating frame shifts every generator by the common part
        count, n, p = 4, 5, 2
        base = random_skew(p, seed=20)
        coeffs = np.array([0.5, 1.0, -0.3, 2.0])
        freqs = np.stack([c * base for c in coeffs])
        topo = Topology.separable(np.ones(count))
        cfg = ModelConfig(kappa=1.3, topology=topo, freqs=freqs, n=n, p=p)
        shifted = ModelConfig(
            kappa=1.3, topology=topo, freqs=freqs - base[None], n=n, p=p
        )
        states = random_ensemble(n, p, count, seed=21)
        t = 0.8
        rot = expm_skew(-t * base)
        transformed = states @ rot
        transported = rhs(states, cfg) @ rot - transformed @ base
        direct = rhs(transformed, shifted)
        assert np.max(np.abs(direct - transported)) <= 1e-10


class TestFramework:
    def test_uniform_xi_first_two_conditions(self):
        cfg = uniform_config()
        report = check_framework(cfg, near_consensus_ensemble(4, 2, 4, 0.01, seed=22))
        assert report.weight_ratio.lhs == 1.0
        assert report.weight_ratio.rhs == 4.0
        assert report.weight_spread.lhs == 0.0
        assert abs(report.weight_spread.rhs - 1.0 / 3.0) <= 1e-15

    def test_zero_frequency_threshold(self):
        for p in (1, 2, 4):
            cfg = uniform_config(n=5, p=p)
            assert abs(diameter_threshold(cfg) - 1.0 / (10.0 * math.sqrt(p))) <= 1e-15
            report = check_framework(cfg, near_consensus_ensemble(5, p, 4, 0.01, seed=23))
            assert report.coupling_margin.lhs == 0.0
            assert report.coupling_margin.rhs > 0.0

    def test_weight_spread_boundary_failure(self):
        # the spread condition flips sign near xi = [1, 1.2953]; the flag
        # must track the strict inequality on either side
        for bump, expected in ((1.28, True), (1.31, False)):
            xi = np.array([1.0, bump])
            stats = Topology.separable(xi).xi_stats()
            assert (stats.spread < stats.xi_min * stats.xi_mean / (3 * stats.xi_max)) == expected
            cfg = ModelConfig(
                kappa=50.0,
                topology=Topology.separable(xi),
                freqs=zero_frequencies(2, 2),
                n=4,
                p=2,
            )
            report = check_framework(cfg, near_consensus_ensemble(4, 2, 2, 0.001, seed=24))
            assert report.weight_spread.satisfied == expected
            assert report.weight_ratio.satisfied
            assert report.satisfied == expected or not expected

    def test_framework_satisfied_config(self):
        cfg, initial = make_framework_config(31)
        report = check_framework(cfg, initial)
        assert report.satisfied
        assert all(c.margin > 0 for c in report.conditions())
        assert report.delta_lower is not None and report.delta_lower > 0

    def test_rejects_general_topology(self):
        topo = Topology.general(np.ones((3, 3)) - np.eye(3))
        cfg = ModelConfig(kappa=1.0, topology=topo, freqs=zero_frequencies(3, 2), n=4, p=2)
        with pytest.raises(UnsupportedTopologyError):
            check_framework(cfg, random_ensemble(4, 2, 3, seed=25))

    def test_rejects_zero_kappa(self):
        cfg = uniform_config(kappa=0.0)
        with pytest.raises(ValidationError):
            check_framework(cfg, random_ensemble(4, 2, 4, seed=26))


class TestRateQuantities:
    def test_slack_zero_in_homogeneous_consensus(self):
        cfg = uniform_config()
        assert contraction_slack(cfg, 0.0, 0.0) == 0.0

    def test_slack_arithmetic_example(self):
        cfg = uniform_config(count=3, n=3, p=1, kappa=1.0)
        assert abs(contraction_slack(cfg, 0.1, 0.1) - 1.0) <= 1e-15

    def test_slack_matches_independent_formula(self):
        rng = np.random.default_rng(27)
        for _ in range(25):
            cfg, _ = make_framework_config(int(rng.integers(1e6)))
            d1, d2 = rng.uniform(0, 0.5, 2)
            stats = cfg.topology.xi_stats()
            expected = (
                5.0 * cfg.kappa * stats.xi_max ** 2 * math.sqrt(cfg.p) * (d1 + d2)
                + 3.0 * cfg.kappa * stats.xi_max * stats.spread
                + cfg.freq_spread
            )
            assert abs(contraction_slack(cfg, d1, d2) - expected) <= 1e-12 * max(1, expected)

    def test_rate_bound_at_critical_slack(self):
        cfg = uniform_config(kappa=2.0)
        stats = cfg.topology.xi_stats()
        critical = cfg.kappa * stats.xi_min * stats.xi_mean
        assert decay_rate_bound(cfg, critical) == min(0.0, cfg.kappa * 3.0)

    def test_rate_bound_uniform_zero_slack(self):
        cfg = uniform_config(kappa=1.7)
        assert abs(decay_rate_bound(cfg, 0.0) - 3.0 * 1.7) <= 1e-14

    def test_positive_under_framework(self):
        cfg, initial = make_framework_config(28)
        report = check_framework(cfg, initial)
        assert report.satisfied
        slack = contraction_slack(cfg, report.initial_diameter.lhs, report.initial_diameter.lhs)
        assert decay_rate_bound(cfg, slack) > 0


class TestCubicRoots:
    def test_no_interior_roots_at_zero(self):
        assert cubic_invariant_roots(0.0) == ()

    def test_factorized_case(self):
        # r^3 - 2r + 1 = (r - 1)(r^2 + r - 1)
        roots = cubic_invariant_roots(1.0)
        assert len(roots) == 2
        assert abs(roots[0] - (math.sqrt(5) - 1) / 2) <= 1e-10
        assert abs(roots[1] - 1.0) <= 1e-10
        for r in roots:
            assert abs(r ** 3 - 2 * r + 1.0) <= 1e-12

    def test_past_limit_empty(self):
        assert cubic_invariant_roots(1.2) == ()

    def test_roots_bracket_residuals(self):
        for c in (0.05, 0.3, 0.8, 1.05):
            roots = cubic_invariant_roots(c)
            assert len(roots) == 2
            r1, r2 = roots
            assert 0 < r1 < math.sqrt(2.0 / 3.0) < r2 < math.sqrt(2.0)
            for r in roots:
                assert abs(r ** 3 - 2 * r + c) <= 1e-12

    def test_coefficient_formula(self):
        # exact arithmetic instance: 8 sqrt(4) * 1 / (16 * 1) = 1
        topo = Topology.separable(np.ones(3))
        freqs = random_frequencies(3, 4, 1.0, seed=29)
        cfg = ModelConfig(kappa=16.0, topology=topo, freqs=freqs, n=6, p=4)
        assert abs(cubic_coefficient(cfg) - 1.0) <= 1e-12


class TestCouplingMargin:
    def test_threshold_formula(self):
        cfg = uniform_config(p=2)
        shrink = 2.0 - 1.0 / 200.0
        expected = shrink / (160.0 + shrink)
        assert abs(coupling_margin_threshold(cfg) - expected) <= 1e-15
