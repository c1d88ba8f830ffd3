"""Shared builders for the test suite."""

import numpy as np
import pytest

from stiefel_sync.integrate import IntegratorConfig, integrate
from stiefel_sync.manifold import near_consensus_ensemble, perturb_ensemble
from stiefel_sync.model import (
    ModelConfig,
    Topology,
    coupling_margin_threshold,
    diameter_threshold,
    random_frequencies,
)
from stiefel_sync.scenario import generate_xi


def make_framework_config(seed: int, p: int = 2):
    """Heterogeneous configuration satisfying the sufficient conditions, with
    the coupling strength solved for a 10% margin in the frequency condition
    and the initial ensemble well inside the diameter threshold."""
    rng = np.random.default_rng(seed)
    count = int(rng.integers(5, 9))
    n = int(rng.integers(max(4, p + 1), 7))
    xi = generate_xi(count, 1.0, 0.02, seed)
    topology = Topology.separable(xi)
    spread = float(rng.uniform(0.015, 0.03))
    freqs = random_frequencies(count, p, spread, seed + 1)
    probe = ModelConfig(kappa=1.0, topology=topology, freqs=freqs, n=n, p=p)
    kappa = spread / (0.9 * coupling_margin_threshold(probe))
    cfg = ModelConfig(kappa=kappa, topology=topology, freqs=freqs, n=n, p=p)
    initial = near_consensus_ensemble(n, p, count, 0.35 * diameter_threshold(cfg), seed + 2)
    return cfg, initial


def run_framework_pair(seed: int, t_end: float = 10.0, h: float = 1e-3):
    """Framework configuration integrated together with a perturbed copy on
    a stride-1 grid (the setup used by the reproduction criteria)."""
    cfg, initial = make_framework_config(seed)
    icfg = IntegratorConfig(h=h, t_end=t_end, record_stride=1)
    traj = integrate(initial, cfg, icfg)
    partner = integrate(perturb_ensemble(initial, 1e-3, seed + 3), cfg, icfg)
    return cfg, traj, partner


@pytest.fixture(scope="session")
def framework_pair_session():
    """One shared framework pair for tests that only need a representative."""
    return run_framework_pair(404)
