import numpy as np
import pytest

from ciwave.ci_constraints import build_constraints, psk_alphabet
from ciwave.convex_kernel import project_ci
from ciwave.harness import section4_scenario
from ciwave.signal_model import Scenario

DEG = np.pi / 180.0


def random_hermitian(rng, n, psd=False):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    if psd:
        return m @ m.conj().T
    return 0.5 * (m + m.conj().T)


def make_instance(seed, n_tx=8, n_rx=8, k=5, gamma_db=15.0, psk_order=4,
                  clutter_angles=(-50 * DEG, -20 * DEG, 20 * DEG, 50 * DEG),
                  clutter_power=1000.0, power_budget=1000.0):
    """Random §IV-style instance: Gaussian channels, uniform symbols."""
    rng = np.random.default_rng(seed)
    scenario = Scenario(
        n_tx=n_tx,
        n_rx=n_rx,
        target_angle=0.0,
        target_power=10.0,
        clutter_angles=clutter_angles,
        clutter_powers=(clutter_power,) * len(clutter_angles),
        user_noise_vars=(1.0,) * k,
        power_budget=power_budget,
        psk_order=psk_order,
    )
    channels = [
        (rng.standard_normal(n_tx) + 1j * rng.standard_normal(n_tx)) / np.sqrt(2.0)
        for _ in range(k)
    ]
    alphabet = psk_alphabet(psk_order)
    symbols = [alphabet[int(i)] for i in rng.integers(0, psk_order, k)]
    gammas = [10.0 ** (gamma_db / 10.0)] * k
    cs = build_constraints(scenario, channels, symbols, gammas)
    return scenario, channels, symbols, cs


def random_feasible(cs, rng, n_points=1):
    """Feasible waveforms: random ball points projected onto the CI set."""
    from ciwave.convex_kernel import enforce_feasible, strictly_feasible_point

    out = []
    radius = cs.radius
    dim = cs.n_tx
    anchor = strictly_feasible_point(cs)
    attempts = 0
    while len(out) < n_points:
        attempts += 1
        if attempts > 50 * n_points + 100:
            raise RuntimeError("random_feasible could not sample the CI set")
        v = (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) * radius / np.sqrt(dim)
        x = enforce_feasible(cs, project_ci(cs, v, tol=1e-13, max_passes=2000), anchor)
        m = cs.margins(x)
        if (m.size == 0 or m.min() >= -1e-9) and cs.power_margin(x) >= -1e-9:
            out.append(x)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def paper_scenario():
    return section4_scenario()
