import numpy as np
import pytest

from cvdistill import (
    TapConfig,
    apply_beamsplitter,
    apply_phase_rotation,
    attach_tap,
    calibrate,
    discrete_channel,
    make_kerr_entangled,
    propagate,
    squeezed_state,
    tensor,
)


def random_physical_state(rng, n_modes=2, max_thermal=5.0, max_squeeze=2.0):
    """Random physical Gaussian state built from physical primitives.

    Tensor of noisy squeezed single-mode states, scrambled by random phase
    rotations and beam splitters; physicality is preserved by construction.
    """
    modes = []
    for _ in range(n_modes):
        nu = 1.0 + rng.uniform(0.0, max_thermal - 1.0)
        r = rng.uniform(0.0, max_squeeze)
        modes.append(squeezed_state(nu * np.exp(-r), nu * np.exp(r)))
    state = tensor(*modes) if n_modes > 1 else modes[0]
    for m in range(n_modes):
        state = apply_phase_rotation(state, m, rng.uniform(0.0, 2.0 * np.pi))
    for _ in range(2 * n_modes):
        a, b = rng.choice(n_modes, size=2, replace=False) if n_modes > 1 else (0, 0)
        if a != b:
            state = apply_beamsplitter(state, int(a), int(b), rng.uniform(0.0, 1.0))
    for m in range(n_modes):
        state = apply_phase_rotation(state, m, rng.uniform(0.0, 2.0 * np.pi))
    return state


@pytest.fixture(scope="session")
def calibration():
    return calibrate()


@pytest.fixture(scope="session")
def calibrated_source(calibration):
    return make_kerr_entangled(calibration.v_squeezed, calibration.v_antisqueezed)


@pytest.fixture(scope="session")
def discrete_mixture(calibrated_source):
    return propagate(calibrated_source, discrete_channel())


@pytest.fixture(scope="session")
def discrete_tapped(discrete_mixture):
    return attach_tap(discrete_mixture, TapConfig())
