import numpy as np
import pytest

from hyperpol.material import (
    LorentzAxis,
    LorentzOscillator,
    MaterialModel,
    default_hbn,
    loss_scaled,
    upper_band,
)


@pytest.fixture(scope="session")
def hbn():
    return default_hbn()


@pytest.fixture(scope="session")
def hbn_enriched(hbn):
    return loss_scaled(hbn, 1.0 / 3.0)


@pytest.fixture(scope="session")
def hbn_lossless():
    """Same oscillator strengths as the default model, zero damping."""
    m = default_hbn()
    def strip(axis):
        return LorentzAxis(axis.eps_inf, tuple(
            LorentzOscillator(o.omega_to, o.omega_lo, 0.0) for o in axis.oscillators))
    return MaterialModel(strip(m.axis_parallel), strip(m.axis_perp), m.loss_scale)


@pytest.fixture(scope="session")
def band(hbn):
    return upper_band(hbn)


@pytest.fixture(scope="session")
def band_enriched(hbn_enriched):
    return upper_band(hbn_enriched)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
