import numpy as np
import pytest

from thznirs.scene import FrequencyPlan, FrequencySweep, ScanGrid


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def smooth_sweep(plan: FrequencyPlan, rng: np.random.Generator, scale: float = 0.4) -> FrequencySweep:
    """Random smooth complex sweep with magnitude bounded away from zero.

    exp(polynomial) keeps |s| > 0 for any coefficient draw.
    """
    x = np.linspace(-1.0, 1.0, plan.point_count)
    logmag = np.polyval(rng.normal(0.0, scale, size=6), x)
    phase = np.polyval(rng.normal(0.0, scale, size=6), x) * np.pi
    return FrequencySweep(plan, np.exp(logmag + 1j * phase))


def single_direction_grid() -> ScanGrid:
    return ScanGrid(azimuth_deg=(0.0,), elevation_deg=(0.0,))


@pytest.fixture
def small_plan():
    return FrequencyPlan(f_start_hz=306e9, f_stop_hz=306.25e9, f_step_hz=2.5e6)


@pytest.fixture
def paper_plan():
    return FrequencyPlan(f_start_hz=306e9, f_stop_hz=321e9, f_step_hz=2.5e6)
