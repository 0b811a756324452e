"""System-response calibration: plain elementwise division, and its inverse.

The measured S21 of a sounder contains cable/amplifier effects captured by a
through-connection reference and a setup-difference factor.  Dividing them
out recovers the channel transfer function; multiplying them back in builds
raw-measurement fixtures for round-trip tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, SingularCalibrationError, ValidationError
from .scene import FrequencySweep

_MAG_FLOOR = 1e-12


@dataclass(frozen=True)
class SystemResponse:
    """Through-connection reference plus optional setup-difference factor.

    ``extra`` defaults to all-ones when the measurement and the reference
    share the same setup (the usual case for synthetic data).
    """

    connect: FrequencySweep
    extra: FrequencySweep | None = None

    def __post_init__(self):
        if self.extra is not None and self.extra.plan != self.connect.plan:
            raise GridMismatchError("system response: connect and extra grids differ")
        for name, sweep in (("connect", self.connect), ("extra", self.extra)):
            if sweep is None:
                continue
            mags = np.abs(sweep.samples)
            if np.any(mags < _MAG_FLOOR):
                k = int(np.argmax(mags < _MAG_FLOOR))
                raise ValidationError(
                    f"system response: |{name}| below 1e-12 at {sweep.frequencies[k]:.6e} Hz"
                )

    def extra_samples(self) -> np.ndarray:
        if self.extra is None:
            return np.ones(self.connect.plan.point_count, dtype=complex)
        return self.extra.samples


def calibrate(measured: FrequencySweep, sys: SystemResponse) -> FrequencySweep:
    """H[k] = measured[k] / (extra[k] * connect[k])."""
    if measured.plan != sys.connect.plan:
        raise GridMismatchError("calibrate: measurement and system response grids differ")
    denom = sys.extra_samples() * sys.connect.samples
    mags = np.abs(denom)
    if np.any(mags < _MAG_FLOOR):
        k = int(np.argmax(mags < _MAG_FLOOR))
        raise SingularCalibrationError(
            f"calibration singular: |extra*connect| below 1e-12 at "
            f"{measured.frequencies[k]:.6e} Hz"
        )
    return FrequencySweep(plan=measured.plan, samples=measured.samples / denom)


def apply_system(channel: FrequencySweep, sys: SystemResponse) -> FrequencySweep:
    """Inverse of calibrate: measured[k] = channel[k] * extra[k] * connect[k]."""
    if channel.plan != sys.connect.plan:
        raise GridMismatchError("apply_system: channel and system response grids differ")
    return FrequencySweep(
        plan=channel.plan,
        samples=channel.samples * sys.extra_samples() * sys.connect.samples,
    )
