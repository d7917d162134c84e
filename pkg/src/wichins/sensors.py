"""Default sensor constants for a consumer-grade MEMS IMU at 120 Hz.

Densities are white-noise spectral densities; per-sample standard deviation
at a given rate is ``density * sqrt(rate)``. Filter parameter defaults and
the simulator's noise defaults both derive from these numbers.
"""

from __future__ import annotations

import math

GRAVITY = 9.80665  # m/s^2

IMU_RATE_HZ = 120.0
GT_RATE_HZ = 5.0

# 0.007 deg/s/sqrt(Hz)
DEFAULT_GYRO_DENSITY = math.radians(0.007)  # rad/s/sqrt(Hz)
# 120 micro-g/sqrt(Hz)
DEFAULT_ACCEL_DENSITY = 120e-6 * GRAVITY  # m/s^2/sqrt(Hz)
# 10 deg/h
DEFAULT_GYRO_BIAS = math.radians(10.0) / 3600.0  # rad/s
# 0.03 milli-g
DEFAULT_ACCEL_BIAS = 0.03e-3 * GRAVITY  # m/s^2


def per_sample_std(density: float, rate_hz: float) -> float:
    """White-noise standard deviation of one sample at ``rate_hz``."""
    return density * math.sqrt(rate_hz)


DEFAULT_GYRO_STD = per_sample_std(DEFAULT_GYRO_DENSITY, IMU_RATE_HZ)  # rad/s
DEFAULT_ACCEL_STD = per_sample_std(DEFAULT_ACCEL_DENSITY, IMU_RATE_HZ)  # m/s^2
