"""dB / dBm conversion helpers.

All internal quantities in this package are linear: power gains are
dimensionless ratios and powers are watts.  Decibel values only appear at
the config boundary (files, CLI flags, CSV mirrors).
"""

import math


def db_to_linear(x_db: float) -> float:
    """Power ratio from a dB value."""
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    """dB value of a positive power ratio."""
    if x <= 0.0:
        return float("-inf")
    return 10.0 * math.log10(x)


def dbm_to_watts(x_dbm: float) -> float:
    """Watts from dBm (0 dBm = 1 mW)."""
    return 10.0 ** (x_dbm / 10.0) * 1e-3


def watts_to_dbm(x_w: float) -> float:
    """dBm from watts; returns -inf for zero power."""
    if x_w <= 0.0:
        return float("-inf")
    return 10.0 * math.log10(x_w * 1e3)
