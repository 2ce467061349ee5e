"""Unit conversions between the user-facing unit system and SI.

All internal computation is SI. Configuration files and CSV output use the
units common in the ferroelectrics literature (uC/cm2, MV/cm, nm, um2, C).
Every conversion used at the I/O boundary lives here so it can be tested
exhaustively.
"""

from .constants import Q_E

# Multiplicative factors: value_in_SI = value * FACTOR[unit]
_FACTORS = {
    # length
    "m": 1.0,
    "cm": 1e-2,
    "um": 1e-6,
    "nm": 1e-9,
    # area
    "m2": 1.0,
    "cm2": 1e-4,
    "um2": 1e-12,
    # time
    "s": 1.0,
    "ms": 1e-3,
    "us": 1e-6,
    "ns": 1e-9,
    # voltage
    "V": 1.0,
    "mV": 1e-3,
    # current
    "A": 1.0,
    "mA": 1e-3,
    "uA": 1e-6,
    "nA": 1e-9,
    "pA": 1e-12,
    # frequency
    "Hz": 1.0,
    "kHz": 1e3,
    "MHz": 1e6,
    # charge density (surface)
    "C/m2": 1.0,
    "uC/cm2": 1e-2,
    # electric field
    "V/m": 1.0,
    "MV/cm": 1e8,
    "kV/cm": 1e5,
    # volume density
    "m-3": 1.0,
    "cm-3": 1e6,
    # energy
    "J": 1.0,
    "eV": Q_E,
    # mobility
    "m2/Vs": 1.0,
    "cm2/Vs": 1e-4,
    # dimensionless
    "1": 1.0,
}

# Units that convert by offset, not by factor.
_TEMPERATURE_UNITS = ("K", "C")

CELSIUS_OFFSET = 273.15


class UnitError(ValueError):
    """Unknown unit token or unit not allowed for a quantity."""


def to_si(value: float, unit: str) -> float:
    """Convert *value* expressed in *unit* to SI."""
    if unit == "K":
        return value
    if unit == "C":
        return value + CELSIUS_OFFSET
    try:
        return value * _FACTORS[unit]
    except KeyError:
        raise UnitError(f"unknown unit '{unit}'") from None


def from_si(value: float, unit: str) -> float:
    """Convert an SI *value* to *unit*."""
    if unit == "K":
        return value
    if unit == "C":
        return value - CELSIUS_OFFSET
    try:
        return value / _FACTORS[unit]
    except KeyError:
        raise UnitError(f"unknown unit '{unit}'") from None


def known_unit(unit: str) -> bool:
    return unit in _FACTORS or unit in _TEMPERATURE_UNITS
