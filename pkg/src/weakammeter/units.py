"""Hartree atomic units and conversion of unit-tagged quantities.

Everything inside the package works in Hartree atomic units
(m_e = 1, |e| = 1, hbar = 1).  SI-flavoured inputs such as ``"30 nm"`` or
``"2e9 /m"`` are converted once, at the boundary, by :func:`parse_quantity`.
"""

import re

from scipy import constants as _c

BOHR = _c.physical_constants["Bohr radius"][0]                  # m
HARTREE_EV = _c.physical_constants["Hartree energy in eV"][0]   # eV
AU_TIME = _c.physical_constants["atomic unit of time"][0]       # s
AU_VOLT = _c.physical_constants["atomic unit of electric potential"][0]  # V

BOHR_PER_NM = 1e-9 / BOHR
HARTREE_PER_EV = 1.0 / HARTREE_EV
AU_TIME_PER_FS = 1e-15 / AU_TIME
AU_VOLT_PER_VOLT = 1.0 / AU_VOLT
BOHR_INV_PER_INV_M = BOHR   # 1 m^-1 expressed in bohr^-1

# factor converting "<number> <unit>" to atomic units, grouped by dimension
UNITS = {
    "length": {
        "bohr": 1.0, "au": 1.0, "a0": 1.0,
        "m": 1.0 / BOHR, "nm": BOHR_PER_NM, "angstrom": 0.1 * BOHR_PER_NM,
        "A": 0.1 * BOHR_PER_NM, "pm": 1e-3 * BOHR_PER_NM,
    },
    "energy": {
        "Ha": 1.0, "hartree": 1.0, "au": 1.0,
        "eV": HARTREE_PER_EV, "meV": 1e-3 * HARTREE_PER_EV,
    },
    "time": {
        "au": 1.0, "s": 1.0 / AU_TIME, "fs": AU_TIME_PER_FS,
        "as": 1e-3 * AU_TIME_PER_FS, "ps": 1e3 * AU_TIME_PER_FS,
    },
    "wavevector": {
        "/bohr": 1.0, "1/bohr": 1.0, "au": 1.0,
        "/m": BOHR, "1/m": BOHR, "m^-1": BOHR,
        "/nm": 1.0 / BOHR_PER_NM, "1/nm": 1.0 / BOHR_PER_NM, "nm^-1": 1.0 / BOHR_PER_NM,
    },
    "voltage": {
        "au": 1.0, "V": AU_VOLT_PER_VOLT, "mV": 1e-3 * AU_VOLT_PER_VOLT,
    },
    "permittivity": {"au": 1.0},
    "mass": {"au": 1.0, "me": 1.0, "m_e": 1.0},
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")


class UnitError(ValueError):
    """A quantity string could not be converted to the requested dimension."""


def parse_quantity(value, kind):
    """Convert ``value`` to atomic units of dimension ``kind``.

    Bare numbers (int, float, or a string without a unit) are taken to be
    atomic units already.

    >>> round(parse_quantity("4e-16 s", "time"), 3)
    16.537
    """
    if kind not in UNITS:
        raise UnitError(f"unknown dimension {kind!r}")
    if isinstance(value, bool):
        raise UnitError(f"expected a {kind}, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise UnitError(f"expected a {kind}, got {type(value).__name__}")
    match = _QUANTITY.match(value)
    if match is None:
        raise UnitError(f"cannot parse {value!r} as a {kind}")
    number, unit = match.groups()
    if not unit:
        return float(number)
    table = UNITS[kind]
    if unit not in table:
        known = ", ".join(sorted(table))
        raise UnitError(f"unit {unit!r} is not a {kind} unit (expected one of: {known})")
    return float(number) * table[unit]


def nm(x):
    return x * BOHR_PER_NM


def ev(x):
    return x * HARTREE_PER_EV


def fs(x):
    return x * AU_TIME_PER_FS


def volt(x):
    return x * AU_VOLT_PER_VOLT


def per_m(x):
    return x * BOHR_INV_PER_INV_M
