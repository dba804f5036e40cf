"""Greenhouse-gas concentration to radiative-forcing conversions.

Converts CO2 (ppm), CH4 and N2O (ppb) concentrations into effective
radiative forcing in W/m^2, relative to fixed pre-industrial baselines.
The CH4 and N2O formulas share an overlap term because the two gases
absorb in overlapping bands.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ValidationError

__all__ = [
    "Gas",
    "GasConcentrationRecord",
    "concentration_to_forcing",
    "CO2_BASELINE_PPM",
    "CH4_BASELINE_PPB",
    "N2O_BASELINE_PPB",
]

CO2_BASELINE_PPM = 280.0
CH4_BASELINE_PPB = 700.0
N2O_BASELINE_PPB = 275.0


class Gas(enum.Enum):
    CO2 = "co2"
    CH4 = "ch4"
    N2O = "n2o"


@dataclass(frozen=True)
class GasConcentrationRecord:
    """One gas concentration observation (ppm for CO2, ppb otherwise)."""

    gas: Gas
    concentration: float
    year: int | None = None

    def __post_init__(self):
        if not isinstance(self.gas, Gas):
            object.__setattr__(self, "gas", Gas(str(self.gas).lower()))
        if not (self.concentration > 0):
            raise ValidationError(
                f"concentration must be positive, got {self.concentration}"
            )


def _f_co2(c: float) -> float:
    return 5.04 * math.log(c + 0.0005 * c * c)


def _g_overlap(m: float, n: float) -> float:
    return 0.5 * math.log(1.0 + 0.00002 * (m * n) ** 0.75)


def concentration_to_forcing(
    record: GasConcentrationRecord,
    *,
    co2_baseline: float = CO2_BASELINE_PPM,
    ch4_baseline: float = CH4_BASELINE_PPB,
    n2o_baseline: float = N2O_BASELINE_PPB,
) -> float:
    """Radiative forcing in W/m^2 relative to the pre-industrial baseline.

    Baselines are overridable for sensitivity analysis; each gas's forcing
    is zero exactly at its own baseline concentration.
    """
    c0, m0, n0 = co2_baseline, ch4_baseline, n2o_baseline
    for label, base in (("co2", c0), ("ch4", m0), ("n2o", n0)):
        if not (base > 0):
            raise ValidationError(f"{label} baseline must be positive, got {base}")

    x = record.concentration
    if record.gas is Gas.CO2:
        return _f_co2(x) - _f_co2(c0)
    if record.gas is Gas.CH4:
        return 0.04 * (math.sqrt(x) - math.sqrt(m0)) - (
            _g_overlap(x, n0) - _g_overlap(m0, n0)
        )
    return 0.14 * (math.sqrt(x) - math.sqrt(n0)) - (
        _g_overlap(m0, x) - _g_overlap(m0, n0)
    )
