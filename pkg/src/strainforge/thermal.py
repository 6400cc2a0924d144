"""Phonon-driven excitation rate model and operating-temperature solve.

The upward phonon rate between the two ground-state orbital branches
scales as gss^3 * n_th(gss, T). Everything here works with that rate
normalized to a reference point (a splitting known to be operable at a
reference temperature), so no absolute prefactor is needed: the operating
temperature of a splitting is where its normalized rate returns to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import EmptyRequest, InvalidDomain

__all__ = [
    "ThermalReference",
    "K_PER_GHZ",
    "thermal_occupation",
    "gamma_up_relative",
    "operational_temperature",
    "operational_temperature_batch",
    "operability_curve",
]

# h / k_B in SI is 4.799243...e-11 s K; per GHz of splitting that is
# 0.04799 K of equivalent temperature.
K_PER_GHZ = 6.62607015e-34 / 1.380649e-23 * 1e9

OCCUPATION_MODELS = ("bose_einstein", "boltzmann")


@dataclass(frozen=True)
class ThermalReference:
    """Splitting/temperature pair defining 'operable' suppression."""

    gss_ref_ghz: float = 554.0
    temp_ref_k: float = 1.5

    def __post_init__(self):
        if not (self.gss_ref_ghz > 0 and self.temp_ref_k > 0):
            raise ValueError("reference splitting and temperature must be positive")


def _check_model(model: str) -> bool:
    if model not in OCCUPATION_MODELS:
        raise ValueError(f"occupation model must be one of {OCCUPATION_MODELS}")
    return model == "boltzmann"


def thermal_occupation(gss_ghz: float, temp_k: float, model: str = "bose_einstein") -> float:
    """Thermal occupation of the upper branch at splitting gss and temp.

    Bose-Einstein by default, 1/(exp(x) - 1) with x = h*gss/(kB*T); the
    pure-exponential ('boltzmann') variant differs only at x of order 1.
    """
    boltzmann = _check_model(model)
    if not (gss_ghz > 0 and temp_k > 0):
        raise InvalidDomain("gss and temperature must be positive")
    x = K_PER_GHZ * gss_ghz / temp_k
    if boltzmann:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def _ln_rate(gss_ghz: float, temp_k: float, boltzmann: bool) -> float:
    """log of gss^3 * n_th(gss, T), stable for any argument size."""
    x = K_PER_GHZ * gss_ghz / temp_k
    base = 3.0 * math.log(gss_ghz) - x
    if boltzmann:
        return base
    return base + math.log1p(-math.exp(-x))


def gamma_up_relative(
    gss_ghz: float,
    temp_k: float,
    ref: ThermalReference | None = None,
    model: str = "bose_einstein",
) -> float:
    """Upward phonon rate normalized to 1 at the reference point."""
    ref = ref or ThermalReference()
    boltzmann = _check_model(model)
    if not (gss_ghz > 0 and temp_k > 0):
        raise InvalidDomain("gss and temperature must be positive")
    return math.exp(
        _ln_rate(gss_ghz, temp_k, boltzmann)
        - _ln_rate(ref.gss_ref_ghz, ref.temp_ref_k, boltzmann)
    )


def operational_temperature(
    gss_ghz: float,
    ref: ThermalReference | None = None,
    model: str = "bose_einstein",
) -> float:
    """Temperature where the normalized rate equals 1; unique because the
    rate grows strictly with temperature. Solved by bisection on
    [1e-3, 300] K."""
    ref = ref or ThermalReference()
    boltzmann = _check_model(model)
    if not gss_ghz > 0:
        raise InvalidDomain("gss must be positive")
    ln0 = _ln_rate(ref.gss_ref_ghz, ref.temp_ref_k, boltzmann)
    lo, hi = _kernels.TOP_BISECT_LO, _kernels.TOP_BISECT_HI
    if _ln_rate(gss_ghz, hi, boltzmann) < ln0:
        raise InvalidDomain("operating temperature above the 300 K solve bracket")
    if _ln_rate(gss_ghz, lo, boltzmann) > ln0:
        raise InvalidDomain("operating temperature below the 1 mK solve bracket")
    for _ in range(_kernels.TOP_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if _ln_rate(gss_ghz, mid, boltzmann) < ln0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def operational_temperature_batch(
    gss_ghz,
    ref: ThermalReference | None = None,
    model: str = "bose_einstein",
    threads: int | None = None,
) -> np.ndarray:
    """Vectorized operating temperatures, chunked over the hot kernel."""
    ref = ref or ThermalReference()
    boltzmann = _check_model(model)
    gss = np.ascontiguousarray(gss_ghz, dtype=float)
    if gss.size == 0:
        raise EmptyRequest("no splittings supplied")
    if not np.all(gss > 0):
        raise InvalidDomain("gss values must be positive")
    ln0 = _ln_rate(ref.gss_ref_ghz, ref.temp_ref_k, boltzmann)
    out = np.empty(gss.size)
    flat = gss.ravel()

    _kernels.run_blocks(
        flat.size,
        lambda lo, hi: _kernels.top_block(out, flat, lo, hi, K_PER_GHZ, ln0, boltzmann),
        threads,
    )
    return out.reshape(gss.shape)


def operability_curve(
    ensemble,
    temps_k,
    ref: ThermalReference | None = None,
    model: str = "bose_einstein",
    threads: int | None = None,
) -> list[tuple[float, float]]:
    """For each temperature, the fraction of emitters whose operating
    temperature is at least that temperature. Nonincreasing by
    construction; ties within the bisection tolerance count as operable."""
    gss = np.asarray(
        ensemble.samples.gss_ghz if hasattr(ensemble, "samples") else ensemble,
        dtype=float,
    )
    if gss.size == 0:
        raise EmptyRequest("empty ensemble")
    temps = np.asarray(temps_k, dtype=float)
    if temps.ndim != 1 or temps.size == 0:
        raise ValueError("temps must be a nonempty 1-d grid")
    if np.any(np.diff(temps) < 0):
        raise ValueError("temps must be sorted ascending")
    top = np.sort(operational_temperature_batch(gss, ref, model, threads))
    n = top.size
    fractions = (n - np.searchsorted(top, temps - 1e-9, side="left")) / n
    return [(float(t), float(p)) for t, p in zip(temps, fractions)]
