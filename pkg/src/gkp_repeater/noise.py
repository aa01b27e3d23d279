"""Gaussian variance bookkeeping for squeezing, coupling and fiber loss."""

from __future__ import annotations

import math
from dataclasses import dataclass

VACUUM_VARIANCE = 0.5
ATTENUATION_LENGTH_KM = 22.0
DEFAULT_COUPLING = 0.99

TWO_WAY = "two-way"
ONE_WAY = "one-way"


def squeezing_to_variance(db: float) -> float:
    """Twirled GKP peak variance for a squeezing parameter given in dB."""
    if db < 0:
        raise ValueError("squeezing must be non-negative (dB)")
    return VACUUM_VARIANCE * 10.0 ** (-db / 10.0)


def variance_to_squeezing(var: float) -> float:
    if not 0.0 < var <= VACUUM_VARIANCE:
        raise ValueError("variance must lie in (0, 1/2]")
    return -10.0 * math.log10(var / VACUUM_VARIANCE)


def fiber_transmittance(length_km: float, attenuation_km: float = ATTENUATION_LENGTH_KM) -> float:
    if length_km < 0:
        raise ValueError("length must be non-negative")
    return math.exp(-length_km / attenuation_km)


def _check_eta(eta: float) -> None:
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"transmittance must lie in (0, 1], got {eta!r}")


def loss_variance_classical_postamp(eta_tot: float) -> float:
    """Loss followed by classical rescaling of the homodyne signal."""
    _check_eta(eta_tot)
    return 1.0 / math.sqrt(eta_tot) - 1.0


def loss_variance_preamp(eta_tot: float) -> float:
    """Quantum-limited amplification applied before the lossy channel."""
    _check_eta(eta_tot)
    return 1.0 - eta_tot


def loss_variance_postamp_optical(eta: float) -> float:
    """Quantum-limited amplification applied after the lossy channel.

    Only kept for comparison; none of the repeater protocols use it.
    """
    _check_eta(eta)
    return (1.0 - eta) / eta


@dataclass(frozen=True)
class LinkParams:
    spacing_km: float
    coupling: float = DEFAULT_COUPLING
    attenuation_km: float = ATTENUATION_LENGTH_KM

    def __post_init__(self):
        if self.spacing_km < 0:
            raise ValueError("spacing must be non-negative")
        if self.attenuation_km <= 0:
            raise ValueError("attenuation length must be positive")
        _check_eta(self.coupling)


@dataclass(frozen=True)
class NoiseBudget:
    """Variance reaching one homodyne measurement, split by origin."""

    preparation: float
    coupling: float
    transmission: float

    @property
    def total(self) -> float:
        return self.preparation + self.coupling + self.transmission

    def as_dict(self) -> dict:
        return {
            "preparation": self.preparation,
            "coupling": self.coupling,
            "transmission": self.transmission,
            "total": self.total,
        }


def input_noise_variance(sq_var: float, link: LinkParams) -> float:
    """Preparation plus coupling noise per measurement of the two-way protocol."""
    eta_c = link.coupling
    return 3.0 * sq_var + (1.0 - eta_c) / eta_c * math.exp(link.spacing_km / (2.0 * link.attenuation_km))


def preparation_factor(dim: int, encoded: bool = False) -> int:
    """Number of GKP preparations whose noise reaches one measurement.

    For even bare dimensions the Bell pair comes straight from a beam splitter
    acting on two grid states, which saves one noisy preparation.
    """
    return 2 if (dim % 2 == 0 and not encoded) else 3


def measurement_variance(protocol: str, dim: int, sq_var: float, link: LinkParams, encoded: bool = False) -> NoiseBudget:
    if sq_var < 0:
        raise ValueError("variance must be non-negative")
    prep = preparation_factor(dim, encoded) * sq_var
    eta_c = link.coupling
    if protocol == TWO_WAY:
        half = fiber_transmittance(link.spacing_km / 2.0, link.attenuation_km)
        # split 1/(eta_c sqrt(eta)) - 1 into the lossless-coupling part and the rest
        transmission = 1.0 / half - 1.0
        coupling = (1.0 - eta_c) / (eta_c * half)
    elif protocol == ONE_WAY:
        eta = fiber_transmittance(link.spacing_km, link.attenuation_km)
        transmission = 1.0 - eta
        coupling = (1.0 - eta_c) * eta
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    return NoiseBudget(prep, coupling, transmission)
