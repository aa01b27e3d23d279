"""End-to-end secret-key rates of GKP repeater chains.

Every station contributes an i.i.d. Pauli channel; the chain channel is its
``N``-fold cyclic convolution, ``X`` and ``Z`` errors are independent and
identically distributed, and the key rate is ``log2 D - 2 H(marginal)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from . import polycode
from .gkp_math import (
    JointPauliDistribution,
    PauliDistribution,
    convolve_power,
    distribution_from_gaussian,
    secret_key_rate,
)
from .half_teleport import Placement, StationNoise, placement_distribution
from .noise import (
    ATTENUATION_LENGTH_KM,
    DEFAULT_COUPLING,
    LinkParams,
    measurement_variance,
    squeezing_to_variance,
)


class Protocol(str, Enum):
    TWO_WAY = "two-way"
    ONE_WAY = "one-way"
    HALF_TELEPORT = "half-teleport"

    @classmethod
    def parse(cls, value: str | Protocol) -> Protocol:
        aliases = {
            "two-way-teleport": cls.TWO_WAY,
            "one-way-teleport": cls.ONE_WAY,
            "one-way-half-teleport": cls.HALF_TELEPORT,
        }
        if isinstance(value, str) and value in aliases:
            return aliases[value]
        return cls(value)


@dataclass(frozen=True)
class RepeaterConfig:
    protocol: Protocol = Protocol.TWO_WAY
    dim: int = 2
    length_km: float = 1000.0
    spacing_km: float = 0.5
    squeezing_db: float = 20.0
    coupling: float = DEFAULT_COUPLING
    encoded: bool = False
    gamma: float = 1.0
    placement: Placement = Placement.ALTERNATING
    meas_var: float = 0.0
    jmax: int | None = None
    strict_code: bool = True
    symmetric_mode: str = "caption"
    attenuation_km: float = ATTENUATION_LENGTH_KM

    def __post_init__(self):
        object.__setattr__(self, "protocol", Protocol.parse(self.protocol))
        object.__setattr__(self, "placement", Placement(self.placement))
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        if not self.spacing_km > 0:
            raise ValueError("spacing must be positive")
        if self.length_km < self.spacing_km:
            raise ValueError("total length must be at least the spacing")
        if self.squeezing_db < 0:
            raise ValueError("squeezing must be non-negative (dB)")
        if not 0.0 < self.coupling <= 1.0:
            raise ValueError("coupling must lie in (0, 1]")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.meas_var < 0:
            raise ValueError("measurement variance must be non-negative")
        if self.encoded:
            # raises InadmissibleDimensionError
            polycode.PolynomialCode.for_dimension(self.dim, strict=self.strict_code)

    @property
    def sq_var(self) -> float:
        return squeezing_to_variance(self.squeezing_db)

    @property
    def link(self) -> LinkParams:
        return LinkParams(self.spacing_km, self.coupling, self.attenuation_km)

    @property
    def code(self) -> polycode.PolynomialCode:
        return polycode.PolynomialCode.for_dimension(self.dim, strict=self.strict_code)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["protocol"] = self.protocol.value
        out["placement"] = self.placement.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> RepeaterConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def with_(self, **changes) -> RepeaterConfig:
        return replace(self, **changes)


@dataclass(frozen=True)
class RateResult:
    skr_bits: float
    n_stations: int
    marginal: PauliDistribution
    station_var: float | None
    p0_station: float
    p_cor_station: float | None = None
    config: RepeaterConfig | None = field(default=None, compare=False)

    @property
    def skr_per_station(self) -> float:
        return self.skr_bits / self.n_stations

    def to_dict(self) -> dict:
        return {
            "skr_bits": self.skr_bits,
            "skr_per_station": self.skr_per_station,
            "n_stations": self.n_stations,
            "station_var": self.station_var,
            "p0_station": self.p0_station,
            "p_cor_station": self.p_cor_station,
            "marginal": self.marginal.to_list(),
        }


def station_count(length_km: float, spacing_km: float) -> int:
    """Number of convolved station channels, ``round(L / L0)`` but at least 1."""
    if not spacing_km > 0 or length_km < spacing_km:
        raise ValueError("need L >= L0 > 0")
    return max(1, int(round(length_km / spacing_km)))


def _chain_rate(station: PauliDistribution, n: int) -> tuple[float, PauliDistribution]:
    marginal = convolve_power(station, n)
    joint = JointPauliDistribution.independent(marginal, marginal)
    return secret_key_rate(joint), marginal


def station_variance(config: RepeaterConfig) -> float:
    """Gaussian variance reaching one homodyne readout of a teleportation station."""
    budget = measurement_variance(config.protocol.value, config.dim, config.sq_var, config.link, encoded=config.encoded)
    return budget.total + config.meas_var


def bare_rate(config: RepeaterConfig) -> RateResult:
    if config.encoded:
        raise ValueError("bare_rate needs encoded=False")
    if config.protocol is Protocol.HALF_TELEPORT:
        raise ValueError("half-teleportation is only defined with a higher-level code")
    var = station_variance(config)
    station = distribution_from_gaussian(config.dim, var, config.jmax)
    n = station_count(config.length_km, config.spacing_km)
    skr, marginal = _chain_rate(station, n)
    return RateResult(skr, n, marginal, var, station.p0, None, config)


def bare_rate_curve(config: RepeaterConfig, lengths: Iterable[float]) -> np.ndarray:
    """``bare_rate(config.with_(length_km=L)).skr_bits`` for every ``L``,
    building the station channel only once."""
    if config.encoded or config.protocol is Protocol.HALF_TELEPORT:
        raise ValueError("bare_rate_curve needs a bare teleportation protocol")
    station = distribution_from_gaussian(config.dim, station_variance(config), config.jmax)
    return np.array([_chain_rate(station, station_count(L, config.spacing_km))[0] for L in lengths])


def _encoded_from_failure(config: RepeaterConfig, var: float | None, p0: float, fail: float) -> RateResult:
    channel = polycode.station_error_channel(config.code, p_fail=fail)
    n = station_count(config.length_km, config.spacing_km)
    skr, marginal = _chain_rate(channel, n)
    return RateResult(skr, n, marginal, var, p0, 1.0 - fail, config)


def _teleport_failure(config: RepeaterConfig, var: float) -> tuple[float, float]:
    code = config.code
    if config.gamma < 1.0:
        p0 = polycode.erasure_binning(code.dim, var, config.gamma, config.jmax).p0
    else:
        p0 = distribution_from_gaussian(code.dim, var, config.jmax).p0
    return p0, polycode.p_fail(code, var, config.gamma, config.jmax)


def encoded_rate(config: RepeaterConfig) -> RateResult:
    """Key rate per logical channel use with the polynomial-code layer."""
    if not config.encoded:
        raise ValueError("encoded_rate needs encoded=True")
    code = config.code
    if config.protocol is Protocol.HALF_TELEPORT:
        if config.gamma < 1.0:
            raise ValueError("erasure decoding is not modelled for half-teleportation")
        noise = StationNoise.from_link(config.sq_var, config.link)
        dist = placement_distribution(
            config.placement, code.dim, noise.sq_var, noise.loss_var, config.symmetric_mode, config.meas_var
        )
        return _encoded_from_failure(config, None, dist.p0, polycode.p_uncorrectable(code, dist.error_mass))
    var = station_variance(config)
    p0, fail = _teleport_failure(config, var)
    return _encoded_from_failure(config, var, p0, fail)


def rate(config: RepeaterConfig) -> RateResult:
    return encoded_rate(config) if config.encoded else bare_rate(config)


def rate_vs_input_noise(
    dim: int,
    length_km: float,
    spacing_km: float,
    input_var: float,
    gamma: float = 1.0,
    meas_var: float = 0.0,
    attenuation_km: float = ATTENUATION_LENGTH_KM,
    strict_code: bool = True,
) -> RateResult:
    """Encoded two-way rate when every readout carries ``input_var`` of
    preparation/coupling noise on top of the pure fiber loss."""
    if input_var < 0:
        raise ValueError("input variance must be non-negative")
    config = RepeaterConfig(
        protocol=Protocol.TWO_WAY,
        dim=dim,
        length_km=length_km,
        spacing_km=spacing_km,
        squeezing_db=0.0,
        coupling=1.0,
        encoded=True,
        gamma=gamma,
        meas_var=meas_var,
        strict_code=strict_code,
        attenuation_km=attenuation_km,
    )
    var = input_var + math.expm1(spacing_km / (2.0 * attenuation_km)) + meas_var
    p0, fail = _teleport_failure(config, var)
    return _encoded_from_failure(config, var, p0, fail)


def optimal_bare_dimension(
    length_km: float,
    spacing_km: float,
    squeezing_db: float,
    coupling: float = DEFAULT_COUPLING,
    protocol: Protocol | str = Protocol.TWO_WAY,
    max_dim: int = 32,
) -> tuple[int, float]:
    """Best bare dimension in ``2..max_dim``; ``(1, 0.0)`` when no key is possible."""
    if max_dim < 2:
        raise ValueError("max_dim must be >= 2")
    best_dim, best_skr = 1, 0.0
    for dim in range(2, max_dim + 1):
        skr = bare_rate(
            RepeaterConfig(
                protocol=protocol,
                dim=dim,
                length_km=length_km,
                spacing_km=spacing_km,
                squeezing_db=squeezing_db,
                coupling=coupling,
            )
        ).skr_bits
        if skr > best_skr:
            best_dim, best_skr = dim, skr
    return best_dim, best_skr


@dataclass(frozen=True)
class SpacingOptimum:
    spacing_km: float
    skr_per_station: float
    skr_bits: float
    cutoff_km: float | None
    spacings: np.ndarray
    skr_curve: np.ndarray
    per_station_curve: np.ndarray


def optimal_spacing(config: RepeaterConfig, spacings: Sequence[float] | Iterable[float]) -> SpacingOptimum:
    """Scan ``L0`` at fixed total length; maximise SKR/N.

    ``cutoff_km`` is the largest scanned spacing with a nonzero key rate.
    Ties resolve to the smaller spacing.
    """
    spacings = np.asarray(list(spacings), dtype=float)
    if spacings.size == 0:
        raise ValueError("empty spacing grid")
    skr = np.array([rate(config.with_(spacing_km=float(l0))).skr_bits for l0 in spacings])
    counts = np.array([station_count(config.length_km, float(l0)) for l0 in spacings])
    per_station = skr / counts
    best = int(np.argmax(per_station))
    order = np.argsort(spacings, kind="stable")
    best = min((i for i in order if per_station[i] == per_station[best]), key=lambda i: spacings[i])
    nonzero = spacings[skr > 0]
    cutoff = float(nonzero.max()) if nonzero.size else None
    return SpacingOptimum(
        spacing_km=float(spacings[best]),
        skr_per_station=float(per_station[best]),
        skr_bits=float(skr[best]),
        cutoff_km=cutoff,
        spacings=spacings,
        skr_curve=skr,
        per_station_curve=per_station,
    )
