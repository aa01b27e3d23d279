"""Station error probabilities of the one-way half-teleportation chain.

Each physical ``p``-readout sees either one Gaussian channel (no extra GKP
stabilizer measurements) or two discrete Pauli channels that compose by
cyclic convolution (extra measurements after/before every CZ, or
alternating between the two).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .gkp_math import PauliDistribution, convolve, distribution_from_gaussian
from .noise import LinkParams, fiber_transmittance


class Placement(str, Enum):
    NONE = "none"
    AFTER = "after"
    BEFORE = "before"
    ALTERNATING = "alternating"

    @property
    def symmetric(self) -> bool:
        return self in (Placement.AFTER, Placement.BEFORE)


# Variance pairs (in units of sq_var, loss_var) for the two composed channels.
# "caption" follows the propagation diagrams (2, 4 times the squeezing
# variance); "equation" uses the closed-form p0 expression, which repeats the
# smaller variance.
SYMMETRIC_MODES = ("caption", "equation")


@dataclass(frozen=True)
class StationNoise:
    sq_var: float
    loss_var: float

    def __post_init__(self):
        if self.sq_var < 0 or self.loss_var < 0:
            raise ValueError("variances must be non-negative")

    @classmethod
    def from_link(cls, sq_var: float, link: LinkParams) -> StationNoise:
        """Loss variance ``1 - eta_c * eta`` of one pre-amplified transmission."""
        eta = fiber_transmittance(link.spacing_km, link.attenuation_km)
        return cls(sq_var, 1.0 - link.coupling * eta)

    def channel_variances(self, placement: Placement, symmetric_mode: str = "caption") -> tuple[float, ...]:
        s, l = self.sq_var, self.loss_var
        placement = Placement(placement)
        if placement is Placement.NONE:
            return (3 * s + 2 * l,)
        if placement is Placement.ALTERNATING:
            return (3 * s + l, 3 * s + l)
        if symmetric_mode == "caption":
            return (2 * s + l, 4 * s + l)
        if symmetric_mode == "equation":
            return (2 * s + l, 2 * s + l)
        raise ValueError(f"unknown symmetric mode {symmetric_mode!r}")


def placement_distribution(
    placement: Placement | str,
    dim: int,
    sq_var: float,
    loss_var: float,
    symmetric_mode: str = "caption",
    readout_var: float = 0.0,
) -> PauliDistribution:
    """Net shift distribution seen by one physical readout.

    ``readout_var`` (imperfect homodyning) joins the continuous channel that
    reaches the readout, which is listed first.
    """
    variances = StationNoise(sq_var, loss_var).channel_variances(Placement(placement), symmetric_mode)
    dist = distribution_from_gaussian(dim, variances[0] + readout_var)
    for var in variances[1:]:
        dist = convolve(dist, distribution_from_gaussian(dim, var))
    return dist


def placement_p0(
    placement: Placement | str, dim: int, sq_var: float, loss_var: float, symmetric_mode: str = "caption"
) -> float:
    return placement_distribution(placement, dim, sq_var, loss_var, symmetric_mode).p0


def placement_ranking(dim: int, sq_var: float, loss_var: float, symmetric_mode: str = "caption") -> list[tuple[Placement, float]]:
    """Placements sorted by decreasing ``p0``; ties keep enumeration order."""
    scored = [(p, placement_p0(p, dim, sq_var, loss_var, symmetric_mode)) for p in Placement]
    order = sorted(range(len(scored)), key=lambda i: (-scored[i][1], i))
    return [scored[i] for i in order]


def validation_report(dim: int, sq_var: float, loss_var: float) -> dict:
    """Both readings of the symmetric placement side by side."""
    out = {"dim": dim, "sq_var": sq_var, "loss_var": loss_var, "p0": {}}
    for mode in SYMMETRIC_MODES:
        out["p0"][mode] = {p.value: placement_p0(p, dim, sq_var, loss_var, mode) for p in Placement}
    out["symmetric_mode_gap"] = float(
        np.abs(out["p0"]["caption"]["after"] - out["p0"]["equation"]["after"])
    )
    return out
