"""Pauli error distributions of square-lattice GKP qudits.

Gaussian displacement noise with variance ``var`` (vacuum variance = 1/2) is
binned onto the lattice of spacing ``sqrt(2*pi/D)``; the residue of the bin
index modulo ``D`` is the number of logical shifts ``X^k`` suffered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc

NORM_TOL = 1e-12
ROUNDOFF_TOL = 1e-12

# Bins whose centre lies further than this many standard deviations from the
# origin are dropped by adaptive truncation (residual mass ~1e-23).
TRUNCATION_SIGMAS = 10.0


class InconsistentDistributionError(ArithmeticError):
    """Raised when a spectral computation produces clearly negative mass."""


def _frozen(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_probabilities(probs: np.ndarray) -> None:
    if np.any(~np.isfinite(probs)) or np.any(probs < 0.0) or np.any(probs > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    total = float(probs.sum())
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"probabilities sum to {total!r}, not 1")


@dataclass(frozen=True, eq=False)
class PauliDistribution:
    """Probabilities of the shift powers ``X^0 .. X^(D-1)`` (or ``Z^k``)."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs, 1)
        if probs.size < 2:
            raise ValueError("dimension must be at least 2")
        _check_probabilities(probs)
        object.__setattr__(self, "probs", probs)

    @property
    def dim(self) -> int:
        return int(self.probs.size)

    @property
    def p0(self) -> float:
        return float(self.probs[0])

    @property
    def error_mass(self) -> float:
        """Probability of a nonzero shift, summed directly (no ``1 - p0``)."""
        return float(self.probs[1:].sum())

    @classmethod
    def delta(cls, dim: int, k: int = 0) -> PauliDistribution:
        probs = np.zeros(dim)
        probs[k % dim] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, dim: int) -> PauliDistribution:
        return cls(np.full(dim, 1.0 / dim))

    @classmethod
    def normalized(cls, values) -> PauliDistribution:
        values = np.asarray(values, dtype=float)
        return cls(values / values.sum())

    def to_list(self) -> list[float]:
        return [float(p) for p in self.probs]

    def __eq__(self, other):
        if not isinstance(other, PauliDistribution):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())


@dataclass(frozen=True, eq=False)
class JointPauliDistribution:
    """Matrix of joint probabilities ``P(X^a, Z^b)``."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs, 2)
        if probs.shape[0] != probs.shape[1] or probs.shape[0] < 2:
            raise ValueError(f"joint distribution must be D x D, got {probs.shape}")
        _check_probabilities(probs)
        object.__setattr__(self, "probs", probs)

    @property
    def dim(self) -> int:
        return int(self.probs.shape[0])

    @classmethod
    def independent(cls, x: PauliDistribution, z: PauliDistribution) -> JointPauliDistribution:
        if x.dim != z.dim:
            raise ValueError(f"dimension mismatch: {x.dim} vs {z.dim}")
        return cls(np.outer(x.probs, z.probs))

    def marginal_x(self) -> PauliDistribution:
        return PauliDistribution.normalized(self.probs.sum(axis=1))

    def marginal_z(self) -> PauliDistribution:
        return PauliDistribution.normalized(self.probs.sum(axis=0))


def _interval_mass(lo, hi):
    """Standard-normal mass of ``[lo, hi]`` without cancellation in the tails."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    c = 1.0 / math.sqrt(2.0)
    right = 0.5 * (erfc(lo * c) - erfc(hi * c))
    left = 0.5 * (erfc(-hi * c) - erfc(-lo * c))
    middle = 1.0 - 0.5 * erfc(hi * c) - 0.5 * erfc(-lo * c)
    return np.where(lo >= 0.0, right, np.where(hi <= 0.0, left, middle))


def lattice_spacing(dim: int) -> float:
    return math.sqrt(2.0 * math.pi / dim)


def adaptive_jmax(dim: int, var: float) -> int:
    """Smallest wrap count covering every bin centre within 10 sigma (at least 1)."""
    if var <= 0.0:
        return 1
    reach = TRUNCATION_SIGMAS * math.sqrt(var) / lattice_spacing(dim)
    return max(1, math.ceil(reach / dim) + 1)


def _check_dim(dim: int) -> None:
    if int(dim) != dim or dim < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {dim!r}")


def binned_shift_masses(
    dim: int, var: float, width: float = 1.0, jmax: int | None = None, offset: float = 0.0
) -> np.ndarray:
    """Unnormalised Gaussian mass falling within ``width/2`` lattice units of
    the points ``k + offset`` (mod ``D``), per residue ``k``.

    ``width=1, offset=0`` gives the full decoding bins.
    """
    _check_dim(dim)
    if var < 0.0:
        raise ValueError("variance must be non-negative")
    if var == 0.0:
        out = np.zeros(dim)
        if offset == 0.0 and width > 0.0:
            out[0] = 1.0
        return out
    if jmax is None:
        jmax = adaptive_jmax(dim, var)
    scale = lattice_spacing(dim) / math.sqrt(var)
    centers = np.arange(-jmax, jmax + 1)[:, None] * dim + np.arange(dim)[None, :] + offset
    mass = _interval_mass(scale * (centers - width / 2.0), scale * (centers + width / 2.0))
    return mass.sum(axis=0)


def shift_probability(k: int, dim: int, var: float, jmax: int | None = None) -> float:
    """Probability that Gaussian noise of variance ``var`` causes ``X^k``.

    With ``jmax`` given, only the wraps ``|j| <= jmax`` are summed, exactly as
    in the truncated lattice sum; otherwise the truncation is adaptive.
    ``var == 0`` is the noiseless limit (1 for ``k == 0``, else 0).
    """
    _check_dim(dim)
    if jmax is not None and jmax < 1:
        raise ValueError("jmax must be >= 1")
    if var == 0.0:
        return 1.0 if k % dim == 0 else 0.0
    return float(binned_shift_masses(dim, var, 1.0, jmax)[k % dim])


@lru_cache(maxsize=4096)
def _gaussian_probs(dim: int, var: float, jmax: int | None) -> tuple[float, ...]:
    masses = binned_shift_masses(dim, var, 1.0, jmax)
    return tuple(masses / masses.sum())


def distribution_from_gaussian(dim: int, var: float, jmax: int | None = None) -> PauliDistribution:
    """Marginal Pauli distribution ``P_sq(X^k, var)``, renormalised to sum 1."""
    _check_dim(dim)
    if var < 0.0:
        raise ValueError("variance must be non-negative")
    return PauliDistribution(np.array(_gaussian_probs(int(dim), float(var), jmax)))


def _same_dim(a: PauliDistribution, b: PauliDistribution) -> int:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return a.dim


def cyclic_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Direct O(D^2) cyclic convolution; every output entry is a sum of
    non-negative products, so small entries keep full relative precision."""
    dim = len(a)
    idx = (np.arange(dim)[:, None] - np.arange(dim)[None, :]) % dim
    return b[idx] @ a


def convolve(a: PauliDistribution, b: PauliDistribution) -> PauliDistribution:
    """Distribution of the sum of independent shifts, modulo ``D``."""
    _same_dim(a, b)
    return PauliDistribution.normalized(cyclic_convolve(a.probs, b.probs))


def convolve_power(dist: PauliDistribution, n: int) -> PauliDistribution:
    """``n``-fold cyclic self-convolution via the DFT diagonalisation."""
    if int(n) != n or n < 0:
        raise ValueError("n must be a non-negative integer")
    n = int(n)
    if n == 0:
        return PauliDistribution.delta(dist.dim)
    if n == 1:
        return dist
    spectrum = np.fft.fft(dist.probs)
    # polar form keeps the phase accurate for very large n
    powered = np.abs(spectrum) ** n * np.exp(1j * n * np.angle(spectrum))
    out = np.fft.ifft(powered).real
    if np.any(out < -ROUNDOFF_TOL):
        raise InconsistentDistributionError(f"negative mass {out.min()!r} after inverse transform")
    out = np.clip(out, 0.0, None)
    return PauliDistribution.normalized(out)


def entropy(dist: PauliDistribution | JointPauliDistribution) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    p = np.asarray(dist.probs, dtype=float).ravel()
    p = p[p > 0.0]
    return float(-(p * np.log2(p)).sum())


def secret_key_rate(joint: JointPauliDistribution) -> float:
    """``max(0, log2 D - H(joint))`` bits per channel use."""
    return max(0.0, math.log2(joint.dim) - entropy(joint))
