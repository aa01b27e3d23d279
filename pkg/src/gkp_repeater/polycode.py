"""Distance-based decoding model of the [[D, 1, (D+1)/2]]_D polynomial codes.

Only the decoding statistics are modelled: a pattern of ``t_k`` located
erasures and ``t_u`` unlocated errors is corrected iff ``t_k + 2 t_u < d``.
Failed decodings are replaced by a uniformly random logical error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gkp_math import PauliDistribution, _check_dim, adaptive_jmax, binned_shift_masses, distribution_from_gaussian


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, math.isqrt(n) + 1))


class InadmissibleDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class PolynomialCode:
    dim: int

    def __post_init__(self):
        if not is_prime(self.dim) or self.dim < 3:
            raise InadmissibleDimensionError(
                f"dimension {self.dim} not admissible for polynomial code (need an odd prime)"
            )

    @classmethod
    def for_dimension(cls, dim: int, strict: bool = True) -> PolynomialCode:
        """``strict`` additionally demands ``D = 1 mod 4`` so that the
        correctable weight ``(d-1)/2`` is an integer."""
        code = cls(dim)
        if strict and (dim - 1) % 4:
            raise InadmissibleDimensionError(
                f"dimension {dim} not admissible for polynomial code (need prime D with D = 1 mod 4)"
            )
        return code

    @property
    def n(self) -> int:
        return self.dim

    @property
    def k(self) -> int:
        return 1

    @property
    def distance(self) -> int:
        return (self.dim + 1) // 2

    @property
    def correctable(self) -> int:
        return (self.distance - 1) // 2

    def __str__(self):
        return f"[[{self.n},{self.k},{self.distance}]]_{self.dim}"


def _binom_pmf(n: int, t: int, p: float, q: float) -> float:
    # p and q = 1 - p are passed separately so that tiny q stays exact
    return math.comb(n, t) * p ** (n - t) * q**t


def p_uncorrectable(code: PolynomialCode, p_err: float) -> float:
    """Probability that more than ``(d-1)/2`` of the ``D`` qudits err,
    summed term by term from the per-qudit error probability."""
    if not 0.0 <= p_err <= 1.0:
        raise ValueError("error probability must lie in [0, 1]")
    p_ok = 1.0 - p_err
    return math.fsum(_binom_pmf(code.n, t, p_ok, p_err) for t in range(code.correctable + 1, code.n + 1))


def p_correctable(code: PolynomialCode, p0: float) -> float:
    if not 0.0 <= p0 <= 1.0:
        raise ValueError("p0 must lie in [0, 1]")
    p_err = 1.0 - p0
    return math.fsum(_binom_pmf(code.n, t, p0, p_err) for t in range(code.correctable + 1))


def station_error_channel(code: PolynomialCode, p_cor: float | None = None, *, p_fail: float | None = None) -> PauliDistribution:
    """Logical error channel of one station: no error with probability
    ``p_cor``, otherwise a uniformly random nonzero shift. Falls back to the
    uniform distribution once a specific error outranks the no-error case.

    Pass ``p_fail`` instead of ``p_cor`` when the failure mass is known more
    precisely than ``1 - p_cor``.
    """
    if (p_cor is None) == (p_fail is None):
        raise TypeError("give exactly one of p_cor, p_fail")
    if p_fail is None:
        p_fail = 1.0 - p_cor
    else:
        p_cor = 1.0 - p_fail
    if not 0.0 <= p_cor <= 1.0:
        raise ValueError("p_cor must lie in [0, 1]")
    dim = code.dim
    other = p_fail / (dim - 1)
    if p_cor < other:
        return PauliDistribution.uniform(dim)
    probs = np.full(dim, other)
    probs[0] = p_cor
    return PauliDistribution.normalized(probs)


@dataclass(frozen=True)
class ErasureBinning:
    """Outcome statistics of one GKP qudit when readouts near a bin edge are
    flagged as erasures."""

    gamma: float
    kept_probs: PauliDistribution
    p_discard: float
    kept_mass: float
    kept_error_mass: float

    @property
    def p0(self) -> float:
        return self.kept_probs.p0

    @property
    def p_error(self) -> float:
        """Conditional probability of an unlocated error on a kept qudit."""
        return self.kept_error_mass / self.kept_mass


def erasure_binning(dim: int, var: float, gamma: float, jmax: int | None = None) -> ErasureBinning:
    """Keep readouts within ``gamma/2`` lattice units of a lattice point; the
    rest (within ``(1-gamma)/2`` of a bin edge) become located erasures."""
    _check_dim(dim)
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]; gamma = 0 discards every qudit")
    if var <= 0.0:
        raise ValueError("variance must be positive")
    if jmax is None:
        jmax = adaptive_jmax(dim, var)
    kept = binned_shift_masses(dim, var, gamma, jmax)
    if gamma == 1.0:
        discard = 0.0
    else:
        # discard windows straddle the bin edges at half-integer positions
        discard = math.fsum(binned_shift_masses(dim, var, 1.0 - gamma, jmax, offset=0.5))
    total = float(kept.sum())
    return ErasureBinning(
        gamma=gamma,
        kept_probs=PauliDistribution.normalized(kept),
        p_discard=discard,
        kept_mass=total,
        kept_error_mass=float(kept[1:].sum()),
    )


def p_fail(code: PolynomialCode, var: float, gamma: float = 1.0, jmax: int | None = None) -> float:
    """Logical failure probability with erasure flagging at parameter ``gamma``.

    Accumulated as the sum of the failing (t_k, t_u) configurations, so values
    far below machine epsilon relative to 1 are resolved.
    """
    if gamma == 1.0:
        # no erasures: only the correctable-pattern count matters
        return p_uncorrectable(code, distribution_from_gaussian(code.dim, var, jmax).error_mass)
    b = erasure_binning(code.dim, var, gamma, jmax)
    n, d = code.n, code.distance
    p_keep = b.kept_mass
    p_ok = b.p0
    p_err = b.p_error
    terms = []
    for t_known in range(n + 1):
        layer = _binom_pmf(n, t_known, p_keep, b.p_discard)
        if t_known >= d:
            terms.append(layer)
            continue
        t_max = (d - t_known - 1) // 2
        m = n - t_known
        terms.append(layer * math.fsum(_binom_pmf(m, t, p_ok, p_err) for t in range(t_max + 1, m + 1)))
    return min(1.0, math.fsum(terms))


def gamma_curve(code: PolynomialCode, var: float, gammas) -> dict[str, np.ndarray]:
    """Columns ``gamma, p_fail, p_discard, p0`` over the given grid."""
    gammas = np.asarray(gammas, dtype=float)
    rows = []
    for g in gammas:
        b = erasure_binning(code.dim, var, float(g))
        rows.append((p_fail(code, var, float(g)), b.p_discard, b.p0))
    arr = np.array(rows).reshape(-1, 3)
    return {"gamma": gammas, "p_fail": arr[:, 0], "p_discard": arr[:, 1], "p0": arr[:, 2]}


def optimal_gamma(code: PolynomialCode, var: float, resolution: float = 1e-3, refine: bool = True) -> tuple[float, float]:
    """Global minimiser of ``p_fail`` over ``gamma`` in ``(0, 1]``.

    Grid scan at ``resolution`` followed by a bounded Brent search
    around the best grid point. Ties go to the largest ``gamma``.
    """
    if not 0.0 < resolution <= 1e-3:
        raise ValueError("resolution must lie in (0, 1e-3]")
    steps = int(round(1.0 / resolution))
    gammas = np.arange(1, steps + 1) / steps
    values = np.array([p_fail(code, var, float(g)) for g in gammas])
    # scan from the top so that argmin picks the largest gamma among ties
    best = steps - 1 - int(np.argmin(values[::-1]))
    g_best, f_best = float(gammas[best]), float(values[best])
    if refine and f_best > 0.0 and 0 < best < steps - 1:
        from scipy.optimize import minimize_scalar

        res = minimize_scalar(
            lambda g: p_fail(code, var, float(g)),
            bounds=(gammas[best - 1], gammas[best + 1]),
            method="bounded",
            options={"xatol": resolution * 1e-3},
        )
        if res.fun < f_best:
            g_best, f_best = float(res.x), float(res.fun)
    return g_best, f_best
