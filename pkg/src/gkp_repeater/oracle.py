"""Monte-Carlo counterparts of the closed-form error model.

Randomness is counter based: block ``b`` of task ``t`` draws from a Philox
generator keyed by ``SeedSequence(seed, spawn_key=(t, b))``. Samples are
split into fixed-size blocks, so tallies do not depend on how many workers
process the blocks. Gaussians come from the inverse normal CDF applied to
53-bit uniforms on the open interval (0, 1).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from . import polycode
from .gkp_math import PauliDistribution, lattice_spacing
from .noise import measurement_variance, preparation_factor
from .protocols import Protocol, RepeaterConfig, station_count

GAUSSIAN_TRANSFORM = "inverse-cdf (scipy.special.ndtri) on 53-bit Philox4x64 uniforms"
Z_LIMIT = 5.0
MIN_RESOLVABLE = 1e-6


class ResolvabilityWarning(UserWarning):
    """The requested sample count cannot resolve the quantity being checked."""


@dataclass(frozen=True)
class SamplerSpec:
    seed: int = 12345
    samples: int = 10**6
    block_size: int = 1 << 20
    workers: int = 1

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.samples < 1 or self.block_size < 1 or self.workers < 1:
            raise ValueError("samples, block_size and workers must be positive")

    def blocks(self, per_item: int = 1) -> list[int]:
        """Sizes of the fixed blocks covering ``samples`` items, where one item
        consumes ``per_item`` Gaussian draws."""
        size = max(1, self.block_size // per_item)
        full, rest = divmod(self.samples, size)
        return [size] * full + ([rest] if rest else [])


def block_rng(seed: int, task: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(task, block))))


def standard_normals(rng: np.random.Generator, shape) -> np.ndarray:
    u = (rng.integers(0, 1 << 53, size=shape, dtype=np.uint64).astype(float) + 0.5) / float(1 << 53)
    return ndtri(u)


def _map_blocks(fn, sizes: list[int], workers: int) -> list:
    jobs = list(enumerate(sizes))
    if workers <= 1 or len(jobs) <= 1:
        return [fn(b, n) for b, n in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def z_score(estimate: float, closed_form: float, total: int) -> tuple[float, float]:
    """Binomial z-score with the standard error taken at the closed-form value."""
    se = math.sqrt(max(closed_form * (1.0 - closed_form), 0.0) / total)
    if se == 0.0:
        return se, (0.0 if estimate == closed_form else math.inf)
    return se, (estimate - closed_form) / se


def bin_residues(shifts: np.ndarray, dim: int) -> np.ndarray:
    return np.mod(np.rint(shifts / lattice_spacing(dim)).astype(np.int64), dim)


@dataclass(frozen=True)
class EmpiricalDistribution:
    counts: np.ndarray
    total: int
    extra: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return int(self.counts.size)

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.total

    @property
    def stderr(self) -> np.ndarray:
        p = self.probs
        return np.sqrt(p * (1 - p) / self.total)

    def distribution(self) -> PauliDistribution:
        return PauliDistribution.normalized(self.counts)

    def wilson(self, alpha: float = 0.05):
        from statsmodels.stats.proportion import proportion_confint

        return proportion_confint(self.counts, self.total, alpha=alpha, method="wilson")

    def z_scores(self, closed_form) -> np.ndarray:
        closed_form = np.asarray(closed_form, dtype=float)
        return np.array([z_score(e, c, self.total)[1] for e, c in zip(self.probs, closed_form)])


def sample_composed_shift(dim: int, variances, spec: SamplerSpec, task: int = 0) -> EmpiricalDistribution:
    """Each variance is an independent Gaussian channel binned on its own;
    the residues add modulo ``dim``."""
    sigmas = [math.sqrt(v) for v in variances]
    if any(v < 0 for v in variances) or not sigmas:
        raise ValueError("need at least one non-negative variance")

    def run(block: int, n: int) -> np.ndarray:
        rng = block_rng(spec.seed, task, block)
        total = np.zeros(n, dtype=np.int64)
        for s in sigmas:
            total += bin_residues(s * standard_normals(rng, n), dim)
        return np.bincount(total % dim, minlength=dim)

    counts = sum(_map_blocks(run, spec.blocks(len(sigmas)), spec.workers))
    return EmpiricalDistribution(np.asarray(counts, dtype=np.int64), spec.samples)


def sample_shift_distribution(dim: int, var: float, spec: SamplerSpec, task: int = 0) -> EmpiricalDistribution:
    """Empirical ``P_sq(X^k, var)`` from binned Gaussian shifts."""
    if spec.samples < 10**4:
        raise ValueError("need at least 1e4 samples")
    return sample_composed_shift(dim, [var], spec, task)


@dataclass(frozen=True)
class ErasureEstimate:
    trials: int
    failures: int
    qudits: int
    discards: int
    closed_form_p_fail: float
    closed_form_p_discard: float

    @property
    def p_fail(self) -> float:
        return self.failures / self.trials

    @property
    def p_discard(self) -> float:
        return self.discards / self.qudits

    @property
    def resolvable(self) -> bool:
        return self.closed_form_p_fail >= MIN_RESOLVABLE


def required_trials(p: float, target_events: int = 100) -> int:
    return math.ceil(target_events / p) if p > 0 else math.inf


def sample_erasure_trial(code: polycode.PolynomialCode, var: float, gamma: float, spec: SamplerSpec, task: int = 0) -> ErasureEstimate:
    """Trial-level decoding: each of the ``n`` qudits is kept-correct,
    kept-error or discarded; a trial fails when ``t_k + 2 t_u >= d``."""
    closed_fail = polycode.p_fail(code, var, gamma)
    closed_discard = polycode.erasure_binning(code.dim, var, gamma).p_discard
    if closed_fail < MIN_RESOLVABLE or closed_fail * spec.samples < 10:
        warnings.warn(
            ResolvabilityWarning(
                f"p_fail = {closed_fail:.3g} for {code} at var={var}, gamma={gamma} cannot be "
                f"resolved with {spec.samples} trials; about {required_trials(closed_fail)} needed"
            ),
            stacklevel=2,
        )
    n, d, dim = code.n, code.distance, code.dim
    sigma = math.sqrt(var)
    a = lattice_spacing(dim)

    def run(block: int, size: int) -> tuple[int, int]:
        rng = block_rng(spec.seed, task, block)
        x = sigma * standard_normals(rng, (size, n)) / a
        nearest = np.rint(x)
        discarded = np.abs(x - nearest) > gamma / 2.0
        wrong = (np.mod(nearest.astype(np.int64), dim) != 0) & ~discarded
        t_known = discarded.sum(axis=1)
        t_unknown = wrong.sum(axis=1)
        return int(np.count_nonzero(t_known + 2 * t_unknown >= d)), int(t_known.sum())

    tallies = _map_blocks(run, spec.blocks(n), spec.workers)
    return ErasureEstimate(
        trials=spec.samples,
        failures=sum(t[0] for t in tallies),
        qudits=spec.samples * n,
        discards=sum(t[1] for t in tallies),
        closed_form_p_fail=closed_fail,
        closed_form_p_discard=closed_discard,
    )


def sample_bare_chain(config: RepeaterConfig, spec: SamplerSpec, correlated: bool = False, task: int = 0) -> EmpiricalDistribution:
    """End-to-end ``X``-error marginal of a bare teleportation chain.

    Every readout bins the sum of its Gaussian contributions (preparation,
    coupling, transmission; amplification is folded into the loss variances).
    With ``correlated=True`` and a three-preparation light cone, adjacent
    readouts share the control-qudit preparation error of the Bell pair in
    between, exposing the correlation that the convolution model ignores.
    ``extra['lag1_corr']`` holds the correlation of adjacent station bins.
    """
    if config.encoded or config.protocol is Protocol.HALF_TELEPORT:
        raise ValueError("sample_bare_chain needs a bare teleportation protocol")
    n_st = station_count(config.length_km, config.spacing_km)
    if n_st > 10**4:
        raise ValueError("chain too long for sampling (N > 1e4)")
    dim = config.dim
    budget = measurement_variance(config.protocol.value, dim, config.sq_var, config.link)
    sq = math.sqrt(config.sq_var)
    loss_sd = math.sqrt(budget.coupling + budget.transmission + config.meas_var)
    c = preparation_factor(dim)
    a = lattice_spacing(dim)

    def run(block: int, size: int):
        rng = block_rng(spec.seed, task, block)
        loss = loss_sd * standard_normals(rng, (size, n_st))
        if correlated and c == 3:
            ctrl = sq * standard_normals(rng, (size, n_st + 1))
            targ = ctrl + sq * standard_normals(rng, (size, n_st + 1))
            shifts = targ[:, :-1] - ctrl[:, 1:] + loss
        else:
            shifts = sq * standard_normals(rng, (size, n_st, c)).sum(axis=2) + loss
        bins = np.rint(shifts / a).astype(np.int64)
        total = np.mod(bins.sum(axis=1), dim)
        lag = np.zeros(3)
        if n_st > 1:
            left, right = bins[:, :-1].astype(float), bins[:, 1:].astype(float)
            lag = np.array([(left * right).sum(), left.sum() + right.sum(), (left**2).sum() + (right**2).sum()])
        return np.bincount(total, minlength=dim), lag

    results = _map_blocks(run, spec.blocks(n_st * (c + 1)), spec.workers)
    counts = sum(r[0] for r in results)
    extra = {"n_stations": n_st, "correlated": bool(correlated and c == 3)}
    if n_st > 1:
        cross, first, second = sum(r[1] for r in results)
        pairs = spec.samples * (n_st - 1)
        mean = first / (2 * pairs)
        var = second / (2 * pairs) - mean**2
        extra["lag1_corr"] = float((cross / pairs - mean**2) / var) if var > 0 else 0.0
    return EmpiricalDistribution(np.asarray(counts, dtype=np.int64), spec.samples, extra)
