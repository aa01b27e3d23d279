"""Cross-check of closed forms against the Monte-Carlo oracle."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import oracle, polycode
from .gkp_math import convolve_power, distribution_from_gaussian
from .half_teleport import Placement, StationNoise, placement_distribution
from .noise import LinkParams, squeezing_to_variance
from .protocols import RepeaterConfig, bare_rate

SHIFT_GRID = [(d, v) for d in (2, 3, 5, 13) for v in (0.01, 0.05, 0.25, 1.0)]
ERASURE_POINTS = [(5, 0.15, 1.0), (5, 0.1, 0.9), (13, 0.05, 0.8), (13, 0.05, 1.0)]
CHAIN_CONFIGS = [
    RepeaterConfig(protocol="two-way", dim=2, length_km=5.0, spacing_km=0.5, squeezing_db=10.0),
    RepeaterConfig(protocol="one-way", dim=3, length_km=2.5, spacing_km=0.5, squeezing_db=14.0),
]
PLACEMENT_POINT = (5, 20.0, 0.999, 0.5)


@dataclass(frozen=True)
class ValidationPoint:
    """A user-chosen (dimension, variance, gamma) point to check instead of the default suite."""

    dim: int
    var: float
    gamma: float = 1.0


def _entry(check: str, quantity: str, estimate: float, total: int, closed_form: float, perturb: float) -> dict:
    closed_form = closed_form * (1.0 + perturb)
    se, z = oracle.z_score(estimate, closed_form, total)
    return {
        "check": check,
        "quantity": quantity,
        "estimate": estimate,
        "stderr": se,
        "closed_form": closed_form,
        "z_score": z,
        "samples": total,
    }


def _shift_entries(task: int, dim: int, var: float, spec: oracle.SamplerSpec, perturb: float) -> list[dict]:
    emp = oracle.sample_shift_distribution(dim, var, spec, task)
    closed = distribution_from_gaussian(dim, var).probs
    name = f"shift_distribution(D={dim}, var={var})"
    return [_entry(name, f"P(X^{k})", float(emp.probs[k]), emp.total, float(closed[k]), perturb) for k in range(dim)]


def _erasure_entries(task: int, dim: int, var: float, gamma: float, spec: oracle.SamplerSpec, perturb: float) -> list[dict]:
    code = polycode.PolynomialCode(dim)
    est = oracle.sample_erasure_trial(code, var, gamma, spec, task)
    name = f"erasure_trial({code}, var={var}, gamma={gamma})"
    entries = [_entry(name, "p_fail", est.p_fail, est.trials, est.closed_form_p_fail, perturb)]
    entries[0]["resolvable"] = est.resolvable and est.closed_form_p_fail * est.trials >= 10
    if gamma < 1.0:
        entries.append(_entry(name, "p_discard", est.p_discard, est.qudits, est.closed_form_p_discard, perturb))
    return entries


def default_checks(spec: oracle.SamplerSpec) -> list[tuple[str, tuple]]:
    trials = max(10**4, spec.samples // 10)
    checks: list[tuple[str, tuple]] = [("shift", (d, v, spec.samples)) for d, v in SHIFT_GRID]
    checks += [("erasure", (d, v, g, trials)) for d, v, g in ERASURE_POINTS]
    checks += [("placement", (p,) + PLACEMENT_POINT + (spec.samples,)) for p in Placement]
    checks += [("chain", (cfg, trials)) for cfg in CHAIN_CONFIGS]
    return checks


def point_checks(point: ValidationPoint, spec: oracle.SamplerSpec) -> list[tuple[str, tuple]]:
    checks: list[tuple[str, tuple]] = [("shift", (point.dim, point.var, max(spec.samples, 10**4)))]
    if polycode.is_prime(point.dim) and point.dim >= 3:
        checks.append(("erasure", (point.dim, point.var, point.gamma, spec.samples)))
    return checks


def _run_check(task: int, kind: str, args: tuple, spec: oracle.SamplerSpec, perturb: float) -> list[dict]:
    def sized(n: int) -> oracle.SamplerSpec:
        return oracle.SamplerSpec(spec.seed, n, spec.block_size, spec.workers)

    if kind == "shift":
        dim, var, n = args
        return _shift_entries(task, dim, var, sized(n), perturb)
    if kind == "erasure":
        dim, var, gamma, n = args
        return _erasure_entries(task, dim, var, gamma, sized(n), perturb)
    if kind == "placement":
        placement, dim, db, coupling, spacing, n = args
        noise = StationNoise.from_link(squeezing_to_variance(db), LinkParams(spacing, coupling))
        variances = noise.channel_variances(placement)
        emp = oracle.sample_composed_shift(dim, variances, sized(n), task)
        closed = placement_distribution(placement, dim, noise.sq_var, noise.loss_var).probs
        name = f"placement({placement.value}, D={dim}, s={db} dB, L0={spacing} km)"
        return [_entry(name, f"P(X^{k})", float(emp.probs[k]), emp.total, float(closed[k]), perturb) for k in range(dim)]
    if kind == "chain":
        cfg, n = args
        emp = oracle.sample_bare_chain(cfg, sized(n), task=task)
        station = distribution_from_gaussian(cfg.dim, bare_rate(cfg).station_var)
        closed = convolve_power(station, emp.extra["n_stations"]).probs
        name = f"bare_chain({cfg.protocol.value}, D={cfg.dim}, N={emp.extra['n_stations']})"
        entries = [_entry(name, f"P(X^{k})", float(emp.probs[k]), emp.total, float(closed[k]), perturb) for k in range(cfg.dim)]
        for e in entries:
            e["lag1_corr"] = emp.extra.get("lag1_corr")
        return entries
    raise ValueError(f"unknown check kind {kind!r}")


def run_validation(
    spec: oracle.SamplerSpec,
    point: ValidationPoint | None = None,
    perturb: float = 0.0,
) -> dict:
    """JSON-ready report; ``passed`` is False if any ``|z| > 5``.

    ``perturb`` scales every closed-form value by ``1 + perturb``; it exists
    only to prove that the harness flags mismatches.
    """
    checks = point_checks(point, spec) if point else default_checks(spec)
    entries: list[dict] = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", oracle.ResolvabilityWarning)
        for task, (kind, args) in enumerate(checks):
            entries.extend(_run_check(task, kind, args, spec, perturb))
    notes = sorted({str(w.message) for w in caught if issubclass(w.category, oracle.ResolvabilityWarning)})
    for msg in notes:
        warnings.warn(msg, oracle.ResolvabilityWarning, stacklevel=2)
    worst = max((abs(e["z_score"]) for e in entries), default=0.0)
    return {
        "metadata": {
            "seed": spec.seed,
            "samples": spec.samples,
            "block_size": spec.block_size,
            "gaussian_transform": oracle.GAUSSIAN_TRANSFORM,
            "seed_derivation": "SeedSequence(seed, spawn_key=(task, block)) -> Philox",
            "z_limit": oracle.Z_LIMIT,
            "perturb": perturb,
        },
        "warnings": notes,
        "max_abs_z": worst if math.isfinite(worst) else "inf",
        "passed": bool(np.isfinite(worst) and worst <= oracle.Z_LIMIT),
        "entries": entries,
    }
