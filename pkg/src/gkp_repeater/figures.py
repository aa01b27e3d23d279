"""Sweeps that regenerate the published rate and failure-probability plots.

Every figure has a dictionary of fixed parameters taken from its caption,
including the grid definition; any entry can be overridden, and the full
dictionary is echoed into the output so a table can always be re-run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import polycode
from .half_teleport import Placement
from .noise import LinkParams, input_noise_variance, squeezing_to_variance
from .protocols import Protocol, RepeaterConfig, bare_rate_curve, rate, rate_vs_input_noise, station_count
from .sweeps import Axis, SweepTable, grid, ordered_map

ENCODED_DIMS = [5, 13, 17, 29]
PROTOCOL_ORDER = (Protocol.TWO_WAY, Protocol.ONE_WAY, Protocol.HALF_TELEPORT)


@dataclass(frozen=True)
class Figure:
    name: str
    description: str
    defaults: dict
    build: Callable[[dict, int | None], tuple]

    def params(self, overrides: dict | None = None) -> dict:
        params = dict(self.defaults)
        for key, value in (overrides or {}).items():
            if key not in params:
                raise KeyError(f"figure {self.name} has no parameter {key!r}; known: {sorted(params)}")
            params[key] = coerce_param(params[key], value)
        return params

    def run(self, overrides: dict | None = None, workers: int | None = None) -> SweepTable:
        params = self.params(overrides)
        columns, rows = self.build(params, workers)
        from . import __version__

        meta = {"figure": self.name, "description": self.description, "params": params, "version": __version__}
        return SweepTable(columns, rows, meta)


def coerce_param(default, value):
    """Convert ``value`` (often a CLI string) to the type of ``default``."""
    if not isinstance(value, str):
        if isinstance(default, list):
            return [type(default[0])(v) for v in value] if default else list(value)
        return type(default)(value)
    if isinstance(default, bool):
        if value.lower() in ("1", "true", "yes"):
            return True
        if value.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if isinstance(default, list):
        kind = type(default[0]) if default else float
        return [kind(v) for v in value.split(",") if v.strip()]
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def _axis(params: dict, prefix: str, scale: str = "linear") -> Axis:
    return Axis(prefix, params[f"{prefix}_min"], params[f"{prefix}_max"], params[f"{prefix}_steps"], scale)


def _tag(protocol: Protocol) -> str:
    return protocol.value.replace("-", "_")


# -- bare optimum over (L, s) -------------------------------------------------

def _bare_map(protocol: Protocol):
    def build(p: dict, workers):
        lengths = _axis(p, "length_km", "log").values()
        squeezing = _axis(p, "squeezing_db").values()
        dims = range(2, p["max_dim"] + 1)

        def per_squeezing(s):
            base = RepeaterConfig(
                protocol=protocol, length_km=float(lengths[-1]), spacing_km=p["spacing_km"],
                squeezing_db=float(s), coupling=p["coupling"],
            )
            return np.array([bare_rate_curve(base.with_(dim=d), lengths) for d in dims])

        curves = ordered_map(per_squeezing, list(squeezing), workers)
        rows = []
        for i, length in enumerate(lengths):
            for j, s in enumerate(squeezing):
                skr = curves[j][:, i]
                best = int(np.argmax(skr))  # first maximum: ties go to the smaller D
                d_opt = dims[best] if skr[best] > 0 else 1
                rows.append((float(length), float(s), d_opt, float(skr[best])))
        return ("L_km", "s_db", "D_opt", "skr"), rows

    return build


_BARE_DEFAULTS = {
    "spacing_km": 0.5,
    "coupling": 0.99,
    "length_km_min": 10.0,
    "length_km_max": 1e5,
    "length_km_steps": 41,
    "squeezing_db_min": 5.0,
    "squeezing_db_max": 35.0,
    "squeezing_db_steps": 61,
    "max_dim": 32,
}


# -- encoded rates versus total length ----------------------------------------

def _length_curves(p: dict, workers):
    lengths = _axis(p, "length_km", "log").values()
    base = RepeaterConfig(
        spacing_km=p["spacing_km"], squeezing_db=p["squeezing_db"], coupling=p["coupling"],
        length_km=float(lengths[-1]), placement=p["placement"],
    )
    jobs = [(proto, d) for proto in PROTOCOL_ORDER for d in p["dims"]]

    def curve(job):
        proto, d = job
        cfg = base.with_(protocol=proto, dim=d, encoded=True)
        return [rate(cfg.with_(length_km=float(L))).skr_bits for L in lengths]

    encoded = ordered_map(curve, jobs, workers)
    dims = range(2, p["max_dim"] + 1)
    bare = np.array([bare_rate_curve(base.with_(dim=d), lengths) for d in dims])
    columns = ["L_km"] + [f"skr_{_tag(proto)}_d{d}" for proto, d in jobs] + ["bare_D_opt", "bare_skr"]
    rows = []
    for i, length in enumerate(lengths):
        best = int(np.argmax(bare[:, i]))
        d_opt = dims[best] if bare[best, i] > 0 else 1
        rows.append((float(length), *(c[i] for c in encoded), d_opt, float(bare[best, i])))
    return columns, rows


_LENGTH_DEFAULTS = {
    "spacing_km": 0.1,
    "coupling": 0.99,
    "length_km_min": 1.0,
    "length_km_max": 1e5,
    "length_km_steps": 41,
    "dims": list(ENCODED_DIMS),
    "placement": Placement.ALTERNATING.value,
    "max_dim": 32,
}


# -- rate per station versus spacing ------------------------------------------

def _spacing_curves(p: dict, workers):
    spacings = _axis(p, "spacing_km").values()
    base = RepeaterConfig(
        length_km=p["length_km"], squeezing_db=p["squeezing_db"], coupling=p["coupling"],
        gamma=p["gamma"], placement=p["placement"], encoded=True, dim=p["dims"][0],
    )
    jobs = [(proto, d) for proto in PROTOCOL_ORDER for d in p["dims"]]

    def curve(job):
        proto, d = job
        cfg = base.with_(protocol=proto, dim=d, gamma=p["gamma"] if proto is not Protocol.HALF_TELEPORT else 1.0)
        return [rate(cfg.with_(spacing_km=float(l0))).skr_per_station for l0 in spacings]

    curves = ordered_map(curve, jobs, workers)
    columns = ["spacing_km", "n_stations"] + [f"skr_per_n_{_tag(proto)}_d{d}" for proto, d in jobs]
    rows = [
        (float(l0), station_count(p["length_km"], float(l0)), *(c[i] for c in curves))
        for i, l0 in enumerate(spacings)
    ]
    return columns, rows


_SPACING_DEFAULTS = {
    "length_km": 2000.0,
    "coupling": 0.999,
    "spacing_km_min": 0.1,
    "spacing_km_max": 2.0,
    "spacing_km_steps": 191,
    "dims": list(ENCODED_DIMS),
    "gamma": 1.0,
    "placement": Placement.ALTERNATING.value,
}


def _placement_curves(p: dict, workers):
    spacings = _axis(p, "spacing_km").values()
    base = RepeaterConfig(
        protocol=Protocol.HALF_TELEPORT, length_km=p["length_km"], squeezing_db=p["squeezing_db"],
        coupling=p["coupling"], encoded=True, dim=p["dims"][0], symmetric_mode=p["symmetric_mode"],
    )
    jobs = [(pl, d) for d in p["dims"] for pl in Placement]

    def curve(job):
        placement, d = job
        cfg = base.with_(placement=placement, dim=d)
        return [rate(cfg.with_(spacing_km=float(l0))).skr_per_station for l0 in spacings]

    curves = ordered_map(curve, jobs, workers)
    columns = ["spacing_km", "n_stations"] + [f"skr_per_n_{pl.value}_d{d}" for pl, d in jobs]
    rows = [
        (float(l0), station_count(p["length_km"], float(l0)), *(c[i] for c in curves))
        for i, l0 in enumerate(spacings)
    ]
    return columns, rows


_PLACEMENT_DEFAULTS = {
    "length_km": 2000.0,
    "coupling": 0.999,
    "spacing_km_min": 0.1,
    "spacing_km_max": 2.0,
    "spacing_km_steps": 191,
    "dims": [5],
    "symmetric_mode": "caption",
}


# -- input noise ----------------------------------------------------------------

def _noise_map(p: dict, workers):
    axes = [_axis(p, "squeezing_db"), _axis(p, "coupling")]
    rows = []
    for s, eta_c in grid(axes):
        link = LinkParams(p["spacing_km"], eta_c)
        rows.append((s, eta_c, input_noise_variance(squeezing_to_variance(s), link)))
    return ("s_db", "coupling", "sigma2_in"), rows


def _noise_curves(p: dict, workers):
    noise = _axis(p, "sigma2_in").values()

    def curve(d):
        return [
            rate_vs_input_noise(d, p["length_km"], p["spacing_km"], float(v), gamma=p["gamma"]).skr_bits
            for v in noise
        ]

    curves = ordered_map(curve, list(p["dims"]), workers)
    columns = ["sigma2_in"] + [f"skr_d{d}" for d in p["dims"]]
    return columns, [(float(v), *(c[i] for c in curves)) for i, v in enumerate(noise)]


# -- erasure decoding -----------------------------------------------------------

def _gamma_curve(p: dict, workers):
    gammas = _axis(p, "gamma").values()
    code = polycode.PolynomialCode(p["dim"])
    cols = polycode.gamma_curve(code, p["sigma2"], gammas)
    names = ("gamma", "p_fail", "p_discard", "p0")
    return names, list(zip(*(cols[n].tolist() for n in names)))


FIGURES: dict[str, Figure] = {}


def _register(name: str, description: str, defaults: dict, build) -> None:
    FIGURES[name] = Figure(name, description, defaults, build)


_register("fig2a", "optimal bare dimension over (L, s), one-way", _BARE_DEFAULTS, _bare_map(Protocol.ONE_WAY))
_register("fig2b", "optimal bare dimension over (L, s), two-way", _BARE_DEFAULTS, _bare_map(Protocol.TWO_WAY))
_register("fig3a", "encoded SKR versus L at 20 dB", {**_LENGTH_DEFAULTS, "squeezing_db": 20.0}, _length_curves)
_register("fig3b", "encoded SKR versus L at 30 dB", {**_LENGTH_DEFAULTS, "squeezing_db": 30.0}, _length_curves)
_register("fig4a", "encoded SKR/N versus spacing at 20 dB", {**_SPACING_DEFAULTS, "squeezing_db": 20.0}, _spacing_curves)
_register("fig4b", "encoded SKR/N versus spacing at 30 dB", {**_SPACING_DEFAULTS, "squeezing_db": 30.0}, _spacing_curves)
_register(
    "fig-noise-a",
    "input noise variance over (s, coupling)",
    {
        "spacing_km": 0.5,
        "squeezing_db_min": 5.0,
        "squeezing_db_max": 35.0,
        "squeezing_db_steps": 61,
        "coupling_min": 0.9,
        "coupling_max": 1.0,
        "coupling_steps": 51,
    },
    _noise_map,
)
_register(
    "fig-noise-b",
    "encoded two-way SKR versus input noise",
    {
        "length_km": 5000.0,
        "spacing_km": 0.5,
        "sigma2_in_min": 0.0,
        "sigma2_in_max": 0.04,
        "sigma2_in_steps": 81,
        "dims": list(ENCODED_DIMS),
        "gamma": 1.0,
    },
    _noise_curves,
)
_register(
    "fig5",
    "logical failure probability versus discarding parameter",
    {"dim": 13, "sigma2": 0.01, "gamma_min": 0.5, "gamma_max": 1.0, "gamma_steps": 501},
    _gamma_curve,
)
_register("fig9a", "half-teleportation placements, SKR/N versus spacing at 20 dB", {**_PLACEMENT_DEFAULTS, "squeezing_db": 20.0}, _placement_curves)
_register("fig9b", "half-teleportation placements, SKR/N versus spacing at 30 dB", {**_PLACEMENT_DEFAULTS, "squeezing_db": 30.0}, _placement_curves)


def figure(name: str) -> Figure:
    try:
        return FIGURES[name]
    except KeyError:
        raise KeyError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}") from None
