"""INI config files for the command line.

One file drives both pool generation and experiment runs, split into the
sections [pool], [strategy], [surrogate], [costing], [eval] and [run].
Every key is optional except the pool source; unknown sections or keys are
rejected so typos fail loudly instead of silently running defaults.
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .acquisition import StrategySpec
from .costing import OverheadModel
from .errors import ConfigError
from .metrics import MAP5095_THRESHOLDS
from .runner import (
    DEFAULT_MIN_BOX_PIXELS,
    DEFAULT_REFERENCE_RESOLUTION,
    DEFAULT_SEEDS,
    RunConfig,
)
from .synth import CostCoeffs, GenConfig

SOURCE_SYNTH = "synth"

_SECTION_KEYS = {
    "pool": {
        "source",
        "rng_seed",
        "n_sequences",
        "frame_len_min",
        "frame_len_max",
        "raster_width",
        "raster_height",
        "objects_min",
        "objects_max",
        "speed_min",
        "speed_max",
        "occlusion_rate",
        "alpha_boxes",
        "beta_motion",
        "gamma_occlusion",
        "delta_length",
        "cost_noise_sd",
    },
    "strategy": {"kind", "batch_size", "parity_phase"},
    "surrogate": {"kappa", "noise_seed", "trace", "trace_metrics"},
    "costing": {
        "detector_gflops_per_frame",
        "flow_gflops_per_pair",
        "interpolation_rate",
    },
    "eval": {
        "evaluate",
        "min_box_pixels",
        "reference_resolution",
        "iou_thresholds",
    },
    "run": {
        "mode",
        "seed_sequences",
        "rounds",
        "seeds",
        "frames_per_round",
        "flow_threshold",
        "flow_min_area",
    },
}


def read_config(path: Path | str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}")
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
    return parser


def _get(parser, section: str, key: str, cast, fallback):
    if not parser.has_option(section, key):
        return fallback
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r}")


def _get_bool(parser, section: str, key: str, fallback: bool) -> bool:
    if not parser.has_option(section, key):
        return fallback
    try:
        return parser.getboolean(section, key)
    except ValueError:
        raise ConfigError(
            f"bad value for [{section}] {key}: {parser.get(section, key)!r}"
        )


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(part.strip()) for part in raw.split(",") if part.strip())


def _float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(part.strip()) for part in raw.split(",") if part.strip())


def require_section(parser, section: str) -> None:
    if not parser.has_section(section):
        raise ConfigError(f"config is missing the [{section}] section")


def gen_config(parser: configparser.ConfigParser) -> GenConfig:
    """Synthetic-pool settings from [pool]; the source must be 'synth'."""
    require_section(parser, "pool")
    source = parser.get("pool", "source", fallback=SOURCE_SYNTH)
    if source != SOURCE_SYNTH:
        raise ConfigError(
            f"[pool] source must be {SOURCE_SYNTH!r} to generate, got {source!r}"
        )
    sec = "pool"
    defaults = GenConfig()
    coeff_defaults = CostCoeffs()
    coeffs = CostCoeffs(
        alpha_boxes=_get(parser, sec, "alpha_boxes", float, coeff_defaults.alpha_boxes),
        beta_motion=_get(parser, sec, "beta_motion", float, coeff_defaults.beta_motion),
        gamma_occlusion=_get(
            parser, sec, "gamma_occlusion", float, coeff_defaults.gamma_occlusion
        ),
        delta_length=_get(
            parser, sec, "delta_length", float, coeff_defaults.delta_length
        ),
        noise_sd=_get(parser, sec, "cost_noise_sd", float, coeff_defaults.noise_sd),
    )
    return GenConfig(
        rng_seed=_get(parser, sec, "rng_seed", int, defaults.rng_seed),
        n_sequences=_get(parser, sec, "n_sequences", int, defaults.n_sequences),
        frame_len_range=(
            _get(parser, sec, "frame_len_min", int, defaults.frame_len_range[0]),
            _get(parser, sec, "frame_len_max", int, defaults.frame_len_range[1]),
        ),
        raster_size=(
            _get(parser, sec, "raster_width", int, defaults.raster_size[0]),
            _get(parser, sec, "raster_height", int, defaults.raster_size[1]),
        ),
        objects_per_seq_range=(
            _get(parser, sec, "objects_min", int, defaults.objects_per_seq_range[0]),
            _get(parser, sec, "objects_max", int, defaults.objects_per_seq_range[1]),
        ),
        speed_range=(
            _get(parser, sec, "speed_min", float, defaults.speed_range[0]),
            _get(parser, sec, "speed_max", float, defaults.speed_range[1]),
        ),
        occlusion_rate=_get(
            parser, sec, "occlusion_rate", float, defaults.occlusion_rate
        ),
        cost_coeffs=coeffs,
    )


def pool_source(parser: configparser.ConfigParser) -> GenConfig | str:
    require_section(parser, "pool")
    source = parser.get("pool", "source", fallback=SOURCE_SYNTH)
    if source == SOURCE_SYNTH:
        return gen_config(parser)
    return source


def run_config(
    parser: configparser.ConfigParser,
    strategy_override: str | None = None,
    seeds_override: tuple[int, ...] | None = None,
) -> RunConfig:
    """Assemble a RunConfig; command-line overrides beat file values."""
    require_section(parser, "strategy")
    kind = strategy_override or parser.get("strategy", "kind", fallback=None)
    if kind is None:
        raise ConfigError("config is missing [strategy] kind")
    try:
        strategy = StrategySpec(
            kind=kind,
            batch_size=_get(parser, "strategy", "batch_size", int, 1),
            parity_phase=parser.get("strategy", "parity_phase", fallback="max_first"),
        )
    except Exception as exc:
        raise ConfigError(f"bad [strategy] settings: {exc}")

    noise_seed = _get(parser, "surrogate", "noise_seed", int, None) if parser.has_section("surrogate") else None
    trace = parser.get("surrogate", "trace", fallback=None) if parser.has_section("surrogate") else None
    trace_metrics = (
        parser.get("surrogate", "trace_metrics", fallback=None)
        if parser.has_section("surrogate")
        else None
    )

    seeds = seeds_override
    if seeds is None:
        seeds = _get(parser, "run", "seeds", _int_list, DEFAULT_SEEDS) if parser.has_section("run") else DEFAULT_SEEDS

    overhead_defaults = OverheadModel()
    thresholds = MAP5095_THRESHOLDS
    if parser.has_option("eval", "iou_thresholds"):
        thresholds = _get(parser, "eval", "iou_thresholds", _float_list, thresholds)

    try:
        return RunConfig(
            pool_source=pool_source(parser),
            strategy=strategy,
            mode=_get(parser, "run", "mode", str, "sequential"),
            interpolation_rate=_get(parser, "costing", "interpolation_rate", int, 1),
            frames_per_round=_get(parser, "run", "frames_per_round", int, 25),
            seed_sequences=_get(parser, "run", "seed_sequences", int, 2),
            rounds=_get(parser, "run", "rounds", int, 11),
            seeds=tuple(seeds),
            kappa=_get(parser, "surrogate", "kappa", float, 0.35),
            noise_seed=noise_seed,
            trace_path=trace,
            trace_metrics_path=trace_metrics,
            overhead=OverheadModel(
                detector_gflops_per_frame=_get(
                    parser,
                    "costing",
                    "detector_gflops_per_frame",
                    float,
                    overhead_defaults.detector_gflops_per_frame,
                ),
                flow_gflops_per_pair=_get(
                    parser,
                    "costing",
                    "flow_gflops_per_pair",
                    float,
                    overhead_defaults.flow_gflops_per_pair,
                ),
            ),
            min_box_pixels=_get(
                parser, "eval", "min_box_pixels", int, DEFAULT_MIN_BOX_PIXELS
            ),
            reference_resolution=_get(
                parser,
                "eval",
                "reference_resolution",
                int,
                DEFAULT_REFERENCE_RESOLUTION,
            ),
            iou_thresholds=tuple(thresholds),
            evaluate=_get_bool(parser, "eval", "evaluate", True),
            flow_threshold=_get(parser, "run", "flow_threshold", int, 10),
            flow_min_area=_get(parser, "run", "flow_min_area", int, 25),
        )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"bad run settings: {exc}")
