"""Experiment orchestration.

One experiment = one strategy run over several seeds on one pool. Per seed:
draw seed sequences uniformly from the train split, then run acquisition
rounds; each round scores the pool if the strategy needs it, selects a
batch, charges annotation cost and compute overhead, refreshes the
surrogate, and (optionally) evaluates test mAP. Everything is keyed off the
config so reruns are byte-identical.

Overhead timing: the detector is refreshed after every acquisition (the
seed draw included) and then scores whatever is still unlabeled, so each
record carries an inferential overhead charge for the pool remaining after
its own acquisition. Flow-statistics strategies instead pay one up-front
charge on the seed record and nothing after.

Two acquisition granularities:

- sequential: the unit is a whole sequence at full annotation cost.
- singular: the unit is a single frame; only every interpolation_rate-th
  frame (a keyframe) carries a charge of cost_hours / ceil(N / rate),
  interpolated frames are free. Frame scoring only makes sense for the
  model-score strategies, so pool-statistic kinds and coreset are rejected
  here.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acquisition, costing, flowproxy, metrics, surrogate
from .acquisition import (
    CONFORMAL_KINDS,
    FRAME_TRANSFORMS,
    KIND_CORESET,
    KIND_FALSE_SWITCH,
    KIND_GAUSS_SWITCH,
    KIND_RANDOM,
    SCORE_KINDS,
    SWITCH_KINDS,
    StrategySpec,
)
from .costing import MODE_SEQUENTIAL, MODE_SINGULAR, CostLedger, OverheadModel
from .errors import DomainError, ModeError, PoolExhaustedError, TraceError
from .pool import PoolState, load_pool
from .surrogate import ScoreTrace, SurrogateState
from .synth import GenConfig, generate_pool

DEFAULT_SEEDS = (0, 1, 2)
DEFAULT_MIN_BOX_PIXELS = 50
DEFAULT_REFERENCE_RESOLUTION = 640

SINGULAR_KINDS = frozenset(SCORE_KINDS | {KIND_RANDOM})


@dataclass
class RunConfig:
    """Everything a run needs; defaults follow the two-seed, eleven-round,
    three-seed protocol."""

    pool_source: GenConfig | str | Path
    strategy: StrategySpec
    mode: str = MODE_SEQUENTIAL
    interpolation_rate: int = 1
    frames_per_round: int = 25
    seed_sequences: int = 2
    rounds: int = 11
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    kappa: float = 0.35
    noise_seed: int | None = None
    trace_path: str | None = None
    trace_metrics_path: str | None = None
    overhead: OverheadModel = field(default_factory=OverheadModel)
    min_box_pixels: int = DEFAULT_MIN_BOX_PIXELS
    reference_resolution: int = DEFAULT_REFERENCE_RESOLUTION
    iou_thresholds: tuple[float, ...] = metrics.MAP5095_THRESHOLDS
    evaluate: bool = True
    flow_threshold: int = flowproxy.DEFAULT_THRESHOLD
    flow_min_area: int = flowproxy.DEFAULT_MIN_AREA

    def __post_init__(self) -> None:
        if self.mode not in (MODE_SEQUENTIAL, MODE_SINGULAR):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.rounds < 0:
            raise DomainError(f"rounds must be >= 0, got {self.rounds}")
        if self.seed_sequences < 1:
            raise DomainError(
                f"seed_sequences must be >= 1, got {self.seed_sequences}"
            )
        if not self.seeds:
            raise DomainError("need at least one seed")
        if self.interpolation_rate < 1:
            raise DomainError(
                f"interpolation_rate must be >= 1, got {self.interpolation_rate}"
            )
        if self.frames_per_round < 1:
            raise DomainError(
                f"frames_per_round must be >= 1, got {self.frames_per_round}"
            )
        if self.min_box_pixels < 0 or self.reference_resolution < 1:
            raise DomainError("bad box filter settings")
        if (self.trace_path is None) != (self.trace_metrics_path is None):
            raise DomainError(
                "replay needs both trace_path and trace_metrics_path"
            )

    @property
    def replay(self) -> bool:
        return self.trace_path is not None


@dataclass
class RoundRecord:
    round_index: int
    seed: int
    strategy_kind: str
    selected: tuple[str, ...]
    cum_cost_hours: float
    cum_overhead_gflops: float
    map50: float | None
    map5095: float | None


def build_pool(source: GenConfig | str | Path) -> PoolState:
    """Materialize the pool: generate from a config or load from disk."""
    if isinstance(source, GenConfig):
        return generate_pool(source)
    return load_pool(source)


def filter_small_boxes(
    pool: PoolState,
    min_pixels: int = DEFAULT_MIN_BOX_PIXELS,
    reference_resolution: int = DEFAULT_REFERENCE_RESOLUTION,
) -> int:
    """Drop boxes whose width and height both land under min_pixels at the
    reference resolution. Returns how many were dropped."""
    dropped = 0
    for seq in pool.sequences.values():
        for frame in seq.frames:
            kept = [
                b
                for b in frame.boxes
                if not (
                    b.w * reference_resolution < min_pixels
                    and b.h * reference_resolution < min_pixels
                )
            ]
            dropped += len(frame.boxes) - len(kept)
            frame.boxes = kept
    return dropped


def _seed_pick(pool: PoolState, seed: int, k: int) -> list[str]:
    """Uniform seeded draw of the initial labeled sequences."""
    candidates = sorted(pool.unlabeled)
    if len(candidates) < k:
        raise PoolExhaustedError(
            f"need {k} seed sequences, only {len(candidates)} unlabeled"
        )
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 1])))
    picks = rng.choice(np.array(candidates, dtype=object), size=k, replace=False)
    return [str(s) for s in picks]


def _select_rng_seed(seed: int, round_index: int) -> int:
    ss = np.random.SeedSequence([seed, 2, round_index])
    return int(ss.generate_state(1, np.uint64)[0])


def _coreset_features(pool: PoolState) -> dict[str, np.ndarray]:
    """Per-sequence (mean center shift, mean box count, length), standardized
    over the train split. Read straight off the annotations, like the
    surrogate's features, so score-driven runs stay off the flow machinery.
    """
    ids = pool.train_ids
    raw = {}
    for sid in ids:
        seq = pool.sequences[sid]
        raw[sid] = np.array(
            [seq.mean_center_shift(), seq.mean_box_count(), float(seq.n_frames)]
        )
    mat = np.stack([raw[s] for s in ids])
    mean = mat.mean(axis=0)
    sd = mat.std(axis=0)
    sd[sd == 0.0] = 1.0
    return {sid: (vec - mean) / sd for sid, vec in raw.items()}


def _unlabeled_frames(pool: PoolState) -> int:
    return sum(pool.sequences[s].n_frames for s in pool.unlabeled)


def _inferential_charge(model: OverheadModel, frames: int) -> float:
    return model.detector_gflops_per_frame * frames


class _Scorer:
    """Produces per-round detector outputs, live or replayed from a trace."""

    def __init__(
        self,
        cfg: RunConfig,
        pool: PoolState,
        seed: int,
        features: dict[str, np.ndarray],
        sigma: float,
        trace_in: ScoreTrace | None,
        trace_out: ScoreTrace,
    ):
        self.cfg = cfg
        self.pool = pool
        self.features = features
        self.sigma = sigma
        self.noise_seed = seed if cfg.noise_seed is None else cfg.noise_seed
        self.trace_in = trace_in
        self.trace_out = trace_out

    def state(
        self,
        round_index: int,
        labeled: list[str],
        weights: list[float] | None = None,
    ) -> SurrogateState:
        return SurrogateState(
            round_index=round_index,
            labeled_features=[self.features[s] for s in labeled],
            kappa=self.cfg.kappa,
            noise_seed=self.noise_seed,
            sigma=self.sigma,
            features=self.features,
            labeled_weights=weights,
        )

    def round_scores(
        self,
        round_index: int,
        target_ids: list[str],
        labeled: list[str],
        weights: list[float] | None = None,
    ) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        """(objectness, counts) per target sequence for one round."""
        if self.trace_in is not None:
            table = surrogate.replay_scores(self.trace_in, round_index)
            missing = [s for s in target_ids if s not in table]
            if missing:
                raise TraceError(
                    f"trace round {round_index} lacks scores for {missing[:4]}"
                )
            return {s: table[s] for s in target_ids}
        state = self.state(round_index, labeled, weights)
        out = {}
        for sid in target_ids:
            obj, counts = surrogate.frame_scores(state, self.pool.sequences[sid])
            self.trace_out.add_scores(round_index, sid, obj, counts)
            out[sid] = (obj, counts)
        return out

    def test_metrics(
        self,
        round_index: int,
        labeled: list[str],
        weights: list[float] | None = None,
    ) -> tuple[float | None, float | None]:
        if not self.cfg.evaluate:
            return None, None
        if self.trace_in is not None:
            return surrogate.replay_test_metrics(self.trace_in, round_index)
        state = self.state(round_index, labeled, weights)
        preds: list[list[tuple]] = []
        truths: list[list] = []
        for sid in self.pool.test_ids:
            seq = self.pool.sequences[sid]
            preds.extend(surrogate.predict_test(state, seq))
            truths.extend(f.boxes for f in seq.frames)
        m50, m5095 = metrics.mean_ap(preds, truths, self.cfg.iou_thresholds)
        self.trace_out.add_test_metrics(round_index, m50, m5095)
        return m50, m5095


def _reduce_scores(
    kind: str,
    tables: dict[str, tuple[np.ndarray, np.ndarray]],
    prev_counts: dict[str, np.ndarray],
) -> dict[str, float]:
    """Collapse per-frame outputs to one criterion value per sequence."""
    out = {}
    for sid, (objectness, counts) in tables.items():
        if kind in SWITCH_KINDS:
            per_frame = acquisition.score_switch(prev_counts.get(sid), counts)
        else:
            transform = FRAME_TRANSFORMS[kind]
            per_frame = [transform(float(p)) for p in objectness]
        out[sid] = acquisition.sequence_score(per_frame)
    return out


def _load_replay(cfg: RunConfig) -> dict[int, ScoreTrace] | None:
    if not cfg.replay:
        return None
    traces = surrogate.read_traces(cfg.trace_path, cfg.trace_metrics_path)
    missing = [s for s in cfg.seeds if s not in traces]
    if missing:
        raise TraceError(f"trace files lack seeds {missing}")
    return traces


def run_experiment(
    cfg: RunConfig,
    pool: PoolState | None = None,
    out_dir: Path | str | None = None,
) -> list[RoundRecord]:
    """Run one strategy over all configured seeds; returns every RoundRecord.

    A prebuilt pool skips regeneration (it is reset per seed; its boxes are
    filtered in place). With out_dir set, the CSV outputs land there; a
    failing run still flushes the ledger rows accumulated so far.
    """
    if cfg.mode == MODE_SINGULAR:
        return run_singular(cfg, pool=pool, out_dir=out_dir)

    if pool is None:
        pool = build_pool(cfg.pool_source)
    filter_small_boxes(pool, cfg.min_box_pixels, cfg.reference_resolution)

    kind = cfg.strategy.kind
    batch = cfg.strategy.batch_size
    need = cfg.seed_sequences + cfg.rounds * batch
    if need > len(pool.train_ids):
        raise PoolExhaustedError(
            f"budget needs {need} sequences, train split has {len(pool.train_ids)}"
        )

    oclass = costing.overhead_class(kind)
    if oclass == costing.OVERHEAD_CONFORMAL:
        for sid in pool.train_ids:
            flowproxy.compute_flow_stats(
                pool.sequences[sid], cfg.flow_threshold, cfg.flow_min_area
            )
        front_charge = costing.overhead_conformal(
            cfg.overhead, pool.total_train_frames()
        )
    features, sigma = surrogate.pool_feature_table(pool)
    coreset_feats = _coreset_features(pool) if kind == KIND_CORESET else None
    replay_traces = _load_replay(cfg)

    records: list[RoundRecord] = []
    ledgers: dict[int, CostLedger] = {}
    traces_out: dict[int, ScoreTrace] = {}
    try:
        for seed in cfg.seeds:
            pool.reset_acquisition()
            ledger = ledgers[seed] = CostLedger()
            trace_out = traces_out[seed] = ScoreTrace()
            scorer = _Scorer(
                cfg,
                pool,
                seed,
                features,
                sigma,
                replay_traces[seed] if replay_traces else None,
                trace_out,
            )
            prev_counts: dict[str, np.ndarray] = {}

            def emit(round_index: int, selected: list[str], cost: float) -> None:
                if oclass == costing.OVERHEAD_CONFORMAL:
                    over = front_charge if round_index == 0 else 0.0
                elif oclass == costing.OVERHEAD_INFERENTIAL:
                    over = _inferential_charge(cfg.overhead, _unlabeled_frames(pool))
                else:
                    over = 0.0
                entry = ledger.charge(round_index, selected, cost, over)
                m50, m5095 = scorer.test_metrics(round_index, pool.labeled)
                records.append(
                    RoundRecord(
                        round_index=round_index,
                        seed=seed,
                        strategy_kind=kind,
                        selected=tuple(selected),
                        cum_cost_hours=entry.cumulative_cost_hours,
                        cum_overhead_gflops=entry.cumulative_overhead_gflops,
                        map50=m50,
                        map5095=m5095,
                    )
                )

            chosen = _seed_pick(pool, seed, cfg.seed_sequences)
            pool.acquire(chosen)
            emit(0, chosen, sum(pool.sequences[s].meta.cost_hours for s in chosen))

            for rnd in range(1, cfg.rounds + 1):
                scores = None
                if kind in SCORE_KINDS:
                    targets = sorted(pool.unlabeled)
                    tables = scorer.round_scores(rnd, targets, pool.labeled)
                    scores = _reduce_scores(kind, tables, prev_counts)
                    if kind in SWITCH_KINDS:
                        for sid, (_, counts) in tables.items():
                            prev_counts[sid] = counts
                elif kind == KIND_CORESET:
                    scores = coreset_feats
                selected = acquisition.select(
                    cfg.strategy,
                    pool,
                    scores=scores,
                    round_index=rnd,
                    rng_seed=_select_rng_seed(seed, rnd),
                )
                pool.acquire(selected)
                emit(
                    rnd,
                    selected,
                    sum(pool.sequences[s].meta.cost_hours for s in selected),
                )
    except BaseException:
        if out_dir is not None:
            _flush_ledgers(ledgers, out_dir)
        raise

    if out_dir is not None:
        write_outputs(
            records, ledgers, traces_out, out_dir, include_traces=not cfg.replay
        )
    return records


def run_singular(
    cfg: RunConfig,
    pool: PoolState | None = None,
    out_dir: Path | str | None = None,
) -> list[RoundRecord]:
    """Frame-granular variant: seeds label whole sequences, rounds label the
    frames_per_round highest-scoring unlabeled frames across the train split.
    """
    if cfg.mode != MODE_SINGULAR:
        raise ModeError("run_singular requires mode='singular'")
    kind = cfg.strategy.kind
    if kind not in SINGULAR_KINDS:
        raise ModeError(
            f"strategy {kind!r} has no frame-level scores; "
            "singular mode supports model-score kinds and random"
        )

    if pool is None:
        pool = build_pool(cfg.pool_source)
    filter_small_boxes(pool, cfg.min_box_pixels, cfg.reference_resolution)
    features, sigma = surrogate.pool_feature_table(pool)
    replay_traces = _load_replay(cfg)
    rate = cfg.interpolation_rate

    if cfg.seed_sequences > len(pool.train_ids):
        raise PoolExhaustedError(
            f"need {cfg.seed_sequences} seed sequences, "
            f"train split has {len(pool.train_ids)}"
        )

    records: list[RoundRecord] = []
    ledgers: dict[int, CostLedger] = {}
    traces_out: dict[int, ScoreTrace] = {}
    try:
        for seed in cfg.seeds:
            pool.reset_acquisition()
            ledger = ledgers[seed] = CostLedger()
            trace_out = traces_out[seed] = ScoreTrace()
            scorer = _Scorer(
                cfg,
                pool,
                seed,
                features,
                sigma,
                replay_traces[seed] if replay_traces else None,
                trace_out,
            )
            labeled_frames: dict[str, set[int]] = {}
            prev_counts: dict[str, np.ndarray] = {}

            def surrogate_view() -> tuple[list[str], list[float]]:
                ids = sorted(labeled_frames)
                fracs = [
                    len(labeled_frames[s]) / pool.sequences[s].n_frames for s in ids
                ]
                return ids, fracs

            def remaining_frames() -> int:
                return sum(
                    pool.sequences[s].n_frames - len(labeled_frames.get(s, ()))
                    for s in pool.train_ids
                )

            def emit(round_index: int, selected: list[str], cost: float) -> None:
                if kind == KIND_RANDOM:
                    over = 0.0
                else:
                    over = _inferential_charge(cfg.overhead, remaining_frames())
                entry = ledger.charge(round_index, selected, cost, over)
                ids, fracs = surrogate_view()
                m50, m5095 = scorer.test_metrics(round_index, ids, fracs)
                records.append(
                    RoundRecord(
                        round_index=round_index,
                        seed=seed,
                        strategy_kind=kind,
                        selected=tuple(selected),
                        cum_cost_hours=entry.cumulative_cost_hours,
                        cum_overhead_gflops=entry.cumulative_overhead_gflops,
                        map50=m50,
                        map5095=m5095,
                    )
                )

            chosen = _seed_pick(pool, seed, cfg.seed_sequences)
            pool.acquire(chosen)
            for sid in chosen:
                labeled_frames[sid] = set(range(pool.sequences[sid].n_frames))
            emit(0, chosen, sum(pool.sequences[s].meta.cost_hours for s in chosen))

            for rnd in range(1, cfg.rounds + 1):
                candidates = [
                    (sid, fid)
                    for sid in pool.train_ids
                    for fid in range(pool.sequences[sid].n_frames)
                    if fid not in labeled_frames.get(sid, ())
                ]
                if len(candidates) < cfg.frames_per_round:
                    raise PoolExhaustedError(
                        f"round {rnd} needs {cfg.frames_per_round} frames, "
                        f"{len(candidates)} remain"
                    )
                rng_seed = _select_rng_seed(seed, rnd)
                if kind == KIND_RANDOM:
                    rng = np.random.Generator(
                        np.random.PCG64(np.random.SeedSequence(rng_seed))
                    )
                    idx = rng.choice(
                        len(candidates), size=cfg.frames_per_round, replace=False
                    )
                    picked = [candidates[i] for i in idx]
                else:
                    open_ids = sorted({sid for sid, _ in candidates})
                    ids, fracs = surrogate_view()
                    tables = scorer.round_scores(rnd, open_ids, ids, fracs)
                    frame_score: dict[tuple[str, int], float] = {}
                    for sid in open_ids:
                        objectness, counts = tables[sid]
                        if kind in SWITCH_KINDS:
                            per_frame = acquisition.score_switch(
                                prev_counts.get(sid), counts
                            )
                        else:
                            transform = FRAME_TRANSFORMS[kind]
                            per_frame = [transform(float(p)) for p in objectness]
                        for fid in range(len(per_frame)):
                            frame_score[(sid, fid)] = float(per_frame[fid])
                    if kind in SWITCH_KINDS:
                        for sid in open_ids:
                            prev_counts[sid] = tables[sid][1]
                    picked = _pick_frames(
                        kind, candidates, frame_score, cfg.frames_per_round, rng_seed
                    )

                cost = 0.0
                names = []
                for sid, fid in picked:
                    labeled_frames.setdefault(sid, set()).add(fid)
                    seq = pool.sequences[sid]
                    if costing.is_keyframe(fid, rate):
                        cost += seq.meta.cost_hours / costing.effective_frames(
                            seq.n_frames, rate
                        )
                    names.append(f"{sid}:{fid}")
                emit(rnd, names, cost)
    except BaseException:
        if out_dir is not None:
            _flush_ledgers(ledgers, out_dir)
        raise

    if out_dir is not None:
        write_outputs(
            records, ledgers, traces_out, out_dir, include_traces=not cfg.replay
        )
    return records


def _pick_frames(
    kind: str,
    candidates: list[tuple[str, int]],
    frame_score: dict[tuple[str, int], float],
    count: int,
    rng_seed: int,
) -> list[tuple[str, int]]:
    """Frame-level analogue of select(): argmax with (sid, fid) tie-break;
    the GauSS kind samples from the higher-mean mixture component."""
    ranked = sorted(candidates, key=lambda c: (-frame_score[c], c[0], c[1]))
    if kind != KIND_GAUSS_SWITCH:
        return ranked[:count]
    values = np.array([frame_score[c] for c in candidates])
    if len(candidates) < 2 or float(np.ptp(values)) == 0.0:
        return ranked[:count]
    fit = acquisition.fit_gmm2(values)
    if fit.degenerate:
        return ranked[:count]
    resp = fit.responsibilities(values)
    members = [
        c
        for c, r in zip(candidates, resp[:, 1])
        if r > acquisition.RESPONSIBILITY_CUTOFF
    ]
    if len(members) < count:
        return ranked[:count]
    members.sort()
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(rng_seed)))
    idx = rng.choice(len(members), size=count, replace=False)
    return [members[i] for i in idx]


@dataclass
class AggregateRow:
    strategy_kind: str
    round_index: int
    n_seeds: int
    mean_cum_cost_hours: float
    se_cum_cost_hours: float | None
    mean_map50: float | None
    se_map50: float | None


def _mean_se(values: list[float]) -> tuple[float, float | None]:
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return mean, None
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var) / math.sqrt(n)


def aggregate(records: list[RoundRecord]) -> list[AggregateRow]:
    """Mean and standard error of cost and mAP per (strategy, round)."""
    groups: dict[tuple[str, int], list[RoundRecord]] = {}
    for rec in records:
        groups.setdefault((rec.strategy_kind, rec.round_index), []).append(rec)
    rows = []
    for (kind, rnd) in sorted(groups):
        recs = groups[(kind, rnd)]
        mean_cost, se_cost = _mean_se([r.cum_cost_hours for r in recs])
        maps = [r.map50 for r in recs if r.map50 is not None]
        if maps:
            mean_map, se_map = _mean_se(maps)
        else:
            mean_map, se_map = None, None
        rows.append(
            AggregateRow(
                strategy_kind=kind,
                round_index=rnd,
                n_seeds=len(recs),
                mean_cum_cost_hours=mean_cost,
                se_cum_cost_hours=se_cost,
                mean_map50=mean_map,
                se_map50=se_map,
            )
        )
    return rows


RECORD_COLUMNS = (
    "round",
    "seed",
    "strategy",
    "selected_ids",
    "cum_cost_hours",
    "cum_overhead_gflops",
    "map50",
    "map5095",
)


def _fmt(value: float | None) -> str:
    return "" if value is None else "%.6f" % value


def write_records(records: list[RoundRecord], path: Path | str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.round_index,
                    r.seed,
                    r.strategy_kind,
                    ";".join(r.selected),
                    _fmt(r.cum_cost_hours),
                    _fmt(r.cum_overhead_gflops),
                    _fmt(r.map50),
                    _fmt(r.map5095),
                ]
            )


def write_curves(records: list[RoundRecord], path: Path | str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "round", "cum_cost_hours", "map50"])
        for r in records:
            writer.writerow(
                [r.seed, r.round_index, _fmt(r.cum_cost_hours), _fmt(r.map50)]
            )


def write_aggregate(rows: list[AggregateRow], path: Path | str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "strategy",
                "round",
                "n_seeds",
                "mean_cum_cost_hours",
                "se_cum_cost_hours",
                "mean_map50",
                "se_map50",
            ]
        )
        for row in rows:
            writer.writerow(
                [
                    row.strategy_kind,
                    row.round_index,
                    row.n_seeds,
                    _fmt(row.mean_cum_cost_hours),
                    _fmt(row.se_cum_cost_hours),
                    _fmt(row.mean_map50),
                    _fmt(row.se_map50),
                ]
            )


def _flush_ledgers(ledgers: dict[int, CostLedger], out_dir: Path | str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    costing.write_ledgers(ledgers, out / "ledger.csv")


def write_outputs(
    records: list[RoundRecord],
    ledgers: dict[int, CostLedger],
    traces: dict[int, ScoreTrace],
    out_dir: Path | str,
    include_traces: bool = True,
) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_records(records, out / "records.csv")
    costing.write_ledgers(ledgers, out / "ledger.csv")
    write_curves(records, out / "curves.csv")
    write_aggregate(aggregate(records), out / "aggregate.csv")
    if include_traces:
        surrogate.write_traces(
            traces, out / "trace.csv", out / "trace_metrics.csv"
        )
