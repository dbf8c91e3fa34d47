"""Sequence acquisition strategies.

Twelve strategy kinds share one selection entry point. Inferential kinds
consume detector outputs (per-sequence scores reduced from frame scores, or
a feature table for coreset); conformal kinds consult pool statistics only
and must be called without scores. Every criterion is expressed so that
higher is better and selection is a single argmax; ties always break toward
the lexicographically smallest sequence id, making selection invariant to
enumeration order.

Randomness (the random baseline and the GauSS component draw) comes from a
PCG64 generator seeded with the caller's rng_seed, so a fixed seed fixes the
pick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    EmptyScoreError,
    MissingScoresError,
    PoolExhaustedError,
    ShapeError,
)
from .pool import PoolState

KIND_RANDOM = "random"
KIND_ENTROPY = "entropy"
KIND_LEAST_CONFIDENCE = "least_confidence"
KIND_MARGIN = "margin"
KIND_FALSE_SWITCH = "false_switch"
KIND_GAUSS_SWITCH = "gauss_switch"
KIND_CORESET = "coreset"
KIND_LEAST_FRAME = "least_frame"
KIND_MOST_FRAME = "most_frame"
KIND_MIN_MOTION = "min_motion"
KIND_MIN_MAX_MOTION = "min_max_motion"
KIND_MIN_BOXES = "min_boxes"

# Kinds whose criterion is a reduced per-sequence model score.
SCORE_KINDS = frozenset(
    {KIND_ENTROPY, KIND_LEAST_CONFIDENCE, KIND_MARGIN, KIND_FALSE_SWITCH, KIND_GAUSS_SWITCH}
)
SWITCH_KINDS = frozenset({KIND_FALSE_SWITCH, KIND_GAUSS_SWITCH})
# Kinds that rank by pool statistics alone.
CONFORMAL_KINDS = frozenset(
    {KIND_LEAST_FRAME, KIND_MOST_FRAME, KIND_MIN_MOTION, KIND_MIN_MAX_MOTION, KIND_MIN_BOXES}
)
ALL_KINDS = (
    KIND_RANDOM,
    KIND_ENTROPY,
    KIND_LEAST_CONFIDENCE,
    KIND_MARGIN,
    KIND_FALSE_SWITCH,
    KIND_GAUSS_SWITCH,
    KIND_CORESET,
    KIND_LEAST_FRAME,
    KIND_MOST_FRAME,
    KIND_MIN_MOTION,
    KIND_MIN_MAX_MOTION,
    KIND_MIN_BOXES,
)

PARITY_MAX_FIRST = "max_first"
PARITY_MIN_FIRST = "min_first"

RESPONSIBILITY_CUTOFF = 0.5
VARIANCE_FLOOR = 1e-12


@dataclass
class StrategySpec:
    """What to run: a kind, a per-round batch size, and the min/max phase
    used only by min_max_motion."""

    kind: str
    batch_size: int = 1
    parity_phase: str = PARITY_MAX_FIRST

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise DomainError(f"unknown strategy kind {self.kind!r}")
        if self.batch_size < 1:
            raise DomainError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.parity_phase not in (PARITY_MAX_FIRST, PARITY_MIN_FIRST):
            raise DomainError(f"unknown parity_phase {self.parity_phase!r}")


def is_conformal(kind: str) -> bool:
    return kind in CONFORMAL_KINDS


def requires_scores(kind: str) -> bool:
    return kind in SCORE_KINDS or kind == KIND_CORESET


def sequence_score(frame_values) -> float:
    """Arithmetic mean of per-frame scores; the sequence-level summary."""
    values = list(frame_values)
    if not values:
        raise EmptyScoreError("cannot summarize an empty score list")
    return float(sum(values) / len(values))


def _check_probability(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"objectness {p} outside [0, 1]")


def score_entropy(p: float) -> float:
    """Binary entropy of the objectness, natural log, with 0*log(0) = 0."""
    _check_probability(p)
    total = 0.0
    for v in (p, 1.0 - p):
        if v > 0.0:
            total -= v * math.log(v)
    return total


def score_least_confidence(p: float) -> float:
    _check_probability(p)
    return 1.0 - max(p, 1.0 - p)


def score_margin(p: float) -> float:
    """Negated margin between the two class posteriors, so higher = less sure."""
    _check_probability(p)
    return -abs(2.0 * p - 1.0)


FRAME_TRANSFORMS = {
    KIND_ENTROPY: score_entropy,
    KIND_LEAST_CONFIDENCE: score_least_confidence,
    KIND_MARGIN: score_margin,
}


def score_switch(prev_counts, curr_counts) -> list[float]:
    """Per-frame absolute change in predicted count between rounds.

    With no previous round (prev_counts None) the scores are all zero, which
    pushes selection onto the tie-break rule.
    """
    curr = list(curr_counts)
    if prev_counts is None:
        return [0.0] * len(curr)
    prev = list(prev_counts)
    if len(prev) != len(curr):
        raise ShapeError(f"count lengths differ: {len(prev)} vs {len(curr)}")
    return [abs(float(c) - float(p)) for p, c in zip(prev, curr)]


@dataclass
class GmmFit:
    """A two-component 1-D Gaussian mixture, components sorted by mean."""

    weights: tuple[float, float]
    means: tuple[float, float]
    variances: tuple[float, float]
    iterations: int
    log_likelihood: float
    degenerate: bool = False

    def responsibilities(self, values) -> np.ndarray:
        """Posterior component membership, shape (n, 2)."""
        x = np.asarray(values, dtype=float)
        log_p = np.empty((x.size, 2))
        for k in range(2):
            var = max(self.variances[k], VARIANCE_FLOOR)
            log_p[:, k] = (
                math.log(max(self.weights[k], 1e-300))
                - 0.5 * math.log(2.0 * math.pi * var)
                - 0.5 * (x - self.means[k]) ** 2 / var
            )
        peak = log_p.max(axis=1, keepdims=True)
        weights = np.exp(log_p - peak)
        return weights / weights.sum(axis=1, keepdims=True)


def fit_gmm2(values, max_iter: int = 200, tol: float = 1e-10) -> GmmFit:
    """EM fit of a two-component 1-D Gaussian mixture.

    Means start at the 25th/75th percentiles with equal weights and pooled
    variance; iteration stops when the log-likelihood moves less than tol.
    Constant input cannot be split and comes back flagged degenerate.
    """
    x = np.asarray(list(values), dtype=float)
    if x.size < 2:
        raise DomainError(f"need at least 2 values to fit, got {x.size}")
    if tol <= 0 or max_iter < 1:
        raise DomainError("tol must be positive and max_iter at least 1")

    spread = float(np.ptp(x))
    pooled = max(float(np.var(x)), VARIANCE_FLOOR)
    if spread == 0.0:
        mean = float(x[0])
        ll = float(
            np.sum(-0.5 * math.log(2.0 * math.pi * pooled) - 0.5 * (x - mean) ** 2 / pooled)
        )
        return GmmFit((0.5, 0.5), (mean, mean), (pooled, pooled), 0, ll, degenerate=True)

    mu = np.array([np.percentile(x, 25), np.percentile(x, 75)], dtype=float)
    if mu[0] == mu[1]:
        mu = np.array([float(x.min()), float(x.max())])
    w = np.array([0.5, 0.5])
    var = np.array([pooled, pooled])

    prev_ll = -np.inf
    iterations = 0
    ll = prev_ll
    for iterations in range(1, max_iter + 1):
        log_p = (
            np.log(np.maximum(w, 1e-300))[None, :]
            - 0.5 * np.log(2.0 * math.pi * var)[None, :]
            - 0.5 * (x[:, None] - mu[None, :]) ** 2 / var[None, :]
        )
        peak = log_p.max(axis=1, keepdims=True)
        shifted = np.exp(log_p - peak)
        norm = shifted.sum(axis=1, keepdims=True)
        resp = shifted / norm
        ll = float(np.sum(peak.ravel() + np.log(norm.ravel())))

        mass = resp.sum(axis=0)
        mass = np.maximum(mass, 1e-300)
        w = mass / x.size
        mu = (resp * x[:, None]).sum(axis=0) / mass
        var = (resp * (x[:, None] - mu[None, :]) ** 2).sum(axis=0) / mass
        var = np.maximum(var, VARIANCE_FLOOR)

        if abs(ll - prev_ll) < tol:
            break
        prev_ll = ll

    order = np.argsort(mu, kind="stable")
    w, mu, var = w[order], mu[order], var[order]
    degenerate = bool(abs(mu[1] - mu[0]) < 1e-12)
    return GmmFit(
        weights=(float(w[0]), float(w[1])),
        means=(float(mu[0]), float(mu[1])),
        variances=(float(var[0]), float(var[1])),
        iterations=iterations,
        log_likelihood=ll,
        degenerate=degenerate,
    )


def _top_by_score(ids: list[str], scores: dict[str, float], b: int) -> list[str]:
    ranked = sorted(ids, key=lambda sid: (-scores[sid], sid))
    return ranked[:b]


def _criterion_scores(
    kind: str, pool: PoolState, ids: list[str], round_index: int, parity_phase: str
) -> dict[str, float]:
    """Numeric criterion for conformal kinds, signed so that argmax selects."""
    out: dict[str, float] = {}
    for sid in ids:
        seq = pool.sequences[sid]
        if kind == KIND_LEAST_FRAME:
            out[sid] = -float(seq.n_frames)
        elif kind == KIND_MOST_FRAME:
            out[sid] = float(seq.n_frames)
        elif kind in (KIND_MIN_MOTION, KIND_MIN_MAX_MOTION):
            if seq.motion_scores is None:
                raise MissingScoresError(
                    f"sequence {sid!r} has no motion statistics; run the flow proxy first"
                )
            total = float(sum(seq.motion_scores))
            if kind == KIND_MIN_MOTION:
                out[sid] = -total
            else:
                # Case rule: even rounds take the minimum side, odd rounds the
                # maximum, with round 1 the first acquisition round. The
                # min_first phase swaps the two cases.
                even = round_index % 2 == 0
                use_min = even if parity_phase == PARITY_MAX_FIRST else not even
                out[sid] = -total if use_min else total
        elif kind == KIND_MIN_BOXES:
            if seq.box_estimates is None:
                raise MissingScoresError(
                    f"sequence {sid!r} has no box estimates; run the flow proxy first"
                )
            out[sid] = -float(sum(seq.box_estimates))
        else:
            raise DomainError(f"not a conformal kind: {kind!r}")
    return out


def _coreset_greedy(
    unlabeled: list[str],
    centers: list[str],
    features: dict[str, np.ndarray],
    b: int,
) -> list[str]:
    """Greedy k-center: repeatedly take the point farthest from any center."""
    missing = [s for s in unlabeled + centers if s not in features]
    if missing:
        raise MissingScoresError(f"coreset features missing for {missing[:4]}")
    center_feats = [np.asarray(features[s], dtype=float) for s in centers]
    best_dist = {}
    for sid in unlabeled:
        feat = np.asarray(features[sid], dtype=float)
        if center_feats:
            best_dist[sid] = min(float(np.linalg.norm(feat - c)) for c in center_feats)
        else:
            best_dist[sid] = math.inf
    chosen: list[str] = []
    remaining = list(unlabeled)
    for _ in range(b):
        pick = min(remaining, key=lambda sid: (-best_dist[sid], sid))
        chosen.append(pick)
        remaining.remove(pick)
        pick_feat = np.asarray(features[pick], dtype=float)
        for sid in remaining:
            d = float(np.linalg.norm(np.asarray(features[sid], dtype=float) - pick_feat))
            if d < best_dist[sid]:
                best_dist[sid] = d
    return chosen


def select(
    strategy: StrategySpec,
    pool: PoolState,
    scores: dict | None = None,
    round_index: int = 1,
    rng_seed: int = 0,
) -> list[str]:
    """Pick the next batch of sequence ids from the unlabeled pool.

    ``scores`` carries per-sequence reduced model scores for the uncertainty
    and switch kinds, or per-sequence feature vectors for coreset; conformal
    kinds and random must be called with scores=None. The returned list is
    ordered by selection preference and has exactly batch_size entries.
    """
    unlabeled = sorted(pool.unlabeled)
    b = strategy.batch_size
    if len(unlabeled) < b:
        raise PoolExhaustedError(
            f"need {b} sequences, only {len(unlabeled)} unlabeled"
        )
    kind = strategy.kind

    if kind in CONFORMAL_KINDS or kind == KIND_RANDOM:
        if scores is not None:
            raise ValueError(f"{kind} does not consult scores; pass scores=None")

    if kind == KIND_RANDOM:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(rng_seed)))
        picks = rng.choice(np.array(unlabeled, dtype=object), size=b, replace=False)
        return [str(s) for s in picks]

    if kind in CONFORMAL_KINDS:
        crit = _criterion_scores(kind, pool, unlabeled, round_index, strategy.parity_phase)
        return _top_by_score(unlabeled, crit, b)

    if scores is None:
        raise MissingScoresError(f"{kind} requires scores")

    if kind == KIND_CORESET:
        return _coreset_greedy(unlabeled, list(pool.labeled), scores, b)

    missing = [s for s in unlabeled if s not in scores]
    if missing:
        raise MissingScoresError(f"no scores for sequences {missing[:4]}")

    if kind in (KIND_ENTROPY, KIND_LEAST_CONFIDENCE, KIND_MARGIN, KIND_FALSE_SWITCH):
        return _top_by_score(unlabeled, scores, b)

    if kind == KIND_GAUSS_SWITCH:
        return _gauss_switch_select(unlabeled, scores, b, rng_seed)

    raise DomainError(f"unknown strategy kind {kind!r}")


def _gauss_switch_select(
    unlabeled: list[str], scores: dict[str, float], b: int, rng_seed: int
) -> list[str]:
    """Sample from the higher-mean component of a 2-GMM over switch scores.

    Membership is posterior responsibility above 0.5. Degenerate fits and
    undersized components fall back to plain score ordering (the FALSE rule).
    """
    values = np.array([scores[s] for s in unlabeled], dtype=float)
    if len(unlabeled) < 2 or float(np.ptp(values)) == 0.0:
        return _top_by_score(unlabeled, scores, b)
    fit = fit_gmm2(values)
    if fit.degenerate:
        return _top_by_score(unlabeled, scores, b)
    resp = fit.responsibilities(values)
    members = [
        sid for sid, r in zip(unlabeled, resp[:, 1]) if r > RESPONSIBILITY_CUTOFF
    ]
    if len(members) < b:
        return _top_by_score(unlabeled, scores, b)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(rng_seed)))
    picks = rng.choice(np.array(members, dtype=object), size=b, replace=False)
    return [str(s) for s in picks]
