import itertools
import math

import numpy as np
import pytest

import seqal.surrogate as sg
from seqal.errors import FeatureError, TraceError
from seqal.pool import Season, Split
from seqal.surrogate import (
    ScoreTrace,
    frame_scores,
    make_state,
    pool_feature_table,
    predict_test,
    quality,
    read_traces,
    replay_scores,
    replay_test_metrics,
    sequence_feature,
    target_quality,
    write_traces,
)

from conftest import make_pool, make_sequence


def build_state(pool, labeled_ids, kappa=0.35, noise_seed=7, round_index=1):
    pool.reset_acquisition()
    if labeled_ids:
        pool.acquire(list(labeled_ids))
    features, sigma = pool_feature_table(pool)
    return make_state(pool, round_index, kappa, noise_seed, features, sigma)


def test_sequence_feature_layout():
    seq = make_sequence("s", n_frames=2, boxes_per_frame=3, scene=5, season=Season.SUMMER)
    feat = sequence_feature(seq, train_scenes=[1, 5, 9])
    assert feat.shape == (2 + 3 + 1,)
    assert feat[0] == pytest.approx(3.0)  # mean box count
    assert feat[2:5].tolist() == [0.0, 1.0, 0.0]
    assert feat[5] == float(int(Season.SUMMER))


def test_sequence_feature_unseen_scene_zero_block():
    seq = make_sequence("s", scene=99)
    feat = sequence_feature(seq, train_scenes=[0, 1])
    assert feat[2:4].tolist() == [0.0, 0.0]


def test_sigma_is_median_pairwise_train_distance():
    pool = make_pool(n_train=5, n_val=1, n_test=1)
    features, sigma = pool_feature_table(pool)
    train = pool.train_ids
    dists = [
        math.dist(features[a], features[b])
        for a, b in itertools.combinations(train, 2)
    ]
    assert sigma == pytest.approx(float(np.median(dists)), abs=1e-12)


def test_sigma_floor_with_single_train_sequence():
    pool = make_pool(n_train=1, n_val=1, n_test=1)
    _, sigma = pool_feature_table(pool)
    assert sigma == 1.0


def test_quality_empty_labeled_set_is_zero(six_pool):
    state = build_state(six_pool, [])
    target = state.features[six_pool.train_ids[0]]
    assert quality(state, target) == 0.0


def test_quality_single_labeled_closed_form(six_pool):
    sid = six_pool.train_ids[0]
    other = six_pool.train_ids[3]
    state = build_state(six_pool, [sid], kappa=0.5)
    target = state.features[other]
    d2 = float(np.sum((state.features[sid] - target) ** 2))
    expected = 1.0 - math.exp(-0.5 * math.exp(-d2 / (2 * state.sigma**2)))
    assert quality(state, target) == pytest.approx(expected, abs=1e-12)


def test_quality_grows_with_labeled_set(six_pool):
    ids = six_pool.train_ids
    target = build_state(six_pool, []).features[ids[-1]]
    prev = 0.0
    for k in range(1, len(ids) + 1):
        q = quality(build_state(six_pool, ids[:k]), target)
        assert q > prev
        assert q < 1.0
        prev = q


def test_quality_feature_length_mismatch(six_pool):
    state = build_state(six_pool, six_pool.train_ids[:1])
    with pytest.raises(FeatureError):
        quality(state, np.zeros(2))
    with pytest.raises(FeatureError):
        quality(state, np.array([]))


def test_labeled_weights_scale_contributions(six_pool):
    sid = six_pool.train_ids[0]
    target_id = six_pool.train_ids[2]
    six_pool.reset_acquisition()
    six_pool.acquire([sid])
    features, sigma = pool_feature_table(six_pool)
    full = make_state(six_pool, 1, 0.35, 0, features, sigma, weights={sid: 1.0})
    half = make_state(six_pool, 1, 0.35, 0, features, sigma, weights={sid: 0.5})
    t = features[target_id]
    # halving the weight halves the exponent
    assert math.log(1 - quality(half, t)) == pytest.approx(
        0.5 * math.log(1 - quality(full, t)), abs=1e-12
    )


def test_target_quality_unknown_sequence(six_pool):
    state = build_state(six_pool, six_pool.train_ids[:1])
    with pytest.raises(FeatureError):
        target_quality(state, make_sequence("stranger"))


# --- frame scores --------------------------------------------------------


def test_frame_scores_deterministic_and_counted(six_pool):
    state = build_state(six_pool, six_pool.train_ids[:2])
    seq = six_pool.sequences[six_pool.train_ids[3]]
    sg.reset_score_counter()
    o1, c1 = frame_scores(state, seq)
    o2, c2 = frame_scores(state, seq)
    assert sg.score_calls() == 2
    assert np.array_equal(o1, o2) and np.array_equal(c1, c2)
    assert o1.shape == (seq.n_frames,)


def test_frame_scores_noise_band(six_pool):
    state = build_state(six_pool, six_pool.train_ids[:2])
    seq = six_pool.sequences[six_pool.train_ids[3]]
    q = target_quality(state, seq)
    objectness, counts = frame_scores(state, seq)
    assert np.all(objectness >= max(0.0, q - 0.05) - 1e-12)
    assert np.all(objectness <= min(1.0, q + 0.05) + 1e-12)
    assert np.all(counts >= 0)
    true_counts = np.array([len(f.boxes) for f in seq.frames])
    # rounding contributes at most 0.5 on top of the +/-1 integer wobble
    assert np.all(np.abs(counts - true_counts * q) <= 1.5 + 1e-9)


def test_frame_scores_vary_with_round_and_seed(six_pool):
    seq = six_pool.sequences[six_pool.train_ids[3]]
    labeled = six_pool.train_ids[:2]
    a, _ = frame_scores(build_state(six_pool, labeled, round_index=1), seq)
    b, _ = frame_scores(build_state(six_pool, labeled, round_index=2), seq)
    c, _ = frame_scores(build_state(six_pool, labeled, noise_seed=8), seq)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


# --- test-split prediction -----------------------------------------------


def test_predict_test_does_not_touch_score_counter(six_pool):
    state = build_state(six_pool, six_pool.train_ids[:2])
    seq = six_pool.sequences[six_pool.test_ids[0]]
    sg.reset_score_counter()
    predict_test(state, seq)
    assert sg.score_calls() == 0


def test_predict_test_deterministic(six_pool):
    state = build_state(six_pool, six_pool.train_ids[:2])
    seq = six_pool.sequences[six_pool.test_ids[0]]
    a = predict_test(state, seq)
    b = predict_test(state, seq)
    assert len(a) == seq.n_frames
    for fa, fb in zip(a, b):
        assert len(fa) == len(fb)
        for (ba, ca), (bb, cb) in zip(fa, fb):
            assert ca == cb and ba == bb


def test_predict_test_converges_to_truth_at_high_quality(six_pool):
    # kappa large and the target itself labeled: q = 1 - exp(-kappa)
    seq = six_pool.sequences[six_pool.train_ids[0]]
    state = build_state(six_pool, [seq.sequence_id], kappa=50.0)
    assert target_quality(state, seq) >= 1 - 1e-12
    preds = predict_test(state, seq)
    for frame, dets in zip(seq.frames, preds):
        assert len(dets) == len(frame.boxes), "no drops, no false positives"
        for truth, (box, conf) in zip(frame.boxes, dets):
            assert box.class_id == truth.class_id
            assert box.cx == pytest.approx(truth.cx, abs=1e-9)
            assert box.w == pytest.approx(truth.w, abs=1e-9)
            assert conf >= 0.9


def test_predict_test_degrades_at_low_quality(six_pool):
    state = build_state(six_pool, [], kappa=0.35)
    seq = six_pool.sequences[six_pool.test_ids[0]]
    assert target_quality(state, seq) == 0.0
    preds = predict_test(state, seq)
    total_truth = sum(len(f.boxes) for f in seq.frames)
    kept = sum(
        1
        for dets, frame in zip(preds, seq.frames)
        for (box, conf) in dets
        if conf > 0.4  # true-box confidences sit near q, FPs stay below 0.4
    )
    # drop probability is 0.5 at q=0; seeing every truth survive is wildly unlikely
    assert kept < total_truth


# --- traces --------------------------------------------------------------


def test_trace_round_trip_full_precision(tmp_path):
    trace = ScoreTrace()
    awkward = [0.1 + 0.2, 1.0 / 3.0, 0.9999999999999999]
    trace.add_scores(1, "a", awkward, [1, 2, 3])
    trace.add_scores(2, "a", [0.5], [0])
    trace.add_test_metrics(0, None, None)
    trace.add_test_metrics(1, 2.0 / 3.0, 0.1 + 0.2)
    sp, mp = tmp_path / "t.csv", tmp_path / "m.csv"
    write_traces({3: trace}, sp, mp)
    back = read_traces(sp, mp)
    assert set(back) == {3}
    o, c = back[3].rounds[1]["a"]
    assert o.tolist() == awkward  # bit-exact through repr
    assert c.tolist() == [1, 2, 3]
    assert back[3].test_metrics[0] == (None, None)
    assert back[3].test_metrics[1] == (2.0 / 3.0, 0.1 + 0.2)


def test_replay_missing_round_raises():
    trace = ScoreTrace()
    trace.add_scores(1, "a", [0.5], [1])
    with pytest.raises(TraceError):
        replay_scores(trace, 2)
    with pytest.raises(TraceError):
        replay_test_metrics(trace, 0)


def test_read_traces_requires_full_frame_coverage(tmp_path):
    sp = tmp_path / "scores.csv"
    sp.write_text(
        "seed,round,sequence_id,frame_id,uncertainty,pred_count\n"
        "0,1,a,0,0.5,1\n"
        "0,1,a,2,0.5,1\n"
    )
    mp = tmp_path / "metrics.csv"
    mp.write_text("seed,round,map50,map5095\n")
    with pytest.raises(TraceError):
        read_traces(sp, mp)
