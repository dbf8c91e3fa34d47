import numpy as np
import pytest

from seqal.pool import (
    BoundingBox,
    Frame,
    PoolState,
    Season,
    Sequence,
    SequenceMeta,
    Split,
    TimeOfDay,
)


def make_meta(sid, cost=1.0, scene=0, season=Season.WINTER, tod=TimeOfDay.NOON, split=Split.TRAIN):
    return SequenceMeta(sid, cost, scene, season, tod, split)


def make_sequence(
    sid,
    n_frames=3,
    cost=1.0,
    boxes_per_frame=1,
    split=Split.TRAIN,
    scene=0,
    season=Season.WINTER,
    raster_size=None,
):
    """Deterministic little sequence; boxes drift rightward frame by frame."""
    frames = []
    for fid in range(n_frames):
        boxes = [
            BoundingBox(k % 4, 0.2 + 0.01 * fid + 0.1 * k, 0.3 + 0.05 * k, 0.1, 0.1)
            for k in range(boxes_per_frame)
        ]
        raster = None
        if raster_size is not None:
            h, w = raster_size
            raster = np.full((h, w), 30, dtype=np.uint8)
            raster[fid % h, :] = 200
        frames.append(Frame(frame_id=fid, boxes=boxes, raster=raster))
    return Sequence(
        meta=make_meta(sid, cost=cost, scene=scene, season=season, split=split),
        frames=frames,
    )


def make_pool(n_train=4, n_val=1, n_test=1, n_frames=3, boxes_per_frame=1, raster_size=None):
    seqs = []
    idx = 0
    for split, count in ((Split.TRAIN, n_train), (Split.VALIDATION, n_val), (Split.TEST, n_test)):
        for _ in range(count):
            seqs.append(
                make_sequence(
                    f"seq{idx:03d}",
                    n_frames=n_frames,
                    cost=1.0 + 0.5 * idx,
                    boxes_per_frame=boxes_per_frame,
                    split=split,
                    scene=idx // 2,
                    raster_size=raster_size,
                )
            )
            idx += 1
    return PoolState.from_sequences(seqs)


@pytest.fixture
def six_pool():
    """Six train sequences plus one validation and one test."""
    return make_pool(n_train=6, n_val=1, n_test=1, n_frames=4, boxes_per_frame=2)
