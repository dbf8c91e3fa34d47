"""Sequence pool domain types and the on-disk label-tree format.

A pool directory holds plain-text box annotations under
``labels/{training,validation,test}`` with one file per frame named
``<sequence>_<frame>.txt``, optional 8-bit grayscale rasters under
``frames/<split>`` as binary PGM, and a ``manifest.csv`` sidecar listing
per-sequence annotation cost and metadata. Box coordinates are normalized
center-format (cx, cy, w, h) in the unit square.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path

import numpy as np

from .errors import (
    ContinuityError,
    LineFormatError,
    ManifestError,
    NameFormatError,
)

CLASS_NAMES = ("pedestrian", "bicycle", "car", "cart")
KNOWN_CLASS_IDS = frozenset(range(len(CLASS_NAMES)))

COORD_FORMAT = "%.6f"
FRAME_ID_DIGITS = 6


class Occlusion(IntEnum):
    VISIBLE = 0
    PARTIAL = 1
    FULL = 2


class Season(IntEnum):
    WINTER = 0
    SPRING = 1
    SUMMER = 2


class TimeOfDay(IntEnum):
    MORNING = 0
    NOON = 1
    EVENING = 2


class Split(Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


# Directory names inside labels/ and frames/ for each split.
SPLIT_DIRS = {
    Split.TRAIN: "training",
    Split.VALIDATION: "validation",
    Split.TEST: "test",
}

_MANIFEST_COLUMNS = (
    "sequence_id",
    "cost_hours",
    "scene_id",
    "season",
    "time_of_day",
    "split",
)


@dataclass
class BoundingBox:
    """One annotated object: normalized center-format geometry plus class.

    Invariants: cx, cy in [0,1]; 0 < w, h <= 1; the box extent stays inside
    the unit square; class_id is a non-negative integer (0-3 are the known
    superclasses, others survive parsing unless strict mode rejects them).
    """

    class_id: int
    cx: float
    cy: float
    w: float
    h: float
    occluded: Occlusion = Occlusion.VISIBLE

    def corners(self) -> tuple[float, float, float, float]:
        """Return (x1, y1, x2, y2)."""
        return (
            self.cx - self.w / 2,
            self.cy - self.h / 2,
            self.cx + self.w / 2,
            self.cy + self.h / 2,
        )

    def validate(self) -> None:
        if self.class_id < 0:
            raise ValueError(f"negative class id {self.class_id}")
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise ValueError(f"center ({self.cx}, {self.cy}) outside unit square")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise ValueError(f"degenerate extent ({self.w}, {self.h})")
        x1, y1, x2, y2 = self.corners()
        if x1 < -1e-9 or y1 < -1e-9 or x2 > 1 + 1e-9 or y2 > 1 + 1e-9:
            raise ValueError("box extent leaves the unit square")
        if not isinstance(self.occluded, Occlusion):
            raise ValueError(f"bad occlusion flag {self.occluded!r}")


def clamp_box(
    class_id: int,
    cx: float,
    cy: float,
    w: float,
    h: float,
    occluded: Occlusion = Occlusion.VISIBLE,
) -> tuple[BoundingBox, bool]:
    """Clamp raw geometry into the unit square.

    The center is clamped to [0,1], extents capped at 1, and the box edges
    clipped so the whole rectangle stays inside the square. Returns the box
    and a flag telling whether anything actually moved. Non-positive w or h
    cannot be repaired here and must be rejected by the caller.
    """
    ncx = min(max(cx, 0.0), 1.0)
    ncy = min(max(cy, 0.0), 1.0)
    nw = min(w, 1.0)
    nh = min(h, 1.0)
    x1 = max(ncx - nw / 2, 0.0)
    x2 = min(ncx + nw / 2, 1.0)
    y1 = max(ncy - nh / 2, 0.0)
    y2 = min(ncy + nh / 2, 1.0)
    out = BoundingBox(class_id, (x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1, occluded)
    changed = (
        abs(out.cx - cx) > 1e-12
        or abs(out.cy - cy) > 1e-12
        or abs(out.w - w) > 1e-12
        or abs(out.h - h) > 1e-12
    )
    return out, changed


@dataclass
class Frame:
    """One video frame: its boxes, and optionally an 8-bit grayscale raster."""

    frame_id: int
    boxes: list[BoundingBox] = field(default_factory=list)
    raster: np.ndarray | None = None


@dataclass
class SequenceMeta:
    sequence_id: str
    cost_hours: float
    scene_id: int
    season: Season
    time_of_day: TimeOfDay
    split: Split


@dataclass
class Sequence:
    """A contiguous video sequence with metadata and optional motion stats.

    motion_scores / box_estimates are filled by the flow proxy (one entry per
    frame, index 0 always zero motion) and start out as None.
    """

    meta: SequenceMeta
    frames: list[Frame]
    motion_scores: list[int] | None = None
    box_estimates: list[int] | None = None

    @property
    def sequence_id(self) -> str:
        return self.meta.sequence_id

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    def total_boxes(self) -> int:
        return sum(len(f.boxes) for f in self.frames)

    def occluded_boxes(self) -> int:
        return sum(
            1 for f in self.frames for b in f.boxes if b.occluded is not Occlusion.VISIBLE
        )

    def mean_box_count(self) -> float:
        return self.total_boxes() / self.n_frames

    def mean_center_shift(self) -> float:
        """Mean per-frame sum of box-center displacements, in normalized units.

        Boxes are paired across consecutive frames by list position, which is
        exact for generated pools (stable object order) and a serviceable
        approximation elsewhere. Frame 0 contributes zero.
        """
        if self.n_frames == 1:
            return 0.0
        total = 0.0
        for prev, curr in zip(self.frames, self.frames[1:]):
            for a, b in zip(prev.boxes, curr.boxes):
                total += float(np.hypot(b.cx - a.cx, b.cy - a.cy))
        return total / self.n_frames


@dataclass
class PoolState:
    """All sequences of a pool plus the acquisition partition of the train split.

    ``labeled`` is append-only in acquisition order; ``unlabeled`` holds the
    remaining train sequence ids. Validation and test sequences never enter
    either side.
    """

    sequences: dict[str, Sequence]
    labeled: list[str] = field(default_factory=list)
    unlabeled: set[str] = field(default_factory=set)

    @classmethod
    def from_sequences(cls, sequences: list[Sequence]) -> "PoolState":
        table: dict[str, Sequence] = {}
        for seq in sequences:
            sid = seq.sequence_id
            if sid in table:
                raise ManifestError(f"duplicate sequence id {sid!r}")
            if seq.n_frames < 1:
                raise ContinuityError(f"sequence {sid!r} has no frames")
            ids = [f.frame_id for f in seq.frames]
            if ids != list(range(len(ids))):
                raise ContinuityError(
                    f"sequence {sid!r} frame ids are not consecutive from 0"
                )
            table[sid] = seq
        pool = cls(sequences=table)
        pool.reset_acquisition()
        return pool

    def split_ids(self, split: Split) -> list[str]:
        return sorted(s for s, q in self.sequences.items() if q.meta.split is split)

    @property
    def train_ids(self) -> list[str]:
        return self.split_ids(Split.TRAIN)

    @property
    def validation_ids(self) -> list[str]:
        return self.split_ids(Split.VALIDATION)

    @property
    def test_ids(self) -> list[str]:
        return self.split_ids(Split.TEST)

    def total_train_frames(self) -> int:
        return sum(self.sequences[s].n_frames for s in self.train_ids)

    def acquire(self, ids: list[str]) -> None:
        """Move ids from unlabeled to labeled, preserving the given order."""
        for sid in ids:
            if sid not in self.unlabeled:
                raise KeyError(f"{sid!r} is not in the unlabeled pool")
            self.unlabeled.remove(sid)
            self.labeled.append(sid)

    def reset_acquisition(self) -> None:
        self.labeled = []
        self.unlabeled = set(self.train_ids)

    def check_partition(self) -> None:
        train = set(self.train_ids)
        lab = set(self.labeled)
        if len(lab) != len(self.labeled):
            raise ValueError("labeled list holds duplicates")
        if lab | self.unlabeled != train or lab & self.unlabeled:
            raise ValueError("labeled/unlabeled do not partition the train split")


@dataclass
class LabelFile:
    """Result of parsing one label file, with the lines that needed clamping."""

    sequence_id: str
    frame_id: int
    boxes: list[BoundingBox]
    clamped_lines: list[int] = field(default_factory=list)


def parse_label_name(path_name: str) -> tuple[str, int]:
    """Split ``<sequence>_<frame>.txt`` into its parts.

    The frame id is the final underscore-separated token; everything before
    the last underscore belongs to the sequence id.
    """
    name = Path(path_name).name
    if not name.endswith(".txt"):
        raise NameFormatError(f"{name!r} does not end in .txt")
    stem = name[: -len(".txt")]
    if "_" not in stem:
        raise NameFormatError(f"{name!r} has no sequence/frame separator")
    sid, frame_part = stem.rsplit("_", 1)
    if not sid:
        raise NameFormatError(f"{name!r} has an empty sequence id")
    if not frame_part.isdigit():
        raise NameFormatError(f"{name!r} has a non-numeric frame id {frame_part!r}")
    return sid, int(frame_part)


def parse_label_file(
    path_name: str, contents: str, strict_classes: bool = False
) -> LabelFile:
    """Parse one annotation file.

    Each non-empty line is ``class cx cy w h`` with an optional integer
    occlusion flag as a sixth field. Coordinates outside the unit square are
    clamped and the line number recorded in the result. Unknown class ids are
    kept unless ``strict_classes`` is set.
    """
    sid, frame_id = parse_label_name(path_name)
    boxes: list[BoundingBox] = []
    clamped: list[int] = []
    for lineno, raw in enumerate(contents.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) not in (5, 6):
            raise LineFormatError(f"expected 5 or 6 fields, got {len(fields)}", lineno)
        try:
            class_id = int(fields[0])
        except ValueError:
            raise LineFormatError(f"bad class id {fields[0]!r}", lineno) from None
        try:
            cx, cy, w, h = (float(v) for v in fields[1:5])
        except ValueError:
            raise LineFormatError("non-numeric coordinate", lineno) from None
        if not all(np.isfinite(v) for v in (cx, cy, w, h)):
            raise LineFormatError("non-finite coordinate", lineno)
        occ = Occlusion.VISIBLE
        if len(fields) == 6:
            try:
                occ = Occlusion(int(fields[5]))
            except ValueError:
                raise LineFormatError(
                    f"bad occlusion flag {fields[5]!r}", lineno
                ) from None
        if class_id < 0:
            raise LineFormatError(f"negative class id {class_id}", lineno)
        if strict_classes and class_id not in KNOWN_CLASS_IDS:
            raise LineFormatError(f"unknown class id {class_id}", lineno)
        if w <= 0 or h <= 0:
            raise LineFormatError(f"non-positive box extent ({w}, {h})", lineno)
        box, changed = clamp_box(class_id, cx, cy, w, h, occ)
        if changed:
            clamped.append(lineno)
        boxes.append(box)
    return LabelFile(sid, frame_id, boxes, clamped)


def format_label_line(box: BoundingBox) -> str:
    coords = " ".join(COORD_FORMAT % v for v in (box.cx, box.cy, box.w, box.h))
    line = f"{box.class_id} {coords}"
    if box.occluded is not Occlusion.VISIBLE:
        line += f" {int(box.occluded)}"
    return line


def read_pgm(path: Path) -> np.ndarray:
    """Read a binary (P5) graymap with maxval 255 into a uint8 array."""
    data = Path(path).read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4 and pos < len(data):
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if pos > start:
            tokens.append(data[start:pos])
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise ManifestError(f"{path}: not a binary P5 graymap")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise ManifestError(f"{path}: malformed PGM header") from None
    if maxval != 255:
        raise ManifestError(f"{path}: unsupported maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    raster = np.frombuffer(data[pos : pos + width * height], dtype=np.uint8)
    if raster.size != width * height:
        raise ManifestError(f"{path}: truncated raster payload")
    return raster.reshape(height, width).copy()


def write_pgm(path: Path, raster: np.ndarray) -> None:
    if raster.ndim != 2 or raster.dtype != np.uint8:
        raise ValueError("raster must be a 2-D uint8 array")
    height, width = raster.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + raster.tobytes())


def _parse_manifest(manifest_path: Path) -> dict[str, SequenceMeta]:
    if not manifest_path.is_file():
        raise ManifestError(f"manifest not found at {manifest_path}")
    rows: dict[str, SequenceMeta] = {}
    with open(manifest_path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in _MANIFEST_COLUMNS if c not in header]
        if missing:
            raise ManifestError(f"manifest missing columns: {', '.join(missing)}")
        for lineno, row in enumerate(reader, start=2):
            sid = (row["sequence_id"] or "").strip()
            if not sid:
                raise ManifestError(f"manifest row {lineno}: empty sequence_id")
            if sid in rows:
                raise ManifestError(f"manifest row {lineno}: duplicate id {sid!r}")
            try:
                cost = float(row["cost_hours"])
            except (TypeError, ValueError):
                raise ManifestError(
                    f"manifest row {lineno}: bad cost {row['cost_hours']!r}"
                ) from None
            if not np.isfinite(cost) or cost <= 0:
                raise ManifestError(
                    f"manifest row {lineno}: cost_hours must be positive, got {cost}"
                )
            try:
                scene = int(row["scene_id"])
                season = Season[row["season"].strip().upper()]
                tod = TimeOfDay[row["time_of_day"].strip().upper()]
                split = Split(row["split"].strip().lower())
            except (KeyError, ValueError, AttributeError):
                raise ManifestError(f"manifest row {lineno}: bad metadata field") from None
            rows[sid] = SequenceMeta(sid, cost, scene, season, tod, split)
    return rows


def load_pool(
    root_dir: Path | str,
    manifest: Path | str | None = None,
    strict_classes: bool = False,
) -> PoolState:
    """Load a pool directory into memory.

    Validates that every label file's sequence has a manifest row on the
    matching split, that frame ids are gapless from zero, and that costs are
    positive. Rasters are attached when a matching PGM exists.
    """
    root = Path(root_dir)
    manifest_path = Path(manifest) if manifest is not None else root / "manifest.csv"
    metas = _parse_manifest(manifest_path)

    labels_root = root / "labels"
    if not labels_root.is_dir():
        raise FileNotFoundError(f"no labels directory under {root}")

    frames_by_seq: dict[str, dict[int, Frame]] = {}
    for split, dirname in SPLIT_DIRS.items():
        split_dir = labels_root / dirname
        if not split_dir.is_dir():
            continue
        for label_path in sorted(split_dir.glob("*.txt")):
            parsed = parse_label_file(
                label_path.name, label_path.read_text(), strict_classes
            )
            meta = metas.get(parsed.sequence_id)
            if meta is None:
                raise ManifestError(
                    f"{label_path.name}: sequence {parsed.sequence_id!r} not in manifest"
                )
            if meta.split is not split:
                raise ManifestError(
                    f"{label_path.name}: filed under {dirname!r} but manifest says "
                    f"{meta.split.value!r}"
                )
            raster = None
            pgm = root / "frames" / dirname / (label_path.stem + ".pgm")
            if pgm.is_file():
                raster = read_pgm(pgm)
            frame = Frame(parsed.frame_id, parsed.boxes, raster)
            frames_by_seq.setdefault(parsed.sequence_id, {})[parsed.frame_id] = frame

    missing = sorted(set(metas) - set(frames_by_seq))
    if missing:
        raise ManifestError(
            f"manifest lists sequences with no label files: {', '.join(missing)}"
        )

    sequences = []
    for sid in sorted(frames_by_seq):
        by_id = frames_by_seq[sid]
        ids = sorted(by_id)
        if ids != list(range(len(ids))):
            raise ContinuityError(
                f"sequence {sid!r} has frame ids {ids[:4]}..., expected 0..{len(ids) - 1}"
            )
        sequences.append(Sequence(metas[sid], [by_id[i] for i in ids]))
    return PoolState.from_sequences(sequences)


def write_pool(pool: PoolState, root_dir: Path | str) -> None:
    """Write a pool as a label tree plus manifest under root_dir.

    Always creates the three split folders (an empty pool yields the bare
    skeleton). Frames with rasters additionally produce PGM files. IO
    failures propagate as OSError.
    """
    root = Path(root_dir)
    for dirname in SPLIT_DIRS.values():
        (root / "labels" / dirname).mkdir(parents=True, exist_ok=True)

    for sid in sorted(pool.sequences):
        seq = pool.sequences[sid]
        dirname = SPLIT_DIRS[seq.meta.split]
        label_dir = root / "labels" / dirname
        for frame in seq.frames:
            for box in frame.boxes:
                box.validate()
            stem = f"{sid}_{frame.frame_id:0{FRAME_ID_DIGITS}d}"
            lines = [format_label_line(b) for b in frame.boxes]
            (label_dir / f"{stem}.txt").write_text(
                "\n".join(lines) + ("\n" if lines else "")
            )
            if frame.raster is not None:
                frame_dir = root / "frames" / dirname
                frame_dir.mkdir(parents=True, exist_ok=True)
                write_pgm(frame_dir / f"{stem}.pgm", frame.raster)

    with open(root / "manifest.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_MANIFEST_COLUMNS)
        for sid in sorted(pool.sequences):
            meta = pool.sequences[sid].meta
            writer.writerow(
                [
                    sid,
                    COORD_FORMAT % meta.cost_hours,
                    meta.scene_id,
                    meta.season.name.lower(),
                    meta.time_of_day.name.lower(),
                    meta.split.value,
                ]
            )


def _boxes_match(a: list[BoundingBox], b: list[BoundingBox], tol: float) -> bool:
    if len(a) != len(b):
        return False
    for x, y in zip(a, b):
        if x.class_id != y.class_id or x.occluded is not y.occluded:
            return False
        if max(
            abs(x.cx - y.cx), abs(x.cy - y.cy), abs(x.w - y.w), abs(x.h - y.h)
        ) > tol:
            return False
    return True


def pools_match(a: PoolState, b: PoolState, coord_tol: float = 1e-6) -> bool:
    """Structural equality of two pools up to coordinate/cost tolerance.

    Compares sequence data only; acquisition state and cached motion
    statistics are ignored (neither survives a write/load round trip).
    """
    if sorted(a.sequences) != sorted(b.sequences):
        return False
    for sid, sa in a.sequences.items():
        sb = b.sequences[sid]
        ma, mb = sa.meta, sb.meta
        if (
            abs(ma.cost_hours - mb.cost_hours) > coord_tol
            or ma.scene_id != mb.scene_id
            or ma.season is not mb.season
            or ma.time_of_day is not mb.time_of_day
            or ma.split is not mb.split
        ):
            return False
        if sa.n_frames != sb.n_frames:
            return False
        for fa, fb in zip(sa.frames, sb.frames):
            if fa.frame_id != fb.frame_id:
                return False
            if not _boxes_match(fa.boxes, fb.boxes, coord_tol):
                return False
            if (fa.raster is None) != (fb.raster is None):
                return False
            if fa.raster is not None and not np.array_equal(fa.raster, fb.raster):
                return False
    return True
