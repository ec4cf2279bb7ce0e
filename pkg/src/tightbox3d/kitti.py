"""Parsers and writers for KITTI object labels, detections, and calibration.

Label lines carry 15 whitespace-separated fields, detections add a 16th
score field. Calibration files are ``NAME: v0 v1 ...`` lines; P2 is the
3x4 projection matrix this artifact uses. Serialization is pinned to two
decimals for box/dimension/location fields and six for angles and scores
so round trips are reproducible; calibration round-trips byte-exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import IO, Iterable, Sequence

import numpy as np

from .geometry import Box2D, Dimensions, Intrinsics, Pose

DONT_CARE = "DontCare"

# (min box height px, max occlusion, max truncation) per difficulty
DIFFICULTY_THRESHOLDS = (
    (40.0, 0, 0.15),  # Easy
    (25.0, 1, 0.30),  # Moderate
    (25.0, 2, 0.50),  # Hard
)


class MalformedLine(ValueError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class MissingP2(ValueError):
    """Calibration file lacks the P2 projection matrix."""


class MissingScore(ValueError):
    """A record written as a detection has no score."""


class Difficulty(enum.Enum):
    EASY = "Easy"
    MODERATE = "Moderate"
    HARD = "Hard"
    IGNORED = "Ignored"


@dataclass
class KittiRecord:
    """One parsed KITTI object line (label or detection)."""

    object_type: str
    truncated: float
    occluded: int
    alpha: float
    bbox: Box2D
    h: float
    w: float
    l: float
    x: float
    y: float
    z: float
    rotation_y: float
    score: float | None = None

    def dimensions(self) -> Dimensions:
        return Dimensions(l=self.l, h=self.h, w=self.w)

    def pose(self) -> Pose:
        return Pose(theta=self.rotation_y, t=np.array([self.x, self.y, self.z]))

    def with_location(self, t) -> "KittiRecord":
        return replace(self, x=float(t[0]), y=float(t[1]), z=float(t[2]))


def _as_text(source) -> str:
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        return source.decode("utf-8")
    return source


def parse_label_file(source) -> list:
    """Parse label or detection text into records, one per non-empty line.

    Accepts str/bytes content or a readable stream. Lines must have 15
    fields (label) or 16 (detection with trailing score); anything else
    raises MalformedLine with the offending 1-based line number.
    """
    records = []
    for line_no, line in enumerate(_as_text(source).splitlines(), start=1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) not in (15, 16):
            raise MalformedLine(line_no, f"expected 15 or 16 fields, got {len(fields)}")
        try:
            values = [float(f) for f in fields[1:]]
        except ValueError as exc:
            raise MalformedLine(line_no, f"non-numeric field: {exc}") from None
        try:
            bbox = Box2D(values[3], values[4], values[5], values[6])
        except ValueError as exc:
            raise MalformedLine(line_no, str(exc)) from None
        records.append(
            KittiRecord(
                object_type=fields[0],
                truncated=values[0],
                occluded=int(values[1]),
                alpha=values[2],
                bbox=bbox,
                h=values[7],
                w=values[8],
                l=values[9],
                x=values[10],
                y=values[11],
                z=values[12],
                rotation_y=values[13],
                score=values[14] if len(fields) == 16 else None,
            )
        )
    return records


def format_record(record: KittiRecord, with_score: bool) -> str:
    """One KITTI line; 2-decimal geometry fields, 6-decimal angles/score."""
    if with_score and record.score is None:
        raise MissingScore(f"record of type {record.object_type} has no score")
    fields = [
        record.object_type,
        f"{record.truncated:.2f}",
        f"{record.occluded:d}",
        f"{record.alpha:.6f}",
        f"{record.bbox.u_min:.2f}",
        f"{record.bbox.v_min:.2f}",
        f"{record.bbox.u_max:.2f}",
        f"{record.bbox.v_max:.2f}",
        f"{record.h:.2f}",
        f"{record.w:.2f}",
        f"{record.l:.2f}",
        f"{record.x:.2f}",
        f"{record.y:.2f}",
        f"{record.z:.2f}",
        f"{record.rotation_y:.6f}",
    ]
    if with_score:
        fields.append(f"{record.score:.6f}")
    return " ".join(fields)


def write_detection_file(records: Sequence[KittiRecord]) -> str:
    """Serialize detections (score mandatory); raises MissingScore."""
    return "".join(format_record(r, with_score=True) + "\n" for r in records)


def write_label_file(records: Sequence[KittiRecord]) -> str:
    """Serialize labels (15 fields, scores dropped)."""
    return "".join(format_record(r, with_score=False) + "\n" for r in records)


@dataclass(frozen=True)
class CalibRecord:
    """Parsed calibration file: P2 plus every original line for round trips."""

    p2: Intrinsics
    matrices: dict
    raw: str


def parse_calib_file(source) -> CalibRecord:
    """Parse a KITTI calibration file; P2 is mandatory.

    All lines are preserved verbatim so serialize_calib round-trips
    byte-exactly; named value rows other than P2 are kept as flat arrays.
    """
    text = _as_text(source)
    matrices = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        name, sep, rest = line.partition(":")
        if not sep:
            raise MalformedLine(line_no, f"expected 'NAME: values', got {line!r}")
        try:
            values = np.array([float(v) for v in rest.split()])
        except ValueError as exc:
            raise MalformedLine(line_no, f"non-numeric value: {exc}") from None
        matrices[name.strip()] = values
    if "P2" not in matrices:
        raise MissingP2("calibration file has no P2 line")
    if matrices["P2"].size != 12:
        raise MalformedLine(0, f"P2 must have 12 entries, got {matrices['P2'].size}")
    return CalibRecord(
        p2=Intrinsics(matrices["P2"].reshape(3, 4)), matrices=matrices, raw=text
    )


def serialize_calib(record: CalibRecord) -> str:
    return record.raw


def filter_truncated(records: Iterable[KittiRecord], max_truncation: float) -> list:
    """Drop records truncated beyond the threshold; DontCare always drops."""
    if not 0.0 <= max_truncation <= 1.0:
        raise ValueError(f"max_truncation must be in [0, 1], got {max_truncation}")
    return [
        r
        for r in records
        if r.object_type != DONT_CARE and r.truncated <= max_truncation
    ]


def difficulty_of(record: KittiRecord, thresholds=DIFFICULTY_THRESHOLDS) -> Difficulty:
    """Easiest difficulty whose height/occlusion/truncation limits all hold."""
    height = record.bbox.height
    for level, (min_height, max_occlusion, max_truncation) in zip(
        (Difficulty.EASY, Difficulty.MODERATE, Difficulty.HARD), thresholds
    ):
        if (
            height >= min_height
            and record.occluded <= max_occlusion
            and record.truncated <= max_truncation
        ):
            return level
    return Difficulty.IGNORED


def mean_dimensions(records: Iterable[KittiRecord], object_type: str = "Car") -> Dimensions:
    """Per-class average dimensions of a label set."""
    dims = [(r.l, r.h, r.w) for r in records if r.object_type == object_type]
    if not dims:
        raise ValueError(f"no records of type {object_type!r}")
    l, h, w = (sum(col) / len(dims) for col in zip(*dims))
    return Dimensions(l=l, h=h, w=w)


def alpha_from_pose(rotation_y: float, x: float, z: float) -> float:
    """Observation angle implied by global yaw and location (KITTI alpha)."""
    return math.remainder(rotation_y - math.atan2(x, z), 2.0 * math.pi)
