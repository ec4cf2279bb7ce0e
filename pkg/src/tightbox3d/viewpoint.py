"""Viewpoint classification and configuration-search reduction.

Instead of testing all 64 edge/vertex assignments, the camera-object
observation relationship is discretized into 16 classes (vertical down or
front view, one or two visible side faces, and the quadrant of the local
orientation). Each class maps to the small set of assignments that
actually occur for it, derived once by brute-force sampling and frozen to
a text table.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from importlib import resources
from typing import NamedTuple, Sequence

import numpy as np

from .angles import wrap_to_2pi
from .geometry import (
    Box2D,
    ConstraintConfig,
    Dimensions,
    Intrinsics,
    Pose,
    SolveResult,
    all_configs,
    exhaustive_search,
)
from .orientation import global_to_local, ray_angle

DEFAULT_FACE_BAND = 0.08
# configurations below this share of a class's samples merge into whichever
# class carries them dominantly; keeps candidate lists small and stable
DEFAULT_MIN_SHARE = 0.005
QUADRANT = np.pi / 2.0


class InsufficientCoverage(RuntimeError):
    """A viewpoint class received no samples during table derivation."""


class Vertical(enum.Enum):
    DOWN = "Down"
    FRONT = "Front"


class Faces(enum.Enum):
    ONE_SIDE = "OneSide"
    TWO_SIDES = "TwoSides"


class ViewpointClass(NamedTuple):
    vertical: Vertical
    faces: Faces
    quadrant: int


def all_viewpoints() -> list:
    """The 16 viewpoint classes in canonical order."""
    return [
        ViewpointClass(vert, faces, q)
        for vert in Vertical
        for faces in Faces
        for q in range(4)
    ]


def class_from_flags(looking_down: bool, one_side: bool, quadrant: int) -> ViewpointClass:
    return ViewpointClass(
        Vertical.DOWN if looking_down else Vertical.FRONT,
        Faces.ONE_SIDE if one_side else Faces.TWO_SIDES,
        quadrant,
    )


def classify_arrays(t: np.ndarray, theta: np.ndarray, h: np.ndarray, face_band: float):
    """Vectorized classification; returns (looking_down, one_side, quadrant).

    looking_down: camera origin above the object's top face (t_y - h > 0,
    y pointing down); slight up-views fold into the front view. one_side:
    local orientation within ``face_band`` of a multiple of pi/2, using
    half-open intervals [k*pi/2 - band, k*pi/2 + band).
    """
    theta_l = wrap_to_2pi(2.0 * np.pi - np.arctan2(t[:, 0], t[:, 2]) - theta)
    looking_down = (t[:, 1] - h) > 0.0
    frac = np.remainder(theta_l, QUADRANT)
    one_side = (frac < face_band) | (frac >= QUADRANT - face_band)
    quadrant = np.minimum(np.floor(theta_l / QUADRANT).astype(np.int64), 3)
    return looking_down, one_side, quadrant


def classify_viewpoint(
    pose: Pose, dims: Dimensions, face_band: float = DEFAULT_FACE_BAND
) -> ViewpointClass:
    """Discrete observation class of one object from its true pose."""
    if not 0.0 < face_band < np.pi / 4.0:
        raise ValueError(f"face_band must be in (0, pi/4), got {face_band}")
    theta_l = global_to_local(pose.theta, ray_angle(None, pose.t))
    looking_down = (pose.t[1] - dims.h) > 0.0
    frac = theta_l % QUADRANT
    one_side = frac < face_band or frac >= QUADRANT - face_band
    quadrant = min(int(theta_l // QUADRANT), 3)
    return class_from_flags(looking_down, one_side, quadrant)


class TableProvenance(NamedTuple):
    n_samples: int
    seed: int
    face_band: float


@dataclass(frozen=True)
class ConfigTable:
    """Per-viewpoint candidate configuration lists plus derivation provenance."""

    entries: dict
    provenance: TableProvenance

    def __post_init__(self):
        missing = [vp for vp in all_viewpoints() if vp not in self.entries]
        if missing:
            raise ValueError(f"table is missing {len(missing)} viewpoint classes")
        valid = set(all_configs())
        for vp, configs in self.entries.items():
            if len(configs) == 0:
                raise ValueError(f"empty candidate list for {vp}")
            if not set(configs) <= valid:
                raise ValueError(f"unknown configuration in list for {vp}")

    @property
    def max_candidates(self) -> int:
        return max(len(v) for v in self.entries.values())


def candidates_for(table: ConfigTable, vp: ViewpointClass) -> list:
    """The table's ordered candidate configurations for one class."""
    return list(table.entries[vp])


def reduced_search(
    intr: Intrinsics,
    box: Box2D,
    dims: Dimensions,
    theta: float,
    table: ConfigTable,
    vp: ViewpointClass,
) -> SolveResult:
    """Exhaustive search restricted to the class's candidate configurations."""
    return exhaustive_search(intr, box, dims, theta, candidates_for(table, vp))


def derive_table(
    intr: Intrinsics,
    n_samples: int,
    seed: int,
    face_band: float = DEFAULT_FACE_BAND,
    spec=None,
    min_share: float = DEFAULT_MIN_SHARE,
) -> ConfigTable:
    """Derive the viewpoint-to-configurations table by brute-force sampling.

    Samples feasible scenes, records the true configuration of each under
    its viewpoint class, and keeps each class's configurations ordered by
    descending frequency (ties by configuration tuple). Configurations
    rarer than ``min_share`` of their class are class-boundary strays;
    they are dropped from that class's list, which keeps every list small
    at a slight localization cost. A dropped configuration always survives
    in the class where it is most frequent, so the union of all lists
    still covers everything observed. Raises InsufficientCoverage when a
    class receives no samples.
    """
    from . import synth

    if n_samples < 10_000:
        raise ValueError(f"need at least 10^4 samples, got {n_samples}")
    if spec is None:
        spec = synth.SceneSpec(intrinsics=intr)
    rng = np.random.default_rng(seed)
    raw = synth.sample_objects(spec, n_samples, rng)
    looking_down, one_side, quadrant = classify_arrays(
        raw["t"], raw["theta"], raw["dims"][:, 1], face_band
    )

    counts = {vp: {} for vp in all_viewpoints()}
    for i in range(n_samples):
        vp = class_from_flags(looking_down[i], one_side[i], int(quadrant[i]))
        cfg = ConstraintConfig(*(int(c) for c in raw["configs"][i]))
        counts[vp][cfg] = counts[vp].get(cfg, 0) + 1

    kept = {}
    for vp, seen in counts.items():
        if not seen:
            raise InsufficientCoverage(f"no samples fell in class {format_class(vp)}")
        total = sum(seen.values())
        survivors = {cfg: k for cfg, k in seen.items() if k >= min_share * total}
        if not survivors:
            top = max(seen.items(), key=lambda item: (item[1], item[0]))
            survivors = {top[0]: top[1]}
        kept[vp] = survivors

    union = {cfg for survivors in kept.values() for cfg in survivors}
    observed = {cfg for seen in counts.values() for cfg in seen}
    for cfg in observed - union:
        home = max(all_viewpoints(), key=lambda vp: counts[vp].get(cfg, 0))
        kept[home][cfg] = counts[home][cfg]

    entries = {
        vp: tuple(cfg for cfg, _ in sorted(survivors.items(), key=lambda kv: (-kv[1], kv[0])))
        for vp, survivors in kept.items()
    }
    return ConfigTable(
        entries=entries,
        provenance=TableProvenance(n_samples=n_samples, seed=seed, face_band=face_band),
    )


def format_class(vp: ViewpointClass) -> str:
    return f"{vp.vertical.value} {vp.faces.value} {vp.quadrant}"


def format_config(cfg: ConstraintConfig) -> str:
    return "-".join(str(v) for v in cfg)


def parse_config(text: str) -> ConstraintConfig:
    parts = text.strip().split("-")
    if len(parts) != 4:
        raise ValueError(f"configuration must be four vertex ids, got {text!r}")
    ids = [int(p) for p in parts]
    if not all(0 <= v < 8 for v in ids):
        raise ValueError(f"vertex ids must be in 0..7, got {text!r}")
    return ConstraintConfig(*ids)


def format_table(table: ConfigTable) -> str:
    """Serialize a table; one line per class, provenance in '#' headers."""
    prov = table.provenance
    lines = [
        "# tightbox3d viewpoint-to-configuration table",
        f"# n_samples={prov.n_samples} seed={prov.seed} face_band={prov.face_band!r}",
    ]
    for vp in all_viewpoints():
        configs = ",".join(format_config(c) for c in table.entries[vp])
        lines.append(f"{format_class(vp)} : {configs}")
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> ConfigTable:
    """Parse a serialized table; inverse of format_table, bit-exact."""
    provenance = None
    entries = {}
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if not line:
            continue
        if line.startswith("#"):
            fields = dict(
                part.split("=", 1) for part in line[1:].split() if "=" in part
            )
            if {"n_samples", "seed", "face_band"} <= fields.keys():
                provenance = TableProvenance(
                    n_samples=int(fields["n_samples"]),
                    seed=int(fields["seed"]),
                    face_band=float(fields["face_band"]),
                )
            continue
        head, _, tail = line.partition(":")
        parts = head.split()
        if len(parts) != 3:
            raise ValueError(f"bad table line: {raw_line!r}")
        vp = ViewpointClass(Vertical(parts[0]), Faces(parts[1]), int(parts[2]))
        entries[vp] = tuple(parse_config(c) for c in tail.split(","))
    if provenance is None:
        raise ValueError("table text lacks a provenance header")
    return ConfigTable(entries=entries, provenance=provenance)


def write_table(table: ConfigTable, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_table(table))


def read_table(path) -> ConfigTable:
    with open(path, "r", encoding="ascii") as fh:
        return parse_table(fh.read())


def load_default_table() -> ConfigTable:
    """The table shipped with the package (derived at seed 7, 10^5 samples)."""
    text = resources.files("tightbox3d").joinpath("data/viewpoint_table.txt").read_text("ascii")
    return parse_table(text)
