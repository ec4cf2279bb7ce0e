"""Flat key=value run configuration shared by the CLI subcommands."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .orientation import LossWeights
from .synth import SceneSpec
from .viewpoint import DEFAULT_FACE_BAND


@dataclass
class RunConfig:
    """Tunable parameters with their pinned defaults.

    Scene-range keys configure the synthetic generator; the rest parallel
    the library defaults (face band, MultiBin coding, loss weights,
    truncation filtering, AP interpolation).
    """

    face_band: float = DEFAULT_FACE_BAND
    n_bins: int = 2
    overlap: float = 0.1
    w_dims: float = 1.0
    w_ang: float = 4.0
    w_conf: float = 8.0
    w_view: float = 4.0
    max_truncation: float = 0.5
    interpolation: int = 11
    n_objects: int = 6
    x_min: float = -6.0
    x_max: float = 6.0
    y_min: float = 0.0
    y_max: float = 3.3
    z_min: float = 8.0
    z_max: float = 45.0
    dims_l: float = 3.9
    dims_h: float = 1.5
    dims_w: float = 1.6
    dims_spread: float = 0.2

    def weights(self) -> LossWeights:
        return LossWeights(self.w_dims, self.w_ang, self.w_conf, self.w_view)

    def scene_spec(self, seed: int = 0, n_objects: int | None = None) -> SceneSpec:
        return SceneSpec(
            seed=seed,
            n_objects=self.n_objects if n_objects is None else n_objects,
            x_range=(self.x_min, self.x_max),
            y_range=(self.y_min, self.y_max),
            z_range=(self.z_min, self.z_max),
            dims_mean=(self.dims_l, self.dims_h, self.dims_w),
            dims_spread=self.dims_spread,
        )


def parse_config(text: str) -> RunConfig:
    """Parse 'key=value' lines ('#' comments allowed) into a RunConfig."""
    known = {f.name: f.type for f in fields(RunConfig)}
    updates = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or key not in known:
            raise ValueError(f"config line {line_no}: unknown entry {raw!r}")
        caster = int if known[key] in ("int", int) else float
        try:
            updates[key] = caster(value)
        except ValueError:
            raise ValueError(f"config line {line_no}: bad value for {key}: {value!r}") from None
    return replace(RunConfig(), **updates)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
