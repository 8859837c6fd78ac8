"""PlotSpec: which inputs, what figure kind, where to write the image."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("fringes", "frame_gallery", "morph_heatmap", "ring_profile")


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str
    title: str = ""
    x_label: str = ""
    y_label: str = ""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise ValueError("at least one input file is required")
        if not self.output:
            raise ValueError("output image path is required")

    def validate_inputs(self) -> None:
        missing = [p for p in self.inputs if not Path(p).is_file()]
        if missing:
            raise FileNotFoundError(f"missing input files: {missing}")


def load_plotspec(path: str | Path) -> PlotSpec:
    table = tomllib.loads(Path(path).read_text())
    return PlotSpec(
        kind=table.get("kind", ""),
        inputs=tuple(table.get("inputs", [])),
        output=table.get("output", ""),
        title=table.get("title", ""),
        x_label=table.get("x_label", ""),
        y_label=table.get("y_label", ""),
    )
