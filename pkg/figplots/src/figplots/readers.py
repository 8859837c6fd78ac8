"""Readers for the simulator's documented output contracts.

These parse files only; they deliberately do not import the simulator.
Contracts: sweep CSVs carry the header
``theta,singles_ep1,singles_ep2,coincidences,n_trials,seed``; morph CSVs
``theta,phi,prob``; ring CSVs ``phi,intensity,n_pixels``.  Frames are binary
16-bit PGM (P5) with an optional ``*.meta.toml`` sidecar of flat key = value
lines.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Read a header + float-rows CSV into columns keyed by header name."""
    with open(path, "r", newline="\n") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        return {name: np.empty(0) for name in header}
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: {data.shape[1]} columns but {len(header)} header names")
    return {name: data[:, i] for i, name in enumerate(header)}


def require_columns(cols: dict[str, np.ndarray], expected: list[str], path) -> None:
    missing = [c for c in expected if c not in cols]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}; found {list(cols)}")


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary P5 PGM (8- or 16-bit) into an integer array."""
    raw = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        fields.append(raw[start:pos])
    if fields[0] != b"P5":
        raise ValueError(f"{path} is not a binary PGM")
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    pos += 1
    dtype = ">u2" if maxval > 255 else "u1"
    pixels = np.frombuffer(raw, dtype=dtype, count=width * height, offset=pos)
    return pixels.reshape(height, width).astype(np.int64)


def read_sidecar(pgm_path: str | Path) -> dict[str, str]:
    """Flat key = value lines from the frame's metadata sidecar, if present."""
    meta = Path(pgm_path).with_suffix(".meta.toml")
    out: dict[str, str] = {}
    if not meta.is_file():
        return out
    for line in meta.read_text().splitlines():
        if "=" not in line:
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip().strip('"')
    return out
