"""CSV and PGM writers shared by the field, sweep, and frame exporters.

CSV files use a mandatory header row, '.' decimal separator, and LF line
endings.  PGM files are binary 16-bit grayscale (P5, big-endian samples,
row-major) with the header maxval equal to the peak pixel value.
"""
from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

PGM_MAX = 65535


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(x) for x in row) + "\n")
    return path


def read_csv_columns(path: str | Path) -> dict[str, np.ndarray]:
    """Read a library-written CSV back as float columns keyed by header name."""
    with open(path, "r", newline="\n") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        return {name: np.empty(0) for name in header}
    return {name: data[:, i] for i, name in enumerate(header)}


def write_pgm16(values: np.ndarray, path: str | Path) -> Path:
    """Write a 2D array as binary 16-bit PGM, peak value scaled to 65535.

    Scaling keeps every file genuinely 16-bit (a PGM maxval below 256 would
    imply single-byte samples); the pixel hitting 65535 marks the peak
    intensity.  Frame sidecars record the unscaled peak.
    """
    v = np.asarray(values)
    if v.ndim != 2:
        raise ValueError(f"PGM export needs a 2D array, got shape {v.shape}")
    peak = float(v.max())
    if peak <= 0.0:
        pixels = np.zeros(v.shape, dtype=np.uint16)
    else:
        pixels = np.round(np.clip(v, 0.0, None) / peak * PGM_MAX).astype(np.uint16)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{v.shape[1]} {v.shape[0]}\n{PGM_MAX}\n".encode("ascii"))
        fh.write(pixels.astype(">u2").tobytes())
    return path


def read_pgm16(path: str | Path) -> np.ndarray:
    """Read a binary P5 PGM written by :func:`write_pgm16`."""
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


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()
