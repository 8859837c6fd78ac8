"""Discretized transverse mode of the single photon.

A field lives on a polar or cartesian grid of cell midpoints; each cell holds
a Jones vector.  The probability carried by a cell is |h|^2 + |v|^2 times the
cell area, so a normalized field has total probability 1 over the grid.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .elements import QplateSpec, qplate_axis_angle
from .errors import GridMismatchError
from .io import write_csv, write_pgm16

NORMALIZED_TOTAL_TOL = 1e-9

# flat_matched profile: unit amplitude on the annulus [0.5w, 1.5w], zero outside
FLAT_INNER = 0.5
FLAT_OUTER = 1.5


@dataclass(frozen=True)
class GridSpec:
    """Cell-midpoint grid over the transverse plane.

    Polar grids span r in (0, r_max_mm] and phi in [0, 2pi); cartesian grids
    span [-half_extent_mm, half_extent_mm] in x and y.  Polar cell areas carry
    the radial Jacobian r*dr*dphi at the midpoint.
    """

    kind: str
    n_r: int = 0
    n_phi: int = 0
    r_max_mm: float = 0.0
    n_x: int = 0
    n_y: int = 0
    half_extent_mm: float = 0.0

    def __post_init__(self) -> None:
        if self.kind == "polar":
            if self.n_r < 4 or self.n_phi < 4:
                raise ValueError("polar grid needs n_r >= 4 and n_phi >= 4")
            if not self.r_max_mm > 0:
                raise ValueError("r_max_mm must be positive")
        elif self.kind == "cartesian":
            if self.n_x < 4 or self.n_y < 4:
                raise ValueError("cartesian grid needs n_x >= 4 and n_y >= 4")
            if not self.half_extent_mm > 0:
                raise ValueError("half_extent_mm must be positive")
        else:
            raise ValueError(f"unknown grid kind {self.kind!r}")

    @property
    def shape(self) -> tuple[int, int]:
        if self.kind == "polar":
            return (self.n_r, self.n_phi)
        return (self.n_y, self.n_x)

    @property
    def extent_mm(self) -> float:
        return self.r_max_mm if self.kind == "polar" else self.half_extent_mm

    def radii(self) -> np.ndarray:
        return _geometry(self)[0]

    def azimuths(self) -> np.ndarray:
        return _geometry(self)[1]

    def cell_areas(self) -> np.ndarray:
        return _geometry(self)[2]

    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Cartesian midpoint coordinates of every cell (works for both kinds)."""
        r, phi, _ = _geometry(self)
        return r * np.cos(phi), r * np.sin(phi)


def polar_grid(n_r: int, n_phi: int, r_max_mm: float) -> GridSpec:
    return GridSpec(kind="polar", n_r=n_r, n_phi=n_phi, r_max_mm=r_max_mm)


def cartesian_grid(n_x: int, n_y: int, half_extent_mm: float) -> GridSpec:
    return GridSpec(kind="cartesian", n_x=n_x, n_y=n_y, half_extent_mm=half_extent_mm)


@lru_cache(maxsize=64)
def _geometry(grid: GridSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(radius, azimuth, cell area) arrays of shape ``grid.shape``."""
    if grid.kind == "polar":
        dr = grid.r_max_mm / grid.n_r
        dphi = 2.0 * np.pi / grid.n_phi
        r = ((np.arange(grid.n_r) + 0.5) * dr)[:, None]
        phi = ((np.arange(grid.n_phi) + 0.5) * dphi)[None, :]
        r, phi = np.broadcast_arrays(r, phi)
        area = r * dr * dphi
    else:
        d = 2.0 * grid.half_extent_mm / np.array([grid.n_x, grid.n_y], dtype=float)
        x = (-grid.half_extent_mm + (np.arange(grid.n_x) + 0.5) * d[0])[None, :]
        # row 0 is the top of the image (largest y), matching PGM row order
        y = (grid.half_extent_mm - (np.arange(grid.n_y) + 0.5) * d[1])[:, None]
        x, y = np.broadcast_arrays(x, y)
        r = np.hypot(x, y)
        phi = np.mod(np.arctan2(y, x), 2.0 * np.pi)
        area = np.full(r.shape, d[0] * d[1])
    for a in (r, phi, area):
        a.setflags(write=False)
    return r, phi, area


@dataclass(frozen=True)
class RadialProfile:
    """Radial amplitude shape of one arm's mode, parameterized by the waist."""

    kind: str
    waist_mm: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "vortex", "flat_matched"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if not self.waist_mm > 0:
            raise ValueError("waist_mm must be positive")


def radial_amplitude(profile: RadialProfile, r) -> np.ndarray:
    """Unnormalized amplitude A(r); the vortex profile is exactly 0 at r=0."""
    r = np.asarray(r, dtype=float)
    w = profile.waist_mm
    if profile.kind == "gaussian":
        return np.exp(-((r / w) ** 2))
    if profile.kind == "vortex":
        return np.sqrt(2.0) * (r / w) * np.exp(-((r / w) ** 2))
    return np.where((r >= FLAT_INNER * w) & (r <= FLAT_OUTER * w), 1.0, 0.0)


@dataclass(frozen=True)
class TransverseField:
    """Grid of Jones vectors; ``values`` has shape ``grid.shape + (2,)``."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        expected = self.grid.shape + (2,)
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape} != {expected}")
        self.values.setflags(write=False)

    @property
    def total_prob(self) -> float:
        return float(np.sum(intensity_map(self)))

    def is_normalized(self, tol: float = NORMALIZED_TOTAL_TOL) -> bool:
        return abs(self.total_prob - 1.0) <= tol


def intensity_density(field: TransverseField) -> np.ndarray:
    """Per-cell |h|^2 + |v|^2 (probability per unit area)."""
    v = field.values
    return (v.real**2 + v.imag**2).sum(axis=-1)


def intensity_map(field: TransverseField) -> np.ndarray:
    """Per-cell probability |h|^2 + |v|^2 times cell area; sums to total_prob."""
    return intensity_density(field) * field.grid.cell_areas()


def scale(field: TransverseField, factor: complex) -> TransverseField:
    return TransverseField(field.grid, field.values * factor)


def _normalized(grid: GridSpec, values: np.ndarray) -> TransverseField:
    total = float(np.sum((values.real**2 + values.imag**2).sum(axis=-1) * grid.cell_areas()))
    if total <= 0.0:
        raise ValueError("field carries no probability; profile has no support on this grid")
    return TransverseField(grid, values / np.sqrt(total))


def make_lpsp(grid: GridSpec, profile: RadialProfile) -> TransverseField:
    """Uniformly H-polarized mode with radial amplitude A1(r), normalized."""
    if profile.kind not in ("gaussian", "flat_matched"):
        raise ValueError(f"LPSP profile must be gaussian or flat_matched, got {profile.kind!r}")
    amp = radial_amplitude(profile, grid.radii())
    values = np.zeros(grid.shape + (2,), dtype=complex)
    values[..., 0] = amp
    return _normalized(grid, values)


def make_vpsp(
    grid: GridSpec, profile: RadialProfile, qspec: QplateSpec | None = None
) -> TransverseField:
    """Vector mode: |H> pushed through the retarder at each cell's azimuth.

    The cell at azimuth phi carries polarization (cos 2chi, sin 2chi) with
    chi the local fast-axis angle, scaled by A2(r); under the default spec
    that is exactly (sin phi, cos phi).
    """
    if profile.kind not in ("vortex", "flat_matched"):
        raise ValueError(f"VPSP profile must be vortex or flat_matched, got {profile.kind!r}")
    if qspec is None:
        qspec = QplateSpec()
    amp = radial_amplitude(profile, grid.radii())
    chi = qplate_axis_angle(qspec, grid.azimuths())
    values = np.empty(grid.shape + (2,), dtype=complex)
    values[..., 0] = amp * np.cos(2.0 * chi)
    values[..., 1] = amp * np.sin(2.0 * chi)
    return _normalized(grid, values)


def mix_h_floor(field: TransverseField, epsilon: float) -> TransverseField:
    """Imperfection model: add an |H> floor to each cell's polarization.

    Each nonzero cell's unit polarization e becomes (e + epsilon*H)
    renormalized, keeping the cell's amplitude.  epsilon=0 is the identity.
    """
    if epsilon == 0.0:
        return field
    v = field.values.copy()
    amp = np.sqrt((v.real**2 + v.imag**2).sum(axis=-1))
    v[..., 0] += epsilon * amp
    new_amp = np.sqrt((v.real**2 + v.imag**2).sum(axis=-1))
    ratio = np.divide(amp, new_amp, out=np.zeros_like(amp), where=new_amp > 0)
    return TransverseField(field.grid, v * ratio[..., None])


def superpose_at_bs2(
    f1: TransverseField,
    f2: TransverseField,
    theta: float,
    convention: str = "hadamard",
) -> tuple[TransverseField, TransverseField]:
    """Recombine the two arm fields at the output beamsplitter.

    ``f1`` is the arm-1 (phase-shifted) field, ``f2`` the arm-2 field, each
    normally carrying probability 1/2.  EP1 is the port where a balanced
    empty interferometer at theta=0 puts all the light; EP2 sees the same
    fringe shifted by pi.  Under the symmetric convention the arm-2 field
    picks up i at the first splitter and each BS2 reflection adds i, which
    lands the bright port on the other matrix row; the EP1/EP2 labels track
    the physical ports, so probabilities are convention-independent.
    """
    if f1.grid != f2.grid:
        raise GridMismatchError(f"arm grids differ: {f1.grid} vs {f2.grid}")
    s = np.sqrt(2.0)
    a = np.exp(1j * theta) * f1.values
    b = f2.values
    if convention == "hadamard":
        ep1 = (a + b) / s
        ep2 = (a - b) / s
    elif convention == "symmetric":
        ep1 = 1j * (a + b) / s
        ep2 = (a - b) / s
    else:
        raise ValueError(f"unknown beamsplitter convention {convention!r}")
    return TransverseField(f1.grid, ep1), TransverseField(f1.grid, ep2)


def magnify(field: TransverseField, factor: float) -> TransverseField:
    """Relay optics: scale the grid geometry, leaving cell amplitudes alone.

    Cell probabilities are rescaled so the total is unchanged; polarization
    structure is untouched.
    """
    if not factor > 0:
        raise ValueError("magnification must be positive")
    g = field.grid
    if g.kind == "polar":
        new = polar_grid(g.n_r, g.n_phi, g.r_max_mm * factor)
    else:
        new = cartesian_grid(g.n_x, g.n_y, g.half_extent_mm * factor)
    return TransverseField(new, field.values / factor)


def field_to_csv(field: TransverseField, path: str | Path) -> Path:
    """Flat per-cell CSV: coordinates, |h|^2, |v|^2, and their sum."""
    r = field.grid.radii().ravel()
    phi = field.grid.azimuths().ravel()
    h2 = np.abs(field.values[..., 0]).ravel() ** 2
    v2 = np.abs(field.values[..., 1]).ravel() ** 2
    total = h2 + v2
    if field.grid.kind == "polar":
        header = ["r_mm", "phi_rad", "h2", "v2", "total"]
        cols = (r, phi, h2, v2, total)
    else:
        x, y = field.grid.xy()
        header = ["x_mm", "y_mm", "phi_rad", "h2", "v2", "total"]
        cols = (x.ravel(), y.ravel(), phi, h2, v2, total)
    return write_csv(path, header, zip(*cols))


def field_to_pgm(field: TransverseField, path: str | Path) -> Path:
    """16-bit PGM of the intensity density, peak scaled to full range."""
    return write_pgm16(intensity_density(field), path)
