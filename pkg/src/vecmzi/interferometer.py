"""Full interferometer composition, the closed-form fringe law, and analysis ops.

The per-point detection law combines the phase-shifted H reference arm with
the azimuth-tagged arm: conditioned on a photon arriving at azimuth phi, it
exits EP1 with probability (1 + sin phi cos theta)/2 and EP2 with the
complement.  Everything else here is built on, or checked against, that law.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .elements import BS_CONVENTIONS, QplateSpec
from .errors import AnnulusOutsideGridError, DegenerateFitError
from .field import (
    GridSpec,
    RadialProfile,
    TransverseField,
    make_lpsp,
    make_vpsp,
    mix_h_floor,
    polar_grid,
    scale,
    superpose_at_bs2,
)
from .io import write_csv

PORTS = ("EP1", "EP2")


def _default_grid() -> GridSpec:
    return polar_grid(96, 256, 2.0)


@dataclass(frozen=True)
class MziConfig:
    """One interferometer setting: arm phase, retarder, profiles, grid.

    ``qspec=None`` removes the retarder, leaving both arms H-polarized.
    ``epsilon_h_floor`` mixes an |H> floor into the arm-2 polarization
    (imperfection model; 0 = ideal).
    """

    theta: float = 0.0
    qspec: QplateSpec | None = dc_field(default_factory=QplateSpec)
    profiles: tuple[RadialProfile, RadialProfile] = (
        RadialProfile("flat_matched"),
        RadialProfile("flat_matched"),
    )
    grid: GridSpec = dc_field(default_factory=_default_grid)
    bs_convention: str = "hadamard"
    epsilon_h_floor: float = 0.0

    def __post_init__(self) -> None:
        if self.bs_convention not in BS_CONVENTIONS:
            raise ValueError(f"unknown beamsplitter convention {self.bs_convention!r}")


def analytic_prob(theta: float, phi: float, port: str = "EP1") -> float:
    """Conditional probability that a photon at azimuth phi exits ``port``.

    EP2 is computed as 1 - EP1 so the two ports sum to exactly 1.
    """
    p1 = 0.5 * (1.0 + np.sin(phi) * np.cos(theta))
    if port == "EP1":
        return float(p1)
    if port == "EP2":
        return float(1.0 - p1)
    raise ValueError(f"unknown port {port!r}; use 'EP1' or 'EP2'")


def run_mzi(config: MziConfig) -> tuple[TransverseField, TransverseField]:
    """Propagate a single photon through the interferometer.

    The input splits into two arms of weight 1/2; arm 1 keeps |H> with
    profile A1 and gets the phase theta, arm 2 goes through the retarder
    with profile A2.  Returns the two exit-port fields, whose total
    probabilities sum to 1.
    """
    p1, p2 = config.profiles
    arm1 = scale(make_lpsp(config.grid, p1), 1.0 / np.sqrt(2.0))
    if config.qspec is None:
        arm2 = make_lpsp(config.grid, p2)
    else:
        arm2 = make_vpsp(config.grid, p2, config.qspec)
    if config.epsilon_h_floor:
        arm2 = mix_h_floor(arm2, config.epsilon_h_floor)
    arm2 = scale(arm2, 1.0 / np.sqrt(2.0))
    return superpose_at_bs2(arm1, arm2, config.theta, config.bs_convention)


def mzi_point_probability(
    theta: float,
    phi: float,
    port: str = "EP1",
    qspec: QplateSpec | None = None,
    bs_convention: str = "hadamard",
) -> float:
    """Exit probability at one transverse point by composing the elements.

    Walks a unit H amplitude through BS1, the phase shifter and retarder,
    the arm mirrors, and BS2, then conditions on the point.  This is an
    independent route to the same number as :func:`analytic_prob` (for the
    default retarder) and is what a noiseless point-detector sweep sees.
    """
    from .elements import bs_5050, mirror, phase_shift, qplate_operator

    if port not in PORTS:
        raise ValueError(f"unknown port {port!r}")
    arm1, arm2 = bs_5050(np.array([1.0, 0.0], dtype=complex), np.zeros(2), bs_convention)
    arm1 = mirror(phase_shift(arm1, theta))
    if qspec is None:
        qspec = QplateSpec()
    arm2 = mirror(qplate_operator(qspec, phi) @ arm2)
    out1, out2 = bs_5050(arm1, arm2, bs_convention)
    if bs_convention == "symmetric":
        # the bright port of the balanced interferometer lands on the other
        # matrix row under the i-on-reflection convention
        out1, out2 = out2, out1
    p1 = float((np.abs(out1) ** 2).sum())
    p2 = float((np.abs(out2) ** 2).sum())
    total = p1 + p2
    cond = p1 / total
    return cond if port == "EP1" else 1.0 - cond


def port_probability_map(ep1: TransverseField, ep2: TransverseField) -> np.ndarray:
    """Per-cell conditional probability of exiting EP1, NaN where no light."""
    i1 = (ep1.values.real**2 + ep1.values.imag**2).sum(axis=-1)
    i2 = (ep2.values.real**2 + ep2.values.imag**2).sum(axis=-1)
    total = i1 + i2
    out = np.full(total.shape, np.nan)
    np.divide(i1, total, out=out, where=total > 0)
    return out


def visibility_ideal(phi: float) -> float:
    """Fringe contrast of the ideal law at azimuth phi: |sin phi|."""
    return float(abs(np.sin(phi)))


@dataclass(frozen=True)
class MorphMap:
    """Detection probability over a (theta, phi) lattice for one port."""

    theta_axis: np.ndarray
    phi_axis: np.ndarray
    values: np.ndarray  # shape (len(theta_axis), len(phi_axis))
    port: str = "EP1"


def morph_map(theta_axis, phi_axis, port: str = "EP1") -> MorphMap:
    """Tabulate the fringe law over the lattice; rows sweep theta."""
    theta = np.asarray(theta_axis, dtype=float)
    phi = np.asarray(phi_axis, dtype=float)
    for name, ax in (("theta_axis", theta), ("phi_axis", phi)):
        if ax.size == 0:
            raise ValueError(f"{name} must be non-empty")
        if np.any(np.diff(ax) < 0):
            raise ValueError(f"{name} must be sorted ascending")
    if port not in PORTS:
        raise ValueError(f"unknown port {port!r}")
    p1 = 0.5 * (1.0 + np.sin(phi)[None, :] * np.cos(theta)[:, None])
    values = p1 if port == "EP1" else 1.0 - p1
    return MorphMap(theta_axis=theta, phi_axis=phi, values=values, port=port)


def morph_to_csv(m: MorphMap, path: str | Path) -> Path:
    rows = (
        (m.theta_axis[i], m.phi_axis[j], m.values[i, j])
        for i in range(m.theta_axis.size)
        for j in range(m.phi_axis.size)
    )
    return write_csv(path, ["theta", "phi", "prob"], rows)


@dataclass(frozen=True)
class RingBin:
    """One azimuthal sector of a ring scan; empty sectors are never emitted."""

    phi_center: float
    mean_intensity: float
    n_cells: int


def ring_scan(
    frame: np.ndarray, grid: GridSpec, r0: float, dr: float, n_bins: int
) -> list[RingBin]:
    """Mean frame value per azimuthal sector of the annulus [r0-dr/2, r0+dr/2].

    ``frame`` is any per-cell scalar grid (an intensity map, an accumulated
    count frame).  Sector k is centered on azimuth k*2pi/n_bins, so the
    cardinal directions sit at bin centers.  Sectors containing no cells are
    omitted from the result.
    """
    if not (r0 > 0 and dr > 0):
        raise ValueError("r0 and dr must be positive")
    if n_bins < 4:
        raise ValueError("n_bins must be at least 4")
    if r0 - dr / 2.0 < 0:
        raise AnnulusOutsideGridError(f"annulus inner edge {r0 - dr / 2.0} below r=0")
    if r0 + dr / 2.0 > grid.extent_mm:
        raise AnnulusOutsideGridError(
            f"annulus outer edge {r0 + dr / 2.0} exceeds grid extent {grid.extent_mm}"
        )
    frame = np.asarray(frame)
    if frame.shape != grid.shape:
        raise ValueError(f"frame shape {frame.shape} does not match grid {grid.shape}")
    r = grid.radii().ravel()
    phi = grid.azimuths().ravel()
    vals = frame.ravel()
    in_ring = np.abs(r - r0) <= dr / 2.0
    width = 2.0 * np.pi / n_bins
    idx = np.rint(phi[in_ring] / width).astype(int) % n_bins
    ring_vals = vals[in_ring]
    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=ring_vals, minlength=n_bins)
    out = []
    for k in range(n_bins):
        if counts[k] == 0:
            continue
        out.append(RingBin(k * width, float(sums[k] / counts[k]), int(counts[k])))
    return out


def ring_scan_to_csv(bins: list[RingBin], path: str | Path) -> Path:
    rows = ((b.phi_center, b.mean_intensity, b.n_cells) for b in bins)
    return write_csv(path, ["phi", "intensity", "n_pixels"], rows)


@dataclass(frozen=True)
class FringeFit:
    """Least-squares fit of a + b*cos(theta + delta) to a measured sweep."""

    offset: float
    amplitude: float
    phase: float
    visibility: float
    visibility_stderr: float


def fit_fringe(thetas, intensities) -> FringeFit:
    """Fit a + b*cos(theta + delta); visibility is |b|/a.

    Solved linearly via a + c*cos(theta) + d*sin(theta).  The visibility
    standard error comes from the residual covariance (delta method); it is
    NaN when there are no spare degrees of freedom.
    """
    theta = np.asarray(thetas, dtype=float)
    y = np.asarray(intensities, dtype=float)
    if theta.shape != y.shape or theta.ndim != 1:
        raise ValueError("thetas and intensities must be matching 1D sequences")
    if theta.size < 5:
        raise ValueError(f"need at least 5 samples, got {theta.size}")
    if np.ptp(theta) == 0.0:
        raise DegenerateFitError("all sweep phases are equal; fringe is unconstrained")
    design = np.column_stack([np.ones_like(theta), np.cos(theta), np.sin(theta)])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3:
        raise DegenerateFitError("sweep phases do not span a fringe period")
    a, c, d = (float(v) for v in coef)
    b = float(np.hypot(c, d))
    delta = float(np.arctan2(-d, c))
    if a <= 0.0:
        raise DegenerateFitError(f"non-positive fringe offset a={a}")
    vis = b / a
    dof = theta.size - 3
    stderr = float("nan")
    if dof > 0:
        resid = y - design @ coef
        s2 = float(resid @ resid) / dof
        cov = s2 * np.linalg.inv(design.T @ design)
        if b > 0.0:
            grad = np.array([-b / a**2, c / (a * b), d / (a * b)])
        else:
            grad = np.array([0.0, 1.0 / a, 1.0 / a])
        stderr = float(np.sqrt(max(0.0, grad @ cov @ grad)))
    return FringeFit(offset=a, amplitude=b, phase=delta, visibility=vis, visibility_stderr=stderr)
