"""Photon-level Monte Carlo: attenuated-source trials, fiber detectors with
finite apertures, coincidence counting, and EMCCD frame accumulation.

Every stochastic routine is driven by substreams derived from (master seed,
structural indices), so results are bit-identical for a given seed no matter
how trials are chunked or threaded.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import OutOfRegimeError, UnnormalizedFieldError, ValidationError
from .field import GridSpec, TransverseField, intensity_map
from .interferometer import FringeFit, MziConfig, fit_fringe, run_mzi
from .io import write_csv, write_pgm16

COINCIDENCE_REGIME_LIMIT = 0.1
DEFAULT_CHUNK_TRIALS = 1_000_000


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one structural slot of a seeded run."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


@dataclass(frozen=True)
class DetectorSpec:
    """Fiber-coupled point detector: a disk aperture at one transverse spot.

    An infinite aperture radius means bucket detection of the whole port.
    """

    port: str
    center_r_mm: float
    center_phi_rad: float
    aperture_radius_mm: float
    quantum_efficiency: float = 1.0

    def __post_init__(self) -> None:
        if self.port not in ("EP1", "EP2"):
            raise ValueError(f"unknown port {self.port!r}")
        if not self.aperture_radius_mm > 0:
            raise ValueError("aperture_radius_mm must be positive")
        if not 0.0 < self.quantum_efficiency <= 1.0:
            raise ValueError("quantum_efficiency must be in (0, 1]")

    @property
    def whole_port(self) -> bool:
        return np.isinf(self.aperture_radius_mm)

    def validate_against(self, grid: GridSpec) -> None:
        """The aperture disk must lie inside the grid extent."""
        if self.whole_port:
            return
        cx = self.center_r_mm * np.cos(self.center_phi_rad)
        cy = self.center_r_mm * np.sin(self.center_phi_rad)
        a = self.aperture_radius_mm
        if grid.kind == "polar":
            ok = self.center_r_mm + a <= grid.r_max_mm
        else:
            h = grid.half_extent_mm
            ok = abs(cx) + a <= h and abs(cy) + a <= h
        if not ok:
            raise ValidationError(
                f"detector {self.port} aperture (center r={self.center_r_mm} mm, "
                f"phi={self.center_phi_rad} rad, radius={a} mm) extends outside the grid"
            )


def aperture_mask(det: DetectorSpec, grid: GridSpec) -> np.ndarray:
    """Boolean grid of cells whose midpoint falls inside the aperture disk."""
    if det.whole_port:
        return np.ones(grid.shape, dtype=bool)
    x, y = grid.xy()
    cx = det.center_r_mm * np.cos(det.center_phi_rad)
    cy = det.center_r_mm * np.sin(det.center_phi_rad)
    return (x - cx) ** 2 + (y - cy) ** 2 <= det.aperture_radius_mm**2


def full_port_detector(port: str, grid: GridSpec, quantum_efficiency: float = 1.0) -> DetectorSpec:
    """Detector whose aperture covers the whole grid (bucket detection)."""
    return DetectorSpec(
        port=port,
        center_r_mm=0.0,
        center_phi_rad=0.0,
        aperture_radius_mm=float("inf"),
        quantum_efficiency=quantum_efficiency,
    )


@dataclass(frozen=True)
class EmccdSpec:
    """Imaging detector: frames of aggregated trials with dark counts."""

    n_frames: int = 1
    exposure_trials_per_frame: int = 1
    dark_counts_per_pixel_per_frame: float = 0.0
    quantum_efficiency: float = 1.0

    def __post_init__(self) -> None:
        if self.n_frames < 1 or self.exposure_trials_per_frame < 1:
            raise ValueError("n_frames and exposure_trials_per_frame must be >= 1")
        if self.dark_counts_per_pixel_per_frame < 0:
            raise ValueError("dark count rate must be >= 0")
        if not 0.0 < self.quantum_efficiency <= 1.0:
            raise ValueError("quantum_efficiency must be in (0, 1]")


@dataclass(frozen=True)
class CountRecord:
    """Counts for one sweep point, plus per-photon bookkeeping totals."""

    theta: float
    singles_ep1: int
    singles_ep2: int
    coincidences: int
    n_trials: int
    seed: int
    photons_drawn: int = 0
    photons_detected_ep1: int = 0
    photons_detected_ep2: int = 0
    photons_lost_qe: int = 0
    photons_out_of_aperture: int = 0


def count_records_to_csv(records: list[CountRecord], path: str | Path) -> Path:
    header = ["theta", "singles_ep1", "singles_ep2", "coincidences", "n_trials", "seed"]
    rows = (
        (r.theta, r.singles_ep1, r.singles_ep2, r.coincidences, r.n_trials, r.seed)
        for r in records
    )
    return write_csv(path, header, rows)


def sample_trial_photons(mu: float, rng: np.random.Generator) -> int:
    """Photon number for one source trial: Poisson(mu)."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    return int(rng.poisson(mu))


def calibrate_mu(target_ratio: float) -> float:
    """Mean photon number that yields the requested coincidence-to-singles ratio.

    In the small-mu limit both detectors fire with probability ~(mu/2)^2 per
    trial while each fires with ~mu/2, so the ratio is mu/2.
    """
    if not target_ratio > 0:
        raise OutOfRegimeError(f"target ratio must be positive, got {target_ratio!r}")
    if target_ratio >= COINCIDENCE_REGIME_LIMIT:
        raise OutOfRegimeError(
            f"target ratio {target_ratio} is outside the small-mu regime "
            f"(must be < {COINCIDENCE_REGIME_LIMIT})"
        )
    return 2.0 * target_ratio


class PhotonRouter:
    """Samples (port, cell) landing sites from a normalized port-field pair."""

    def __init__(self, ep1: TransverseField, ep2: TransverseField, tol: float = 1e-9):
        total = ep1.total_prob + ep2.total_prob
        if abs(total - 1.0) > tol:
            raise UnnormalizedFieldError(
                f"port fields carry total probability {total}, expected 1 +/- {tol}"
            )
        self.grid = ep1.grid
        self.n_cells = int(np.prod(self.grid.shape))
        probs = np.concatenate([intensity_map(ep1).ravel(), intensity_map(ep2).ravel()])
        probs = np.clip(probs, 0.0, None)
        probs /= probs.sum()
        self._cum = np.cumsum(probs)
        self._cum[-1] = 1.0
        self.prob_ep1 = float(probs[: self.n_cells].sum())

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Draw n landing sites; returns (port indices 0/1, flat cell indices)."""
        idx = np.searchsorted(self._cum, rng.random(n), side="right")
        ports = (idx >= self.n_cells).astype(np.uint8)
        cells = idx - ports.astype(np.int64) * self.n_cells
        return ports, cells


def route_photon(
    ep1: TransverseField, ep2: TransverseField, rng: np.random.Generator
) -> tuple[str, tuple[int, int]]:
    """Collapse one photon to an exit port and a transverse cell."""
    ports, cells = PhotonRouter(ep1, ep2).sample(1, rng)
    port = "EP1" if ports[0] == 0 else "EP2"
    return port, tuple(int(i) for i in np.unravel_index(cells[0], ep1.grid.shape))


def _sweep_point(
    router: PhotonRouter,
    masks: tuple[np.ndarray, np.ndarray],
    qes: tuple[float, float],
    theta: float,
    mu: float,
    n_trials: int,
    seed: int,
    stream_key: tuple[int, ...],
    theta_idx: int,
    chunk_trials: int,
) -> CountRecord:
    singles = [0, 0]
    coinc = 0
    drawn = detected1 = detected2 = lost_qe = out_ap = 0
    n_chunks = (n_trials + chunk_trials - 1) // chunk_trials
    for ci in range(n_chunks):
        size = min(chunk_trials, n_trials - ci * chunk_trials)
        rng = substream(seed, *stream_key, theta_idx, ci)
        counts = rng.poisson(mu, size)
        drawn += int(counts.sum())
        nz = np.flatnonzero(counts)
        if nz.size == 0:
            continue
        k = counts[nz]
        tot = int(k.sum())
        ports, cells = router.sample(tot, rng)
        u_qe = rng.random(tot)
        trial = np.repeat(nz, k)
        in1 = (ports == 0) & masks[0][cells]
        in2 = (ports == 1) & masks[1][cells]
        det1 = in1 & (u_qe < qes[0])
        det2 = in2 & (u_qe < qes[1])
        detected1 += int(det1.sum())
        detected2 += int(det2.sum())
        lost_qe += int((in1 & ~det1).sum() + (in2 & ~det2).sum())
        out_ap += int(tot - in1.sum() - in2.sum())
        fires1 = np.zeros(size, dtype=bool)
        fires2 = np.zeros(size, dtype=bool)
        fires1[trial[det1]] = True
        fires2[trial[det2]] = True
        singles[0] += int(fires1.sum())
        singles[1] += int(fires2.sum())
        coinc += int((fires1 & fires2).sum())
    return CountRecord(
        theta=theta,
        singles_ep1=singles[0],
        singles_ep2=singles[1],
        coincidences=coinc,
        n_trials=n_trials,
        seed=seed,
        photons_drawn=drawn,
        photons_detected_ep1=detected1,
        photons_detected_ep2=detected2,
        photons_lost_qe=lost_qe,
        photons_out_of_aperture=out_ap,
    )


def mmf_sweep(
    config: MziConfig,
    det_ep1: DetectorSpec,
    det_ep2: DetectorSpec,
    theta_axis,
    mu: float,
    n_trials: int,
    seed: int,
    stream_key: tuple[int, ...] = (),
    chunk_trials: int = DEFAULT_CHUNK_TRIALS,
    threads: int = 1,
) -> list[CountRecord]:
    """Count detector hits and coincidences across a phase sweep.

    For every theta, ``n_trials`` source trials each emit Poisson(mu)
    photons; each photon collapses to a port and cell, must land in that
    port's aperture disk, and survives quantum-efficiency thinning.  A
    detector "fires" on a trial when at least one photon survives; a
    coincidence is a trial where both fire.  Counts merge as plain integer
    sums over fixed-size chunks with per-(theta, chunk) substreams, so the
    thread count never changes the result.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    for det, port in ((det_ep1, "EP1"), (det_ep2, "EP2")):
        if det.port != port:
            raise ValueError(f"detector for {port} has port={det.port!r}")
        det.validate_against(config.grid)
    theta_axis = np.asarray(theta_axis, dtype=float)
    qes = (det_ep1.quantum_efficiency, det_ep2.quantum_efficiency)

    def one(theta_idx: int) -> CountRecord:
        theta = float(theta_axis[theta_idx])
        ep1, ep2 = run_mzi(replace(config, theta=theta))
        router = PhotonRouter(ep1, ep2)
        masks = (
            aperture_mask(det_ep1, config.grid).ravel(),
            aperture_mask(det_ep2, config.grid).ravel(),
        )
        return _sweep_point(
            router, masks, qes, theta, mu, n_trials, seed, stream_key, theta_idx, chunk_trials
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(theta_axis.size)))
    return [one(i) for i in range(theta_axis.size)]


def emccd_accumulate(
    config: MziConfig,
    spec: EmccdSpec,
    port: str,
    mu: float,
    seed: int,
    stream_key: tuple[int, ...] = (),
) -> np.ndarray:
    """Accumulated photon-count frame for one port at the configured phase.

    Each frame aggregates its trials: the photon number is
    Poisson(mu * exposure_trials_per_frame), every photon collapses to a
    port and pixel, photons in the imaged port are thinned by the quantum
    efficiency, and Poisson dark counts are added per pixel.  Frames sum
    into one integer grid.
    """
    if port not in ("EP1", "EP2"):
        raise ValueError(f"unknown port {port!r}")
    if not mu > 0:
        raise ValueError("mu must be positive")
    ep1, ep2 = run_mzi(config)
    router = PhotonRouter(ep1, ep2)
    want = 0 if port == "EP1" else 1
    shape = config.grid.shape
    frame = np.zeros(shape, dtype=np.int64)
    for fi in range(spec.n_frames):
        rng = substream(seed, *stream_key, fi)
        n = int(rng.poisson(mu * spec.exposure_trials_per_frame))
        if n > 0:
            ports, cells = router.sample(n, rng)
            u_qe = rng.random(n)
            mine = cells[(ports == want) & (u_qe < spec.quantum_efficiency)]
            frame += np.bincount(mine, minlength=frame.size).reshape(shape)
        if spec.dark_counts_per_pixel_per_frame > 0:
            frame += rng.poisson(spec.dark_counts_per_pixel_per_frame, size=shape)
    return frame


def frame_to_pgm(
    frame: np.ndarray,
    grid: GridSpec,
    theta: float,
    seed: int,
    spec_hash: str,
    path: str | Path,
) -> tuple[Path, Path]:
    """Write an accumulated frame as 16-bit PGM plus a key=value sidecar."""
    path = write_pgm16(frame, path)
    meta = path.with_suffix(".meta.toml")
    lines = [
        f"theta_rad = {theta!r}",
        f"seed = {seed}",
        f'spec_hash = "{spec_hash}"',
        f"peak_value = {int(np.max(frame))}",
        f'grid_kind = "{grid.kind}"',
    ]
    if grid.kind == "polar":
        lines += [
            f"n_r = {grid.n_r}",
            f"n_phi = {grid.n_phi}",
            f"r_max_mm = {grid.r_max_mm!r}",
        ]
    else:
        lines += [
            f"n_x = {grid.n_x}",
            f"n_y = {grid.n_y}",
            f"half_extent_mm = {grid.half_extent_mm!r}",
        ]
    meta.write_text("\n".join(lines) + "\n")
    return path, meta


@dataclass(frozen=True)
class VisibilityRow:
    phi: float
    visibility: float
    stderr: float


def experimental_visibility_suite(
    config: MziConfig,
    detector_phis=(0.0, np.pi / 4, np.pi / 2),
    *,
    detector_r_mm: float = 1.0,
    aperture_radius_mm: float = 0.3,
    quantum_efficiency: float = 0.9,
    theta_axis=None,
    mu: float = 0.08,
    n_trials: int = 1_000_000,
    seed: int = 0,
    threads: int = 1,
) -> list[VisibilityRow]:
    """Fringe visibility vs detector azimuth from Monte Carlo phase sweeps.

    Places an aperture-limited detector pair (one per port) at each azimuth,
    sweeps theta, and fits the EP1 counts with a cosine.  With the ideal
    config the fitted visibilities track |sin phi| up to the small aperture
    averaging; imperfections (epsilon_h_floor) shift them the way a finite
    polarization contrast would.
    """
    if theta_axis is None:
        theta_axis = np.linspace(0.0, 2.0 * np.pi, 24, endpoint=False)
    rows = []
    for k, phi_d in enumerate(detector_phis):
        det1 = DetectorSpec("EP1", detector_r_mm, phi_d, aperture_radius_mm, quantum_efficiency)
        det2 = DetectorSpec("EP2", detector_r_mm, phi_d, aperture_radius_mm, quantum_efficiency)
        records = mmf_sweep(
            config,
            det1,
            det2,
            theta_axis,
            mu,
            n_trials,
            seed,
            stream_key=(k,),
            threads=threads,
        )
        fit: FringeFit = fit_fringe(
            [r.theta for r in records], [r.singles_ep1 for r in records]
        )
        rows.append(
            VisibilityRow(phi=float(phi_d), visibility=fit.visibility, stderr=fit.visibility_stderr)
        )
    return rows
