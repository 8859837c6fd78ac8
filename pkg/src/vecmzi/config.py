"""Scenario config files: TOML parsing and pre-run validation.

Configs are structured key-value text with nested sections; every physical
quantity carries its unit in the key name (``r_max_mm``, ``theta_start_rad``).
A mandatory integer ``seed`` keeps every run reproducible; there is no
wall-clock fallback.
"""
from __future__ import annotations

import sys
import warnings
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .detection import DetectorSpec, EmccdSpec
from .elements import SINGLE_PHOTON_MU_LIMIT, BS_CONVENTIONS, QplateSpec, SourceSpec
from .errors import ConfigError, ValidationError
from .field import GridSpec, RadialProfile, cartesian_grid, polar_grid
from .interferometer import MziConfig

SCENARIOS = (
    "fringe_sweep",
    "morph_map",
    "emccd_frames",
    "visibility_suite",
    "coincidence_check",
)

TWO_PI = 2.0 * np.pi


@dataclass
class SweepSpec:
    theta_start_rad: float = 0.0
    theta_stop_rad: float = TWO_PI
    n_theta: int = 24
    endpoint: bool = False
    n_trials: int = 1_000_000

    def axis(self) -> np.ndarray:
        return np.linspace(
            self.theta_start_rad, self.theta_stop_rad, self.n_theta, endpoint=self.endpoint
        )


@dataclass
class DetectorBank:
    phis_rad: list[float] = dc_field(default_factory=lambda: [0.0, np.pi / 2])
    r_mm: float = 1.0
    aperture_radius_mm: float = 0.3
    quantum_efficiency: float = 0.9

    def pair_at(self, phi: float) -> tuple[DetectorSpec, DetectorSpec]:
        mk = lambda port: DetectorSpec(
            port, self.r_mm, float(phi), self.aperture_radius_mm, self.quantum_efficiency
        )
        return mk("EP1"), mk("EP2")


@dataclass
class RingSpec:
    r0_mm: float = 1.0
    dr_mm: float = 0.3
    n_bins: int = 64


@dataclass
class MorphSpec:
    theta_start_rad: float = 0.0
    theta_stop_rad: float = TWO_PI
    n_theta: int = 65
    phi_start_rad: float = 0.0
    phi_stop_rad: float = TWO_PI
    n_phi: int = 65
    port: str = "EP1"

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.linspace(self.theta_start_rad, self.theta_stop_rad, self.n_theta),
            np.linspace(self.phi_start_rad, self.phi_stop_rad, self.n_phi),
        )


@dataclass
class CoincidenceSpec:
    target_ratio: float = 1.83e-3
    n_trials: int = 10_000_000
    quantum_efficiency: float = 1.0


@dataclass
class EmccdScenario:
    spec: EmccdSpec
    port: str = "EP1"
    gallery_thetas_rad: list[float] = dc_field(default_factory=list)


@dataclass
class ScenarioConfig:
    """Fully parsed scenario: what to simulate, with what knobs, and the seed."""

    scenario: str
    seed: int
    mzi: MziConfig
    mu: float | None = None
    sweep: SweepSpec = dc_field(default_factory=SweepSpec)
    detectors: DetectorBank = dc_field(default_factory=DetectorBank)
    ring: RingSpec = dc_field(default_factory=RingSpec)
    morph: MorphSpec = dc_field(default_factory=MorphSpec)
    coincidence: CoincidenceSpec = dc_field(default_factory=CoincidenceSpec)
    emccd: EmccdScenario | None = None
    out_dir: str | None = None
    source_path: Path | None = None
    source_bytes: bytes = b""


def _section(table: dict, name: str) -> dict:
    sub = table.get(name, {})
    if not isinstance(sub, dict):
        raise ConfigError(f"section [{name}] must be a table")
    return sub


def _get(table: dict, key: str, kind, default=None, required: bool = False, where: str = ""):
    if key not in table:
        if required:
            raise ConfigError(f"missing required key {key!r}{f' in [{where}]' if where else ''}")
        return default
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"key {key!r} must be {kind.__name__}, got {type(value).__name__}")
    return value


def _parse_grid(table: dict) -> GridSpec:
    sec = _section(table, "grid")
    kind = _get(sec, "kind", str, "polar")
    try:
        if kind == "polar":
            return polar_grid(
                _get(sec, "n_r", int, 96),
                _get(sec, "n_phi", int, 256),
                _get(sec, "r_max_mm", float, 2.0),
            )
        if kind == "cartesian":
            return cartesian_grid(
                _get(sec, "n_x", int, 192),
                _get(sec, "n_y", int, 192),
                _get(sec, "half_extent_mm", float, 2.0),
            )
    except ValueError as exc:
        raise ConfigError(f"invalid [grid]: {exc}") from exc
    raise ConfigError(f"unknown grid kind {kind!r}")


def _parse_mzi(table: dict) -> MziConfig:
    grid = _parse_grid(table)
    prof = _section(table, "profiles")
    waist = _get(prof, "waist_mm", float, 1.0)
    try:
        profiles = (
            RadialProfile(_get(prof, "arm1", str, "flat_matched"), waist),
            RadialProfile(_get(prof, "arm2", str, "flat_matched"), waist),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid [profiles]: {exc}") from exc
    qp = _section(table, "qplate")
    qspec = None
    if _get(qp, "enabled", bool, True):
        try:
            qspec = QplateSpec(
                q=_get(qp, "q", float, 0.5),
                alpha0=_get(qp, "alpha0_rad", float, float(np.pi / 4)),
                handedness=_get(qp, "handedness", str, "minus"),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid [qplate]: {exc}") from exc
    mzi = _section(table, "mzi")
    convention = _get(mzi, "bs_convention", str, "hadamard")
    if convention not in BS_CONVENTIONS:
        raise ConfigError(f"unknown bs_convention {convention!r}")
    return MziConfig(
        theta=_get(mzi, "theta_rad", float, 0.0),
        qspec=qspec,
        profiles=profiles,
        grid=grid,
        bs_convention=convention,
        epsilon_h_floor=_get(mzi, "epsilon_h_floor", float, 0.0),
    )


def load_config(path: str | Path) -> ScenarioConfig:
    """Parse a scenario TOML file; raises ConfigError on any structural problem."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        table = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    scenario = _get(table, "scenario", str, required=True)
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    seed = _get(table, "seed", int, required=True)

    mzi = _parse_mzi(table)
    src = _section(table, "source")
    mu = _get(src, "mu", float, None)

    sw = _section(table, "sweep")
    sweep = SweepSpec(
        theta_start_rad=_get(sw, "theta_start_rad", float, 0.0),
        theta_stop_rad=_get(sw, "theta_stop_rad", float, TWO_PI),
        n_theta=_get(sw, "n_theta", int, 24),
        endpoint=_get(sw, "endpoint", bool, False),
        n_trials=_get(sw, "n_trials", int, 1_000_000),
    )

    det = _section(table, "detectors")
    phis = det.get("phis_rad", [0.0, float(np.pi / 2)])
    if not isinstance(phis, list) or not all(isinstance(p, (int, float)) for p in phis):
        raise ConfigError("detectors.phis_rad must be a list of numbers")
    detectors = DetectorBank(
        phis_rad=[float(p) for p in phis],
        r_mm=_get(det, "r_mm", float, 1.0),
        aperture_radius_mm=_get(det, "aperture_radius_mm", float, 0.3),
        quantum_efficiency=_get(det, "quantum_efficiency", float, 0.9),
    )

    rg = _section(table, "ring")
    ring = RingSpec(
        r0_mm=_get(rg, "r0_mm", float, 1.0),
        dr_mm=_get(rg, "dr_mm", float, 0.3),
        n_bins=_get(rg, "n_bins", int, 64),
    )

    mo = _section(table, "morph")
    morph = MorphSpec(
        theta_start_rad=_get(mo, "theta_start_rad", float, 0.0),
        theta_stop_rad=_get(mo, "theta_stop_rad", float, TWO_PI),
        n_theta=_get(mo, "n_theta", int, 65),
        phi_start_rad=_get(mo, "phi_start_rad", float, 0.0),
        phi_stop_rad=_get(mo, "phi_stop_rad", float, TWO_PI),
        n_phi=_get(mo, "n_phi", int, 65),
        port=_get(mo, "port", str, "EP1"),
    )

    co = _section(table, "coincidence")
    coincidence = CoincidenceSpec(
        target_ratio=_get(co, "target_ratio", float, 1.83e-3),
        n_trials=_get(co, "n_trials", int, 10_000_000),
        quantum_efficiency=_get(co, "quantum_efficiency", float, 1.0),
    )

    emccd = None
    if "emccd" in table:
        em = _section(table, "emccd")
        try:
            spec = EmccdSpec(
                n_frames=_get(em, "n_frames", int, 1),
                exposure_trials_per_frame=_get(em, "exposure_trials_per_frame", int, 1_000_000),
                dark_counts_per_pixel_per_frame=_get(
                    em, "dark_counts_per_pixel_per_frame", float, 0.0
                ),
                quantum_efficiency=_get(em, "quantum_efficiency", float, 0.9),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid [emccd]: {exc}") from exc
        gallery = em.get("gallery_thetas_rad", [])
        if not isinstance(gallery, list):
            raise ConfigError("emccd.gallery_thetas_rad must be a list")
        emccd = EmccdScenario(
            spec=spec,
            port=_get(em, "port", str, "EP1"),
            gallery_thetas_rad=[float(t) for t in gallery],
        )

    return ScenarioConfig(
        scenario=scenario,
        seed=seed,
        mzi=mzi,
        mu=mu,
        sweep=sweep,
        detectors=detectors,
        ring=ring,
        morph=morph,
        coincidence=coincidence,
        emccd=emccd,
        out_dir=_get(table, "out_dir", str, None),
        source_path=path,
        source_bytes=raw,
    )


def validate_config(cfg: ScenarioConfig) -> tuple[list[str], list[str]]:
    """Check every invariant without running; returns (violations, warnings)."""
    violations: list[str] = []
    warn: list[str] = []

    needs_source = cfg.scenario in ("fringe_sweep", "emccd_frames", "visibility_suite")
    mu = cfg.mu
    if needs_source and mu is None:
        violations.append("scenario requires [source] mu")
    if mu is not None:
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                SourceSpec(mu)
            for w in caught:
                warn.append(str(w.message))
        except ValueError as exc:
            violations.append(f"[source] {exc}")

    if cfg.scenario in ("fringe_sweep", "visibility_suite"):
        if cfg.sweep.n_theta < 5:
            violations.append("sweep.n_theta must be >= 5 for a fringe fit")
        if cfg.sweep.n_trials < 1:
            violations.append("sweep.n_trials must be >= 1")
        if not cfg.detectors.phis_rad:
            violations.append("detectors.phis_rad must not be empty")
        for k, phi in enumerate(cfg.detectors.phis_rad):
            try:
                d1, d2 = cfg.detectors.pair_at(phi)
                d1.validate_against(cfg.mzi.grid)
                d2.validate_against(cfg.mzi.grid)
            except (ValueError, ValidationError) as exc:
                violations.append(f"detector #{k} at phi={phi}: {exc}")

    if cfg.scenario == "emccd_frames":
        if cfg.emccd is None:
            violations.append("emccd_frames scenario requires an [emccd] section")
        elif cfg.emccd.port not in ("EP1", "EP2"):
            violations.append(f"emccd.port must be EP1 or EP2, got {cfg.emccd.port!r}")
        if cfg.ring.n_bins < 4:
            violations.append("ring.n_bins must be >= 4")
        if cfg.ring.r0_mm - cfg.ring.dr_mm / 2 < 0:
            violations.append("ring annulus extends below r=0")
        if cfg.ring.r0_mm + cfg.ring.dr_mm / 2 > cfg.mzi.grid.extent_mm:
            violations.append("ring annulus extends outside the grid")
        span = abs(
            (cfg.sweep.theta_stop_rad - cfg.sweep.theta_start_rad)
            * (1.0 if cfg.sweep.endpoint else 1.0)
        )
        if not np.isclose(span, TWO_PI) or cfg.sweep.endpoint:
            warn.append(
                "emccd sweep does not cover one full period without endpoint; "
                "the experimental morph normalization assumes it does"
            )

    if cfg.scenario == "morph_map":
        if cfg.morph.n_theta < 2 or cfg.morph.n_phi < 2:
            violations.append("morph axes need at least 2 points each")
        if cfg.morph.port not in ("EP1", "EP2"):
            violations.append(f"morph.port must be EP1 or EP2, got {cfg.morph.port!r}")

    if cfg.scenario == "coincidence_check":
        t = cfg.coincidence.target_ratio
        if not 0.0 < t < SINGLE_PHOTON_MU_LIMIT:
            violations.append(
                f"coincidence.target_ratio must be in (0, {SINGLE_PHOTON_MU_LIMIT}), got {t}"
            )
        if cfg.coincidence.n_trials < 1000:
            warn.append("coincidence.n_trials is very small; the ratio estimate will be noisy")

    return violations, warn
