"""Scenario execution: runs a parsed config and writes CSV/PGM outputs plus a
run manifest with checksums.

All data files are byte-identical across runs of the same config and seed;
the manifest additionally records wall-clock timestamps, so it alone is not.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig, validate_config
from .detection import (
    calibrate_mu,
    count_records_to_csv,
    emccd_accumulate,
    frame_to_pgm,
    full_port_detector,
    mmf_sweep,
)
from .errors import ValidationError
from .field import intensity_map
from .interferometer import morph_map, morph_to_csv, ring_scan, ring_scan_to_csv, run_mzi
from .io import sha256_file, write_csv

MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class RunManifest:
    config_sha256: str
    tool_version: str
    started_at: str
    finished_at: str
    files: tuple[tuple[str, str, int], ...]  # (relative path, sha256, bytes)

    def to_json(self) -> str:
        return json.dumps(
            {
                "config_sha256": self.config_sha256,
                "tool_version": self.tool_version,
                "started_at": self.started_at,
                "finished_at": self.finished_at,
                "files": [
                    {"path": p, "sha256": h, "bytes": n} for p, h, n in self.files
                ],
            },
            indent=2,
        )


def verify_manifest(out_dir: str | Path) -> list[str]:
    """Re-checksum every file listed in a run's manifest; returns mismatches."""
    out_dir = Path(out_dir)
    data = json.loads((out_dir / MANIFEST_NAME).read_text())
    problems = []
    for entry in data["files"]:
        path = out_dir / entry["path"]
        if not path.is_file():
            problems.append(f"missing: {entry['path']}")
        elif sha256_file(path) != entry["sha256"]:
            problems.append(f"checksum mismatch: {entry['path']}")
    return problems


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def execute(cfg: ScenarioConfig, out_dir: str | Path, threads: int = 1) -> RunManifest:
    """Validate then run one scenario, writing its outputs under ``out_dir``."""
    violations, _ = validate_config(cfg)
    if violations:
        raise ValidationError("; ".join(violations))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    emitted: list[Path] = []

    if cfg.scenario == "fringe_sweep":
        emitted += _run_fringe_sweep(cfg, out_dir, threads)
    elif cfg.scenario == "morph_map":
        emitted += _run_morph_map(cfg, out_dir)
    elif cfg.scenario == "emccd_frames":
        emitted += _run_emccd_frames(cfg, out_dir)
    elif cfg.scenario == "visibility_suite":
        emitted += _run_visibility_suite(cfg, out_dir, threads)
    elif cfg.scenario == "coincidence_check":
        emitted += _run_coincidence_check(cfg, out_dir, threads)
    else:  # pragma: no cover - guarded by config parsing
        raise ValidationError(f"unknown scenario {cfg.scenario!r}")

    manifest = RunManifest(
        config_sha256=hashlib.sha256(cfg.source_bytes).hexdigest(),
        tool_version=__version__,
        started_at=started,
        finished_at=datetime.now(timezone.utc).isoformat(),
        files=tuple(
            (str(p.relative_to(out_dir)), sha256_file(p), p.stat().st_size) for p in emitted
        ),
    )
    (out_dir / MANIFEST_NAME).write_text(manifest.to_json() + "\n")
    return manifest


def _run_fringe_sweep(cfg: ScenarioConfig, out_dir: Path, threads: int) -> list[Path]:
    emitted = []
    theta_axis = cfg.sweep.axis()
    for k, phi in enumerate(cfg.detectors.phis_rad):
        det1, det2 = cfg.detectors.pair_at(phi)
        records = mmf_sweep(
            cfg.mzi,
            det1,
            det2,
            theta_axis,
            cfg.mu,
            cfg.sweep.n_trials,
            cfg.seed,
            stream_key=(k,),
            threads=threads,
        )
        emitted.append(count_records_to_csv(records, out_dir / f"fringes_phi_{_fmt(phi)}.csv"))
    return emitted


def _run_morph_map(cfg: ScenarioConfig, out_dir: Path) -> list[Path]:
    theta, phi = cfg.morph.axes()
    return [morph_to_csv(morph_map(theta, phi, cfg.morph.port), out_dir / "morph_theory.csv")]


def _run_emccd_frames(cfg: ScenarioConfig, out_dir: Path) -> list[Path]:
    emitted = []
    theta_axis = cfg.sweep.axis()
    em = cfg.emccd
    spec_hash = hashlib.sha256(cfg.source_bytes).hexdigest()
    gallery = {
        int(np.argmin(np.abs(theta_axis - t))) for t in em.gallery_thetas_rad
    }
    ring_rows = []  # (theta, [RingBin...])
    for ti, theta in enumerate(theta_axis):
        frame = emccd_accumulate(
            replace(cfg.mzi, theta=float(theta)),
            em.spec,
            em.port,
            cfg.mu,
            cfg.seed,
            stream_key=(ti,),
        )
        bins = ring_scan(frame, cfg.mzi.grid, cfg.ring.r0_mm, cfg.ring.dr_mm, cfg.ring.n_bins)
        ring_rows.append((float(theta), bins))
        emitted.append(
            ring_scan_to_csv(bins, out_dir / f"ring_theta_{_fmt(float(theta))}.csv")
        )
        if ti in gallery:
            pgm, meta = frame_to_pgm(
                frame,
                cfg.mzi.grid,
                float(theta),
                cfg.seed,
                spec_hash,
                out_dir / f"frame_theta_{_fmt(float(theta))}.pgm",
            )
            emitted += [pgm, meta]

    # Experimental morphing map: single-port ring counts normalized per phi
    # bin by twice their sweep average (the fringe law averages to 1/2 over a
    # full uniform theta sweep, so this recovers the conditional probability).
    phis = sorted({b.phi_center for _, bins in ring_rows for b in bins})
    mean_by_phi = {
        p: np.mean([b.mean_intensity for _, bins in ring_rows for b in bins if b.phi_center == p])
        for p in phis
    }
    rows = []
    for theta, bins in ring_rows:
        for b in bins:
            denom = 2.0 * mean_by_phi[b.phi_center]
            prob = b.mean_intensity / denom if denom > 0 else 0.0
            rows.append((theta, b.phi_center, min(max(prob, 0.0), 1.0)))
    emitted.append(write_csv(out_dir / "morph_experimental.csv", ["theta", "phi", "prob"], rows))
    emitted.append(
        morph_to_csv(
            morph_map(theta_axis, np.asarray(phis), em.port), out_dir / "morph_theory.csv"
        )
    )
    return emitted


def _run_visibility_suite(cfg: ScenarioConfig, out_dir: Path, threads: int) -> list[Path]:
    from .interferometer import fit_fringe

    emitted = []
    theta_axis = cfg.sweep.axis()
    summary = []
    for k, phi in enumerate(cfg.detectors.phis_rad):
        det1, det2 = cfg.detectors.pair_at(phi)
        records = mmf_sweep(
            cfg.mzi,
            det1,
            det2,
            theta_axis,
            cfg.mu,
            cfg.sweep.n_trials,
            cfg.seed,
            stream_key=(k,),
            threads=threads,
        )
        emitted.append(count_records_to_csv(records, out_dir / f"sweep_phi_{_fmt(phi)}.csv"))
        fit = fit_fringe([r.theta for r in records], [r.singles_ep1 for r in records])
        summary.append((phi, fit.visibility, fit.visibility_stderr))
    emitted.append(write_csv(out_dir / "visibility.csv", ["phi", "V", "stderr"], summary))
    return emitted


def _run_coincidence_check(cfg: ScenarioConfig, out_dir: Path, threads: int) -> list[Path]:
    mu = cfg.mu if cfg.mu is not None else calibrate_mu(cfg.coincidence.target_ratio)
    qe = cfg.coincidence.quantum_efficiency
    det1 = full_port_detector("EP1", cfg.mzi.grid, qe)
    det2 = full_port_detector("EP2", cfg.mzi.grid, qe)
    records = mmf_sweep(
        cfg.mzi,
        det1,
        det2,
        [cfg.mzi.theta],
        mu,
        cfg.coincidence.n_trials,
        cfg.seed,
        threads=threads,
    )
    rec = records[0]
    ratio = rec.coincidences / rec.singles_ep1 if rec.singles_ep1 else float("nan")
    files = [
        count_records_to_csv(records, out_dir / "coincidence.csv"),
        write_csv(
            out_dir / "coincidence_summary.csv",
            ["mu", "n_trials", "singles_ep1", "singles_ep2", "coincidences", "ratio", "model_ratio"],
            [(mu, rec.n_trials, rec.singles_ep1, rec.singles_ep2, rec.coincidences, ratio, mu / 2.0)],
        ),
    ]
    return files
