"""Monte Carlo detection: source statistics, routing, sweeps, coincidences,
EMCCD frames.  Every stochastic assertion runs on a frozen seed."""
import numpy as np
import pytest
from scipy import stats

from vecmzi import (
    DetectorSpec,
    EmccdSpec,
    MziConfig,
    OutOfRegimeError,
    PhotonRouter,
    RadialProfile,
    UnnormalizedFieldError,
    ValidationError,
    calibrate_mu,
    cartesian_grid,
    emccd_accumulate,
    experimental_visibility_suite,
    fit_fringe,
    frame_to_pgm,
    full_port_detector,
    intensity_map,
    make_lpsp,
    mmf_sweep,
    polar_grid,
    ring_scan,
    route_photon,
    run_mzi,
    sample_trial_photons,
    scale,
    substream,
)
from vecmzi.io import read_pgm16

GAUSS = RadialProfile("gaussian", 1.0)
VORTEX = RadialProfile("vortex", 1.0)


def small_config(theta=0.0, **kw):
    return MziConfig(theta=theta, grid=polar_grid(48, 96, 2.0), **kw)


def test_sample_trial_photons_moments():
    mu = 3.66e-3
    rng = substream(101)
    counts = rng.poisson(mu, 10_000_000)
    assert abs(counts.mean() - mu) <= 4 * np.sqrt(mu / 10_000_000)
    # P(n >= 1) tracks the series 1 - e^{-mu} ~ mu to within 1% at mu = 1e-3
    rng = substream(102)
    counts = rng.poisson(1e-3, 10_000_000)
    p_ge1 = np.mean(counts >= 1)
    assert abs(p_ge1 - 1e-3) <= 0.01 * 1e-3
    assert sample_trial_photons(0.5, substream(103)) >= 0
    with pytest.raises(ValueError):
        sample_trial_photons(0.0, substream(104))


def test_seeded_rng_reproducible():
    a = substream(42, 7).poisson(0.1, 1000)
    b = substream(42, 7).poisson(0.1, 1000)
    assert np.array_equal(a, b)
    c = substream(43, 7).poisson(0.1, 1000)
    assert not np.array_equal(a, c)


def test_router_requires_normalized_pair():
    grid = polar_grid(16, 16, 2.0)
    f = make_lpsp(grid, GAUSS)
    with pytest.raises(UnnormalizedFieldError):
        PhotonRouter(f, f)  # total 2, not 1
    half = scale(f, np.sqrt(0.5))
    PhotonRouter(half, half)  # total 1: fine


def test_route_photon_single():
    ep1, ep2 = run_mzi(small_config())
    port, cell = route_photon(ep1, ep2, substream(7))
    assert port in ("EP1", "EP2")
    assert 0 <= cell[0] < 48 and 0 <= cell[1] < 96


def test_route_balanced_mzi_dark_port():
    ep1, ep2 = run_mzi(small_config(qspec=None))
    ports, _ = PhotonRouter(ep1, ep2).sample(1_000_000, substream(8))
    assert np.mean(ports == 1) < 1e-4


def test_route_port_fraction_half():
    # integral of the fringe law over a uniform azimuth is 1/2 at any theta
    ep1, ep2 = run_mzi(small_config(theta=0.0))
    ports, _ = PhotonRouter(ep1, ep2).sample(1_000_000, substream(9))
    frac = np.mean(ports == 0)
    assert abs(frac - 0.5) <= 3 * np.sqrt(0.25 / 1_000_000)


def test_route_histogram_chisquare_on_ring():
    grid = polar_grid(64, 128, 2.0)
    ep1, ep2 = run_mzi(MziConfig(theta=np.pi / 3, grid=grid))
    router = PhotonRouter(ep1, ep2)
    ports, cells = router.sample(1_000_000, substream(10))
    m = intensity_map(ep1).ravel()
    r = grid.radii().ravel()
    phi = grid.azimuths().ravel()
    width = 2 * np.pi / 64
    on_ring = np.abs(r - 1.0) <= 0.2
    sector = np.rint(phi / width).astype(int) % 64
    ep1_cells = cells[ports == 0]
    sel = on_ring[ep1_cells]
    observed = np.bincount(sector[ep1_cells[sel]], minlength=64)
    expected = np.bincount(sector[on_ring], weights=m[on_ring], minlength=64)
    expected *= observed.sum() / expected.sum()
    assert expected.min() > 5
    p = stats.chisquare(observed, expected).pvalue
    assert p > 0.001


def test_route_total_variation_bound():
    # empirical (port, sector) histogram converges to the map: TV <= 3/sqrt(N)
    grid = polar_grid(64, 128, 2.0)
    ep1, ep2 = run_mzi(MziConfig(theta=0.7, grid=grid))
    router = PhotonRouter(ep1, ep2)
    n = 1_000_000
    ports, cells = router.sample(n, substream(11))
    width = 2 * np.pi / 32
    sector = np.rint(grid.azimuths().ravel() / width).astype(int) % 32
    group = sector[cells] + 32 * ports
    observed = np.bincount(group, minlength=64) / n
    model = np.concatenate(
        [
            np.bincount(sector, weights=intensity_map(ep1).ravel(), minlength=32),
            np.bincount(sector, weights=intensity_map(ep2).ravel(), minlength=32),
        ]
    )
    tv = 0.5 * np.abs(observed - model).sum()
    assert tv <= 3.0 / np.sqrt(n)


def coincidence_oracle(mu, p1, p2, qe):
    """Enumerate photon numbers n <= 4 (Poisson tail negligible at small mu)."""
    singles1 = coinc = 0.0
    for n in range(5):
        w = stats.poisson.pmf(n, mu)
        f1 = 1 - (1 - p1 * qe) ** n
        f2 = 1 - (1 - p2 * qe) ** n
        both = 1 - (1 - p1 * qe) ** n - (1 - p2 * qe) ** n + (1 - (p1 + p2) * qe) ** n
        singles1 += w * f1
        coinc += w * both
    return coinc / singles1, singles1


def test_mmf_sweep_coincidence_ratio_matches_enumeration():
    cfg = small_config()
    det1 = full_port_detector("EP1", cfg.grid)
    det2 = full_port_detector("EP2", cfg.grid)
    mu, n_trials = 0.02, 4_000_000
    rec = mmf_sweep(cfg, det1, det2, [0.0], mu, n_trials, seed=555)[0]
    ratio = rec.coincidences / rec.singles_ep1
    oracle_ratio, singles_rate = coincidence_oracle(mu, 0.5, 0.5, 1.0)
    # ~mu/2 to first order
    assert abs(oracle_ratio - mu / 2) <= 0.02 * (mu / 2)
    sigma = np.sqrt(oracle_ratio / (n_trials * singles_rate))
    assert abs(ratio - oracle_ratio) <= 3 * sigma


def test_mmf_sweep_conservation_and_reproducibility():
    cfg = small_config()
    det1 = DetectorSpec("EP1", 1.0, np.pi / 2, 0.3, 0.8)
    det2 = DetectorSpec("EP2", 1.0, np.pi / 2, 0.3, 0.8)
    thetas = np.linspace(0, 2 * np.pi, 6, endpoint=False)
    a = mmf_sweep(cfg, det1, det2, thetas, 0.08, 200_000, seed=77)
    b = mmf_sweep(cfg, det1, det2, thetas, 0.08, 200_000, seed=77)
    assert a == b
    c = mmf_sweep(cfg, det1, det2, thetas, 0.08, 200_000, seed=77, threads=3)
    assert a == c
    d = mmf_sweep(cfg, det1, det2, thetas, 0.08, 200_000, seed=78)
    assert a != d
    for rec in a:
        accounted = (
            rec.photons_detected_ep1
            + rec.photons_detected_ep2
            + rec.photons_lost_qe
            + rec.photons_out_of_aperture
        )
        assert accounted == rec.photons_drawn
        assert rec.coincidences <= min(rec.singles_ep1, rec.singles_ep2)


def test_mmf_sweep_visibility_at_erasing_spot():
    cfg = small_config()
    det1 = DetectorSpec("EP1", 1.0, np.pi / 2, 0.15, 0.9)
    det2 = DetectorSpec("EP2", 1.0, np.pi / 2, 0.15, 0.9)
    thetas = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    recs = mmf_sweep(cfg, det1, det2, thetas, 0.08, 400_000, seed=300)
    fit = fit_fringe(thetas, [r.singles_ep1 for r in recs])
    assert abs(fit.visibility - 1.0) <= 3 * fit.visibility_stderr + 0.002
    # EP2 sees the same fringe shifted by pi
    fit2 = fit_fringe(thetas, [r.singles_ep2 for r in recs])
    assert abs(abs(fit.phase - fit2.phase) - np.pi) <= 0.05


def test_mmf_sweep_visibility_at_whichpath_spot():
    cfg = small_config()
    det1 = DetectorSpec("EP1", 1.0, 0.0, 0.15, 0.9)
    det2 = DetectorSpec("EP2", 1.0, 0.0, 0.15, 0.9)
    thetas = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    recs = mmf_sweep(cfg, det1, det2, thetas, 0.08, 400_000, seed=301)
    fit = fit_fringe(thetas, [r.singles_ep1 for r in recs])
    assert fit.visibility < 0.05


def test_mmf_sweep_validates_detectors():
    cfg = small_config()
    out = DetectorSpec("EP1", 1.9, 0.0, 0.3, 0.9)
    ok = DetectorSpec("EP2", 1.0, 0.0, 0.3, 0.9)
    with pytest.raises(ValidationError):
        mmf_sweep(cfg, out, ok, [0.0], 0.05, 100, seed=1)
    with pytest.raises(ValueError):
        mmf_sweep(cfg, ok, ok, [0.0], 0.05, 100, seed=1)  # wrong port binding


def test_calibrate_mu():
    assert calibrate_mu(1.83e-3) == 3.66e-3
    with pytest.raises(OutOfRegimeError):
        calibrate_mu(0.0)
    with pytest.raises(OutOfRegimeError):
        calibrate_mu(0.1)


def test_emccd_frame_matches_intensity_map():
    grid = cartesian_grid(96, 96, 2.5)
    cfg = MziConfig(theta=np.pi / 3, profiles=(GAUSS, VORTEX), grid=grid)
    spec = EmccdSpec(n_frames=1, exposure_trials_per_frame=2_500_000, quantum_efficiency=0.9)
    frame = emccd_accumulate(cfg, spec, "EP1", 0.08, seed=900)
    assert frame.sum() >= 80_000
    ep1, _ = run_mzi(cfg)
    m = intensity_map(ep1).ravel()
    r = grid.radii().ravel()
    phi = grid.azimuths().ravel()
    width = 2 * np.pi / 64
    on_ring = np.abs(r - 0.7071) <= 0.15
    sector = np.rint(phi / width).astype(int) % 64
    observed = np.bincount(sector[on_ring], weights=frame.ravel()[on_ring], minlength=64)
    expected = np.bincount(sector[on_ring], weights=m[on_ring], minlength=64)
    expected *= observed.sum() / expected.sum()
    assert expected.min() > 5
    assert stats.chisquare(observed, expected).pvalue > 0.001


def test_emccd_ring_peak_at_erasing_azimuth():
    # the fringe is flat at its maximum, so the winning bin can wander one
    # bin width under Poisson noise
    grid = cartesian_grid(96, 96, 2.5)
    cfg = MziConfig(theta=0.0, profiles=(GAUSS, VORTEX), grid=grid)
    spec = EmccdSpec(n_frames=1, exposure_trials_per_frame=5_000_000, quantum_efficiency=0.9)
    frame = emccd_accumulate(cfg, spec, "EP1", 0.08, seed=901)
    bins = ring_scan(frame, grid, 0.7071, 0.3, 16)
    best = max(bins, key=lambda b: b.mean_intensity)
    assert abs(best.phi_center - np.pi / 2) <= 2 * np.pi / 16 + 1e-12


def test_emccd_dark_field():
    grid = cartesian_grid(48, 48, 2.0)
    cfg = MziConfig(grid=grid)
    spec = EmccdSpec(n_frames=3, exposure_trials_per_frame=1, dark_counts_per_pixel_per_frame=0.2)
    frame = emccd_accumulate(cfg, spec, "EP1", mu=1e-12, seed=902)
    mean = frame.mean()
    expect = 0.2 * 3
    assert abs(mean - expect) <= 3 * np.sqrt(expect / frame.size)


def test_emccd_reproducible():
    grid = cartesian_grid(48, 48, 2.0)
    cfg = MziConfig(theta=0.3, profiles=(GAUSS, VORTEX), grid=grid)
    spec = EmccdSpec(n_frames=2, exposure_trials_per_frame=100_000, quantum_efficiency=0.7)
    a = emccd_accumulate(cfg, spec, "EP2", 0.05, seed=11)
    b = emccd_accumulate(cfg, spec, "EP2", 0.05, seed=11)
    assert np.array_equal(a, b)


def test_frame_pgm_sidecar(tmp_path):
    grid = cartesian_grid(48, 48, 2.0)
    frame = substream(5).poisson(3.0, size=grid.shape)
    pgm, meta = frame_to_pgm(frame, grid, 0.25, 99, "cafe", tmp_path / "f.pgm")
    back = read_pgm16(pgm)
    peak = frame.max()
    assert np.array_equal(back, np.round(frame / peak * 65535).astype(np.int64))
    text = meta.read_text()
    assert 'grid_kind = "cartesian"' in text and "seed = 99" in text
    assert f"peak_value = {peak}" in text


def test_visibility_estimator_unbiased_on_synthetic_poisson():
    thetas = np.linspace(0, 2 * np.pi, 20, endpoint=False)
    rng = substream(1234)
    for planted in (0.0, 0.5, 1.0):
        fits = []
        for _ in range(100):
            lam = 10_000 * 0.5 * (1 + planted * np.cos(thetas))
            fits.append(fit_fringe(thetas, rng.poisson(lam)))
        mean_v = np.mean([f.visibility for f in fits])
        mean_err = np.mean([f.visibility_stderr for f in fits])
        assert abs(mean_v - planted) <= 3 * mean_err


def test_visibility_suite_ordering():
    rows = experimental_visibility_suite(
        small_config(), mu=0.08, n_trials=250_000, seed=2024, aperture_radius_mm=0.3
    )
    v = {round(r.phi, 3): r.visibility for r in rows}
    assert v[0.0] < v[round(np.pi / 4, 3)] < v[round(np.pi / 2, 3)]
    assert v[0.0] < 0.1
    assert abs(v[round(np.pi / 4, 3)] - np.sin(np.pi / 4)) <= 0.05


def test_visibility_suite_imperfection_model():
    ideal = experimental_visibility_suite(
        small_config(), detector_phis=(0.0,), mu=0.08, n_trials=250_000, seed=2025
    )[0]
    floored = experimental_visibility_suite(
        small_config(epsilon_h_floor=0.15),
        detector_phis=(0.0,),
        mu=0.08,
        n_trials=250_000,
        seed=2025,
    )[0]
    # a polarization floor leaves residual fringes at the which-path spot
    assert floored.visibility > ideal.visibility
    assert floored.visibility == pytest.approx(0.15 / np.sqrt(1.0225), abs=0.05)
