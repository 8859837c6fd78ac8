"""Transverse-field grids, profiles, construction, superposition, exports."""
import numpy as np
import pytest

from vecmzi import (
    GridMismatchError,
    MziConfig,
    QplateSpec,
    RadialProfile,
    cartesian_grid,
    field_to_csv,
    field_to_pgm,
    intensity_density,
    intensity_map,
    ket_P,
    magnify,
    make_lpsp,
    make_vpsp,
    mix_h_floor,
    polar_grid,
    radial_amplitude,
    run_mzi,
    scale,
    superpose_at_bs2,
)
from vecmzi.io import read_csv_columns, read_pgm16

FLAT = RadialProfile("flat_matched", 1.0)
GAUSS = RadialProfile("gaussian", 1.0)
VORTEX = RadialProfile("vortex", 1.0)


@pytest.fixture
def pgrid():
    return polar_grid(32, 64, 2.0)


@pytest.fixture
def cgrid():
    return cartesian_grid(48, 48, 2.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        polar_grid(3, 64, 2.0)
    with pytest.raises(ValueError):
        polar_grid(8, 8, 0.0)
    with pytest.raises(ValueError):
        cartesian_grid(48, 2, 1.0)


def test_polar_cell_areas_tile_the_disk(pgrid):
    assert abs(pgrid.cell_areas().sum() - np.pi * 2.0**2) <= 1e-9


def test_profile_amplitudes():
    # gaussian: A(w)/A(0) = e^{-1}
    assert abs(
        radial_amplitude(GAUSS, 1.0) / radial_amplitude(GAUSS, 0.0) - np.exp(-1.0)
    ) <= 1e-15
    # vortex: exact zero on the singularity
    assert radial_amplitude(VORTEX, 0.0) == 0.0
    assert radial_amplitude(VORTEX, 0.5) > 0.0
    # flat_matched: unit on the annulus, zero outside
    assert radial_amplitude(FLAT, 1.0) == 1.0
    assert radial_amplitude(FLAT, 0.2) == 0.0
    assert radial_amplitude(FLAT, 1.8) == 0.0


def test_lpsp_polarization_and_norm(pgrid):
    f = make_lpsp(pgrid, GAUSS)
    assert abs(f.total_prob - 1.0) <= 1e-9
    assert np.all(f.values[..., 1] == 0.0)
    assert np.all(f.values[..., 0].imag == 0.0)
    with pytest.raises(ValueError):
        make_lpsp(pgrid, VORTEX)


def test_lpsp_azimuthally_uniform(pgrid):
    m = intensity_density(make_lpsp(pgrid, GAUSS))
    for row in m:  # fixed r along each row
        assert np.ptp(row) <= 1e-12 * row.max()


def test_vpsp_polarization_tracks_azimuth(pgrid):
    f = make_vpsp(pgrid, FLAT)
    phi = pgrid.azimuths()
    amp = np.sqrt((np.abs(f.values) ** 2).sum(axis=-1))
    support = amp > 0
    for i, j in zip(*np.nonzero(support)):
        unit = f.values[i, j] / amp[i, j]
        assert np.linalg.norm(unit - ket_P(phi[i, j])) <= 1e-12
    assert abs(f.total_prob - 1.0) <= 1e-9
    with pytest.raises(ValueError):
        make_vpsp(pgrid, GAUSS)


def test_vpsp_vortex_dark_center(pgrid):
    f = make_vpsp(pgrid, VORTEX)
    m = intensity_map(f)
    # innermost ring carries the least light; the profile itself is 0 at r=0
    assert m[0].sum() < m[1].sum()
    assert radial_amplitude(VORTEX, 0.0) == 0.0


def test_vpsp_custom_qspec(pgrid):
    spec = QplateSpec(q=1.0, alpha0=0.0, handedness="plus")
    f = make_vpsp(pgrid, FLAT, spec)
    phi = pgrid.azimuths()
    amp = np.sqrt((np.abs(f.values) ** 2).sum(axis=-1))
    i, j = next(zip(*np.nonzero(amp > 0)))
    chi = spec.q * phi[i, j]
    expect = np.array([np.cos(2 * chi), np.sin(2 * chi)])
    assert np.linalg.norm(f.values[i, j] / amp[i, j] - expect) <= 1e-12


def test_superpose_constructive_destructive(pgrid):
    f = make_lpsp(pgrid, GAUSS)
    half = scale(f, 1 / np.sqrt(2.0))
    ep1, ep2 = superpose_at_bs2(half, half, 0.0)
    assert ep2.total_prob <= 1e-12
    assert abs(ep1.total_prob - 1.0) <= 1e-9
    ep1, ep2 = superpose_at_bs2(half, half, np.pi)
    assert ep1.total_prob <= 1e-12


def test_superpose_grid_mismatch(pgrid, cgrid):
    with pytest.raises(GridMismatchError):
        superpose_at_bs2(make_lpsp(pgrid, GAUSS), make_lpsp(cgrid, GAUSS), 0.0)


def test_superpose_intensity_against_direct_arithmetic(pgrid):
    # oracle: expand |e^{i theta}(a,0) + a(sin phi, cos phi)|^2 / 2 per cell
    theta = 0.8
    f1 = scale(make_lpsp(pgrid, FLAT), 1 / np.sqrt(2.0))
    f2 = scale(make_vpsp(pgrid, FLAT), 1 / np.sqrt(2.0))
    ep1, _ = superpose_at_bs2(f1, f2, theta)
    phi = pgrid.azimuths()
    a = np.sqrt((np.abs(f1.values) ** 2).sum(axis=-1)) * np.sqrt(2.0)  # arm amplitude
    oracle_h = (np.exp(1j * theta) * a + a * np.sin(phi)) / 2.0
    oracle_v = a * np.cos(phi) / 2.0
    oracle = np.abs(oracle_h) ** 2 + np.abs(oracle_v) ** 2
    assert np.max(np.abs(intensity_density(ep1) - oracle)) <= 1e-12


def test_superpose_conserves_probability(pgrid):
    f1 = scale(make_lpsp(pgrid, GAUSS), 1 / np.sqrt(2.0))
    f2 = scale(make_vpsp(pgrid, VORTEX), 1 / np.sqrt(2.0))
    for theta in (0.0, 0.3, np.pi / 2, 2.2):
        ep1, ep2 = superpose_at_bs2(f1, f2, theta)
        assert abs(ep1.total_prob + ep2.total_prob - 1.0) <= 1e-12


def test_intensity_map_sums_to_total(pgrid):
    f = make_vpsp(pgrid, VORTEX)
    assert abs(intensity_map(f).sum() - 1.0) <= 1e-9


def test_flat_matched_conditional_prob_r_independent():
    # the A1 ~ A2 assumption made exact: within the annulus the conditional
    # port probability cannot depend on r at all
    from vecmzi import port_probability_map

    grid = polar_grid(64, 128, 2.0)
    ep1, ep2 = run_mzi(MziConfig(theta=0.7, grid=grid))
    pm = port_probability_map(ep1, ep2)
    support = ~np.isnan(pm)
    for j in range(grid.n_phi):
        col = pm[:, j][support[:, j]]
        assert col.size > 0
        assert np.ptp(col) <= 1e-12


def test_polar_and_cartesian_ring_probabilities_agree():
    # same scenario on both grid kinds: azimuthal ring probabilities within
    # 1% of the peak bin at >= 256 samples per dimension
    n_bins = 64
    width = 2 * np.pi / n_bins

    def ring_probs(grid):
        ep1, _ = run_mzi(
            MziConfig(theta=0.0, profiles=(GAUSS, VORTEX), grid=grid)
        )
        m = intensity_map(ep1).ravel()
        r = grid.radii().ravel()
        phi = grid.azimuths().ravel()
        sel = np.abs(r - 0.7071) <= 0.25
        idx = np.rint(phi[sel] / width).astype(int) % n_bins
        p = np.bincount(idx, weights=m[sel], minlength=n_bins)
        return p / p.sum()

    p_polar = ring_probs(polar_grid(256, 256, 2.0))
    p_cart = ring_probs(cartesian_grid(768, 768, 2.0))
    assert np.max(np.abs(p_polar - p_cart)) <= 0.01 * p_polar.max()


def test_resolution_doubling_port_totals():
    coarse = run_mzi(MziConfig(theta=0.9, profiles=(GAUSS, VORTEX), grid=polar_grid(64, 64, 2.0)))
    fine = run_mzi(MziConfig(theta=0.9, profiles=(GAUSS, VORTEX), grid=polar_grid(128, 128, 2.0)))
    for c, f in zip(coarse, fine):
        assert abs(c.total_prob - f.total_prob) <= 1e-6


def test_mix_h_floor(pgrid):
    f = make_vpsp(pgrid, FLAT)
    assert mix_h_floor(f, 0.0) is f
    g = mix_h_floor(f, 0.1)
    # per-cell amplitude unchanged, total still 1
    assert np.allclose(
        (np.abs(g.values) ** 2).sum(axis=-1), (np.abs(f.values) ** 2).sum(axis=-1), atol=1e-12
    )
    # each cell's unit polarization becomes (e + eps*H) renormalized
    amp = np.sqrt((np.abs(f.values) ** 2).sum(axis=-1))
    for i, j in [(8, 0), (10, 17), (12, 40)]:
        assert amp[i, j] > 0
        e = f.values[i, j] / amp[i, j]
        expect = e + np.array([0.1, 0.0])
        expect /= np.linalg.norm(expect)
        got = g.values[i, j] / np.linalg.norm(g.values[i, j])
        assert np.linalg.norm(got - expect) <= 1e-12


def test_magnify_preserves_probability(pgrid):
    f = make_vpsp(pgrid, VORTEX)
    g = magnify(f, 2.5)
    assert abs(g.total_prob - f.total_prob) <= 1e-12
    assert g.grid.r_max_mm == 5.0


def test_field_csv_roundtrip(tmp_path, pgrid, cgrid):
    f = make_vpsp(pgrid, FLAT)
    cols = read_csv_columns(field_to_csv(f, tmp_path / "polar.csv"))
    assert list(cols) == ["r_mm", "phi_rad", "h2", "v2", "total"]
    assert abs(np.sum(cols["total"] * pgrid.cell_areas().ravel()) - 1.0) <= 1e-9
    assert np.allclose(cols["total"], cols["h2"] + cols["v2"], atol=1e-12)
    g = make_lpsp(cgrid, GAUSS)
    cols = read_csv_columns(field_to_csv(g, tmp_path / "cart.csv"))
    assert list(cols) == ["x_mm", "y_mm", "phi_rad", "h2", "v2", "total"]


def test_field_pgm_roundtrip(tmp_path, cgrid):
    f = make_lpsp(cgrid, GAUSS)
    img = read_pgm16(field_to_pgm(f, tmp_path / "f.pgm"))
    assert img.shape == cgrid.shape
    assert img.max() == 65535
    dens = intensity_density(f)
    assert tuple(np.unravel_index(img.argmax(), img.shape)) == tuple(
        np.unravel_index(dens.argmax(), dens.shape)
    )
