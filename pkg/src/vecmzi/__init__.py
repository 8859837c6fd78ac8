"""Vector-beam Mach-Zehnder interferometer simulator.

Builds the two-arm optical model (reference H arm plus an azimuth-tagged
vector-beam arm), computes exit-port fields and fringe observables, and runs
seeded Monte Carlo photon detection with fiber and imaging detectors.
"""

from .detection import (
    CountRecord,
    DetectorSpec,
    EmccdSpec,
    PhotonRouter,
    VisibilityRow,
    calibrate_mu,
    count_records_to_csv,
    emccd_accumulate,
    experimental_visibility_suite,
    frame_to_pgm,
    full_port_detector,
    mmf_sweep,
    route_photon,
    sample_trial_photons,
    substream,
)
from .elements import (
    JonesOperator,
    QplateSpec,
    SourceSpec,
    bs_5050,
    mirror,
    phase_shift,
    qplate_operator,
)
from .errors import (
    AnnulusOutsideGridError,
    ConfigError,
    DegenerateBasisError,
    DegenerateFitError,
    GridMismatchError,
    OutOfRegimeError,
    UnnormalizedFieldError,
    ValidationError,
    VecmziError,
)
from .field import (
    GridSpec,
    RadialProfile,
    TransverseField,
    cartesian_grid,
    field_to_csv,
    field_to_pgm,
    intensity_density,
    intensity_map,
    magnify,
    make_lpsp,
    make_vpsp,
    mix_h_floor,
    polar_grid,
    radial_amplitude,
    scale,
    superpose_at_bs2,
)
from .interferometer import (
    FringeFit,
    MorphMap,
    MziConfig,
    RingBin,
    analytic_prob,
    fit_fringe,
    morph_map,
    morph_to_csv,
    mzi_point_probability,
    port_probability_map,
    ring_scan,
    ring_scan_to_csv,
    run_mzi,
    visibility_ideal,
)
from .polarization import (
    JonesVector,
    WpDecomposition,
    decompose_wp,
    exit_point_state,
    inner,
    ket_H,
    ket_P,
    ket_V,
    norm,
    particle_state,
    wave_state,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
