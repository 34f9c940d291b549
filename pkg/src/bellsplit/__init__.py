"""Polarization-encoded two-photon interference on an integrated,
polarization-dependent beam splitter: coincidence statistics, fringe and
delay scans, a-posteriori singlet filtering with tomography, and classical
Mueller-matrix polarimetry of the waveguide birefringence."""

from .birefringence import (
    BirefringenceFit,
    RetarderFit,
    RetarderParams,
    degree_of_polarization,
    fit_birefringence,
    fit_retarder,
    propagate_stokes,
    retarder_mueller,
)
from .elements import CouplerSpec, WaveplateSpec, apply_local, coupler_transform, waveplate_jones
from .errors import ConvergenceError, FitError, ValidationError
from .interference import (
    CoincidenceOutcome,
    DelayModel,
    ScanResult,
    TwoPhotonInput,
    coincidence_probability,
    fit_mu_to_visibility,
    fit_visibility,
    hom_scan,
    hwp_fringe,
    hwp_fringe_visibility,
    post_selected_cd_state,
    qwp_closed_form_visibility,
    qwp_fringe,
    visibility_phi,
    visibility_psi,
)
from .source import SourcePreset, prepare
from .states import (
    bell_state,
    concurrence,
    fidelity_pure,
    linear_entropy,
    partial_trace,
    purity,
    trace_distance,
    werner_state,
)
from .tomography import (
    CountRecord,
    MeasurementSetting,
    TomographyResult,
    bootstrap_metrics,
    reconstruct_linear,
    reconstruct_mle,
    simulate_counts,
    singlet_filter_experiment,
    standard_settings,
)

__version__ = "0.1.0"
