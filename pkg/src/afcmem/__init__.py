"""Simulation of atomic frequency comb memories inside an impedance-matched cavity."""

from .cavity import (
    CavityResponse,
    CavitySpec,
    Resonance,
    ScanResult,
    best_position_scan,
    cavity_response,
    dispersive_mode_structure,
    empty_fsr,
    impedance_matched_r1,
    reflection_scan,
    single_pass_amplitude,
)
from .errors import (
    AfcError,
    ConfigurationError,
    InvalidArgumentError,
    NumericalPreconditionError,
    ResolutionError,
    TruncationError,
    WindowOverlapError,
)
from .pulses import (
    GaussianPulseSpec,
    SechypPulseSpec,
    SpectrumTrace,
    TimeGrid,
    TimeTrace,
    gaussian_waveform,
    sechyp_waveform,
    time_grid,
    to_spectrum,
    to_time,
)
from .pumping import (
    HyperfineSystem,
    IonClassEnsemble,
    PumpEntry,
    PumpSequence,
    apply_pump_pulse,
    clean_background,
    ensemble_absorption,
    init_ensemble,
    placeholder_system,
    prepare_afc,
    run_sequence,
)
from .spectral import (
    AbsorptionSpectrum,
    CombSpec,
    ComplexIndex,
    FrequencyGrid,
    InhomogeneousLine,
    carve_pit,
    comb_optical_depth,
    group_index,
    inhomogeneous_depth,
    kramers_kronig_index,
    make_grid,
)
from .storage import (
    AfcParams,
    EchoMetrics,
    analytic_afc_efficiency,
    extract_echo_efficiency,
    optimize_finesse,
    simulate_cavity_storage,
    simulate_single_pass_storage,
)

__version__ = "0.1.0"
