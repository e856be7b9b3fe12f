"""Schrodinger operators with Kato-class potentials and the cubic NLS on a periodic spectral grid."""

from .dispersive import (
    AdmissiblePair,
    DecayFit,
    Propagator,
    StrichartzReport,
    WrapAroundError,
    admissible_pairs,
    dispersive_decay_fit,
    linear_trace,
    schrodinger_propagate,
    strichartz_norm,
    wrap_horizon,
)
from .funcalc import (
    EquivalenceReport,
    GaussianBoundFit,
    QuadratureError,
    distorted_sobolev_norm,
    fractional_power_apply,
    gaussian_bound_fit,
    heat_apply,
    homogeneous_power_apply,
    norm_equivalence_scan,
    sobolev_inequality_ratio,
)
from .grid import (
    Field,
    Grid,
    GridMismatchError,
    SpectralMultiplier,
    apply_multiplier,
    gradient_norm_squared,
    lp_norm,
    make_grid,
    random_field,
    sobolev_norm_standard,
)
from .nls import (
    BlowUpError,
    NonContractionError,
    PicardConfig,
    conservation_report,
    duhamel_map,
    evolve,
    h1_bound_check,
    monitored_norm,
    nonlinearity,
    picard_solve,
)
from .potentials import (
    KatoReport,
    Potential,
    PotentialAdmissibilityError,
    PotentialSpec,
    gaussian_well,
    kato_norm,
    kato_report,
    local_kato_modulus,
    negative_part,
    sample_potential,
    weak_l32_profile,
    weak_l32_quasinorm,
)
from .spectral import (
    ConvergenceError,
    ResonanceMemoryError,
    SpectralData,
    apply_hamiltonian,
    birman_schwinger_norm,
    bound_states,
    continuous_projection,
    find_form_constant,
    quadratic_form,
    resonance_indicator,
    spectral_data,
)
from .trace import EvolutionTrace, energy, mass

__version__ = "0.1.0"
