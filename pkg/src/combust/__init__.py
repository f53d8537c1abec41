"""Numerical laboratory for traveling combustion waves of a reactive
scalar-flow model: wave profiles, linearized spectra, Evans-function
stability verdicts, resolvent and time-domain kernels, and nonlinear
evolution cross-checks.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    FluxSpec, IgnitionFn, ModelParams, State, ValidationReport,
    default_params, eval_flux, eval_ignition, validate,
)
from .hugoniot import (  # noqa: F401
    GammaLawMixture, RHRoot, WaveClass, WaveKind, WaveProblem,
    cj_speeds, classify, mixture_hugoniot, rayleigh_intersections,
    solve_rh, standard_structure,
)
from .profile import (  # noqa: F401
    DecayReport, EquilibriumAnalysis, NoConnectionError, Profile,
    ProfileOptions, TravelingWaveODE, compute_profile, equilibrium_jacobian,
    frozen_profile, transversality_gamma, verify_decay,
)
from .spectral import (  # noqa: F401
    DispersionCurves, ModeSet, SlowMode, SpectralProblem, dispersion,
    dual_vectors, limiting_modes, slow_mode_expansion,
)
from .evans import (  # noqa: F401
    BoundaryBases, ContourError, ContourResult, EvansEvaluation,
    EvansMachine, SplittingError, StabilityReport, accumulate_arg,
    analyticity_disk, boundary_bases, d_prime_zero, default_radii,
    evans_eval, get_machine, locate_real_zeros, plant_instability,
    unstable_spectrum, verdict, winding,
)
from .resolvent_green import (  # noqa: F401
    AdjointZeroMode, GreenApplied, GreenSample, GreenSweep, PoleStructure,
    ResolventError, ResolventSlice, TimeGreen, adjoint_families, apply_green,
    bounded_adjoint_mode, convected_gaussian, errfn, excited_term,
    green_function, mass_constant, pole_structure, predicted_shift,
    resolvent_kernel, time_green_kernel,
)
from .evolution import (  # noqa: F401
    DecayTemplates, EvolveConfig, ExponentFit, Field, PerturbationRun,
    PerturbationSpec, SourceSplitReport, TemplateReport, Trajectory,
    build_perturbation, decay_rates, discrete_steady_state, domain_grid,
    evolve, integral_phase, perturb_and_track, source_structure_check,
    template_compare, weighted_amplitude,
)
