"""Semiclassical Bloch-wave toolkit.

Builds gauge-fixed band tables from a periodic potential, transports
envelope, phase, and geometric angle along the band's semiclassical rays,
assembles the oscillatory leading-order field, solves the scaled lattice
Schroedinger equation directly, and measures how fast the two agree as the
scale separation grows.
"""

__version__ = "0.1.0"

from .lattice import (
    Lattice,
    PeriodicPotential,
    ScalingReport,
    cosine_potential,
    eval_potential,
    make_potential_from_fourier,
    scale_physical_params,
    zero_potential,
)
from .bloch import (
    BandEvaluator,
    BandTable,
    BlochProblem,
    build_band_table,
    group_velocity,
    kappa_integral,
    solve_bloch_at_k,
    well_prepared_corrector,
)
from .profiles import GaussianAmplitude, PolynomialPhase, linear_phase, quadratic_phase, zero_phase
from .rays import (
    ConfinementPotential,
    RayBundle,
    RayPath,
    amplitude_on_ray,
    blowup_experiment,
    trace_bundle,
    trace_ray,
)
from .wkb import EulerianFields, WaveField, assemble_v0, eulerianize, initial_data, wkb_field
from .nls import NlsConfig, mass, solve_nls
from .fieldio import read_field, write_field
from .harness import (
    ConvergenceReport,
    ErrorRecord,
    Scenario,
    ScenarioContext,
    WignerGrid,
    convergence_sweep,
    error_norms,
    wigner_l1_discrepancy,
    wigner_predicted,
    wigner_transform,
)

__all__ = [name for name in dir() if not name.startswith("_")]
