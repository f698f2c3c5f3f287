"""Driven-dissipative cavity QED simulator with polaritonic output statistics.

The package models a single qubit coupled to one cavity mode with a
tunable-angle interaction that interpolates between transverse and
longitudinal coupling.  It builds the dressed-state master equation
appropriate beyond the rotating-wave regime, evolves the driven system
to its limit cycle, and evaluates equal-time and delayed correlation
functions of the polaritonic output field, from which single- and
two-excitation blockade behaviour is classified.

Layout:

``hilbert``        dense operator algebra on the cavity-qubit space
``model``          Hamiltonian assembly, diagonalization, flux-angle map
``dissipation``    dressed-basis jump amplitudes, rates, generator
``dynamics``       fixed-step propagation, limit cycle, regression
``correlations``   output operator, g^(n) statistics, blockade labels
``config``         flat key = value run configuration
``experiments``    sweep drivers, CSV emission, run manifest
``cli``            command-line entry point
"""

__version__ = "0.1.0"

from .hilbert import HilbertSpace, Operator, embed, fock_annihilation, pauli
from .model import (
    EigenSystem,
    SystemParams,
    build_static_hamiltonian,
    diagonalize,
    dressed_system,
    parity_diagnostic,
    theta_from_flux,
    transition_energy,
)
from .dissipation import (
    Generator,
    JumpSet,
    build_generator,
    build_jump_set,
    relaxation_rates,
    transition_amplitudes,
)
from .dynamics import (
    ConvergenceError,
    PeriodicState,
    PropagationError,
    Trajectory,
    limit_cycle,
    propagate,
    regression_correlate,
    rwa_steady_state,
)
from .correlations import (
    CorrelationResult,
    PolaritonOutput,
    VacuumOutputError,
    classify_blockade,
    delay_inequalities,
    g2_delay,
    g3_delay,
    g3_delay_map,
    g_equal_time,
    output_operator,
)
from .config import ConfigError, load_config, params_from_config
from .experiments import (
    RunManifest,
    SweepSpec,
    TruncationError,
    prepare_system,
    run_convergence,
    run_coupling_sweep,
    run_delay_maps,
    run_drive_sweep,
    run_spectrum,
)

__all__ = [
    "HilbertSpace",
    "Operator",
    "embed",
    "fock_annihilation",
    "pauli",
    "SystemParams",
    "EigenSystem",
    "build_static_hamiltonian",
    "diagonalize",
    "dressed_system",
    "parity_diagnostic",
    "theta_from_flux",
    "transition_energy",
    "JumpSet",
    "Generator",
    "transition_amplitudes",
    "relaxation_rates",
    "build_jump_set",
    "build_generator",
    "Trajectory",
    "PeriodicState",
    "PropagationError",
    "ConvergenceError",
    "propagate",
    "limit_cycle",
    "regression_correlate",
    "rwa_steady_state",
    "PolaritonOutput",
    "CorrelationResult",
    "VacuumOutputError",
    "output_operator",
    "g_equal_time",
    "g2_delay",
    "g3_delay",
    "g3_delay_map",
    "delay_inequalities",
    "classify_blockade",
    "ConfigError",
    "load_config",
    "params_from_config",
    "SweepSpec",
    "RunManifest",
    "TruncationError",
    "prepare_system",
    "run_spectrum",
    "run_drive_sweep",
    "run_coupling_sweep",
    "run_delay_maps",
    "run_convergence",
    "__version__",
]
