"""Time-optimal control of single-excitation transfer on qubit rings.

The library reduces the time-optimal transport problem on a
nearest-neighbor-coupled ring (fixed total squared coupling) to the
evolution of one complex amplitude vector, solves the resulting
traveling-wave boundary-value problem by shooting, and certifies every
conserved structure the reduction predicts against an independent
full-matrix oracle.
"""

from .backend import BACKEND, available_backends, get_kernels
from .config import (
    ANTIPERIODIC,
    ConvergenceError,
    IntegrationError,
    RingConfig,
    RingControlError,
)
from .core import (
    CouplingProfile,
    LaxEigenvector,
    Q_GAUGE,
    SITE_GAUGE,
    WaveFunction,
    antiperiodic_shift,
    couplings_from_lax,
    hamiltonian_matrix,
    hermitian_defect,
    initial_guess_fit,
    partial_theta,
    q_transform,
    random_symmetric_guess,
    ring_neighbor,
    wavefunction_from_lax,
)
from .dynamics import (
    InvariantReport,
    Trajectory,
    integrate,
    integrate_endpoint,
    rhs,
    rhs_via_hamiltonian,
)

__version__ = "0.1.0"

from .shooting import (  # noqa: E402
    BrachSolution,
    ShootingUnknowns,
    SolverOptions,
    SweepResult,
    expand_unknowns,
    extract_unknowns,
    l0_tau_reference,
    levenberg_marquardt,
    shooting_residual,
    solve,
    sweep,
)

__all__ = [
    "ANTIPERIODIC",
    "BACKEND",
    "BrachSolution",
    "ConvergenceError",
    "CouplingProfile",
    "IntegrationError",
    "InvariantReport",
    "LaxEigenvector",
    "Q_GAUGE",
    "RingConfig",
    "RingControlError",
    "SITE_GAUGE",
    "ShootingUnknowns",
    "SolverOptions",
    "SweepResult",
    "Trajectory",
    "WaveFunction",
    "antiperiodic_shift",
    "available_backends",
    "couplings_from_lax",
    "expand_unknowns",
    "extract_unknowns",
    "get_kernels",
    "hamiltonian_matrix",
    "hermitian_defect",
    "initial_guess_fit",
    "integrate",
    "integrate_endpoint",
    "l0_tau_reference",
    "levenberg_marquardt",
    "partial_theta",
    "q_transform",
    "random_symmetric_guess",
    "rhs",
    "rhs_via_hamiltonian",
    "ring_neighbor",
    "shooting_residual",
    "solve",
    "sweep",
    "wavefunction_from_lax",
    "__version__",
]
