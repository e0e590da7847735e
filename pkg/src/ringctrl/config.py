"""Ring lattice configuration and package-wide error types."""

from dataclasses import dataclass, replace

ANTIPERIODIC = "antiperiodic"
_BOUNDARIES = (ANTIPERIODIC,)


class RingControlError(Exception):
    """Base class for errors raised by this package."""


class IntegrationError(RingControlError):
    """Time integration failed (step-size underflow).

    Attributes
    ----------
    t_fail : float
        Time at which the integrator gave up.
    state : ndarray or None
        Last accepted state vector, if available.
    """

    def __init__(self, message, t_fail=None, state=None):
        super().__init__(message)
        self.t_fail = t_fail
        self.state = state


class ConvergenceError(RingControlError):
    """An iterative procedure exceeded its iteration budget."""


@dataclass(frozen=True)
class RingConfig:
    """Parameters of the qubit ring (units: energy for ``lax_scale``, time for
    ``transfer_time``, with hbar = 1).

    ``n_sites`` is the number of qubits N.  ``lax_scale`` is the magnitude of
    the two nonzero eigenvalues of the rank-2 invariant operator that encodes
    the controls; it sets the inverse timescale of the transfer.
    ``transfer_time`` is the per-site transfer period tau.  The solver path
    requires odd N (a well-defined middle site); even N is accepted here and
    by the dynamics/oracle layers.
    """

    n_sites: int
    lax_scale: float = 1.0
    transfer_time: float = 1.0
    boundary: str = ANTIPERIODIC

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 3:
            raise ValueError(f"n_sites must be an integer >= 3, got {self.n_sites!r}")
        if not self.lax_scale > 0:
            raise ValueError(f"lax_scale must be positive, got {self.lax_scale!r}")
        if not self.transfer_time > 0:
            raise ValueError(f"transfer_time must be positive, got {self.transfer_time!r}")
        if self.boundary not in _BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}; supported: {_BOUNDARIES}")

    def with_lax_scale(self, l0: float) -> "RingConfig":
        return replace(self, lax_scale=l0)

    def with_transfer_time(self, tau: float) -> "RingConfig":
        return replace(self, transfer_time=tau)

    def require_odd(self):
        if self.n_sites % 2 == 0:
            raise ValueError(
                f"this operation needs an odd number of sites, got N={self.n_sites}"
            )
