"""Time evolution of the Lax eigenvector under the reduced nonlinear
dynamics, with adaptive error control and continuous invariant monitoring.

The equations of motion for a = x + i y are, with neighbors taken through
:func:`ringctrl.core.ring_neighbor` (antiperiodic wrap),

    dx_m/dt = 2 L0 [ (x_{m-1}^2 + x_{m+1}^2) y_m
                     - (x_{m-1} y_{m-1} + x_{m+1} y_{m+1}) x_m ]
    dy_m/dt = 2 L0 [ -(y_{m-1}^2 + y_{m+1}^2) x_m
                     + (x_{m-1} y_{m-1} + x_{m+1} y_{m+1}) y_m ]

Every neighbor enters quadratically, so the seam sign cancels and the flow
is seam-transparent; the equivalent operator form is i da/dt = H^Q a with
H^Q the q-gauge Hamiltonian rebuilt from a itself (see
:func:`rhs_via_hamiltonian`, which certifies that equivalence numerically).
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .backend import kernels
from .config import RingConfig, IntegrationError
from .core import (
    LaxEigenvector,
    Q_GAUGE,
    antiperiodic_shift,
    couplings_from_lax,
    hamiltonian_matrix,
)

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-10
DRIFT_FLAG_FACTOR = 1e3


@dataclass
class InvariantReport:
    """Worst-case drifts of the conserved quantities over a trajectory.

    ``max_norm_drift`` is max over time of |<x|x>-1/2| + |<y|y>-1/2|;
    ``max_orthogonality_drift`` is max |<x|y>|; ``max_coupling_norm_drift``
    is the max relative drift of the squared coupling norm.
    ``lax_eigenvalue_drift`` is filled in by the matrix oracle when that
    check runs.  ``flagged`` is set when drift exceeded 1e3 x tolerance
    (diagnostic only; integration is not aborted).
    """

    max_norm_drift: float = 0.0
    max_orthogonality_drift: float = 0.0
    max_coupling_norm_drift: float = 0.0
    lax_eigenvalue_drift: Optional[float] = None
    n_accepted: int = 0
    n_rejected: int = 0
    flagged: bool = False

    def to_dict(self):
        return {
            "max_norm_drift": self.max_norm_drift,
            "max_orthogonality_drift": self.max_orthogonality_drift,
            "max_coupling_norm_drift": self.max_coupling_norm_drift,
            "lax_eigenvalue_drift": self.lax_eigenvalue_drift,
            "n_accepted": self.n_accepted,
            "n_rejected": self.n_rejected,
            "flagged": self.flagged,
        }


@dataclass
class Trajectory:
    """Time-sampled states of the Lax eigenvector."""

    times: np.ndarray
    xs: np.ndarray  # (n_times, n_sites)
    ys: np.ndarray
    config: RingConfig

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.xs = np.asarray(self.xs, dtype=float)
        self.ys = np.asarray(self.ys, dtype=float)
        if not (len(self.times) == len(self.xs) == len(self.ys)):
            raise ValueError("times and states must have equal length")
        if len(self.times) and self.times[0] != 0.0:
            raise ValueError("trajectory must start at t = 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def n_sites(self):
        return self.xs.shape[1]

    def state(self, i: int) -> LaxEigenvector:
        return LaxEigenvector(self.xs[i].copy(), self.ys[i].copy())

    def couplings(self) -> np.ndarray:
        """Coupling profiles at every sample, shape (n_times, n_sites)."""
        xp = antiperiodic_shift_rows(self.xs)
        yp = antiperiodic_shift_rows(self.ys)
        return 2.0 * self.config.lax_scale * (xp * self.ys - self.xs * yp)

    def wavefunctions_q(self) -> np.ndarray:
        """Real q-gauge wave functions sqrt(2) x at every sample."""
        return np.sqrt(2.0) * self.xs


def antiperiodic_shift_rows(v: np.ndarray) -> np.ndarray:
    """Row-wise one-site antiperiodic shift (helper for sampled series)."""
    w = np.roll(v, -1, axis=-1)
    w[..., -1] = -w[..., -1]
    return w


def rhs(a: LaxEigenvector, config: RingConfig) -> np.ndarray:
    """Tangent (dx, dy) of the reduced dynamics, as a stacked 2N vector.

    Reference implementation: carries the antiperiodic seam signs
    explicitly.  They cancel in every quadratic neighbor term, which is why
    the kernels use a plain periodic wrap; the two are asserted equal in the
    test suite.
    """
    x, y = a.x, a.y
    xl, yl = antiperiodic_shift(x, -1), antiperiodic_shift(y, -1)
    xr, yr = antiperiodic_shift(x, 1), antiperiodic_shift(y, 1)
    w = xl * yl + xr * yr
    g = 2.0 * config.lax_scale
    dx = g * ((xl * xl + xr * xr) * y - w * x)
    dy = g * (-(yl * yl + yr * yr) * x + w * y)
    return np.concatenate([dx, dy])


def rhs_via_hamiltonian(a: LaxEigenvector, config: RingConfig) -> np.ndarray:
    """Same tangent through the operator route: reconstruct the couplings,
    assemble the q-gauge Hamiltonian and apply -i H^Q to a.

    Must agree with :func:`rhs` to ~1e-12 relative; the agreement is the
    numerical certificate that the componentwise equations are exactly the
    projection of the operator evolution.
    """
    j = couplings_from_lax(a, config)
    hq = hamiltonian_matrix(j, Q_GAUGE, config)
    da = -1j * (hq @ a.as_complex())
    return np.concatenate([da.real, da.imag])


def _report_from_stats(stats, tol) -> InvariantReport:
    rep = InvariantReport(
        max_norm_drift=float(stats["max_norm_drift"]),
        max_orthogonality_drift=float(stats["max_orth_drift"]),
        max_coupling_norm_drift=float(stats["max_coupling_drift"]),
        n_accepted=int(stats["n_accepted"]),
        n_rejected=int(stats["n_rejected"]),
    )
    # the flag measures drift accumulated BY the integration (relative to the
    # initial values), so an imperfectly normalized start does not trip it
    drift = float(stats["max_norm_step_drift"]) + float(stats["max_orth_step_drift"])
    if drift > DRIFT_FLAG_FACTOR * tol:
        rep.flagged = True
        warnings.warn(
            f"invariant drift {drift:.3e} exceeds {DRIFT_FLAG_FACTOR:.0e} x tol",
            RuntimeWarning,
            stacklevel=3,
        )
    return rep


def integrate(
    a0: LaxEigenvector,
    t_final: float,
    config: RingConfig,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    samples: int = 200,
    t_eval: Optional[np.ndarray] = None,
    project: bool = False,
    validate_tol: float = 1e-10,
):
    """Integrate the reduced dynamics over [0, t_final].

    Adaptive embedded Runge-Kutta 5(4) with per-step error control at
    (rtol, atol); trajectory samples come from the integrator's dense-output
    interpolant, never from re-integration.  ``samples`` uniform intervals
    are used unless an explicit ``t_eval`` grid inside [0, t_final] is given.
    Normalization is NOT re-imposed by default -- invariant drift is a
    diagnostic, not something to hide; pass ``project=True`` to renormalize
    after every accepted step (long-horizon runs).

    Returns ``(Trajectory, InvariantReport)``.  Raises
    :class:`IntegrationError` on step-size underflow and ValueError if the
    initial state violates the eigenvector invariants beyond
    ``validate_tol``.
    """
    if not t_final > 0:
        raise ValueError(f"t_final must be positive, got {t_final!r}")
    if validate_tol is not None:
        a0.require_valid(validate_tol)
    if t_eval is None:
        t_eval = np.linspace(0.0, t_final, int(samples) + 1)
    else:
        t_eval = np.asarray(t_eval, dtype=float)
        if np.any(t_eval < 0) or np.any(t_eval > t_final * (1 + 1e-12)):
            raise ValueError("t_eval must lie inside [0, t_final]")
        if np.any(np.diff(t_eval) < 0):
            raise ValueError("t_eval must be sorted ascending")
    tol = max(rtol, atol)
    status, z_end, out, stats = kernels.solve_reduced(
        config.lax_scale, a0.as_real_pair(), float(t_final), rtol, atol,
        t_eval, project
    )
    if status == kernels.STATUS_STEP_UNDERFLOW:
        raise IntegrationError(
            f"step size underflow at t = {stats['t_fail']:.6g}",
            t_fail=float(stats["t_fail"]),
            state=z_end,
        )
    n = config.n_sites
    traj = Trajectory(times=t_eval, xs=out[:, :n], ys=out[:, n:], config=config)
    return traj, _report_from_stats(stats, tol)


def integrate_endpoint(
    a0: LaxEigenvector,
    t_final: float,
    config: RingConfig,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    project: bool = False,
):
    """End state only (no trajectory storage); the shooting loop's fast path.

    Returns ``(LaxEigenvector, InvariantReport)``.
    """
    status, z_end, _, stats = kernels.solve_reduced(
        config.lax_scale, a0.as_real_pair(), float(t_final), rtol, atol,
        np.empty(0), project
    )
    if status == kernels.STATUS_STEP_UNDERFLOW:
        raise IntegrationError(
            f"step size underflow at t = {stats['t_fail']:.6g}",
            t_fail=float(stats["t_fail"]),
            state=z_end,
        )
    return LaxEigenvector.from_real_pair(z_end), _report_from_stats(stats, max(rtol, atol))
