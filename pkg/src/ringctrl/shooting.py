"""Traveling-wave boundary-value problem: shooting with damped least squares.

The unknowns are the free half of the mirror-symmetric initial state plus
the dynamics scale L0 (transfer time tau is fixed by the configuration, 1 in
the canonical run).  One residual evaluation integrates the reduced
dynamics over [0, tau] and measures how far the end state is from the
one-site right shift of the initial state (with the antiperiodic seam sign)
together with the normalization rows; the system is overdetermined
(2N + 3 residuals, N + 1 unknowns) and is driven to a least-squares
fixed point whose residual certifies consistency.
"""

from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import curve_fit

from .backend import kernels
from .config import RingConfig, IntegrationError
from .core import (
    LaxEigenvector,
    couplings_from_lax,
    initial_guess_fit,
    random_symmetric_guess,
    _symmetrize,
)
from .dynamics import InvariantReport, Trajectory, integrate

# Empirical scaling of the converged L0 tau with ring size (used for initial
# guesses and as the reference curve in scaling tests).
L0_TAU_COEFFS = (0.58, 0.42, 0.58)


def l0_tau_reference(n: int) -> float:
    """Reference curve c0 + c1 * N**c2 for the product L0 tau."""
    c0, c1, c2 = L0_TAU_COEFFS
    return c0 + c1 * float(n) ** c2


@dataclass
class ShootingUnknowns:
    """Free parameters of the shooting problem for odd N.

    ``x_half`` holds x_1..x_{(N+1)/2} (the rest is the mirror image),
    ``y_half`` holds y_1..y_{(N-1)/2} (the middle component is pinned to 0
    and the rest is the negated mirror image), and ``l0`` is the dynamics
    scale.  Converged solutions are canonicalized to l0 > 0 via the exact
    symmetry (l0, y) -> (-l0, -y).
    """

    x_half: np.ndarray
    y_half: np.ndarray
    l0: float

    def __post_init__(self):
        self.x_half = np.asarray(self.x_half, dtype=float)
        self.y_half = np.asarray(self.y_half, dtype=float)
        if self.x_half.size != self.y_half.size + 1:
            raise ValueError(
                f"need len(x_half) == len(y_half) + 1, got "
                f"{self.x_half.size} and {self.y_half.size}"
            )

    @property
    def n_sites(self) -> int:
        return 2 * self.x_half.size - 1

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.x_half, self.y_half, [self.l0]])

    @classmethod
    def from_vector(cls, v: np.ndarray, n: int) -> "ShootingUnknowns":
        v = np.asarray(v, dtype=float)
        h = (n + 1) // 2
        if v.size != n + 1:
            raise ValueError(f"expected {n + 1} entries for N={n}, got {v.size}")
        return cls(v[:h].copy(), v[h:n].copy(), float(v[-1]))


def expand_unknowns(u: ShootingUnknowns, config: RingConfig) -> LaxEigenvector:
    """Mirror the free components into the full state (x even, y odd about
    the middle site).  Deliberately does NOT renormalize: the normalization
    conditions are residual rows, not constraints on the parametrization."""
    config.require_odd()
    if u.n_sites != config.n_sites:
        raise ValueError(f"unknowns are for N={u.n_sites}, config has N={config.n_sites}")
    x = np.concatenate([u.x_half, u.x_half[:-1][::-1]])
    y = np.concatenate([u.y_half, [0.0], -u.y_half[::-1]])
    return LaxEigenvector(x, y)


def extract_unknowns(a: LaxEigenvector, l0: float, config: RingConfig) -> ShootingUnknowns:
    """Inverse of :func:`expand_unknowns` on symmetric states."""
    config.require_odd()
    h = (config.n_sites + 1) // 2
    return ShootingUnknowns(a.x[:h].copy(), a.y[:h - 1].copy(), float(l0))


def shooting_residual(
    u: Union[ShootingUnknowns, np.ndarray],
    config: RingConfig,
    *,
    rtol: float = 1e-12,
    atol: float = 1e-12,
) -> np.ndarray:
    """Residual vector of length 2N + 3.

    Components, in order: the N x-shift conditions x_{m+1}(tau) - x_m(0) for
    m = 1..N-1 followed by the seam condition x_1(tau) + x_N(0); the same N
    conditions for y; then <x|x> - 1/2, <y|y> - 1/2 and <x|y> at t = 0 (the
    last is identically zero under the symmetric parametrization and is kept
    as a consistency row).

    Raises :class:`IntegrationError` (with the offending parameter vector
    attached as ``params``) if the integration underflows.
    """
    if not isinstance(u, ShootingUnknowns):
        u = ShootingUnknowns.from_vector(u, config.n_sites)
    n = config.n_sites
    a0 = expand_unknowns(u, config)
    z0 = a0.as_real_pair()
    status, z_end, _, stats = kernels.solve_reduced(
        u.l0, z0, config.transfer_time, rtol, atol, np.empty(0), False
    )
    if status != kernels.STATUS_OK:
        err = IntegrationError(
            f"integration failed at t = {stats['t_fail']:.6g} during residual "
            f"evaluation (l0 = {u.l0:.6g})",
            t_fail=float(stats["t_fail"]),
            state=z_end,
        )
        err.params = u.to_vector()
        raise err
    x0, y0 = a0.x, a0.y
    x1, y1 = z_end[:n], z_end[n:]
    r = np.empty(2 * n + 3)
    r[: n - 1] = x1[1:] - x0[:-1]
    r[n - 1] = x1[0] + x0[-1]
    r[n : 2 * n - 1] = y1[1:] - y0[:-1]
    r[2 * n - 1] = y1[0] + y0[-1]
    r[2 * n] = x0 @ x0 - 0.5
    r[2 * n + 1] = y0 @ y0 - 0.5
    r[2 * n + 2] = x0 @ y0
    return r


@dataclass
class LMResult:
    """Outcome of a damped least-squares minimization."""

    u: np.ndarray
    residual: np.ndarray
    converged: bool
    n_iter: int
    n_fev: int
    message: str
    jac_cond: float = np.nan

    @property
    def residual_inf(self) -> float:
        return float(np.max(np.abs(self.residual)))


def _fd_jacobian(fun, u, r0, step):
    """Forward-difference Jacobian, column i stepped by
    max(step, step * |u_i|)."""
    jac = np.empty((r0.size, u.size))
    for i in range(u.size):
        h = max(step, step * abs(u[i]))
        up = u.copy()
        up[i] += h
        jac[:, i] = (fun(up) - r0) / h
    return jac


def levenberg_marquardt(
    fun: Callable[[np.ndarray], np.ndarray],
    u0: np.ndarray,
    *,
    accept_tol: float = 1e-8,
    max_iter: int = 120,
    lambda0: float = 1e-3,
    fd_step: float = 1e-7,
) -> LMResult:
    """Minimize ||fun(u)||^2 by Levenberg-Marquardt with a forward-difference
    Jacobian and Marquardt diagonal scaling.

    Convergence is declared when the residual infinity norm drops below
    ``accept_tol``.  The damping parameter shrinks by 3 after an accepted
    step and grows by 10 after a rejected one; a trial point where ``fun``
    raises :class:`IntegrationError` or returns non-finite values counts as
    rejected.  Everything is deterministic for fixed inputs.
    """
    u = np.asarray(u0, dtype=float).copy()
    r = fun(u)
    n_fev = 1
    cost = float(r @ r)
    lam = lambda0
    converged = False
    message = f"iteration budget ({max_iter}) exhausted"
    jac = None
    n_iter = 0

    for n_iter in range(1, max_iter + 1):
        if np.max(np.abs(r)) < accept_tol:
            converged = True
            message = "residual below accept_tol"
            break
        jac = _fd_jacobian(fun, u, r, fd_step)
        n_fev += u.size
        a_mat = jac.T @ jac
        grad = jac.T @ r
        damp = np.diag(a_mat).copy()
        damp[damp < 1e-14] = 1e-14
        accepted = False
        delta = None
        while lam < 1e14:
            try:
                delta = np.linalg.solve(a_mat + lam * np.diag(damp), -grad)
            except np.linalg.LinAlgError:
                delta = None
            if delta is not None and np.all(np.isfinite(delta)):
                u_try = u + delta
                try:
                    r_try = fun(u_try)
                    n_fev += 1
                except IntegrationError:
                    r_try = None
                if r_try is not None and np.all(np.isfinite(r_try)):
                    cost_try = float(r_try @ r_try)
                    if cost_try < cost:
                        u, r, cost = u_try, r_try, cost_try
                        lam = max(lam / 3.0, 1e-14)
                        accepted = True
                        break
            lam *= 10.0
        if not accepted:
            message = "damping exhausted without a descent step"
            break
        if np.linalg.norm(delta) <= 1e-14 * (1.0 + np.linalg.norm(u)):
            message = "step size below machine resolution"
            break

    if not converged and np.max(np.abs(r)) < accept_tol:
        converged = True
        message = "residual below accept_tol"

    if jac is None:  # converged without ever needing a Jacobian
        jac = _fd_jacobian(fun, u, r, fd_step)
        n_fev += u.size
    jac_cond = float(np.linalg.cond(jac))

    return LMResult(
        u=u,
        residual=r,
        converged=converged,
        n_iter=n_iter,
        n_fev=n_fev,
        message=message,
        jac_cond=jac_cond,
    )


@dataclass
class SolverOptions:
    """Knobs of :func:`solve`.  ``rtol``/``atol`` control the integrations
    inside the residual; the verification pass re-certifies the converged
    point at ``verify_rtol``/``verify_atol``."""

    accept_tol: float = 1e-8
    max_iter: int = 120
    rtol: float = 1e-10
    atol: float = 1e-10
    lambda0: float = 1e-3
    fd_step: float = 1e-7
    keep_trajectory: bool = True
    trajectory_samples: int = 200
    verify_rtol: float = 1e-12
    verify_atol: float = 1e-12


@dataclass
class BrachSolution:
    """Converged boundary-value result.

    ``j0`` is the root of the conserved squared coupling sum at t = 0 and
    ``j0_tau`` its product with the transfer time -- the scale-invariant
    figure of merit of the protocol.  ``config.lax_scale`` equals ``l0``.
    """

    config: RingConfig
    a0: LaxEigenvector
    l0: float
    tau: float
    j0: float
    j0_tau: float
    residual_norm: float
    converged: bool
    invariants: InvariantReport
    trajectory: Optional[Trajectory] = None
    diagnostics: dict = field(default_factory=dict)


def _initial_unknowns(config, guess, seed):
    n = config.n_sites
    l0_start = l0_tau_reference(n) / config.transfer_time
    if isinstance(guess, ShootingUnknowns):
        return guess
    if isinstance(guess, LaxEigenvector):
        return extract_unknowns(guess, l0_start, config)
    if isinstance(guess, tuple) and len(guess) == 2:
        return extract_unknowns(guess[0], float(guess[1]), config)
    if guess == "fit":
        return extract_unknowns(initial_guess_fit(config), l0_start, config)
    if guess == "random":
        return extract_unknowns(random_symmetric_guess(config, seed), l0_start, config)
    raise ValueError(f"unknown guess {guess!r}")


def solve(
    config: RingConfig,
    guess="fit",
    *,
    seed: int = 0,
    options: Optional[SolverOptions] = None,
) -> BrachSolution:
    """Solve the traveling-wave boundary-value problem for odd N >= 3.

    ``guess`` is one of ``"fit"`` (analytic envelope), ``"random"`` (seeded
    symmetric random state), a :class:`LaxEigenvector`, an
    ``(eigenvector, l0)`` pair, or explicit :class:`ShootingUnknowns`.
    The returned solution is canonicalized to l0 > 0 and re-certified at the
    verification tolerance; ``converged`` reflects that re-certification,
    and a failed solve returns the best iterate with ``converged=False``
    rather than raising.
    """
    config.require_odd()
    opts = options or SolverOptions()
    n = config.n_sites
    u0 = _initial_unknowns(config, guess, seed)

    def fun(v):
        return shooting_residual(v, config, rtol=opts.rtol, atol=opts.atol)

    lm = levenberg_marquardt(
        fun,
        u0.to_vector(),
        accept_tol=opts.accept_tol,
        max_iter=opts.max_iter,
        lambda0=opts.lambda0,
        fd_step=opts.fd_step,
    )
    u = ShootingUnknowns.from_vector(lm.u, n)
    if u.l0 < 0:  # (l0, y) -> (-l0, -y) leaves the dynamics invariant
        u = ShootingUnknowns(u.x_half, -u.y_half, -u.l0)

    r_certified = shooting_residual(
        u, config, rtol=opts.verify_rtol, atol=opts.verify_atol
    )
    residual_norm = float(np.max(np.abs(r_certified)))
    converged = bool(lm.converged and residual_norm < opts.accept_tol)

    solved_config = config.with_lax_scale(u.l0) if u.l0 > 0 else config
    a0 = expand_unknowns(u, solved_config)
    j0 = couplings_from_lax(a0, solved_config).norm
    tau = config.transfer_time

    trajectory = None
    invariants = InvariantReport()
    if opts.keep_trajectory and u.l0 > 0:
        trajectory, invariants = integrate(
            a0,
            tau,
            solved_config,
            rtol=opts.verify_rtol,
            atol=opts.verify_atol,
            samples=opts.trajectory_samples,
            validate_tol=None if not converged else 1e-8,
        )

    return BrachSolution(
        config=solved_config,
        a0=a0,
        l0=float(u.l0),
        tau=float(tau),
        j0=float(j0),
        j0_tau=float(j0 * tau),
        residual_norm=residual_norm,
        converged=converged,
        invariants=invariants,
        trajectory=trajectory,
        diagnostics={
            "guess": guess if isinstance(guess, str) else "explicit",
            "seed": int(seed),
            "n_iter": lm.n_iter,
            "n_fev": lm.n_fev,
            "lm_message": lm.message,
            "lm_residual_inf": lm.residual_inf,
            "jac_cond": lm.jac_cond,
            "accept_tol": opts.accept_tol,
            "rtol": opts.rtol,
            "atol": opts.atol,
            "backend": kernels.BACKEND_NAME,
        },
    )


def _warm_start(prev: BrachSolution, n_new: int) -> ShootingUnknowns:
    """Interpolate a converged envelope onto a larger lattice.

    x decays fast and is padded with zeros; y has non-decaying antisymmetric
    tails and is padded with its edge values.  The result is re-symmetrized
    and renormalized, and l0 is rescaled along the reference curve.
    """
    n_prev = prev.config.n_sites
    z_prev = np.arange(1, n_prev + 1, dtype=float) - (n_prev + 1) / 2.0
    z_new = np.arange(1, n_new + 1, dtype=float) - (n_new + 1) / 2.0
    x = np.interp(z_new, z_prev, prev.a0.x, left=0.0, right=0.0)
    y = np.interp(z_new, z_prev, prev.a0.y)  # edge values extend the tails
    x, y = _symmetrize(x, y)
    l0 = prev.l0 * l0_tau_reference(n_new) / l0_tau_reference(n_prev)
    cfg = RingConfig(n_new, lax_scale=max(l0, 1e-6), transfer_time=prev.tau)
    return extract_unknowns(LaxEigenvector(x, y), l0, cfg)


@dataclass
class SweepRow:
    n: int
    l0: float
    tau: float
    l0_tau: float
    j0_tau: float
    residual_norm: float
    converged: bool


@dataclass
class SweepFit:
    """Nonlinear fit of l0 tau against c0 + c1 * N**c2."""

    coeffs: tuple
    stderr: tuple
    max_rel_dev: float
    n_points: int


@dataclass
class SweepResult:
    rows: list
    fit: Optional[SweepFit]
    solutions: dict  # n -> BrachSolution

    def table(self) -> np.ndarray:
        return np.array([[r.n, r.l0_tau, r.j0_tau, r.residual_norm] for r in self.rows])


def fit_l0_tau(ns: Sequence[int], l0_taus: Sequence[float]) -> SweepFit:
    """Least-squares fit of the size scaling; needs at least 4 points."""
    ns = np.asarray(ns, dtype=float)
    vals = np.asarray(l0_taus, dtype=float)
    if ns.size < 4:
        raise ValueError(f"fit needs >= 4 points, got {ns.size}")

    def model(n, c0, c1, c2):
        return c0 + c1 * n**c2

    popt, pcov = curve_fit(model, ns, vals, p0=(0.6, 0.4, 0.6), maxfev=20000)
    pred = model(ns, *popt)
    rel = np.max(np.abs(pred - vals) / np.abs(vals))
    return SweepFit(
        coeffs=tuple(float(c) for c in popt),
        stderr=tuple(float(s) for s in np.sqrt(np.diag(pcov))),
        max_rel_dev=float(rel),
        n_points=int(ns.size),
    )


def sweep(
    n_list: Sequence[int],
    *,
    tau: float = 1.0,
    guess="fit",
    seed: int = 0,
    options: Optional[SolverOptions] = None,
    warm_start: bool = True,
    threads: int = 1,
) -> SweepResult:
    """Solve for every (odd) N in ``n_list`` and fit the l0 tau scaling.

    With ``threads == 1`` the sizes are solved in ascending order and each
    solve is warm-started from the previous converged envelope; with more
    threads the sizes are solved independently from the requested guess
    (warm starting is inherently sequential) and merged in N order.  The fit
    is attempted only when at least 4 sizes converged; rows are reported
    either way.
    """
    ns = sorted(int(n) for n in n_list)
    if not ns:
        raise ValueError("n_list must not be empty")
    for n in ns:
        if n < 3 or n % 2 == 0:
            raise ValueError(f"ring sizes must be odd and >= 3, got {n}")
    opts = options or SolverOptions()

    solutions = {}
    if threads > 1:
        def job(n):
            return solve(RingConfig(n, transfer_time=tau), guess, seed=seed, options=opts)

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for n, sol in zip(ns, pool.map(job, ns)):
                solutions[n] = sol
    else:
        prev = None
        for n in ns:
            cfg = RingConfig(n, transfer_time=tau)
            if warm_start and prev is not None and prev.converged:
                sol = solve(cfg, _warm_start(prev, n), seed=seed, options=opts)
                if not sol.converged:  # fall back to the requested guess mode
                    sol = solve(cfg, guess, seed=seed, options=opts)
            else:
                sol = solve(cfg, guess, seed=seed, options=opts)
            solutions[n] = sol
            if sol.converged:
                prev = sol

    rows = [
        SweepRow(
            n=n,
            l0=solutions[n].l0,
            tau=solutions[n].tau,
            l0_tau=solutions[n].l0 * solutions[n].tau,
            j0_tau=solutions[n].j0_tau,
            residual_norm=solutions[n].residual_norm,
            converged=solutions[n].converged,
        )
        for n in ns
    ]
    good = [r for r in rows if r.converged]
    fit = None
    if len(good) >= 4:
        fit = fit_l0_tau([r.n for r in good], [r.l0_tau for r in good])
    return SweepResult(rows=rows, fit=fit, solutions=solutions)
