"""Pure-numpy kernels: reduced-dynamics right-hand side and the adaptive
Dormand-Prince 5(4) integrator.

This module is the fallback twin of the compiled ``_kernels`` extension and
implements the identical algorithm (same tableau, same controller, same
dense-output interpolant).  The two backends agree to integration accuracy
but not bit-for-bit: floating-point reduction order differs.
"""

import numpy as np

from ._dp54_tableau import A_ROWS as _A, E_ERR as _E, P_DENSE as _P

BACKEND_NAME = "python"

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1


def rhs(l0, z):
    """Tangent of the reduced nonlinear dynamics for the stacked state
    z = (x, y).

    Neighbor terms are quadratic, so the antiperiodic seam signs cancel and a
    plain periodic wrap is exact (asserted against the sign-carrying
    reference in the test suite).
    """
    n = z.size // 2
    x = z[:n]
    y = z[n:]
    xl = np.roll(x, 1)
    yl = np.roll(y, 1)
    xr = np.roll(x, -1)
    yr = np.roll(y, -1)
    w = xl * yl + xr * yr
    out = np.empty_like(z)
    g = 2.0 * l0
    out[:n] = g * ((xl * xl + xr * xr) * y - w * x)
    out[n:] = g * (-(yl * yl + yr * yr) * x + w * y)
    return out


def coupling_norm_sq(l0, z):
    """Sum of squared couplings for a stacked state."""
    n = z.size // 2
    x = z[:n]
    y = z[n:]
    xp = np.roll(x, -1)
    yp = np.roll(y, -1)
    xp[-1] = -xp[-1]
    yp[-1] = -yp[-1]
    j = 2.0 * l0 * (xp * y - x * yp)
    return float(j @ j)


def _project(z):
    """Re-impose <x|x> = <y|y> = 1/2 and <x|y> = 0 in place."""
    n = z.size // 2
    x = z[:n]
    y = z[n:]
    x *= np.sqrt(0.5 / (x @ x))
    y -= 2.0 * (x @ y) * x
    y *= np.sqrt(0.5 / (y @ y))


def _error_norm(e, z0, z1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(z0), np.abs(z1))
    return float(np.sqrt(np.mean((e / scale) ** 2)))


def _initial_step(l0, z0, f0, t_end, rtol, atol):
    scale = atol + rtol * np.abs(z0)
    d0 = float(np.sqrt(np.mean((z0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    if not np.isfinite(h0) or h0 <= 0.0:  # wildly scaled or non-finite states
        return min(1e-6, t_end)
    z1 = z0 + h0 * f0
    f1 = rhs(l0, z1)
    d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, t_end)


def solve_reduced(l0, z0, t_end, rtol, atol, t_samples, project=False):
    """Integrate the reduced dynamics over [0, t_end].

    Parameters
    ----------
    l0 : float
        Dynamics scale (inverse-time units).
    z0 : ndarray, shape (2N,)
        Initial stacked state (x, y).
    t_end : float
        Final time, > 0.
    rtol, atol : float
        Per-step error control tolerances.
    t_samples : ndarray
        Sorted times in [0, t_end] at which dense output is emitted.
    project : bool
        Re-impose normalization/orthogonality after every accepted step.

    Returns
    -------
    status : int
        ``STATUS_OK`` or ``STATUS_STEP_UNDERFLOW``.
    z_end : ndarray
        State at ``t_end`` (at the failure time on underflow).
    out : ndarray, shape (len(t_samples), 2N)
        Dense-output samples (rows past the failure time are left zero).
    stats : dict
        Step counts and invariant-drift maxima over accepted steps:
        ``max_norm_drift`` (|<x|x>-1/2| + |<y|y>-1/2|),
        ``max_orth_drift`` (|<x|y>|) and ``max_coupling_drift`` (relative
        drift of the squared coupling norm), plus ``t_fail`` (NaN if ok).
    """
    z = np.array(z0, dtype=float, copy=True)
    n2 = z.size
    n = n2 // 2
    t_samples = np.asarray(t_samples, dtype=float)
    out = np.zeros((t_samples.size, n2))
    k_stages = np.empty((7, n2))

    j2_ref = coupling_norm_sq(l0, z)
    j2_den = j2_ref if j2_ref > 0.0 else 1.0

    nx0 = z[:n] @ z[:n]
    ny0 = z[n:] @ z[n:]
    oxy0 = z[:n] @ z[n:]
    max_norm = abs(nx0 - 0.5) + abs(ny0 - 0.5)
    max_orth = abs(oxy0)
    max_norm_step = 0.0  # drift relative to the initial values (flag metric)
    max_orth_step = 0.0
    max_coup = 0.0
    n_accepted = 0
    n_rejected = 0

    # emit any samples at t = 0 before stepping
    isamp = 0
    while isamp < t_samples.size and t_samples[isamp] <= 0.0:
        out[isamp] = z
        isamp += 1

    t = 0.0
    f = rhs(l0, z)
    h = _initial_step(l0, z, f, t_end, rtol, atol)

    def stats(t_fail=np.nan):
        return {
            "n_accepted": n_accepted,
            "n_rejected": n_rejected,
            "max_norm_drift": max_norm,
            "max_orth_drift": max_orth,
            "max_norm_step_drift": max_norm_step,
            "max_orth_step_drift": max_orth_step,
            "max_coupling_drift": max_coup,
            "t_fail": t_fail,
        }

    while t < t_end:
        h = min(h, t_end - t)
        if not h >= 1e-14 * max(1.0, abs(t)):  # catches NaN step sizes too
            return STATUS_STEP_UNDERFLOW, z, out, stats(t_fail=t)

        k_stages[0] = f
        for s in range(1, 6):
            zs = z + h * (_A[s] @ k_stages[:s])
            k_stages[s] = rhs(l0, zs)
        z_new = z + h * (_A[6] @ k_stages[:6])
        k_stages[6] = rhs(l0, z_new)

        err = _error_norm(h * (_E @ k_stages), z, z_new, rtol, atol)
        if not err <= 1.0:  # rejects NaN as well
            n_rejected += 1
            factor = _MIN_FACTOR if np.isnan(err) else max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            h *= factor
            continue

        t_new = t_end if h >= (t_end - t) else t + h

        # dense output for samples inside (t, t_new]
        if isamp < t_samples.size and t_samples[isamp] <= t_new:
            q_interp = k_stages.T @ _P  # (2N, 4)
            while isamp < t_samples.size and t_samples[isamp] <= t_new:
                theta = (t_samples[isamp] - t) / h
                powers = np.array([theta, theta**2, theta**3, theta**4])
                out[isamp] = z + h * (q_interp @ powers)
                isamp += 1

        z, f = z_new, k_stages[6]
        t = t_new
        n_accepted += 1

        nx = z[:n] @ z[:n]
        ny = z[n:] @ z[n:]
        oxy = z[:n] @ z[n:]
        max_norm = max(max_norm, abs(nx - 0.5) + abs(ny - 0.5))
        max_orth = max(max_orth, abs(oxy))
        max_norm_step = max(max_norm_step, abs(nx - nx0) + abs(ny - ny0))
        max_orth_step = max(max_orth_step, abs(oxy - oxy0))
        max_coup = max(max_coup, abs(coupling_norm_sq(l0, z) - j2_ref) / j2_den)

        if project:
            _project(z)
            f = rhs(l0, z)  # projection invalidates the FSAL stage

        factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * err ** -0.2)
        h *= max(_MIN_FACTOR, factor)

    # samples exactly at t_end that were not reached by interpolation
    while isamp < t_samples.size:
        out[isamp] = z
        isamp += 1

    return STATUS_OK, z, out, stats()
