# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: reduced-dynamics RHS and the Dormand-Prince 5(4)
integrator.  Algorithmically identical to ``_kernels_py`` (same tableau,
controller and dense-output interpolant); the hot loops run in C with the
GIL released so independent integrations can proceed in parallel threads.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, fmax, fmin, sqrt, pow, isnan, NAN

cnp.import_array()

BACKEND_NAME = "compiled"

cdef int _STATUS_OK = 0
cdef int _STATUS_STEP_UNDERFLOW = 1
STATUS_OK = _STATUS_OK
STATUS_STEP_UNDERFLOW = _STATUS_STEP_UNDERFLOW

cdef double SAFETY = 0.9
cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 10.0

# Butcher tableau, error weights and dense-output matrix (filled at import).
cdef double A_TAB[7][7]
cdef double E_DIFF[7]
cdef double P_DENSE[7][4]


def _init_tables(a_rows, e, p):
    cdef int i, j
    for i in range(7):
        for j in range(7):
            A_TAB[i][j] = 0.0
        for j in range(len(a_rows[i])):
            A_TAB[i][j] = a_rows[i][j]
        E_DIFF[i] = e[i]
        for j in range(4):
            P_DENSE[i][j] = p[i][j]


from ._dp54_tableau import A_ROWS as _A_ROWS, E_ERR as _E_ERR, P_DENSE as _P_DENSE

_init_tables([list(r) for r in _A_ROWS], list(_E_ERR), [list(r) for r in _P_DENSE])


cdef void _rhs(int n, double l0, const double* z, double* dz) noexcept nogil:
    # Stacked state z = (x, y); antiperiodic seam signs cancel in the
    # quadratic neighbor terms, so a periodic wrap is exact.
    cdef int m, l, r
    cdef double g = 2.0 * l0
    cdef double w, xl, xr, yl, yr
    cdef const double* x = z
    cdef const double* y = z + n
    for m in range(n):
        l = n - 1 if m == 0 else m - 1
        r = 0 if m == n - 1 else m + 1
        xl = x[l]; xr = x[r]; yl = y[l]; yr = y[r]
        w = xl * yl + xr * yr
        dz[m] = g * ((xl * xl + xr * xr) * y[m] - w * x[m])
        dz[n + m] = g * (-(yl * yl + yr * yr) * x[m] + w * y[m])


cdef double _coupling_norm_sq(int n, double l0, const double* z) noexcept nogil:
    cdef int m, r
    cdef double jm, acc = 0.0, sgn
    cdef const double* x = z
    cdef const double* y = z + n
    for m in range(n):
        r = m + 1
        sgn = 1.0
        if r == n:
            r = 0
            sgn = -1.0
        jm = 2.0 * l0 * (sgn * x[r] * y[m] - x[m] * sgn * y[r])
        acc += jm * jm
    return acc


cdef double _rms_scaled(int n2, const double* v, const double* scale) noexcept nogil:
    cdef int i
    cdef double acc = 0.0, r
    for i in range(n2):
        r = v[i] / scale[i]
        acc += r * r
    return sqrt(acc / n2)


def rhs(double l0, object z_obj):
    """Tangent of the reduced dynamics for a stacked state (x, y)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] z = np.ascontiguousarray(z_obj, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(z)
    _rhs(z.shape[0] // 2, l0, &z[0], &out[0])
    return out


def coupling_norm_sq(double l0, object z_obj):
    """Sum of squared couplings for a stacked state."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] z = np.ascontiguousarray(z_obj, dtype=np.float64)
    return _coupling_norm_sq(z.shape[0] // 2, l0, &z[0])


def solve_reduced(double l0, object z0_obj, double t_end, double rtol,
                  double atol, object t_samples_obj, bint project=False):
    """Integrate the reduced dynamics over [0, t_end].

    Same contract as ``_kernels_py.solve_reduced``: returns
    ``(status, z_end, samples_out, stats)``.
    """
    z0_arr = np.array(z0_obj, dtype=np.float64, copy=True)
    ts_arr = np.ascontiguousarray(t_samples_obj, dtype=np.float64)
    cdef int n2 = z0_arr.shape[0]
    cdef int n = n2 // 2
    cdef int ns = ts_arr.shape[0]
    out_arr = np.zeros((ns, n2), dtype=np.float64)

    cdef double[::1] z = z0_arr
    cdef double[::1] ts = ts_arr
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] K = np.empty((7, n2), dtype=np.float64)
    cdef double[::1] zs = np.empty(n2, dtype=np.float64)
    cdef double[::1] znew = np.empty(n2, dtype=np.float64)
    cdef double[::1] scale = np.empty(n2, dtype=np.float64)
    cdef double[::1] ework = np.empty(n2, dtype=np.float64)

    cdef double t = 0.0, h, t_new, err, factor, theta, acc, th
    cdef double d0, d1, d2, h0, h1
    cdef double j2_ref, j2_den, nx, ny, oxy, j2, nx0, ny0, oxy0
    cdef double max_norm, max_orth, max_coup, t_fail = NAN
    cdef double max_norm_step = 0.0, max_orth_step = 0.0
    cdef long n_accepted = 0, n_rejected = 0
    cdef int i, s, q, isamp = 0, status = _STATUS_OK
    cdef bint last

    j2_ref = _coupling_norm_sq(n, l0, &z[0])
    j2_den = j2_ref if j2_ref > 0.0 else 1.0

    nx0 = 0.0; ny0 = 0.0; oxy0 = 0.0
    for i in range(n):
        nx0 += z[i] * z[i]
        ny0 += z[n + i] * z[n + i]
        oxy0 += z[i] * z[n + i]
    max_norm = fabs(nx0 - 0.5) + fabs(ny0 - 0.5)
    max_orth = fabs(oxy0)
    max_coup = 0.0

    while isamp < ns and ts[isamp] <= 0.0:
        for i in range(n2):
            out[isamp, i] = z[i]
        isamp += 1

    with nogil:
        # initial step size (standard curvature probe)
        _rhs(n, l0, &z[0], &K[0, 0])
        acc = 0.0
        d1 = 0.0
        for i in range(n2):
            scale[i] = atol + rtol * fabs(z[i])
            th = z[i] / scale[i]
            acc += th * th
            th = K[0, i] / scale[i]
            d1 += th * th
        d0 = sqrt(acc / n2)
        d1 = sqrt(d1 / n2)
        if d0 < 1e-5 or d1 < 1e-5:
            h0 = 1e-6
        else:
            h0 = 0.01 * d0 / d1
        for i in range(n2):
            zs[i] = z[i] + h0 * K[0, i]
        _rhs(n, l0, &zs[0], &znew[0])
        d2 = 0.0
        for i in range(n2):
            th = (znew[i] - K[0, i]) / scale[i]
            d2 += th * th
        d2 = sqrt(d2 / n2) / h0
        if d1 <= 1e-15 and d2 <= 1e-15:
            h1 = fmax(1e-6, h0 * 1e-3)
        else:
            h1 = pow(0.01 / fmax(d1, d2), 0.2)
        h = fmin(fmin(100.0 * h0, h1), t_end)

        while t < t_end:
            last = h >= (t_end - t)
            if last:
                h = t_end - t
            if not h >= 1e-14 * fmax(1.0, fabs(t)):  # catches NaN too
                status = _STATUS_STEP_UNDERFLOW
                t_fail = t
                break

            for s in range(1, 6):
                for i in range(n2):
                    acc = 0.0
                    for q in range(s):
                        acc += A_TAB[s][q] * K[q, i]
                    zs[i] = z[i] + h * acc
                _rhs(n, l0, &zs[0], &K[s, 0])
            for i in range(n2):
                acc = 0.0
                for q in range(6):
                    acc += A_TAB[6][q] * K[q, i]
                znew[i] = z[i] + h * acc
            _rhs(n, l0, &znew[0], &K[6, 0])

            for i in range(n2):
                acc = 0.0
                for q in range(7):
                    acc += E_DIFF[q] * K[q, i]
                ework[i] = h * acc
                scale[i] = atol + rtol * fmax(fabs(z[i]), fabs(znew[i]))
            err = _rms_scaled(n2, &ework[0], &scale[0])

            if not err <= 1.0:  # rejects NaN as well
                n_rejected += 1
                if isnan(err):
                    h *= MIN_FACTOR
                else:
                    h *= fmax(MIN_FACTOR, SAFETY * pow(err, -0.2))
                continue

            t_new = t_end if last else t + h

            while isamp < ns and ts[isamp] <= t_new:
                theta = (ts[isamp] - t) / h
                for i in range(n2):
                    acc = 0.0
                    th = theta
                    for q in range(4):
                        d0 = 0.0
                        for s in range(7):
                            d0 += K[s, i] * P_DENSE[s][q]
                        acc += d0 * th
                        th *= theta
                    out[isamp, i] = z[i] + h * acc
                isamp += 1

            for i in range(n2):
                z[i] = znew[i]
                K[0, i] = K[6, i]  # FSAL
            t = t_new
            n_accepted += 1

            nx = 0.0; ny = 0.0; oxy = 0.0
            for i in range(n):
                nx += z[i] * z[i]
                ny += z[n + i] * z[n + i]
                oxy += z[i] * z[n + i]
            th = fabs(nx - 0.5) + fabs(ny - 0.5)
            if th > max_norm:
                max_norm = th
            if fabs(oxy) > max_orth:
                max_orth = fabs(oxy)
            th = fabs(nx - nx0) + fabs(ny - ny0)
            if th > max_norm_step:
                max_norm_step = th
            if fabs(oxy - oxy0) > max_orth_step:
                max_orth_step = fabs(oxy - oxy0)
            j2 = _coupling_norm_sq(n, l0, &z[0])
            th = fabs(j2 - j2_ref) / j2_den
            if th > max_coup:
                max_coup = th

            if project:
                th = sqrt(0.5 / nx)
                for i in range(n):
                    z[i] *= th
                oxy = 0.0
                for i in range(n):
                    oxy += z[i] * z[n + i]
                for i in range(n):
                    z[n + i] -= 2.0 * oxy * z[i]
                ny = 0.0
                for i in range(n):
                    ny += z[n + i] * z[n + i]
                th = sqrt(0.5 / ny)
                for i in range(n):
                    z[n + i] *= th
                _rhs(n, l0, &z[0], &K[0, 0])  # projection invalidates FSAL

            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = fmin(MAX_FACTOR, SAFETY * pow(err, -0.2))
            h *= fmax(MIN_FACTOR, factor)

    if status == _STATUS_OK:
        while isamp < ns:
            for i in range(n2):
                out[isamp, i] = z[i]
            isamp += 1

    stats = {
        "n_accepted": n_accepted,
        "n_rejected": n_rejected,
        "max_norm_drift": max_norm,
        "max_orth_drift": max_orth,
        "max_norm_step_drift": max_norm_step,
        "max_orth_step_drift": max_orth_step,
        "max_coupling_drift": max_coup,
        "t_fail": t_fail,
    }
    return status, z0_arr, out_arr, stats


def _debug_tables():
    """Numpy copies of the C coefficient tables (test hook)."""
    a = np.zeros((7, 7))
    e = np.zeros(7)
    p = np.zeros((7, 4))
    cdef int i, j
    for i in range(7):
        e[i] = E_DIFF[i]
        for j in range(7):
            a[i, j] = A_TAB[i][j]
        for j in range(4):
            p[i, j] = P_DENSE[i][j]
    return a, e, p
