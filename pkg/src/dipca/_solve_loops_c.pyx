"""Hot iteration loops, BLAS-backed Cython twin of ``_solve_loops_py``.

Same contract and status codes as the pure module; the whole outer loop runs
in C with cython_blas level-2 calls, so per-iteration Python overhead is gone.
Results may differ from the pure backend only by floating-point reassociation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs
from scipy.linalg.cython_blas cimport daxpy, ddot, dgemv, dnrm2

cnp.import_array()

STATUS_CONVERGED = 0
STATUS_MAX_OUTER = 1
STATUS_DEGENERATE_DIRECTION = 2
STATUS_ZERO_DIRECTION = 3
STATUS_OSCILLATION = 4

BACKEND_NAME = "compiled"

cdef double TINY = 1e-14
cdef int OSC_ROUNDS = 10
cdef int OSC_WARMUP = 30
cdef double OSC_DOT_MAX = 0.999
cdef double OSC_STALL_FACTOR = 0.999

cdef int INC1 = 1
cdef char TRANS_N = b'N'
cdef char TRANS_T = b'T'


cdef inline double _dot(int n, double* x, double* y) noexcept nogil:
    return ddot(&n, x, &INC1, y, &INC1)


cdef inline double _nrm2(int n, double* x) noexcept nogil:
    return dnrm2(&n, x, &INC1)


cdef inline void _stack_matvec(int m, int sm, double* flat, double* w, double* y) noexcept nogil:
    # row-major (s*m, m) buffer is the transpose of a column-major (m, s*m)
    # matrix, so one transposed GEMV yields all s kernel-vector products
    cdef double one = 1.0, zero = 0.0
    dgemv(&TRANS_T, &m, &sm, &one, flat, &m, w, &INC1, &zero, y, &INC1)


cdef inline void _symv(int m, double* A, double* x, double* y) noexcept nogil:
    # A is symmetric, so the row/column-major mismatch cancels
    cdef double one = 1.0, zero = 0.0
    dgemv(&TRANS_N, &m, &m, &one, A, &m, x, &INC1, &zero, y, &INC1)


def run_dipca(object stack_in, object w0, object beta0, double eps_tol,
              int max_outer, int algorithm, double ratio_tol, int max_power):
    """C twin of ``_solve_loops_py.run_dipca``; see that module for the contract."""
    stack = np.ascontiguousarray(stack_in, dtype=np.float64)
    cdef const double[:, :, ::1] Y = stack
    cdef int s = Y.shape[0]
    cdef int m = Y.shape[1]
    cdef int sm = s * m
    cdef int mm = m * m

    w_arr = np.array(w0, dtype=np.float64)
    beta_arr = np.array(beta0, dtype=np.float64)
    y_arr = np.empty(sm)
    c_arr = np.empty(s)
    d_arr = np.empty(m)
    yb_arr = np.empty(mm)
    v_arr = np.empty(m)
    wn_arr = np.empty(m)
    lam_hist = np.empty(max_outer)
    res_hist = np.empty(max_outer)
    best_w_arr = w_arr.copy()
    best_beta_arr = beta_arr.copy()

    cdef double[::1] w = w_arr
    cdef double[::1] beta = beta_arr
    cdef double[::1] y = y_arr
    cdef double[::1] c = c_arr
    cdef double[::1] d = d_arr
    cdef double[::1] yb = yb_arr
    cdef double[::1] v = v_arr
    cdef double[::1] w_new = wn_arr
    cdef double[::1] lh = lam_hist
    cdef double[::1] rh = res_hist
    cdef double[::1] best_w = best_w_arr
    cdef double[::1] best_beta = best_beta_arr

    cdef int status = STATUS_MAX_OUTER
    cdef int outer = 0
    cdef long power_total = 0
    cdef int rotating = 0
    cdef int ell, i, j, k
    cdef int inner_done
    cdef double nd, nv, lam, lam_r, lam_new, res, t, best_res, best_lam

    with nogil:
        _stack_matvec(m, sm, <double*>&Y[0, 0, 0], &w[0], &y[0])
        for i in range(s):
            c[i] = _dot(m, &w[0], &y[i * m])
        for j in range(m):
            d[j] = 0.0
        for i in range(s):
            daxpy(&m, &beta[i], &y[i * m], &INC1, &d[0], &INC1)
        lam = _dot(s, &beta[0], &c[0])
        res = INFINITY
        best_res = INFINITY
        best_lam = lam

        if _nrm2(s, &c[0]) < TINY:
            status = 2  # degenerate direction
        else:
            for ell in range(max_outer):
                if algorithm == 1:
                    nd = _nrm2(m, &d[0])
                    if nd < TINY:
                        status = 3  # zero direction
                        break
                    for j in range(m):
                        w_new[j] = d[j] / nd
                    power_total += 1
                else:
                    for j in range(mm):
                        yb[j] = 0.0
                    for i in range(s):
                        daxpy(&mm, &beta[i], <double*>&Y[i, 0, 0], &INC1, &yb[0], &INC1)
                    for j in range(m):
                        w_new[j] = w[j]
                    _symv(m, &yb[0], &w_new[0], &v[0])
                    lam_r = _dot(m, &w_new[0], &v[0])
                    inner_done = 0
                    for k in range(max_power):
                        nv = _nrm2(m, &v[0])
                        if nv < TINY:
                            inner_done = -1
                            break
                        for j in range(m):
                            w_new[j] = v[j] / nv
                        _symv(m, &yb[0], &w_new[0], &v[0])
                        lam_new = _dot(m, &w_new[0], &v[0])
                        power_total += 1
                        if lam_r != 0.0 and fabs(lam_new / lam_r - 1.0) < ratio_tol:
                            lam_r = lam_new
                            inner_done = 1
                            break
                        lam_r = lam_new
                    if inner_done == -1:
                        status = 3  # zero direction
                        break
                    # step cap hit: proceed to the beta update anyway

                if _dot(m, &w_new[0], &w[0]) < OSC_DOT_MAX:
                    rotating += 1
                else:
                    rotating = 0
                for j in range(m):
                    w[j] = w_new[j]

                _stack_matvec(m, sm, <double*>&Y[0, 0, 0], &w[0], &y[0])
                for i in range(s):
                    c[i] = _dot(m, &w[0], &y[i * m])
                lam = _nrm2(s, &c[0])
                if lam < TINY:
                    for j in range(m):
                        d[j] = 0.0
                    for i in range(s):
                        daxpy(&m, &beta[i], &y[i * m], &INC1, &d[0], &INC1)
                    status = 2  # degenerate direction
                    break
                for i in range(s):
                    beta[i] = c[i] / lam
                for j in range(m):
                    d[j] = 0.0
                for i in range(s):
                    daxpy(&m, &beta[i], &y[i * m], &INC1, &d[0], &INC1)
                res = 0.0
                for j in range(m):
                    t = fabs(d[j] - lam * w[j])
                    if t > res:
                        res = t

                lh[ell] = lam
                rh[ell] = res
                outer = ell + 1

                if res < best_res:
                    best_res = res
                    best_lam = lam
                    for j in range(m):
                        best_w[j] = w[j]
                    for i in range(s):
                        best_beta[i] = beta[i]

                if res < eps_tol:
                    status = 0  # converged
                    break
                if (outer >= OSC_WARMUP and rotating >= OSC_ROUNDS
                        and res >= OSC_STALL_FACTOR * rh[ell - OSC_ROUNDS]):
                    status = 4  # stalled oscillation
                    break

    return {
        "status": status,
        "outer": outer,
        "power_total": int(power_total),
        "w": w_arr,
        "beta": beta_arr,
        "c": c_arr,
        "d": d_arr,
        "lam": float(lam),
        "res": float(res),
        "lam_hist": lam_hist[:outer].copy(),
        "res_hist": res_hist[:outer].copy(),
        "best_w": best_w_arr,
        "best_beta": best_beta_arr,
        "best_lam": float(best_lam),
        "best_res": float(best_res),
    }
