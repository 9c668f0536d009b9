"""Hot iteration loops, pure NumPy implementation.

This module and the Cython twin ``_solve_loops_c`` implement the same
contract: run the alternating weight/coefficient iteration on a prebuilt
kernel stack and report the trajectory.  ``_backend`` picks one at import
time.  Status codes instead of exceptions keep the two interchangeable.
"""

from __future__ import annotations

import numpy as np

STATUS_CONVERGED = 0
STATUS_MAX_OUTER = 1
STATUS_DEGENERATE_DIRECTION = 2
STATUS_ZERO_DIRECTION = 3
STATUS_OSCILLATION = 4

TINY = 1e-14

# stalled-oscillation detector: the iterate keeps rotating (cosine to the
# previous iterate below OSC_DOT_MAX, impossible near a fixed point) for this
# many consecutive rounds while the residual fails to improve by 0.1% over the
# same window.  Catches the limit cycles caused by negative dominant
# eigenvalues; a healthy slow solve rotates by ~0 per round and never trips it.
OSC_ROUNDS = 10
OSC_WARMUP = 30
OSC_DOT_MAX = 0.999
OSC_STALL_FACTOR = 0.999

BACKEND_NAME = "pure"


def power_iterate(Yb, w0, ratio_tol, max_power):
    """Power steps on a fixed symmetric matrix until the Rayleigh ratio test passes.

    Returns (w, rayleigh, steps, status) where status is STATUS_CONVERGED,
    STATUS_MAX_OUTER (step cap hit) or STATUS_ZERO_DIRECTION.
    """
    w = np.array(w0, dtype=np.float64)
    v = Yb @ w
    lam = float(w @ v)
    steps = 0
    for _ in range(max_power):
        nv = float(np.linalg.norm(v))
        if nv < TINY:
            return w, lam, steps, STATUS_ZERO_DIRECTION
        w = v / nv
        v = Yb @ w
        lam_new = float(w @ v)
        steps += 1
        if lam != 0.0 and abs(lam_new / lam - 1.0) < ratio_tol:
            return w, lam_new, steps, STATUS_CONVERGED
        lam = lam_new
    return w, lam, steps, STATUS_MAX_OUTER


def run_dipca(stack, w0, beta0, eps_tol, max_outer, algorithm, ratio_tol, max_power):
    """Run the alternating iteration (algorithm 1 or 2) on a kernel stack.

    Parameters
    ----------
    stack : ndarray, shape (s, m, m), C-contiguous
    w0, beta0 : unit start vectors
    algorithm : 1 (single power step per outer round) or
                2 (inner power loop to the ratio test, then the beta step)
    ratio_tol, max_power : inner-loop controls, algorithm 2 only

    Returns a dict with the final iterate, histories trimmed to the number of
    completed outer rounds, the best-residual iterate seen, and a status code.
    """
    stack = np.ascontiguousarray(stack, dtype=np.float64)
    s, m, _ = stack.shape
    flat = stack.reshape(s * m, m)

    w = np.array(w0, dtype=np.float64)
    beta = np.array(beta0, dtype=np.float64)

    y = (flat @ w).reshape(s, m)
    c = y @ w
    d = beta @ y
    lam = float(beta @ c)
    res = np.inf

    lam_hist = np.empty(max_outer)
    res_hist = np.empty(max_outer)
    outer = 0
    power_total = 0
    rotating = 0
    status = STATUS_MAX_OUTER

    best_res = np.inf
    best_w = w.copy()
    best_beta = beta.copy()
    best_lam = lam

    # a start annihilated by every quadratic form can never leave the beta step
    if float(np.linalg.norm(c)) < TINY:
        status = STATUS_DEGENERATE_DIRECTION
    else:
        for ell in range(max_outer):
            if algorithm == 1:
                nd = float(np.linalg.norm(d))
                if nd < TINY:
                    status = STATUS_ZERO_DIRECTION
                    break
                w_new = d / nd
                power_total += 1
            else:
                Yb = np.tensordot(beta, stack, axes=(0, 0))
                w_new, _, steps, pstat = power_iterate(Yb, w, ratio_tol, max_power)
                power_total += steps
                if pstat == STATUS_ZERO_DIRECTION:
                    status = STATUS_ZERO_DIRECTION
                    break
                # step cap hit: proceed to the beta update anyway

            rotating = rotating + 1 if float(w_new @ w) < OSC_DOT_MAX else 0
            w = w_new

            y = (flat @ w).reshape(s, m)
            c = y @ w
            lam = float(np.linalg.norm(c))
            if lam < TINY:
                # tidy the published state before aborting
                d = beta @ y
                status = STATUS_DEGENERATE_DIRECTION
                break
            beta = c / lam
            d = beta @ y
            res = float(np.max(np.abs(d - lam * w)))

            lam_hist[ell] = lam
            res_hist[ell] = res
            outer = ell + 1

            if res < best_res:
                best_res = res
                best_w = w.copy()
                best_beta = beta.copy()
                best_lam = lam

            if res < eps_tol:
                status = STATUS_CONVERGED
                break
            if (outer >= OSC_WARMUP and rotating >= OSC_ROUNDS
                    and res >= OSC_STALL_FACTOR * res_hist[ell - OSC_ROUNDS]):
                status = STATUS_OSCILLATION
                break

    return {
        "status": status,
        "outer": outer,
        "power_total": power_total,
        "w": w,
        "beta": beta,
        "c": np.asarray(c, dtype=np.float64),
        "d": np.asarray(d, dtype=np.float64),
        "lam": float(lam),
        "res": float(res),
        "lam_hist": lam_hist[:outer].copy(),
        "res_hist": res_hist[:outer].copy(),
        "best_w": best_w,
        "best_beta": best_beta,
        "best_lam": float(best_lam),
        "best_res": float(best_res),
    }
