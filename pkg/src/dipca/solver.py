"""Alternating solvers for the dynamic latent-variable program.

The program maximizes w' Y_beta w over unit vectors w (weights, length m) and
beta (AR coefficients, length s).  Two schemes are implemented on top of the
same kernel stack:

* algorithm I: one power step on Y_beta, then the closed-form beta step,
  per outer round;
* algorithm II: coordinate maximization; the w block is driven to power-method
  convergence (Rayleigh ratio test) before each beta step.

Both stop when the stationarity residual ||d - lambda*w||_inf drops below
eps_tol, and both report failure modes (degenerate/zero directions, stalled
oscillation) as diagnostics on the report instead of raising.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np

from . import _backend
from ._util import atomic_write_text
from .errors import DegenerateDirectionError, ZeroDirectionError
from .lagmat import KernelSet, TimeSeriesData, build_kernels, combine_kernels

_UNIT_TOL = 1e-9
_TINY = 1e-14

_DIAGNOSTICS = {
    _backend.STATUS_MAX_OUTER:
        "max_outer reached before the residual met eps_tol",
    _backend.STATUS_DEGENERATE_DIRECTION:
        "degenerate direction: w is annihilated by every kernel quadratic form (|c| < 1e-14)",
    _backend.STATUS_ZERO_DIRECTION:
        "zero direction: Y_beta @ w vanished (|d| < 1e-14)",
    _backend.STATUS_OSCILLATION:
        "stalled oscillation: the iterate keeps rotating with no residual progress "
        "(limit cycle; negative dominant eigenvalue is the usual cause)",
}


@dataclass(frozen=True)
class SolveOptions:
    """Stopping controls and initialization for both solvers.

    power_ratio_tol overrides the inner ratio test tolerance of algorithm II;
    it defaults to eps_tol.  init_mode "user" takes w0/beta0 as given
    (renormalized); "random" draws seeded uniform unit vectors.
    """

    eps_tol: float = 1e-6
    max_outer: int = 10_000
    max_power: int = 1_000
    seed: int = 0
    init_mode: str = "random"
    w0: np.ndarray | None = None
    beta0: np.ndarray | None = None
    power_ratio_tol: float | None = None

    def __post_init__(self):
        if not self.eps_tol > 0:
            raise ValueError(f"eps_tol must be positive, got {self.eps_tol}")
        if self.max_outer < 1 or self.max_power < 1:
            raise ValueError("max_outer and max_power must be >= 1")
        if self.init_mode not in ("random", "user"):
            raise ValueError(f"init_mode must be 'random' or 'user', got {self.init_mode!r}")
        if self.init_mode == "user" and (self.w0 is None or self.beta0 is None):
            raise ValueError("init_mode='user' requires both w0 and beta0")
        if self.power_ratio_tol is not None and not self.power_ratio_tol > 0:
            raise ValueError("power_ratio_tol must be positive when given")

    @property
    def ratio_tol(self) -> float:
        return self.eps_tol if self.power_ratio_tol is None else self.power_ratio_tol


@dataclass(frozen=True)
class SolverState:
    """One iterate: weights w, AR coefficients beta, and derived quantities.

    c_i = w' Y_i w, d = Y_beta w, lam is the current objective/multiplier
    estimate (||c|| right after a beta step), residual_inf the stationarity
    residual, iters the outer-iteration counter.
    """

    w: np.ndarray
    beta: np.ndarray
    c: np.ndarray
    d: np.ndarray
    lam: float
    residual_inf: float
    iters: int


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one solve: final state, histories and diagnostics."""

    state: SolverState
    converged: bool
    lambda_history: np.ndarray
    residual_history: np.ndarray
    wall_time: float
    algorithm: str
    diagnostic: str | None = None
    best: SolverState | None = None
    power_iters_total: int = 0
    backend: str = "pure"

    @property
    def iterations(self) -> int:
        return self.state.iters

    def best_state(self) -> SolverState:
        """The lowest-residual iterate seen (the final state when converged)."""
        return self.state if self.converged or self.best is None else self.best


def _check_unit(v: np.ndarray, name: str, tol: float = _UNIT_TOL) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"{name} must be a unit vector (|norm - 1| = {abs(nrm - 1.0):.3e})")
    return v


def _random_unit(rng: np.random.Generator, size: int) -> np.ndarray:
    while True:
        v = rng.standard_normal(size)
        nrm = np.linalg.norm(v)
        if nrm > 0:
            return v / nrm


def init_state(kernels: KernelSet, opts: SolveOptions) -> SolverState:
    """Draw (or adopt) the starting iterate and populate its derived fields."""
    if opts.init_mode == "user":
        w = _check_unit(opts.w0, "w0", tol=1e-6)
        beta = _check_unit(opts.beta0, "beta0", tol=1e-6)
        w = w / np.linalg.norm(w)
        beta = beta / np.linalg.norm(beta)
        if w.shape != (kernels.m,) or beta.shape != (kernels.s,):
            raise ValueError("w0/beta0 shapes do not match the kernel set")
    else:
        rng = np.random.default_rng(opts.seed)
        w = _random_unit(rng, kernels.m)
        beta = _random_unit(rng, kernels.s)
    y = kernels.stack @ w
    c = y @ w
    d = beta @ y
    return SolverState(w=w, beta=beta, c=c, d=d, lam=float(beta @ c),
                       residual_inf=np.inf, iters=0)


def beta_update(w: np.ndarray, kernels: KernelSet):
    """Closed-form coefficient step: c_i = w'Y_i w, beta = c/||c||, lambda = ||c||."""
    w = _check_unit(w, "w")
    c = (kernels.stack @ w) @ w
    lam = float(np.linalg.norm(c))
    if lam < _TINY:
        raise DegenerateDirectionError(
            "w is annihilated by every kernel quadratic form (|c| < 1e-14)")
    return c, c / lam, lam


def power_step(kernels: KernelSet, beta: np.ndarray, w: np.ndarray):
    """One power-method step on Y_beta: s kernel-vector products plus a weighted sum."""
    w = _check_unit(w, "w")
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (kernels.s,):
        raise ValueError(f"beta must have length {kernels.s}")
    y = kernels.stack @ w
    d = beta @ y
    nd = float(np.linalg.norm(d))
    if nd < _TINY:
        raise ZeroDirectionError("power step produced a zero direction (|d| < 1e-14)")
    return d / nd, d


def solve_w_subproblem(kernels: KernelSet, beta: np.ndarray, w0: np.ndarray,
                       opts: SolveOptions):
    """Drive the weight block to power-method convergence with beta fixed.

    Iterates until consecutive Rayleigh quotients satisfy
    |lam_{k+1}/lam_k - 1| < ratio_tol or max_power steps elapse.  Returns
    (w, rayleigh quotient, steps taken); steps == max_power flags an inner
    loop that hit its cap (not an error; the outer loop may still proceed).
    """
    beta = _check_unit(beta, "beta")
    w0 = _check_unit(w0, "w0")
    Yb = combine_kernels(kernels, beta)
    from . import _solve_loops_py as loops

    w, lam, steps, status = loops.power_iterate(Yb, w0, opts.ratio_tol, opts.max_power)
    if status == _backend.STATUS_ZERO_DIRECTION:
        raise ZeroDirectionError("power iteration hit a zero direction (|d| < 1e-14)")
    return w, float(lam), steps


def kkt_residual(state: SolverState, kernels: KernelSet):
    """Stationarity residual s = d - lambda*w with lambda the Rayleigh quotient.

    The coefficient-block condition is satisfied identically after any beta
    step and therefore does not enter the residual.
    """
    d = combine_kernels(kernels, state.beta) @ state.w
    lam = float(state.w @ d)
    s_vec = d - lam * state.w
    return s_vec, float(np.max(np.abs(s_vec)))


def objective(w: np.ndarray, beta: np.ndarray, kernels: KernelSet) -> float:
    """The quadratic objective w' Y_beta w."""
    w = _check_unit(w, "w")
    beta = _check_unit(beta, "beta")
    return float(w @ (combine_kernels(kernels, beta) @ w))


def _as_kernels(data_or_kernels) -> KernelSet:
    if isinstance(data_or_kernels, KernelSet):
        return data_or_kernels
    if isinstance(data_or_kernels, TimeSeriesData):
        return build_kernels(data_or_kernels)
    raise TypeError("expected TimeSeriesData or KernelSet, got "
                    f"{type(data_or_kernels).__name__}")


def _solve(data_or_kernels, opts: SolveOptions | None, algorithm: int,
           backend: str | None) -> SolveReport:
    kernels = _as_kernels(data_or_kernels)
    opts = opts or SolveOptions()
    loops = _backend.get_loops(backend)
    state0 = init_state(kernels, opts)

    t0 = time.perf_counter()
    out = loops.run_dipca(kernels.stack, state0.w, state0.beta, opts.eps_tol,
                          opts.max_outer, algorithm, opts.ratio_tol, opts.max_power)
    wall = time.perf_counter() - t0

    status = out["status"]
    converged = status == _backend.STATUS_CONVERGED
    state = SolverState(w=out["w"], beta=out["beta"], c=out["c"], d=out["d"],
                        lam=out["lam"], residual_inf=out["res"], iters=out["outer"])
    best = None
    if not converged and np.isfinite(out["best_res"]):
        bw, bb = out["best_w"], out["best_beta"]
        y = kernels.stack @ bw
        bc = y @ bw
        best = SolverState(w=bw, beta=bb, c=bc, d=bb @ y, lam=out["best_lam"],
                           residual_inf=out["best_res"], iters=out["outer"])
    return SolveReport(
        state=state,
        converged=converged,
        lambda_history=out["lam_hist"],
        residual_history=out["res_hist"],
        wall_time=wall,
        algorithm="I" if algorithm == 1 else "II",
        diagnostic=None if converged else _DIAGNOSTICS.get(status),
        best=best,
        power_iters_total=out["power_total"],
        backend=loops.BACKEND_NAME,
    )


def solve_dipca_I(data_or_kernels, opts: SolveOptions | None = None,
                  backend: str | None = None) -> SolveReport:
    """Algorithm I: alternate one power step and one beta step per outer round."""
    return _solve(data_or_kernels, opts, 1, backend)


def solve_dipca_II(data_or_kernels, opts: SolveOptions | None = None,
                   backend: str | None = None) -> SolveReport:
    """Algorithm II: run the weight block to inner convergence before each beta step."""
    return _solve(data_or_kernels, opts, 2, backend)


def report_to_dict(report: SolveReport, m: int, n: int, s: int) -> dict:
    """Model document for one fitted component (the fit-output JSON schema)."""
    st = report.state
    return {
        "algorithm": report.algorithm,
        "m": int(m),
        "n": int(n),
        "s": int(s),
        "w": [float(v) for v in st.w],
        "beta": [float(v) for v in st.beta],
        "lambda": float(st.lam),
        "residual_inf": float(st.residual_inf),
        "converged": bool(report.converged),
        "iterations": int(report.iterations),
        "wall_time_s": float(report.wall_time),
        "lambda_history": [float(v) for v in report.lambda_history],
    }


def save_model_json(report: SolveReport, kernels: KernelSet, path: str) -> dict:
    doc = report_to_dict(report, kernels.m, kernels.n_samples, kernels.s)
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")
    return doc


def load_model_json(path: str) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    required = {"algorithm", "m", "n", "s", "w", "beta", "lambda",
                "residual_inf", "converged", "iterations"}
    missing = required - doc.keys()
    if missing:
        raise ValueError(f"{path}: not a model document (missing {sorted(missing)})")
    return doc
