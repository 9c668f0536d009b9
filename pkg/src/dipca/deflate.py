"""Multi-component extraction by solve-and-deflate, with AR prediction.

Each round solves for one (w, beta) pair on the current data, computes the
score series t = Xw and loadings p = X't/t't, then removes the rank-one part
t p' before the next round.  The sum of the rank-one parts over all rounds
telescopes back to the original matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._util import atomic_write_text, fmt_float
from .errors import ZeroScoreError
from .lagmat import TimeSeriesData, build_kernels
from .solver import SolveOptions, SolveReport, solve_dipca_I, solve_dipca_II

_SCORE_TOL = 1e-14


@dataclass(frozen=True)
class LatentComponent:
    """One extracted component: weights, AR coefficients, scores and loadings."""

    w: np.ndarray
    beta: np.ndarray
    t: np.ndarray
    p: np.ndarray
    lam: float
    diagnostics: dict

    @property
    def converged(self) -> bool:
        return bool(self.diagnostics.get("converged", False))


@dataclass(frozen=True)
class DiPCAModel:
    """Ordered components (first = most dynamic variation) plus data metadata."""

    components: tuple
    column_means: np.ndarray
    s: int
    m: int
    n: int

    def __len__(self) -> int:
        return len(self.components)


def scores(X: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Project every sample onto the weight vector: t = Xw."""
    X = np.asarray(X, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if X.ndim != 2 or w.shape != (X.shape[1],):
        raise ValueError(f"shape mismatch: X {X.shape}, w {w.shape}")
    return X @ w


def ar_predict(t: np.ndarray, beta: np.ndarray):
    """One-step AR predictions over the usable window.

    For i in s+1..n+s (1-based), t_hat_i = sum_j beta_j t_{i-j}; returns
    (t_hat, r) of length n with r the prediction residuals.
    """
    t = np.asarray(t, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if t.ndim != 1 or beta.ndim != 1:
        raise ValueError("t and beta must be vectors")
    s = beta.shape[0]
    n = t.shape[0] - s
    if n < 1:
        raise ValueError(f"series of length {t.shape[0]} too short for lag order {s}")
    t_hat = np.zeros(n)
    for j in range(1, s + 1):
        t_hat += beta[j - 1] * t[s - j:s - j + n]
    return t_hat, t[s:] - t_hat


def deflate_once(X: np.ndarray, t: np.ndarray):
    """Remove the rank-one contribution of a score vector.

    Returns (X_next, p) with p = X't/t't; the deflated matrix is orthogonal
    to t.  Raises ZeroScoreError when t't is too small to divide by.
    """
    X = np.asarray(X, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if t.shape != (X.shape[0],):
        raise ValueError(f"shape mismatch: X {X.shape}, t {t.shape}")
    tt = float(t @ t)
    if tt <= _SCORE_TOL * t.shape[0]:
        raise ZeroScoreError(f"score energy t't = {tt:.3e} below deflation threshold")
    p = (X.T @ t) / tt
    return X - np.outer(t, p), p


def _sign_normalize(w: np.ndarray) -> np.ndarray:
    # deterministic reporting convention: largest-magnitude entry positive
    return -w if w[int(np.argmax(np.abs(w)))] < 0 else w


def _summary(report: SolveReport) -> dict:
    st = report.state
    return {
        "algorithm": report.algorithm,
        "converged": bool(report.converged),
        "iterations": int(report.iterations),
        "residual_inf": float(st.residual_inf),
        "lambda": float(st.lam),
        "wall_time_s": float(report.wall_time),
        "diagnostic": report.diagnostic,
    }


def extract_components(data: TimeSeriesData, k: int,
                       opts: SolveOptions | None = None,
                       algorithm: str = "I",
                       backend: str | None = None) -> DiPCAModel:
    """Extract k components by repeated solve-and-deflate.

    Kernels are rebuilt from the deflated matrix before every solve.  A solve
    that fails to converge contributes its best (lowest-residual) iterate and
    is flagged in the component diagnostics; extraction stops early only if
    the remaining data cannot produce a usable score (rank exhausted), in
    which case the model holds the components found so far.
    """
    if not 1 <= k <= data.m:
        raise ValueError(f"component count k={k} outside 1..{data.m}")
    if algorithm not in ("I", "II"):
        raise ValueError(f"algorithm must be 'I' or 'II', got {algorithm!r}")
    solve = solve_dipca_I if algorithm == "I" else solve_dipca_II
    opts = opts or SolveOptions()

    X = np.array(data.X)
    comps = []
    for _ in range(k):
        current = TimeSeriesData(X, data.s)
        kernels = build_kernels(current)
        report = solve(kernels, opts, backend=backend)
        st = report.best_state()
        w = _sign_normalize(st.w)
        t = scores(X, w)
        try:
            X, p = deflate_once(X, t)
        except ZeroScoreError:
            break
        comps.append(LatentComponent(w=w, beta=st.beta, t=t, p=p,
                                     lam=float(st.lam), diagnostics=_summary(report)))
    return DiPCAModel(components=tuple(comps), column_means=data.column_means,
                      s=data.s, m=data.m, n=data.n)


def reconstruct(model: DiPCAModel, k: int) -> np.ndarray:
    """Rebuild the data matrix from the first k components (means restored)."""
    if not 1 <= k <= len(model.components):
        raise ValueError(f"k={k} outside 1..{len(model.components)}")
    rows = model.n + model.s
    X_hat = np.zeros((rows, model.m))
    for comp in model.components[:k]:
        X_hat += np.outer(comp.t, comp.p)
    return X_hat + model.column_means


def model_to_dict(model: DiPCAModel) -> dict:
    return {
        "s": model.s,
        "m": model.m,
        "n": model.n,
        "column_means": [float(v) for v in model.column_means],
        "components": [
            {
                "w": [float(v) for v in comp.w],
                "beta": [float(v) for v in comp.beta],
                "t": [float(v) for v in comp.t],
                "p": [float(v) for v in comp.p],
                "lambda": float(comp.lam),
                "diagnostics": comp.diagnostics,
            }
            for comp in model.components
        ],
    }


def save_model_json(model: DiPCAModel, path: str) -> dict:
    doc = model_to_dict(model)
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")
    return doc


def load_model_json(path: str) -> DiPCAModel:
    with open(path) as fh:
        doc = json.load(fh)
    comps = tuple(
        LatentComponent(
            w=np.asarray(c["w"], dtype=np.float64),
            beta=np.asarray(c["beta"], dtype=np.float64),
            t=np.asarray(c["t"], dtype=np.float64),
            p=np.asarray(c["p"], dtype=np.float64),
            lam=float(c["lambda"]),
            diagnostics=dict(c.get("diagnostics", {})),
        )
        for c in doc["components"]
    )
    return DiPCAModel(components=comps,
                      column_means=np.asarray(doc["column_means"], dtype=np.float64),
                      s=int(doc["s"]), m=int(doc["m"]), n=int(doc["n"]))


def save_scores_csv(model: DiPCAModel, path: str) -> str:
    """Scores as CSV: one column per component, one row per time sample."""
    header = ",".join(f"component_{j + 1}" for j in range(len(model.components)))
    T = np.column_stack([comp.t for comp in model.components])
    lines = [header] + [",".join(fmt_float(v) for v in row) for row in T]
    text = "\n".join(lines) + "\n"
    atomic_write_text(path, text)
    return text
