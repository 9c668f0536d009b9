"""Second-order optimality test at fixed points via the bordered-matrix inertia.

At a stationary pair (w, beta) with multiplier lambda = w' Y_beta w, the
Lagrangian Hessian block H, the constraint Jacobian G = [[w', 0], [0, beta']]
and the bordered matrix K = [[H, G'], [G, 0]] decide the nature of the point:
the pair is a local maximizer exactly when the reduced Hessian Z'HZ (Z an
orthonormal null-space basis of G) is negative definite, equivalently when
the inertia of K is (2, m+s, 0).  Both routes are computed independently and
cross-checked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotAFixedPointError, RankDeficiencyError
from .lagmat import KernelSet, combine_kernels

ZERO_TOL_SCALE = 1e-8
RESIDUAL_GATE = 1e-4  # looser than solver eps_tol: classification is a diagnostic


@dataclass(frozen=True)
class Inertia:
    """Counts of positive, negative and (numerically) zero eigenvalues."""

    n_plus: int
    n_minus: int
    n_zero: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.n_plus, self.n_minus, self.n_zero)

    @property
    def dimension(self) -> int:
        return self.n_plus + self.n_minus + self.n_zero


@dataclass(frozen=True)
class KKTSystem:
    """Second-order objects at a point: H, G, bordered K, null-space basis Z."""

    H: np.ndarray
    G: np.ndarray
    K: np.ndarray
    Z: np.ndarray
    lam: float


@dataclass(frozen=True)
class FixedPointClassification:
    """Verdict of the second-order test at a stationary point."""

    is_max: bool
    inertia: Inertia
    reduced_spectrum: np.ndarray
    fraction_negative: float
    lam: float
    residual_inf: float


def _default_zero_tol(M: np.ndarray) -> float:
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    return ZERO_TOL_SCALE * max(1.0, scale)


def nullspace_basis(G: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ker(G) for a 2-row constraint Jacobian."""
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != 2:
        raise ValueError(f"G must have exactly 2 rows, got shape {G.shape}")
    _, sv, vt = np.linalg.svd(G)
    if sv.min() < 1e-10:
        raise RankDeficiencyError(
            f"constraint Jacobian is rank deficient (smallest singular value {sv.min():.3e})")
    return vt[2:].T


def inertia_of(M: np.ndarray, zero_tol: float | None = None) -> Inertia:
    """Eigenvalue sign counts of a symmetric matrix.

    zero_tol defaults to 1e-8 * max(1, max|M_ij|) so the split is scale
    invariant.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"M must be square, got shape {M.shape}")
    if M.size and float(np.max(np.abs(M - M.T))) > 1e-9:
        raise ValueError("M is not symmetric within 1e-9")
    if zero_tol is None:
        zero_tol = _default_zero_tol(M)
    eigvals = np.linalg.eigvalsh(M)
    n_plus = int(np.sum(eigvals > zero_tol))
    n_minus = int(np.sum(eigvals < -zero_tol))
    return Inertia(n_plus, n_minus, M.shape[0] - n_plus - n_minus)


def build_kkt_system(w: np.ndarray, beta: np.ndarray, kernels: KernelSet) -> KKTSystem:
    """Assemble H, G, K and the null-space basis at (w, beta)."""
    w = np.asarray(w, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    m, s = kernels.m, kernels.s
    if w.shape != (m,) or beta.shape != (s,):
        raise ValueError("w/beta shapes do not match the kernel set")
    for v, name in ((w, "w"), (beta, "beta")):
        if abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise ValueError(f"{name} must be a unit vector")

    y = kernels.stack @ w              # rows are Y_i w
    c = y @ w
    lam = float(beta @ c)

    H = np.zeros((m + s, m + s))
    H[:m, :m] = combine_kernels(kernels, beta) - lam * np.eye(m)
    H[:m, m:] = y.T
    H[m:, :m] = y
    H[m:, m:] = -0.5 * lam * np.eye(s)

    G = np.zeros((2, m + s))
    G[0, :m] = w
    G[1, m:] = beta

    p = m + s
    K = np.zeros((p + 2, p + 2))
    K[:p, :p] = H
    K[:p, p:] = G.T
    K[p:, :p] = G

    return KKTSystem(H=H, G=G, K=K, Z=nullspace_basis(G), lam=lam)


def _stationarity_residual(w, beta, kernels) -> float:
    y = kernels.stack @ w
    c = y @ w
    d = beta @ y
    lam = float(w @ d)
    res_w = float(np.max(np.abs(d - lam * w)))
    res_b = float(np.max(np.abs(c - lam * beta)))
    return max(res_w, res_b)


def classify_fixed_point(w: np.ndarray, beta: np.ndarray, kernels: KernelSet,
                         zero_tol: float | None = None) -> FixedPointClassification:
    """Decide whether an (approximate) fixed point is a local maximizer.

    Requires the full first-order residual below RESIDUAL_GATE; raises
    NotAFixedPointError otherwise.  The inertia-of-K route and the definiteness
    of the reduced Hessian are evaluated independently and must agree.
    """
    w = np.asarray(w, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    res = _stationarity_residual(w, beta, kernels)
    if res > RESIDUAL_GATE:
        raise NotAFixedPointError(
            f"first-order residual {res:.3e} exceeds the {RESIDUAL_GATE:.0e} gate; "
            "classification is meaningless off the stationary set")

    sys = build_kkt_system(w, beta, kernels)
    m, s = kernels.m, kernels.s

    inertia = inertia_of(sys.K, zero_tol)
    is_max_inertia = inertia.as_tuple() == (2, m + s, 0)

    reduced = sys.Z.T @ sys.H @ sys.Z
    if reduced.size:
        spectrum = np.linalg.eigvalsh(reduced)
        tol_r = zero_tol if zero_tol is not None else _default_zero_tol(reduced)
        neg = int(np.sum(spectrum < -tol_r))
        neg_definite = neg == spectrum.size
        fraction_negative = neg / spectrum.size
    else:
        # m + s = 2: no reduced directions left, vacuously a maximum
        spectrum = np.zeros(0)
        neg_definite = True
        fraction_negative = 1.0

    if is_max_inertia != neg_definite:
        raise RuntimeError(
            "inertia test and reduced-Hessian test disagree "
            f"(inertia {inertia.as_tuple()}, {int(np.sum(spectrum < 0))} negative "
            "reduced eigenvalues); the point sits on a numerical boundary")

    return FixedPointClassification(
        is_max=bool(is_max_inertia),
        inertia=inertia,
        reduced_spectrum=spectrum,
        fraction_negative=float(fraction_negative),
        lam=sys.lam,
        residual_inf=res,
    )
