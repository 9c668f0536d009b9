"""Shared builders and independent reference oracles for the test suite.

Oracles here are deliberately written as plain index-by-index loops or dense
decompositions so they stay independent of the library code paths they check.
"""

import numpy as np

import dipca

# random indefinite kernel constructions that drive algorithm I into a limit
# cycle (found by search; frozen so the diagnostic path stays covered)
STUCK_SEEDS = (5, 6, 44, 48, 71, 107, 116, 149)


def kernels_from(*matrices, n_samples=0):
    return dipca.KernelSet.from_matrices([np.asarray(M, dtype=float) for M in matrices],
                                         n_samples=n_samples)


def diag_kernels(*diagonals):
    return kernels_from(*[np.diag(np.asarray(d, dtype=float)) for d in diagonals])


def random_symmetric(rng, dim, scale=1.0):
    A = rng.standard_normal((dim, dim)) * scale
    return 0.5 * (A + A.T)


def gapped_symmetric(rng, dim, gap=0.1):
    """Symmetric matrix with |lambda_1| > |lambda_2| + gap; dominant sign random."""
    Q = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
    eigs = rng.uniform(-3.0, 3.0, dim)
    j = int(np.argmax(np.abs(eigs)))
    sign = -1.0 if rng.random() < 0.5 else 1.0
    rest = np.abs(np.delete(eigs, j)) if dim > 1 else np.array([0.0])
    eigs[j] = sign * (rest.max() + gap + rng.uniform(0.05, 1.0))
    A = Q @ np.diag(eigs) @ Q.T
    return 0.5 * (A + A.T)


def stuck_kernels(seed):
    """One of the frozen non-convergent algorithm-I instances."""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(3, 7))
    s = int(rng.integers(2, 4))
    return kernels_from(*[rng.standard_normal((m, m)) for _ in range(s)])


def stationary_saddle(seed, m=4):
    """An exactly stationary pair that is not a maximum (s = 1 construction).

    Any eigenvector of the single kernel is stationary once beta carries the
    sign of its eigenvalue; picking the smallest-magnitude one guarantees a
    signed eigenvalue above it, i.e. an ascent direction.
    """
    rng = np.random.default_rng(seed)
    A = random_symmetric(rng, m) + np.diag(np.linspace(0, 3, m))
    ks = kernels_from(A)
    ew, ev = np.linalg.eigh(ks.kernels[0])
    k = int(np.argsort(np.abs(ew))[0])
    sign = 1.0 if ew[k] >= 0 else -1.0
    assert np.max(sign * ew) > abs(ew[k]) + 0.05
    return ks, ev[:, k], np.array([sign]), ew


def score_space_objective(X, w, beta):
    """Independent oracle: sum of t_i * that_i over the prediction window.

    Pure index loop on the raw data; never touches the kernel machinery.
    """
    X = np.asarray(X, dtype=float)
    s = len(beta)
    n = X.shape[0] - s
    t = [float(row @ w) for row in X]
    total = 0.0
    for i in range(s, s + n):           # 0-based: predicted rows
        that = 0.0
        for j in range(1, s + 1):
            that += beta[j - 1] * t[i - j]
        total += t[i] * that
    return total


def lag_view_reference(X, i, n):
    """Row-by-row reference for the 1-based lag view."""
    X = np.asarray(X)
    return np.array([X[i - 1 + j] for j in range(n)])


def dense_kernel_reference(X, s):
    """Dense-product oracle for the symmetric lag kernels."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0] - s
    newest = lag_view_reference(X, s + 1, n)
    out = []
    for i in range(1, s + 1):
        older = lag_view_reference(X, s + 1 - i, n)
        P = newest.T @ older
        out.append(0.5 * (P + P.T))
    return out


def random_instance(seed, m=8, n=60, s=2, sigma=0.5, **kw):
    cfg = dipca.SyntheticConfig(m=m, n=n, s=s, sigma=sigma, seed=seed, **kw)
    data, planted = dipca.gen_synthetic(cfg)
    return data, dipca.build_kernels(data), planted
