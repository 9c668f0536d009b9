"""Synthetic instances with planted ground truth, and the benchmark harness.

A planted instance superposes rank-one signals t_j w_j' (stationary AR score
series on orthonormal weight directions) and adds iid Gaussian noise of
standard deviation sigma.  The harness fits every instance with the requested
algorithms, classifies each fixed point, and reports objective, wall time,
iteration counts and the fraction of negative reduced-Hessian eigenvalues,
as CSV rows plus sorted-value curves for plotting.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._util import atomic_write_text, fmt_float
from .errors import ARStabilityError, NotAFixedPointError, OracleSizeError
from .lagmat import KernelSet, TimeSeriesData, build_kernels
from .secondorder import classify_fixed_point
from .solver import SolveOptions, solve_dipca_I, solve_dipca_II

_AR_BURN_IN = 200
_AR_MAX_DRAWS = 1000

CSV_HEADER = ("instance_id,algorithm,m,n,s,sigma,seed,objective,"
              "wall_time_s,iterations,converged,fraction_negative")


@dataclass(frozen=True)
class SyntheticConfig:
    """Shape, noise level and seeding of one synthetic instance."""

    m: int
    n: int
    s: int
    sigma: float = 0.0
    seed: int = 0
    planted_components: int = 1
    ar_spectral_margin: float = 0.1
    amplitude: float = 4.0

    def __post_init__(self):
        if min(self.m, self.n, self.s) < 1 or self.s >= self.n:
            raise ValueError(f"invalid dimensions m={self.m}, n={self.n}, s={self.s}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be > 0")
        if not 1 <= self.planted_components <= self.m:
            raise ValueError("planted_components must be in 1..m")
        if not 0 < self.ar_spectral_margin < 1:
            raise ValueError("ar_spectral_margin must be in (0, 1)")


@dataclass(frozen=True)
class PlantedComponent:
    """Ground truth for one planted component.

    beta and lam are the optimal coefficient direction and objective implied
    by the realized score series (exact for a single noiseless component).
    phi holds the AR coefficients that generated the series.
    """

    w: np.ndarray
    beta: np.ndarray
    lam: float
    t: np.ndarray
    phi: np.ndarray


@dataclass
class BenchRow:
    instance_id: str
    algorithm: str
    m: int
    n: int
    s: int
    sigma: float
    seed: int
    objective: float
    wall_time_s: float
    iterations: int
    converged: bool
    fraction_negative: float

    def as_csv(self) -> str:
        return ",".join([
            self.instance_id, self.algorithm, str(self.m), str(self.n), str(self.s),
            fmt_float(self.sigma), str(self.seed), fmt_float(self.objective),
            fmt_float(self.wall_time_s), str(self.iterations),
            "true" if self.converged else "false", fmt_float(self.fraction_negative),
        ])


@dataclass
class BenchReport:
    rows: list
    kernel_time_s: dict = field(default_factory=dict)
    workers: int = 1

    def to_csv(self, path: str | None = None) -> str:
        text = "\n".join([CSV_HEADER] + [r.as_csv() for r in self.rows]) + "\n"
        if path is not None:
            atomic_write_text(path, text)
        return text

    def summary(self) -> dict:
        """Sorted-value curves per algorithm plus per-instance kernel-build times."""
        curves: dict = {}
        for algo in sorted({r.algorithm for r in self.rows}):
            rows = [r for r in self.rows if r.algorithm == algo]
            curves[algo] = {
                "objective": sorted(r.objective for r in rows
                                    if np.isfinite(r.objective)),
                "wall_time_s": sorted(r.wall_time_s for r in rows),
                "iterations": sorted(r.iterations for r in rows),
                "fraction_negative": sorted(r.fraction_negative for r in rows
                                            if np.isfinite(r.fraction_negative)),
                "n_converged": sum(r.converged for r in rows),
                "n_rows": len(rows),
            }
        return {"curves": curves, "kernel_time_s": self.kernel_time_s,
                "workers": self.workers}

    def save_summary_json(self, path: str) -> dict:
        doc = self.summary()
        atomic_write_text(path, json.dumps(doc, indent=2) + "\n")
        return doc


def _draw_stable_ar(rng: np.random.Generator, s: int, margin: float) -> np.ndarray:
    """Rejection-sample AR coefficients whose companion spectrum stays inside 1 - margin."""
    for _ in range(_AR_MAX_DRAWS):
        phi = rng.normal(0.0, 0.5 / np.sqrt(s), size=s)
        companion = np.zeros((s, s))
        companion[0] = phi
        if s > 1:
            companion[1:, :-1] = np.eye(s - 1)
        if np.max(np.abs(np.linalg.eigvals(companion))) <= 1.0 - margin:
            return phi
    raise ARStabilityError(
        f"no stable AR({s}) draw within {_AR_MAX_DRAWS} attempts (margin {margin})")


def _simulate_ar(rng: np.random.Generator, phi: np.ndarray, length: int) -> np.ndarray:
    s = phi.shape[0]
    buf = np.zeros(length + _AR_BURN_IN + s)
    eps = rng.standard_normal(length + _AR_BURN_IN)
    for i in range(s, buf.shape[0]):
        buf[i] = phi @ buf[i - s:i][::-1] + eps[i - s]
    return buf[-length:]


def _lag_autocov(t: np.ndarray, s: int) -> np.ndarray:
    """gamma_i = sum over the prediction window of t_k t_{k-i}, i = 1..s."""
    n = t.shape[0] - s
    head = t[s:]
    return np.array([head @ t[s - i:s - i + n] for i in range(1, s + 1)])


def gen_synthetic(cfg: SyntheticConfig):
    """Build one planted instance; returns (TimeSeriesData, list of PlantedComponent).

    Score series are normalized to RMS `amplitude` and fall off by factors of
    two per component, so planted objectives are well separated and the first
    component carries the most dynamic variation.
    """
    rng = np.random.default_rng(cfg.seed)
    k = cfg.planted_components
    rows = cfg.n + cfg.s

    W = np.linalg.qr(rng.standard_normal((cfg.m, k)))[0][:, :k]
    planted = []
    signal = np.zeros((rows, cfg.m))
    for j in range(k):
        phi = _draw_stable_ar(rng, cfg.s, cfg.ar_spectral_margin)
        t = _simulate_ar(rng, phi, rows)
        t = t / np.sqrt(np.mean(t * t)) * cfg.amplitude * 0.5 ** j
        gamma = _lag_autocov(t, cfg.s)
        lam = float(np.linalg.norm(gamma))
        beta = gamma / lam if lam > 0 else np.zeros(cfg.s)
        w = W[:, j].copy()
        signal += np.outer(t, w)
        planted.append(PlantedComponent(w=w, beta=beta, lam=lam, t=t, phi=phi))

    X = signal if cfg.sigma == 0 else signal + cfg.sigma * rng.standard_normal((rows, cfg.m))
    return TimeSeriesData(X, cfg.s), planted


def _fit_row(instance_id: str, cfg: SyntheticConfig, kernels: KernelSet,
             algorithm: str, opts: SolveOptions, backend: str | None) -> BenchRow:
    solve = solve_dipca_I if algorithm == "I" else solve_dipca_II
    try:
        report = solve(kernels, opts, backend=backend)
        st = report.state
        fraction_negative = np.nan
        try:
            verdict = classify_fixed_point(st.w, st.beta, kernels)
            fraction_negative = verdict.fraction_negative
        except (NotAFixedPointError, RuntimeError):
            pass
        return BenchRow(instance_id, algorithm, cfg.m, cfg.n, cfg.s, cfg.sigma,
                        cfg.seed, float(st.lam), report.wall_time,
                        report.iterations, report.converged, fraction_negative)
    except Exception:
        # harness rows never abort a sweep
        return BenchRow(instance_id, algorithm, cfg.m, cfg.n, cfg.s, cfg.sigma,
                        cfg.seed, np.nan, np.nan, 0, False, np.nan)


def run_benchmark(instances, algorithms=("I", "II"),
                  opts: SolveOptions | None = None,
                  backend: str | None = None, workers: int = 1) -> BenchReport:
    """Fit every instance with every algorithm and collect the metric rows.

    Wall time per row covers the solve only; kernel construction is timed
    separately per instance and reported in the summary.
    """
    instances = list(instances)
    if not instances or not algorithms:
        raise ValueError("instances and algorithms must be nonempty")
    opts = opts or SolveOptions()

    def one_instance(idx_cfg):
        idx, cfg = idx_cfg
        instance_id = f"{idx:03d}"
        data, _ = gen_synthetic(cfg)
        t0 = time.perf_counter()
        kernels = build_kernels(data)
        ker_time = time.perf_counter() - t0
        rows = [_fit_row(instance_id, cfg, kernels, algo, opts, backend)
                for algo in algorithms]
        return instance_id, ker_time, rows

    results = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_instance, enumerate(instances)))
    else:
        results = [one_instance(pair) for pair in enumerate(instances)]

    report = BenchReport(rows=[], workers=workers)
    for instance_id, ker_time, rows in results:
        report.kernel_time_s[instance_id] = ker_time
        report.rows.extend(rows)
    return report


def brute_force_oracle(kernels: KernelSet, restarts: int = 32,
                       refine_iters: int = 200, seed: int = 0):
    """Multi-start certificate of the best attainable objective on tiny instances.

    Random unit starts refined by algorithm II; enforced size guard m <= 6,
    s <= 3.  Returns (objective_best, w_best, beta_best).
    """
    if kernels.m > 6 or kernels.s > 3:
        raise OracleSizeError(
            f"oracle limited to m <= 6 and s <= 3, got m={kernels.m}, s={kernels.s}")
    rng = np.random.default_rng(seed)
    opts_base = SolveOptions(eps_tol=1e-10, max_outer=refine_iters,
                             max_power=500, init_mode="user",
                             w0=np.ones(kernels.m) / np.sqrt(kernels.m),
                             beta0=np.ones(kernels.s) / np.sqrt(kernels.s))
    best = (-np.inf, None, None)
    for _ in range(max(1, restarts)):
        w0 = rng.standard_normal(kernels.m)
        b0 = rng.standard_normal(kernels.s)
        w0 /= np.linalg.norm(w0)
        b0 /= np.linalg.norm(b0)
        report = solve_dipca_II(kernels, replace(opts_base, w0=w0, beta0=b0))
        for st in (report.state, report.best_state()):
            if st.lam > best[0]:
                best = (float(st.lam), st.w.copy(), st.beta.copy())
    return best


# named sweep presets: the production-scale shape is encoded for data
# generation, but desk-scale sweeps are the default
PRESETS: dict[str, list[SyntheticConfig]] = {
    "default": [SyntheticConfig(m=50, n=500, s=4, sigma=1.0, seed=seed)
                for seed in range(1, 21)],
    "m200-sigma1": [SyntheticConfig(m=200, n=500, s=4, sigma=1.0, seed=seed)
                    for seed in range(1, 9)],
    "m200-sigma10": [SyntheticConfig(m=200, n=500, s=4, sigma=10.0, seed=seed)
                     for seed in range(1, 9)],
    "paper-shape": [SyntheticConfig(m=5106, n=71, s=4, sigma=1.0, seed=1)],
    "smoke": [SyntheticConfig(m=8, n=60, s=2, sigma=0.5, seed=seed)
              for seed in range(1, 4)],
}


def run_scaling(ms=(100, 200, 400, 800), n: int = 250, s: int = 4,
                iters: int = 150, repeats: int = 3, seed: int = 7,
                backend: str | None = None) -> dict:
    """Fixed-iteration solve times across feature dimensions, with log-log slope.

    eps_tol is set unreachably small so every size runs exactly `iters` outer
    rounds of algorithm I; kernels are prebuilt outside the timed region.
    """
    opts = SolveOptions(eps_tol=1e-300, max_outer=iters, seed=seed)
    times = {}
    for m in ms:
        data, _ = gen_synthetic(SyntheticConfig(m=m, n=n, s=s, sigma=1.0, seed=seed))
        kernels = build_kernels(data)
        best = np.inf
        for _ in range(repeats):
            report = solve_dipca_I(kernels, opts, backend=backend)
            assert report.iterations == iters
            best = min(best, report.wall_time)
        times[m] = best
    slope = float(np.polyfit(np.log(list(times)), np.log(list(times.values())), 1)[0])
    return {"times_s": times, "slope": slope, "iters": iters}


def compare_backends(cfg: SyntheticConfig | None = None, algorithms=("I", "II"),
                     repeats: int = 3, opts: SolveOptions | None = None) -> dict:
    """Time the compiled and pure solver loops on one instance, if both exist."""
    from ._backend import HAVE_COMPILED

    cfg = cfg or SyntheticConfig(m=50, n=500, s=4, sigma=1.0, seed=1)
    opts = opts or SolveOptions()
    data, _ = gen_synthetic(cfg)
    kernels = build_kernels(data)
    backends = ["pure"] + (["compiled"] if HAVE_COMPILED else [])
    out: dict = {"m": cfg.m, "n": cfg.n, "s": cfg.s, "sigma": cfg.sigma,
                 "have_compiled": HAVE_COMPILED, "results": {}}
    for backend in backends:
        for algo in algorithms:
            solve = solve_dipca_I if algo == "I" else solve_dipca_II
            best_time = np.inf
            report = None
            for _ in range(repeats):
                report = solve(kernels, opts, backend=backend)
                best_time = min(best_time, report.wall_time)
            out["results"][f"{backend}/{algo}"] = {
                "wall_time_s": best_time,
                "iterations": report.iterations,
                "converged": report.converged,
                "objective": float(report.state.lam),
            }
    return out
