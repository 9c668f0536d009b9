"""Dynamic latent-variable models from multivariate time series.

Fits unit weight vectors w and unit AR coefficient vectors beta that maximize
the covariance between latent scores t = Xw and their autoregressive
predictions, by alternating power and closed-form coefficient steps over
symmetric lag kernels.  Includes second-order (local-maximum) verification,
multi-component extraction by deflation, synthetic benchmarks, and a CLI.
"""

from ._backend import HAVE_COMPILED, default_backend_name
from .bench import (BenchReport, PlantedComponent, SyntheticConfig,
                    brute_force_oracle, compare_backends, gen_synthetic,
                    run_benchmark, run_scaling)
from .deflate import (DiPCAModel, LatentComponent, ar_predict, deflate_once,
                      extract_components, reconstruct, scores)
from .errors import (ARStabilityError, DataFormatError,
                     DegenerateDirectionError, DipcaError,
                     NotAFixedPointError, OracleSizeError,
                     RankDeficiencyError, ZeroDirectionError, ZeroScoreError)
from .lagmat import (KernelSet, TimeSeriesData, build_kernels, center_columns,
                     combine_kernels, lag_view, read_data_csv)
from .secondorder import (FixedPointClassification, Inertia, KKTSystem,
                          build_kkt_system, classify_fixed_point, inertia_of,
                          nullspace_basis)
from .solver import (SolveOptions, SolveReport, SolverState, beta_update,
                     init_state, kkt_residual, objective, power_step,
                     solve_dipca_I, solve_dipca_II, solve_w_subproblem)

__version__ = "0.1.0"

__all__ = [
    "ARStabilityError", "BenchReport", "DataFormatError",
    "DegenerateDirectionError", "DiPCAModel", "DipcaError",
    "FixedPointClassification", "HAVE_COMPILED", "Inertia", "KKTSystem",
    "KernelSet", "LatentComponent", "NotAFixedPointError", "OracleSizeError",
    "PlantedComponent", "RankDeficiencyError", "SolveOptions", "SolveReport",
    "SolverState", "SyntheticConfig", "TimeSeriesData", "ZeroDirectionError",
    "ZeroScoreError", "ar_predict", "beta_update", "brute_force_oracle",
    "build_kernels", "build_kkt_system", "center_columns",
    "classify_fixed_point", "combine_kernels", "compare_backends",
    "default_backend_name", "deflate_once", "extract_components",
    "gen_synthetic", "inertia_of", "init_state", "kkt_residual", "lag_view",
    "nullspace_basis", "objective", "power_step", "read_data_csv",
    "reconstruct", "run_benchmark", "run_scaling", "scores", "solve_dipca_I",
    "solve_dipca_II", "solve_w_subproblem",
]
