"""
eigexpand: eigen-expansions, long-run operators and max-deviation
inference for functional time series on a discretized L2[0, 1].
"""

__version__ = "0.1.0"

from .errors import (DegeneracyError, EigexpandError, GridError,
                     UnsupportedModelError, ValidationError)
from .funcgrid import (BasisSet, Grid, GridFn, KernelOp, apply_kernel,
                       fourier_basis, inner_product, make_grid)
from .simulate import (EigenProfile, ProcessSpec, SamplePath, ScoreModel, SeedSpec,
                       coupling_distance, gen_process, gen_scores)
from .operators import (WeightScheme, cov_op, flr_estimate, lag_op, longrun_op,
                        population_operator, sym_lag_op)
from .spectral import (EigenSystem, align_signs, eig_sym, gap_quantities,
                       hall_error_bound, pathwise_bound_check)
from .expansion import (I_matrix, eigfun_residual, eigval_residual, perturbation_identity,
                        population_system, score_gram, svd_f_residual)
from .inference import (BlockScheme, block_coupled_sums, empirical_scores, gauss_max_sample,
                        gumbel_norm, longrun_var, simultaneous_band, t_stat)
from .harness import ExperimentConfig, ks_distance, rate_fit, run_experiment
