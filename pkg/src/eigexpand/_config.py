"""Repository-wide numerical tolerances.

Every tolerance used to decide structure (symmetry, orthonormality, gaps,
positivity) lives here so that it can be audited in one place.
"""

#: structural checks: symmetry, Gram matrices, orthonormality
STRUCT_TOL = 1e-10
#: pure floating point accumulation
ARITH_TOL = 1e-12
#: relative floor below which an eigenvalue is treated as zero
RIDGE_FLOOR = 1e-12
#: eigenvalues closer than this (relative to the largest) count as repeated
GAP_TOL = 1e-12
#: negative eigenvalues of a PSD kernel down to -PSD_CLIP * lambda_max are rounding
PSD_CLIP = 1e-8
#: ridge added to correlation matrices before factorizing
CORR_RIDGE = 1e-10
#: minimal admissible long-run standard deviation of squared scores
SIGMA_FLOOR = 1e-6
#: relative tail variance allowed when truncating an infinite moving average
MA_TAIL_BUDGET = 1e-6
#: burn-in target for geometric (ARH(1)) transients
BURNIN_TARGET = 1e-12

#: Gumbel centring constant used by :func:`eigexpand.inference.gumbel_norm`
GUMBEL_CONSTANT = "stated"
