"""
Long memory and the leading eigenvalue.

Scores follow a linear process with coefficients decaying like
(i+1)^-alpha. For alpha = 0.9 the squared scores still have summable
autocovariances, so sqrt(n)(hat lambda_1 - lambda_1) is asymptotically
normal. We look at the Monte Carlo spread and at the physical dependence
measure, whose log-log slope tracks -alpha.
"""
import numpy as np
from scipy import stats

from eigexpand.funcgrid import fourier_basis, make_grid
from eigexpand.harness import ks_distance, rate_fit
from eigexpand.operators import cov_op
from eigexpand.simulate import (EigenProfile, ProcessSpec, ScoreModel, SeedSpec, coupling_distance,
                                gen_process)
from eigexpand.spectral import eig_sym

alpha, n, reps = 0.9, 2000, 100
grid = make_grid(64)
spec = ProcessSpec("kl", fourier_basis(grid, 5), EigenProfile("polynomial", 2.0, 5),
                   ScoreModel("linear_gaussian", alpha=alpha))

vals = np.array([np.sqrt(n) * (eig_sym(cov_op(gen_process(spec, n, 0, SeedSpec(3).spawn(r))).op, 1)
                               .lambdas[0] - 1.0) for r in range(reps)])
z = (vals - vals.mean()) / vals.std(ddof=1)
print(f"sqrt(n)(l1_hat - l1): mean {vals.mean():.3f}, sd {vals.std(ddof=1):.3f}")
print(f"KS to fitted normal over {reps} reps: {ks_distance(z, stats.norm.cdf):.3f}")

ks = np.array([2, 4, 8, 16, 32, 64])
om = [coupling_distance(spec, int(k), 2, 2000, SeedSpec(4).spawn(int(k))) for k in ks]
slope, _, se = rate_fit(ks, om)
print(f"Omega_2(k) log-log slope: {slope:.3f} +- {se:.3f} (alpha = {alpha})")
