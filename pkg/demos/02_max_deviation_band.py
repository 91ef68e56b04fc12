"""
A simultaneous band for the leading eigenvalues.

Scores are iid Gaussian, so each sigma_j^2 equals 2. We estimate the first
Jplus eigenvalues, estimate long-run variances from the empirical scores,
and invert the Gaussian max-deviation quantile into intervals.
"""
import numpy as np

from eigexpand.funcgrid import fourier_basis, make_grid
from eigexpand.inference import empirical_scores, longrun_var, simultaneous_band
from eigexpand.operators import cov_op
from eigexpand.simulate import EigenProfile, ProcessSpec, ScoreModel, SeedSpec, gen_process
from eigexpand.spectral import eig_sym

Jplus, n = 8, 3000
grid = make_grid(128)
spec = ProcessSpec("kl", fourier_basis(grid, 32), EigenProfile("polynomial", 2.0, 32), ScoreModel())
sample = gen_process(spec, n, 0, SeedSpec(7))

eig = eig_sym(cov_op(sample).op, Jplus)
lrv = longrun_var(empirical_scores(sample, eig, Jplus))
band = simultaneous_band(eig.lambdas, lrv.sigma_hat, n, Jplus, level=0.95, method="gaussian-mc",
                         reps=20000, seed=SeedSpec(8))

truth = np.sort(spec.lambda_tilde())[::-1][:Jplus]
print(f"threshold u = {band.threshold:.4f}")
print(" j   lambda_hat   lower        upper        truth        covered")
for j in range(Jplus):
    lo, hi = band.lower[j], band.upper[j]
    print(f"{j + 1:2d}   {eig.lambdas[j]:.5f}      {lo:.5f}      {hi:.5f}      {truth[j]:.5f}      "
          f"{lo <= truth[j] <= hi}")
