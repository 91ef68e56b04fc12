"""
How fast do the expansion residuals vanish?

We simulate a Karhunen-Loeve process with polynomially decaying
eigenvalues, estimate its covariance operator at several sample sizes and
fit log-log slopes of the three residual families. The linear term should
shrink like n^-1/2 after scaling, the quadratic remainders faster.
"""
import numpy as np

from eigexpand.funcgrid import fourier_basis, make_grid
from eigexpand.harness import ExperimentConfig, run_experiment
from eigexpand.simulate import EigenProfile, ProcessSpec, ScoreModel

grid = make_grid(128)
spec = ProcessSpec("kl", fourier_basis(grid, 32), EigenProfile("polynomial", 2.0, 32), ScoreModel())
cfg = ExperimentConfig(spec, ns=[250, 1000, 4000], reps=50, J=10, seed=1)
report = run_experiment(cfg)

print("n       mean max|R1|   mean max R2    mean max|R3|")
for n in cfg.ns:
    raw = report.raw[n]
    print(f"{n:<7d} {np.abs(raw['R1']).max(1).mean():<14.4g} {raw['R2'].max(1).mean():<14.4g} "
          f"{np.abs(raw['R3']).max(1).mean():.4g}")

print("\nfitted slopes (log mean vs log n):")
for name, fit in report.slopes.items():
    print(f"  {name:<12s} {fit['slope']:+.3f} +- {fit['se']:.3f}")
