"""
Monte Carlo drivers, rate fitting and distribution distances.

A run is described by an :class:`ExperimentConfig`. Each cell is one
sample size. Replication ``r`` of the cell with sample size ``n`` uses
the stream ``SeedSpec(master).spawn(n, r)``, so a cell's numbers depend
only on its own content, never on its position or on the worker count.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy
from scipy import stats

from .errors import EigexpandError, ValidationError
from .expansion import I_matrix, eigfun_residual, eigval_residual, population_system
from .inference import t_stat
from .operators import WeightScheme, cov_op, longrun_op, population_operator, sym_lag_op
from .simulate import ProcessSpec, SeedSpec, arh1_burnin, gen_process, score_acf
from .spectral import align_signs, eig_sym

__all__ = [
    "ExperimentConfig",
    "MCReport",
    "run_experiment",
    "rate_fit",
    "ks_distance",
    "ks_two_sample",
    "parallel_map",
    "population_sigma",
    "expansion_rep",
    "tstat_rep",
]


def rate_fit(ns, errors):
    """
    Least squares fit of ``log error = intercept + slope log n``.

    Returns
    -------
    slope, intercept, se : float
        ``se`` is the standard error of the slope (0 for two points or an
        exact fit).
    """
    x = np.asarray(ns, dtype=float)
    y = np.asarray(errors, dtype=float)
    if x.size < 3 or x.size != y.size:
        raise ValidationError("rate_fit needs at least 3 paired points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValidationError("rate_fit needs positive n and errors")
    lx, ly = np.log(x), np.log(y)
    X = np.column_stack([np.ones_like(lx), lx])
    coef, *_ = np.linalg.lstsq(X, ly, rcond=None)
    resid = ly - X @ coef
    dof = x.size - 2
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    return float(coef[1]), float(coef[0]), float(np.sqrt(max(cov[1, 1], 0.0)))


def ks_distance(sample, cdf: Callable) -> float:
    """
    Kolmogorov-Smirnov distance ``sup_x |F_N(x) - F(x)|``.

    Evaluated at the sorted points with both step bounds ``i/N`` and
    ``(i-1)/N``.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    N = x.size
    if N == 0:
        raise ValidationError("empty sample")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, N + 1)
    return float(max(np.max(i / N - F), np.max(F - (i - 1) / N)))


def ks_two_sample(a, b) -> float:
    """Two-sample KS distance ``sup_x |F_a(x) - F_b(x)|``."""
    return float(stats.ks_2samp(a, b).statistic)


def parallel_map(fn, items: Sequence, threads: int = 1):
    """Ordered map, in worker processes when ``threads > 1``."""
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


def population_sigma(spec: ProcessSpec, J: int, nlags: int = 20000) -> np.ndarray:
    """
    ``sigma_j^2 = sum_{h in Z} cov(eta_0^2, eta_h^2) = 2 sum_h r_j(h)^2``
    for Gaussian scores with autocorrelation ``r_j``.
    """
    if spec.kind == "arh1":
        phi = np.array(spec.phi[:J])
        return np.sqrt(2 * (1 + phi ** 2) / (1 - phi ** 2))
    r = score_acf(spec.scores, nlags)
    s2 = 2 * (r[0] ** 2 + 2 * np.sum(r[1:] ** 2))
    return np.full(J, np.sqrt(s2))


@dataclass
class ExperimentConfig:
    """
    Monte Carlo experiment description.

    Parameters
    ----------
    spec : ProcessSpec
    ns : sequence of int
        Increasing sample sizes, one cell each.
    reps : int
    experiment : {'expansion', 'tstat'}
        ``expansion`` records eigen-expansion residuals; ``tstat`` records
        the max-deviation statistic against population values.
    kind : {'cov', 'symlag', 'longrun'}
    h, b : int
    weights : str
    J : int
        Indices entering residual maxima.
    jplus : str
        ``"fixed:<m>"`` or ``"pow:<e>"`` (``floor(n^e)``).
    seed : int
    burnin : int, optional
        Defaults to the arh1 requirement, 0 otherwise.
    center : bool
    out : str, optional
    """

    spec: ProcessSpec
    ns: Sequence[int]
    reps: int = 50
    experiment: str = "expansion"
    kind: str = "cov"
    h: int = 1
    b: int = 0
    weights: str = "flat"
    J: int = 10
    jplus: str = "fixed:10"
    seed: int = 0
    burnin: Optional[int] = None
    center: bool = True
    out: Optional[str] = None

    def __post_init__(self):
        self.ns = [int(n) for n in self.ns]
        if not self.ns or any(b <= a for a, b in zip(self.ns, self.ns[1:])):
            raise ValidationError("the n grid must be non-empty and increasing")
        if self.reps < 1:
            raise ValidationError("reps must be positive")
        if self.experiment not in ("expansion", "tstat"):
            raise ValidationError(f"unknown experiment {self.experiment!r}")
        if self.kind not in ("cov", "symlag", "longrun"):
            raise ValidationError(f"unknown estimator kind {self.kind!r}")
        if self.burnin is None:
            self.burnin = arh1_burnin(self.spec.phi) if self.spec.kind == "arh1" else 0
        self.jplus_for(self.ns[0])

    def jplus_for(self, n: int) -> int:
        kind, _, val = self.jplus.partition(":")
        if kind == "fixed":
            return int(val)
        if kind == "pow":
            return int(np.floor(n ** float(val)))
        raise ValidationError(f"bad Jplus rule {self.jplus!r}")

    def to_dict(self):
        return {"spec": self.spec.to_dict(), "ns": list(self.ns), "reps": self.reps,
                "experiment": self.experiment, "kind": self.kind, "h": self.h, "b": self.b,
                "weights": self.weights, "J": self.J, "jplus": self.jplus, "seed": self.seed,
                "burnin": self.burnin, "center": self.center}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["spec"] = ProcessSpec.from_dict(d["spec"])
        return cls(**d)

    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def _estimate(cfg_kind, sample, h, b, weights, center):
    if cfg_kind == "cov":
        return cov_op(sample, center).op
    if cfg_kind == "symlag":
        return sym_lag_op(sample, h, center).op
    return longrun_op(sample, b, WeightScheme(weights), center).op


def _pop(spec, kind, h, b):
    return population_operator(spec, kind, h=h, b=b)


def expansion_rep(spec: ProcessSpec, n: int, seed: SeedSpec, J: int, kind: str = "cov",
                  h: int = 1, b: int = 0, weights: str = "flat", center: bool = True,
                  burnin: int = 0, pop_cache=None):
    """
    One replication of the expansion study.

    Returns a dict with per-index arrays ``R1``, ``R2``, ``R3``,
    ``dev`` (``sqrt(m)|hat lambda - lambda|/lambda``) and ``d2``
    (``||hat e_j - e_j||^2``) for the first ``J`` indices.
    """
    sample = gen_process(spec, n, burnin, seed)
    hatK = _estimate(kind, sample, h, b, weights, center)
    if pop_cache is None:
        popops = _pop(spec, kind, h, b)
        pop_cache = (popops.op, population_system(popops))
    popK, popsys = pop_cache
    m = n / max(b, 1) if kind == "longrun" else float(n)
    hat = align_signs(eig_sym(hatK, J), popsys.truncate(J))
    I = I_matrix(hatK, popK, popsys)
    R1, _ = eigval_residual(hat, popsys, I, m)
    R2, R3 = eigfun_residual(hat, popsys, I)
    lam = popsys.lambdas[:J]
    d = hat.vectors - popsys.vectors[:J]
    return {
        "R1": R1, "R2": R2, "R3": R3,
        "dev": np.sqrt(m) * np.abs(hat.lambdas - lam) / lam,
        "d2": np.sum(d ** 2, axis=1) / spec.grid.T,
    }


def tstat_rep(spec: ProcessSpec, n: int, seed: SeedSpec, Jplus: int, sigma, center: bool = True,
              burnin: int = 0, lam=None):
    """``T`` against population eigenvalues and long-run deviations."""
    sample = gen_process(spec, n, burnin, seed)
    eig = eig_sym(cov_op(sample, center).op, Jplus)
    lam = np.sort(spec.lambda_tilde())[::-1][:Jplus] if lam is None else lam
    return {"T": np.array([t_stat(eig.lambdas, lam, sigma, n, Jplus)])}


# the worker receives only picklable primitives
def _cell_worker(args):
    cfg_dict, n, rep = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    return _run_rep(cfg, n, rep)


def _run_rep(cfg: ExperimentConfig, n: int, rep: int, cache=None):
    seed = SeedSpec(cfg.seed).spawn(n, rep)
    try:
        if cfg.experiment == "expansion":
            return expansion_rep(cfg.spec, n, seed, cfg.J, cfg.kind, cfg.h, cfg.b, cfg.weights,
                                 cfg.center, cfg.burnin, cache)
        Jp = cfg.jplus_for(n)
        sig = population_sigma(cfg.spec, Jp)
        return tstat_rep(cfg.spec, n, seed, Jp, sig, cfg.center, cfg.burnin)
    except EigexpandError as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}


def _summ(a):
    a = np.asarray(a, dtype=float)
    q = np.quantile(a, [0.05, 0.25, 0.5, 0.75, 0.95])
    return {"mean": float(a.mean()), "sd": float(a.std(ddof=1)) if a.size > 1 else 0.0,
            "q05": float(q[0]), "q25": float(q[1]), "q50": float(q[2]),
            "q75": float(q[3]), "q95": float(q[4])}


@dataclass
class MCReport:
    config: dict
    config_hash: str
    cells: list
    slopes: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def body(self) -> dict:
        return {"config": self.config, "config_hash": self.config_hash, "cells": self.cells,
                "slopes": self.slopes, "provenance": self.provenance}

    def to_json(self) -> str:
        return json.dumps(self.body(), sort_keys=True, indent=1)


def run_experiment(config: ExperimentConfig, threads: int = 1, keep_raw: bool = True) -> MCReport:
    """
    Run every cell of ``config`` and summarize.

    Per cell the report holds summaries of ``max_j |R1_j|``,
    ``max_j R2_j``, ``max_j |R3_j|`` and of ``T``, plus per-index means.
    Slopes are fitted to the cell means when there are at least three
    cells. Errors inside a replication are recorded, not raised.
    """
    from . import __version__

    cfg_dict = config.to_dict()
    cells, raw = [], {}
    for n in config.ns:
        if threads > 1:
            out = parallel_map(_cell_worker, [(cfg_dict, n, r) for r in range(config.reps)], threads)
        else:
            cache = None
            if config.experiment == "expansion":
                try:
                    popops = _pop(config.spec, config.kind, config.h, config.b)
                    cache = (popops.op, population_system(popops))
                except EigexpandError:
                    cache = None
            out = [_run_rep(config, n, r, cache) for r in range(config.reps)]
        errors = [o["error"] for o in out if "error" in o]
        good = [o for o in out if "error" not in o]
        cell = {"n": n, "reps": config.reps, "failed": len(errors), "errors": errors[:5]}
        if good:
            keys = good[0].keys()
            stack = {k: np.vstack([g[k] for g in good]) for k in keys}
            raw[n] = stack
            if config.experiment == "expansion":
                cell["max_abs_R1"] = _summ(np.abs(stack["R1"]).max(axis=1))
                cell["max_R2"] = _summ(stack["R2"].max(axis=1))
                cell["max_abs_R3"] = _summ(np.abs(stack["R3"]).max(axis=1))
                cell["mean_dev"] = stack["dev"].mean(axis=0).tolist()
                cell["mean_d2"] = stack["d2"].mean(axis=0).tolist()
            else:
                cell["T"] = _summ(stack["T"][:, 0])
                cell["Jplus"] = config.jplus_for(n)
        cells.append(cell)
    slopes = {}
    if len(cells) >= 3 and config.experiment == "expansion" and all("max_abs_R1" in c for c in cells):
        ns = [c["n"] for c in cells]
        for key in ("max_abs_R1", "max_R2", "max_abs_R3"):
            s, i, se = rate_fit(ns, [c[key]["mean"] for c in cells])
            slopes[key] = {"slope": s, "intercept": i, "se": se}
    prov = {"config_hash": config.hash(), "seed": config.seed, "numpy": np.__version__,
            "scipy": scipy.__version__, "eigexpand": __version__}
    return MCReport(cfg_dict, config.hash(), cells, slopes, raw if keep_raw else {}, prov)
