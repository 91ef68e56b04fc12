"""
Inference for the leading eigenvalues: empirical scores, long-run
variances of squared scores, the studentized maximum deviation, its
Gaussian and Gumbel approximations, simultaneous bands and the block
coupling construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import linalg, signal

from . import _config
from ._config import CORR_RIDGE, RIDGE_FLOOR, SIGMA_FLOOR
from .errors import DegeneracyError, TruncationError, UnsupportedModelError, ValidationError
from .operators import WeightScheme
from .simulate import SamplePath, ScoreModel, SeedSpec, _as_seed, _filter
from .spectral import EigenSystem

__all__ = [
    "ScorePanel",
    "LongRunVar",
    "MaxDevResult",
    "BlockScheme",
    "empirical_scores",
    "longrun_var",
    "t_stat",
    "gumbel_norm",
    "gumbel_constant",
    "gauss_max_sample",
    "simultaneous_band",
    "block_coupled_sums",
]

_BLOCK_STREAM = 7_001


@dataclass(frozen=True, eq=False)
class ScorePanel:
    eta_hat: np.ndarray
    lambdas_used: np.ndarray

    @property
    def n(self):
        return self.eta_hat.shape[0]

    @property
    def J(self):
        return self.eta_hat.shape[1]


def empirical_scores(sample: SamplePath, eig: EigenSystem, J: int, center: bool = True) -> ScorePanel:
    """
    Normalized projections ``<X_k - bar X, hat e_j> hat lambda_j^{-1/2}``.

    Parameters
    ----------
    sample : SamplePath
    eig : EigenSystem
    J : int
    center : bool
        Subtract the sample mean before projecting.

    Raises
    ------
    TruncationError
        When ``hat lambda_J <= 1e-12 hat lambda_1``; ``admissible`` is the
        largest usable ``J``.
    """
    if not 1 <= J <= eig.J:
        raise ValidationError(f"J must lie in [1, {eig.J}]")
    lam = eig.lambdas[:J]
    ok = lam > RIDGE_FLOOR * max(lam[0], 0.0)
    if lam[0] <= 0 or not ok.all():
        adm = 0 if lam[0] <= 0 else int(np.argmin(ok))
        raise TruncationError(f"eigenvalues beyond index {adm} are below the ridge floor", adm)
    X = sample.data - sample.data.mean(axis=0) if center else sample.data
    proj = X @ eig.vectors[:J].T / sample.grid.T
    return ScorePanel(proj / np.sqrt(lam), lam.copy())


@dataclass(frozen=True, eq=False)
class LongRunVar:
    L_b: int
    phi_hat: np.ndarray
    gamma_hat: np.ndarray
    sigma_hat: np.ndarray
    rho_hat: np.ndarray


def longrun_var(panel, L_b: int | None = None, w: WeightScheme | str = "bartlett") -> LongRunVar:
    """
    Lag-window long-run covariance of the squared scores.

    ``gamma_{i,j} = phi_{0,i,j} + sum_{k=1}^{L_b} omega_k (phi_{k,i,j} + phi_{k,j,i})``
    where ``phi_{k,i,j} = (1/n) sum_t Y_{t,i} Y_{t+k,j}`` and
    ``Y = eta^2 - mean(eta^2)``.

    Parameters
    ----------
    panel : ScorePanel or ndarray, shape (n, J)
    L_b : int, optional
        Bandwidth, default ``floor(n^{1/3})``.
    w : WeightScheme or str
        Default Bartlett, which keeps ``gamma`` positive semidefinite.

    Returns
    -------
    LongRunVar
        ``phi_hat`` has shape ``(L_b + 1, J, J)``.

    Raises
    ------
    DegeneracyError
        If some ``sigma_j`` is below 1e-6.
    """
    eta = panel.eta_hat if isinstance(panel, ScorePanel) else np.asarray(panel, dtype=float)
    n, J = eta.shape
    if L_b is None:
        L_b = int(np.floor(n ** (1 / 3)))
    if not 0 <= L_b <= n - 2:
        raise ValidationError(f"bandwidth must lie in [0, n-2], got {L_b}")
    if isinstance(w, str):
        w = WeightScheme(w)
    Y = eta ** 2
    Y = Y - Y.mean(axis=0)
    om = w.weights(L_b)
    phi = np.empty((L_b + 1, J, J))
    for k in range(L_b + 1):
        phi[k] = Y[: n - k].T @ Y[k:] / n
    gamma = phi[0] + sum(om[k] * (phi[k] + phi[k].T) for k in range(1, L_b + 1))
    gamma = 0.5 * (gamma + gamma.T)
    d = np.diag(gamma)
    sigma = np.sqrt(np.clip(d, 0, None))
    if np.any(sigma < SIGMA_FLOOR):
        j = int(np.argmin(sigma))
        raise DegeneracyError(f"long-run standard deviation of squared score {j + 1} vanishes")
    rho = gamma / np.outer(sigma, sigma)
    return LongRunVar(L_b, phi, gamma, sigma, rho)


def t_stat(lambda_hat, lambda_ref, sigma, n: int, Jplus: int) -> float:
    """
    ``T = sqrt(n) max_{j <= Jplus} |hat lambda_j - lambda_j| / (sigma_j lambda_j)``.

    The reference eigenvalues must be positive and strictly decreasing.
    """
    lh = np.asarray(lambda_hat, dtype=float)
    lr = np.asarray(lambda_ref, dtype=float)
    sg = np.asarray(sigma, dtype=float)
    if Jplus < 2 or Jplus > min(lh.size, lr.size, sg.size):
        raise ValidationError("Jplus must be at least 2 and within the supplied lengths")
    lr, lh, sg = lr[:Jplus], lh[:Jplus], sg[:Jplus]
    if np.any(lr <= 0) or np.any(sg <= 0):
        raise DegeneracyError("reference eigenvalues and sigmas must be positive")
    if np.any(np.diff(lr) >= 0):
        raise ValidationError("reference eigenvalues must be strictly decreasing")
    return float(np.sqrt(n) * np.max(np.abs(lh - lr) / (sg * lr)))


def gumbel_constant(which: str | None = None) -> float:
    """
    Constant ``C`` in ``b_m = a_m - (8 log m)^{-1/2} (log log m + C)``.

    ``stated`` gives ``4 pi - 4``; ``classical`` gives ``log pi``, the
    constant for maxima of ``m`` absolute standard normals; ``one-sided``
    gives ``log(4 pi)``, the constant for maxima of signed normals.
    """
    which = which or _config.GUMBEL_CONSTANT
    if which == "stated":
        return 4 * np.pi - 4
    if which == "classical":
        return float(np.log(np.pi))
    if which == "one-sided":
        return float(np.log(4 * np.pi))
    raise ValidationError(f"unknown Gumbel constant {which!r}")


def gumbel_norm(m: int, x: float = 0.0, constant: str | None = None):
    """
    Normalizers ``a_m = sqrt(2 log m)``, ``b_m`` and ``u_m(x) = x/a_m + b_m``.

    Examples
    --------
    >>> a, b, u = gumbel_norm(200, 0.0)
    >>> round(a, 4), round(b, 4)
    (3.2552, 1.6834)
    """
    if m < 2 or int(m) != m:
        raise ValidationError("m must be an integer >= 2")
    lm = np.log(m)
    llm = np.log(lm)
    a = np.sqrt(2 * lm)
    b = a - (8 * lm) ** -0.5 * (llm + gumbel_constant(constant))
    return float(a), float(b), float(x / a + b)


def _corr_factor(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValidationError("rho must be square")
    if np.abs(rho - rho.T).max() > 1e-10 or np.abs(np.diag(rho) - 1).max() > 1e-10:
        raise ValidationError("rho must be symmetric with unit diagonal")
    try:
        return linalg.cholesky(rho + CORR_RIDGE * np.eye(rho.shape[0]), lower=True)
    except linalg.LinAlgError as exc:
        raise ValidationError("rho is not positive semidefinite") from exc


def gauss_max_sample(rho, reps: int, seed=0, chunk: int = 65536) -> np.ndarray:
    """
    Draws of ``max_j |Z_j|`` with ``Z ~ N(0, rho)``.

    Draws are produced in fixed-size chunks from the streams
    ``seed.spawn(c)`` so the result does not depend on memory limits.
    """
    seed = _as_seed(seed)
    if reps < 1:
        raise ValidationError("reps must be positive")
    L = _corr_factor(rho)
    J = L.shape[0]
    ident = np.allclose(rho, np.eye(J))
    out = np.empty(reps)
    for c, start in enumerate(range(0, reps, chunk)):
        size = min(chunk, reps - start)
        Z = seed.spawn(c).rng().standard_normal((size, J))
        if not ident:
            Z = Z @ L.T
        out[start:start + size] = np.abs(Z).max(axis=1)
    return out


@dataclass(frozen=True, eq=False)
class MaxDevResult:
    """
    Outcome of the maximum-deviation analysis.

    ``T`` and ``pvalue`` are None unless reference eigenvalues were
    supplied; ``mode`` records whether population or plug-in values
    entered the statistic.
    """

    Jplus: int
    level: float
    method: str
    threshold: float
    a_m: float
    b_m: float
    lambda_hat: np.ndarray
    sigma_hat: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    upper_infinite: np.ndarray
    T: Optional[float] = None
    pvalue: Optional[float] = None
    mode: str = "plug-in"

    def to_dict(self):
        def fl(x):
            return [None if not np.isfinite(v) else float(v) for v in x]
        return {
            "T": self.T, "Jplus": self.Jplus, "a_m": self.a_m, "b_m": self.b_m,
            "pvalue": self.pvalue, "method": self.method, "mode": self.mode,
            "level": self.level, "threshold": self.threshold,
            "lambda_hat": fl(self.lambda_hat), "sigma_hat": fl(self.sigma_hat),
            "band": {"lower": fl(self.lower), "upper": fl(self.upper),
                     "upper_infinite": [bool(v) for v in self.upper_infinite]},
        }


def simultaneous_band(lambda_hat, sigma_hat, n: int, Jplus: int, level: float = 0.95,
                      method: str = "gumbel", rho=None, reps: int = 100_000, seed=0,
                      lambda_ref=None, sigma_ref=None, constant: str | None = None) -> MaxDevResult:
    """
    Simultaneous band for ``lambda_1..lambda_Jplus``.

    The threshold ``u`` is the Gumbel quantile ``u_Jplus(-log(-log level))``
    or the ``level`` quantile of :func:`gauss_max_sample` with correlation
    ``rho`` (identity by default). Solving
    ``|hat lambda - lambda| / lambda <= u sigma / sqrt(n)`` for ``lambda``
    gives ``[hat lambda/(1 + u sigma/sqrt n), hat lambda/(1 - u sigma/sqrt n)]``,
    with an infinite upper end when ``u sigma/sqrt n >= 1``.

    When ``lambda_ref`` is supplied the statistic ``T`` is evaluated
    against it (with ``sigma_ref`` or the plug-in sigma) and a Gumbel
    p-value is attached.
    """
    if not 0 < level < 1:
        raise ValidationError("level must lie in (0, 1)")
    lh = np.asarray(lambda_hat, dtype=float)[:Jplus]
    sg = np.asarray(sigma_hat, dtype=float)[:Jplus]
    if lh.size < Jplus or sg.size < Jplus or Jplus < 2:
        raise ValidationError("need Jplus >= 2 eigenvalues and sigmas")
    if np.any(~np.isfinite(sg)) or np.any(sg < SIGMA_FLOOR):
        raise DegeneracyError("degenerate long-run standard deviation")
    a, b, _ = gumbel_norm(Jplus, 0.0, constant)
    if method == "gumbel":
        u = -np.log(-np.log(level)) / a + b
    elif method == "gaussian-mc":
        R = np.eye(Jplus) if rho is None else np.asarray(rho)[:Jplus, :Jplus]
        u = float(np.quantile(gauss_max_sample(R, reps, seed), level))
    else:
        raise ValidationError(f"unknown method {method!r}")
    w = u * sg / np.sqrt(n)
    lower = lh / (1 + w)
    inf = w >= 1
    with np.errstate(divide="ignore"):
        upper = np.where(inf, np.inf, lh / np.where(inf, 1.0, 1 - w))
    T = pval = None
    mode = "plug-in"
    if lambda_ref is not None:
        s_used = sg if sigma_ref is None else np.asarray(sigma_ref, dtype=float)
        T = t_stat(lh, lambda_ref, s_used, n, Jplus)
        pval = float(-np.expm1(-np.exp(-a * (T - b))))
        mode = "population" if sigma_ref is not None else "population-lambda"
    return MaxDevResult(Jplus, level, method, float(u), a, b, lh, sg, lower, upper, inf,
                        T, pval, mode)


@dataclass(frozen=True)
class BlockScheme:
    """
    Partition of ``1..n`` into ``L`` consecutive blocks of length ``K``.
    """

    n: int
    K: int

    def __post_init__(self):
        if self.K < 1 or self.n < 1 or self.n % self.K:
            raise ValidationError("block length must divide n")

    @property
    def L(self) -> int:
        return self.n // self.K

    @property
    def kappa(self) -> float:
        return float(np.log(self.K) / np.log(self.n)) if self.n > 1 else 0.0

    @property
    def ell(self) -> float:
        return 1.0 - self.kappa if self.n > 1 else 0.0


@dataclass(frozen=True, eq=False)
class BlockSums:
    S: np.ndarray
    S_diamond: np.ndarray
    V_diamond: np.ndarray
    V: np.ndarray


def _square_minus_one(x):
    return x ** 2 - 1


def block_coupled_sums(panel, scheme: BlockScheme, model: ScoreModel, seed=0,
                       d: int | None = None,
                       transform: Callable = _square_minus_one) -> BlockSums:
    """
    Block sums and their coupled versions.

    The panel ``U_{k,h} = transform(eta_{k,h})`` is rebuilt from the
    innovations of ``gen_scores(model, n, d, seed)``. For block ``l``
    starting at ``s = K (l-1)`` the coupled scores ``eta^<>_k`` keep the
    innovations from time ``s`` on and replace the whole earlier history
    by a fresh independent one, so the block sums ``V^<>_{l,h}`` are
    independent across ``l``.

    Parameters
    ----------
    panel : ndarray, shape (n, d) or None
        If given, it must equal the regenerated panel; this guards against
        mismatched seeds.
    scheme : BlockScheme
    model : ScoreModel
        iid, moving-average or linear kind.
    seed : SeedSpec or int
    d : int, optional
        Column count when ``panel`` is None.
    transform : callable
        Map from scores to ``U``; default ``x**2 - 1``.

    Returns
    -------
    BlockSums
        ``S`` and ``S_diamond`` of shape (d,), ``V_diamond`` and the
        uncoupled block sums ``V`` of shape (L, d).
    """
    seed = _as_seed(seed)
    if model.kind == "multiplicative_vol":
        raise UnsupportedModelError("block coupling needs a regenerable innovation history")
    n, K, L = scheme.n, scheme.K, scheme.L
    if panel is not None:
        panel = np.asarray(panel, dtype=float)
        if panel.shape[0] != n:
            raise ValidationError("panel length differs from the block scheme")
        d = panel.shape[1]
    if d is None or d < 1:
        raise ValidationError("column count d is required")
    a = _filter(model, n)
    M = a.size - 1
    V = np.empty((L, d))
    Vd = np.empty((L, d))
    for h in range(d):
        eps = seed.spawn(h).rng().standard_normal(n + M)
        eta = a[0] * eps if M == 0 else signal.fftconvolve(eps, a, mode="valid")
        U = transform(eta)
        if panel is not None and not np.allclose(panel[:, h], U, rtol=1e-10, atol=1e-10):
            raise ValidationError("panel does not match the model and seed")
        V[:, h] = U.reshape(L, K).sum(axis=1)
        if M == 0:
            Vd[:, h] = V[:, h]
            continue
        delta = np.empty((L, M))
        for l in range(L):
            fresh = seed.spawn(_BLOCK_STREAM, l, h).rng().standard_normal(M)
            # eps index s + M - 1 - u holds time s - 1 - u
            s = l * K
            hist = eps[s:s + M][::-1]
            delta[l] = hist - fresh
        corr = signal.fftconvolve(np.broadcast_to(a[1:], (L, M)), delta[:, ::-1], axes=1)
        diff = np.zeros((L, K))
        avail = min(K, corr.shape[1] - (M - 1))
        diff[:, :avail] = corr[:, M - 1:M - 1 + avail]
        eta_d = eta.reshape(L, K) - diff
        Vd[:, h] = transform(eta_d).sum(axis=1)
    # both totals are sums of block sums, so they agree bitwise when nothing is coupled
    return BlockSums(V.sum(axis=0), Vd.sum(axis=0), Vd, V)
