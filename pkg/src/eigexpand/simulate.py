"""
Stationary functional time series with prescribed eigenstructure.

Three generative families are provided:

* ``kl``: Karhunen-Loeve sums ``X_k = mu + sum_j lambda_j^{1/2} eta_{k,j} e_j``
  with unit-variance scores that may be iid, a (long memory) linear
  process, or a finite moving average.
* ``arh1``: functional autoregression with an operator that is diagonal
  in the same basis.
* ``multiplicative``: the martingale difference model
  ``X_k = sigma_{k-1} eps_k`` with a scalar GARCH-type volatility.

All randomness flows through :class:`SeedSpec`, which derives independent
streams from a master seed with :class:`numpy.random.SeedSequence`.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import fft as sfft
from scipy import signal, special

from ._config import BURNIN_TARGET, MA_TAIL_BUDGET
from .errors import UnsupportedModelError, ValidationError
from .funcgrid import BasisSet, Grid, GridFn, fourier_basis, make_grid

__all__ = [
    "SeedSpec",
    "EigenProfile",
    "ScoreModel",
    "ProcessSpec",
    "SamplePath",
    "gen_scores",
    "gen_process",
    "coupling_distance",
    "linear_coefficients",
    "score_acf",
    "arh1_burnin",
    "kl_spec",
]


# ---------------------------------------------------------------------------
# seeds

@dataclass(frozen=True)
class SeedSpec:
    """
    Deterministic random stream identifier.

    A stream is the pair ``(master, key)``. The generator is
    ``PCG64(SeedSequence(master, spawn_key=key))``; SeedSequence hashes
    the pair with a fixed, platform independent mixing function, so equal
    pairs give bit-identical draws everywhere and distinct keys give
    statistically independent streams.

    Parameters
    ----------
    master : int
        Non-negative 64-bit master seed.
    key : tuple of int
        Stream path below the master seed.
    """

    master: int
    key: tuple = ()

    def __post_init__(self):
        if not (0 <= int(self.master) < 2 ** 64):
            raise ValidationError("master seed must be an unsigned 64-bit integer")
        key = tuple(int(k) for k in self.key)
        if any(k < 0 for k in key):
            raise ValidationError("stream ids must be non-negative")
        object.__setattr__(self, "master", int(self.master))
        object.__setattr__(self, "key", key)

    def spawn(self, *ids) -> "SeedSpec":
        """Child stream with ``ids`` appended to the key."""
        return SeedSpec(self.master, self.key + tuple(int(i) for i in ids))

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master, spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(ss))


def _as_seed(seed) -> SeedSpec:
    if isinstance(seed, SeedSpec):
        return seed
    return SeedSpec(int(seed))


# ---------------------------------------------------------------------------
# model descriptions

@dataclass(frozen=True)
class EigenProfile:
    """
    Eigenvalue sequence ``lambda_1 > lambda_2 > ... > 0``.

    Parameters
    ----------
    kind : {'polynomial', 'exponential', 'explicit'}
    param : float or sequence
        ``r`` for ``lambda_j = j^{-r}``, ``rho`` for ``lambda_j = rho^j``,
        or the explicit values.
    J_model : int, optional
        Truncation count. Defaults to the length of an explicit list.
    """

    kind: str
    param: object
    J_model: Optional[int] = None

    def __post_init__(self):
        if self.kind == "explicit":
            vals = tuple(float(v) for v in np.atleast_1d(self.param))
            object.__setattr__(self, "param", vals)
            if self.J_model is None:
                object.__setattr__(self, "J_model", len(vals))
            if self.J_model > len(vals):
                raise ValidationError("J_model exceeds the explicit list")
        elif self.kind == "polynomial":
            if not float(self.param) > 1:
                raise ValidationError("polynomial profile needs r > 1")
        elif self.kind == "exponential":
            if not 0 < float(self.param) < 1:
                raise ValidationError("exponential profile needs 0 < rho < 1")
        else:
            raise ValidationError(f"unknown eigen profile kind {self.kind!r}")
        if self.J_model is None or self.J_model < 1:
            raise ValidationError("J_model must be a positive integer")
        lam = self.lambdas()
        if np.any(lam <= 0) or np.any(np.diff(lam) >= 0):
            raise ValidationError("eigenvalues must be positive and strictly decreasing")

    def lambdas(self) -> np.ndarray:
        j = np.arange(1, self.J_model + 1, dtype=float)
        if self.kind == "polynomial":
            return j ** (-float(self.param))
        if self.kind == "exponential":
            return float(self.param) ** j
        return np.asarray(self.param[: self.J_model], dtype=float)

    def to_dict(self):
        p = list(self.param) if self.kind == "explicit" else float(self.param)
        return {"kind": self.kind, "param": p, "J_model": self.J_model}


_SCORE_KINDS = ("iid_gaussian", "linear_gaussian", "ma_q", "multiplicative_vol")


@dataclass(frozen=True)
class ScoreModel:
    """
    Law of the score panel ``eta_{k,j}``.

    Parameters
    ----------
    kind : {'iid_gaussian', 'linear_gaussian', 'ma_q', 'multiplicative_vol'}
    alpha : float
        Decay exponent of ``a_i = c_alpha (i+1)^{-alpha}``, ``alpha > 1/2``.
    M : int, optional
        Truncation length of the linear filter. Defaults to
        ``max(n + 1000, 10**4)`` at generation time.
    coefs : sequence of float
        Moving-average coefficients ``a_0..a_q`` (normalized internally).
    omega, beta, gamma : float
        Volatility recursion ``sigma_k^2 = omega + beta sigma_{k-1}^2 + gamma xi_k^2``.
    method : {'auto', 'convolution', 'circulant'}
        Sampling method for linear scores. ``auto`` uses the truncated
        convolution when its tail variance is within budget and exact
        circulant embedding otherwise.
    """

    kind: str = "iid_gaussian"
    alpha: float = 1.0
    M: Optional[int] = None
    coefs: tuple = (1.0,)
    omega: float = 1.0
    beta: float = 0.0
    gamma: float = 0.0
    method: str = "auto"

    def __post_init__(self):
        if self.kind not in _SCORE_KINDS:
            raise ValidationError(f"unknown score model {self.kind!r}")
        object.__setattr__(self, "coefs", tuple(float(c) for c in self.coefs))
        if self.kind == "linear_gaussian" and not self.alpha > 0.5:
            raise ValidationError("linear scores need alpha > 1/2")
        if self.kind == "ma_q":
            a = np.asarray(self.coefs)
            if a.size == 0 or not np.any(a != 0):
                raise ValidationError("MA coefficients must not all vanish")
        if self.kind == "multiplicative_vol":
            if self.omega <= 0 or self.beta < 0 or self.gamma < 0:
                raise ValidationError("volatility needs omega > 0, beta, gamma >= 0")
            if self.beta + self.gamma >= 1:
                raise ValidationError("volatility recursion is not stationary: beta + gamma >= 1")
        if self.method not in ("auto", "convolution", "circulant"):
            raise ValidationError(f"unknown method {self.method!r}")

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in self.__dict__.items()}


@dataclass(frozen=True, eq=False)
class ProcessSpec:
    """
    Generative model of a stationary functional time series.

    Parameters
    ----------
    kind : {'kl', 'arh1', 'multiplicative'}
    basis : BasisSet
        Eigenfunctions shared by all operators of the model.
    profile : EigenProfile
        ``lambda~_j`` of the KL sum (kl, multiplicative). For arh1 it is
        derived from ``phi`` and ``noise`` when omitted.
    scores : ScoreModel
    phi, noise : sequence of float, optional
        arh1 only: eigenvalues of the autoregressive operator
        (``sum phi < 1``) and of the innovation covariance.
    mean : GridFn, optional
    """

    kind: str
    basis: BasisSet
    profile: Optional[EigenProfile] = None
    scores: ScoreModel = field(default_factory=ScoreModel)
    phi: Optional[tuple] = None
    noise: Optional[tuple] = None
    mean: Optional[GridFn] = None

    def __post_init__(self):
        if self.kind not in ("kl", "arh1", "multiplicative"):
            raise ValidationError(f"unknown process kind {self.kind!r}")
        if self.kind == "arh1":
            if self.phi is None or self.noise is None:
                raise ValidationError("arh1 needs phi and noise profiles")
            phi = tuple(float(p) for p in self.phi)
            noise = tuple(float(v) for v in self.noise)
            if len(phi) != len(noise):
                raise ValidationError("phi and noise must have equal length")
            if any(p < 0 for p in phi) or sum(phi) >= 1:
                raise ValidationError("arh1 contraction needs phi >= 0 and sum(phi) < 1")
            if any(v <= 0 for v in noise):
                raise ValidationError("noise eigenvalues must be positive")
            object.__setattr__(self, "phi", phi)
            object.__setattr__(self, "noise", noise)
            if self.profile is None:
                lt = np.array(noise) / (1 - np.array(phi) ** 2)
                object.__setattr__(self, "profile", EigenProfile("explicit", lt))
        elif self.profile is None:
            raise ValidationError("a profile is required")
        if self.kind == "multiplicative" and self.scores.kind != "multiplicative_vol":
            raise ValidationError("multiplicative processes need multiplicative_vol scores")
        if self.J_model > self.basis.J:
            raise ValidationError(
                f"profile has {self.J_model} components but the basis only {self.basis.J}")
        if self.mean is not None and self.mean.grid != self.grid:
            raise ValidationError("mean lives on a different grid")

    @property
    def grid(self) -> Grid:
        return self.basis.grid

    @property
    def J_model(self) -> int:
        return self.profile.J_model

    def lambda_tilde(self) -> np.ndarray:
        """KL weights ``lambda~_j``; for arh1 these are the stationary variances."""
        if self.kind == "arh1":
            return np.array(self.noise) / (1 - np.array(self.phi) ** 2)
        return self.profile.lambdas()

    def to_dict(self):
        d = {
            "kind": self.kind,
            "grid_T": self.grid.T,
            "basis": {"kind": "fourier", "J": self.basis.J},
            "profile": self.profile.to_dict(),
            "scores": self.scores.to_dict(),
        }
        if self.kind == "arh1":
            d["phi"] = list(self.phi)
            d["noise"] = list(self.noise)
        if self.mean is not None:
            d["mean"] = self.mean.values.tolist()
        return d

    @classmethod
    def from_dict(cls, d) -> "ProcessSpec":
        """
        Build a spec from a JSON-compatible dictionary.

        Schema::

            {"kind": "kl" | "arh1" | "multiplicative",
             "grid_T": int,
             "basis": {"kind": "fourier", "J": int},       # J defaults to J_model
             "profile": {"kind": ..., "param": ..., "J_model": int},
             "scores": {"kind": ..., "alpha": ..., ...},   # ScoreModel fields
             "phi": [...], "noise": [...],                  # arh1 only
             "mean": [...]}                                 # optional, length grid_T
        """
        grid = make_grid(int(d["grid_T"]))
        prof = d.get("profile")
        profile = EigenProfile(**prof) if prof is not None else None
        bd = d.get("basis", {})
        if bd.get("kind", "fourier") != "fourier":
            raise ValidationError("only the fourier basis is available")
        J = bd.get("J")
        if J is None:
            J = profile.J_model if profile is not None else len(d["phi"])
        basis = fourier_basis(grid, int(J))
        scores = ScoreModel(**d.get("scores", {}))
        mean = d.get("mean")
        mean = GridFn(grid, mean) if mean is not None else None
        return cls(d["kind"], basis, profile, scores,
                   phi=d.get("phi"), noise=d.get("noise"), mean=mean)


def kl_spec(T: int, lambdas, scores: ScoreModel | None = None, J_basis=None) -> ProcessSpec:
    """Shorthand for a kl process with Fourier eigenfunctions."""
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    grid = make_grid(T)
    basis = fourier_basis(grid, J_basis or lam.size)
    return ProcessSpec("kl", basis, EigenProfile("explicit", lam),
                       scores or ScoreModel())


@dataclass(frozen=True, eq=False)
class SamplePath:
    """
    Realized sample of ``n`` curves.

    Parameters
    ----------
    grid : Grid
    data : ndarray, shape (n, T)
        One curve per row.
    spec : ProcessSpec, optional
    true_scores : ndarray, shape (n, J_model), optional
    """

    grid: Grid
    data: np.ndarray
    spec: Optional[ProcessSpec] = None
    true_scores: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.array(self.data, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.grid.T or X.shape[0] < 1:
            raise ValidationError(f"sample must be (n, {self.grid.T}), got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValidationError("curves must be finite")
        X.setflags(write=False)
        object.__setattr__(self, "data", X)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def curves(self):
        return [GridFn(self.grid, row) for row in self.data]

    def reversed(self) -> "SamplePath":
        """The time-reversed sample."""
        ts = None if self.true_scores is None else self.true_scores[::-1]
        return SamplePath(self.grid, self.data[::-1], self.spec, ts)


# ---------------------------------------------------------------------------
# linear processes

def linear_coefficients(alpha: float, M: int) -> np.ndarray:
    """
    Filter ``a_i = c_alpha (i+1)^{-alpha}``, ``i = 0..M``.

    ``c_alpha = zeta(2 alpha)^{-1/2}`` makes the infinite filter have unit
    squared norm.
    """
    c = special.zeta(2 * alpha) ** -0.5
    return c * np.arange(1, M + 2, dtype=float) ** (-alpha)


def linear_tail_fraction(alpha: float, M: int) -> float:
    """Share of the variance carried by the coefficients ``a_i, i > M``."""
    return float(special.zeta(2 * alpha, M + 2) / special.zeta(2 * alpha))


def _ma_coefs(model: ScoreModel) -> np.ndarray:
    a = np.asarray(model.coefs, dtype=float)
    return a / np.sqrt(np.sum(a ** 2))


def _linear_acf(alpha: float, nlags: int) -> np.ndarray:
    """
    ``r(h) = c^2 sum_{i>=1} i^{-alpha} (i+h)^{-alpha}`` for ``h = 0..nlags``.

    Partial sums up to ``N`` by FFT correlation, remainder by
    Euler-Maclaurin with the closed-form integral.
    """
    N = max(4096, 4 * nlags)
    i = np.arange(1, N + nlags + 1, dtype=float)
    a = i ** (-alpha)
    L = sfft.next_fast_len(2 * a.size)
    fa = sfft.rfft(a, L)
    full = sfft.irfft(fa * np.conj(sfft.rfft(a[:N], L)), L)
    partial = full[: nlags + 1]
    h = np.arange(nlags + 1, dtype=float)
    f = N ** (-alpha) * (N + h) ** (-alpha)
    fp = -alpha * f * (1.0 / N + 1.0 / (N + h))
    integral = (N ** (1 - 2 * alpha) / (2 * alpha - 1)
                * special.hyp2f1(alpha, 2 * alpha - 1, 2 * alpha, -h / N))
    tail = integral - f / 2 - fp / 12
    return (partial + tail) / special.zeta(2 * alpha)


def score_acf(model: ScoreModel, nlags: int) -> np.ndarray:
    """
    Autocorrelations ``r(h) = E[eta_h eta_0]`` for ``h = 0..nlags``.

    Raises
    ------
    UnsupportedModelError
        For multiplicative volatility scores.
    """
    r = np.zeros(nlags + 1)
    if model.kind == "iid_gaussian":
        r[0] = 1.0
    elif model.kind == "ma_q":
        a = _ma_coefs(model)
        q = a.size - 1
        for h in range(min(q, nlags) + 1):
            r[h] = np.dot(a[: a.size - h], a[h:])
    elif model.kind == "linear_gaussian":
        r = _linear_acf(model.alpha, nlags)
    else:
        raise UnsupportedModelError("no closed-form autocorrelation for multiplicative scores")
    return r


def _default_M(model: ScoreModel, n: int) -> int:
    return model.M if model.M is not None else max(n + 1000, 10 ** 4)


def _linear_method(model: ScoreModel, n: int) -> str:
    if model.method != "auto":
        return model.method
    M = _default_M(model, n)
    return "convolution" if linear_tail_fraction(model.alpha, M) <= MA_TAIL_BUDGET else "circulant"


def _filter(model: ScoreModel, n: int) -> np.ndarray:
    """Causal filter ``a_0..a_M`` of a convolution-representable model."""
    if model.kind == "iid_gaussian":
        return np.ones(1)
    if model.kind == "ma_q":
        return _ma_coefs(model)
    if model.kind == "linear_gaussian":
        M = _default_M(model, n)
        if linear_tail_fraction(model.alpha, M) > MA_TAIL_BUDGET:
            raise ValidationError(
                f"truncation M={M} leaves tail variance "
                f"{linear_tail_fraction(model.alpha, M):.3g} above the budget {MA_TAIL_BUDGET}")
        return linear_coefficients(model.alpha, M)
    raise UnsupportedModelError(f"{model.kind} scores have no innovation filter")


def _column_convolution(model, n, seed: SeedSpec, j: int):
    a = _filter(model, n)
    eps = seed.spawn(j).rng().standard_normal(n + a.size - 1)
    if a.size == 1:
        return a[0] * eps
    return signal.fftconvolve(eps, a, mode="valid")


def _column_circulant(model, n, seed: SeedSpec, j: int):
    r = score_acf(model, n)
    c = np.concatenate([r, r[-2:0:-1]])
    m = c.size
    lam = sfft.fft(c).real
    if lam.min() < -1e-10 * lam.max():
        raise ValidationError("circulant embedding is not nonnegative definite")
    lam = np.clip(lam, 0, None)
    g = seed.spawn(j).rng()
    z = g.standard_normal(m) + 1j * g.standard_normal(m)
    y = sfft.fft(np.sqrt(lam / m) * z)
    return y[:n].real


def _vol_scores(model: ScoreModel, n: int, J: int, seed: SeedSpec):
    """Scores ``sigma_{k-1} xi_{k,j}`` of the multiplicative model and sigma_{k-1}."""
    g = seed.rng()
    burn = 500
    xi = g.standard_normal((n + burn, J))
    s2 = np.empty(n + burn)
    prev = model.omega / (1 - model.beta - model.gamma)
    for k in range(n + burn):
        s2[k] = prev
        prev = model.omega + model.beta * prev + model.gamma * xi[k, 0] ** 2
    sig = np.sqrt(s2[burn:])
    return sig[:, None] * xi[burn:], sig


def gen_scores(model: ScoreModel, n: int, J: int, seed) -> np.ndarray:
    """
    Draw a stationary ``(n, J)`` score panel.

    Columns are independent and use the streams ``seed.spawn(j)`` for the
    iid, linear and moving-average kinds.

    Parameters
    ----------
    model : ScoreModel
    n, J : int
    seed : SeedSpec or int

    Returns
    -------
    ndarray, shape (n, J)
    """
    seed = _as_seed(seed)
    if n < 1 or J < 1:
        raise ValidationError("n and J must be positive")
    if model.kind == "multiplicative_vol":
        return _vol_scores(model, n, J, seed)[0]
    out = np.empty((n, J))
    if model.kind == "linear_gaussian" and _linear_method(model, n) == "circulant":
        for j in range(J):
            out[:, j] = _column_circulant(model, n, seed, j)
        return out
    for j in range(J):
        out[:, j] = _column_convolution(model, n, seed, j)
    return out


def arh1_burnin(phi) -> int:
    """Burn-in length after which ``phi_max^burnin <= 1e-12``."""
    p = max(phi) if len(phi) else 0.0
    if p <= 0:
        return 0
    return int(np.ceil(np.log(BURNIN_TARGET) / np.log(p)))


def gen_process(spec: ProcessSpec, n: int, burnin: int = 0, seed=0) -> SamplePath:
    """
    Draw ``n`` consecutive curves from ``spec``.

    Parameters
    ----------
    spec : ProcessSpec
    n : int
    burnin : int
        Discarded initial steps (arh1 requires at least
        :func:`arh1_burnin` steps).
    seed : SeedSpec or int

    Returns
    -------
    SamplePath
        With ``true_scores`` holding the unit-variance coordinates
        ``eta_{k,j}`` so that ``X_k = mu + sum_j lambda~_j^{1/2} eta_{k,j} e_j``.
    """
    seed = _as_seed(seed)
    if burnin < 0:
        raise ValidationError("burnin must be non-negative")
    J = spec.J_model
    lt = spec.lambda_tilde()
    if spec.kind == "kl":
        eta = gen_scores(spec.scores, n, J, seed)
    elif spec.kind == "multiplicative":
        eta = gen_scores(spec.scores, n, J, seed)
    else:
        need = arh1_burnin(spec.phi)
        if burnin < need:
            raise ValidationError(f"arh1 burn-in must be at least {need}, got {burnin}")
        phi = np.array(spec.phi)
        g = seed.rng()
        x0 = g.standard_normal(J)
        xi = g.standard_normal((burnin + n, J))
        sd = np.sqrt(1 - phi ** 2)
        eta = np.empty((burnin + n, J))
        for j in range(J):
            zi = np.array([phi[j] * x0[j]])
            eta[:, j], _ = signal.lfilter([sd[j]], [1.0, -phi[j]], xi[:, j], zi=zi)
        eta = eta[burnin:]
    E = spec.basis.matrix()[:J]
    X = (eta * np.sqrt(lt)) @ E
    if spec.mean is not None:
        X = X + spec.mean.values
    return SamplePath(spec.grid, X, spec, eta)


# ---------------------------------------------------------------------------
# physical dependence

def coupling_distance(spec: ProcessSpec, k: int, p: int = 2, reps: int = 1000, seed=0) -> float:
    """
    Monte Carlo estimate of the physical dependence measure ``Omega_p(k)``.

    Each replication draws an innovation history, evaluates
    ``eta_{k,j}`` and its coupled version in which ``eps_0`` is replaced by
    an independent copy, and the estimate is
    ``max_j (mean |eta_{k,j} - eta'_{k,j}|^p)^{1/p}``.

    Parameters
    ----------
    spec : ProcessSpec
    k : int
        Lag, ``k >= 0``.
    p : {2, 4}
    reps : int
        At least 100.
    seed : SeedSpec or int

    Raises
    ------
    UnsupportedModelError
        For multiplicative processes.
    """
    seed = _as_seed(seed)
    if k < 0:
        raise ValidationError("k must be non-negative")
    if p not in (2, 4):
        raise ValidationError("p must be 2 or 4")
    if reps < 100:
        raise ValidationError("reps must be at least 100")
    if spec.kind == "multiplicative" or spec.scores.kind == "multiplicative_vol":
        raise UnsupportedModelError("coupling is not implemented for multiplicative processes")
    best = 0.0
    for j in range(spec.J_model):
        if spec.kind == "arh1":
            ph = spec.phi[j]
            a = np.sqrt(1 - ph ** 2) * ph ** np.arange(k + 1)
        elif spec.scores.kind == "linear_gaussian":
            a = linear_coefficients(spec.scores.alpha, k)
        else:
            a = _filter(spec.scores, 1)
        g = seed.spawn(j).rng()
        # eps[:, i] is the innovation at time k - i
        eps = g.standard_normal((reps, a.size))
        eps0 = g.standard_normal(reps)
        eta = eps @ a
        if k < a.size:
            cpl = eps.copy()
            cpl[:, k] = eps0
            diff = eta - cpl @ a
        else:
            diff = np.zeros(reps)
        best = max(best, float(np.mean(np.abs(diff) ** p) ** (1.0 / p)))
    return best


def spec_hash(spec: ProcessSpec) -> str:
    return hashlib.sha256(json.dumps(spec.to_dict(), sort_keys=True).encode()).hexdigest()
