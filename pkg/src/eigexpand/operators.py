"""
Empirical and population operators.

Estimators return an :class:`OperatorEstimate` wrapping the kernel and its
provenance. Population kernels are assembled in closed form from the
model's eigenvalues, basis and score autocorrelations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._config import PSD_CLIP, RIDGE_FLOOR
from .errors import (NegativeEigenvalueError, TruncationError,
                     UnsupportedModelError, ValidationError)
from .funcgrid import KernelOp, kernel_from_expansion
from .simulate import ProcessSpec, SamplePath, score_acf

__all__ = [
    "WeightScheme",
    "OperatorEstimate",
    "PopulationOperators",
    "cov_op",
    "lag_op",
    "sym_lag_op",
    "longrun_op",
    "population_operator",
    "flr_estimate",
]


@dataclass(frozen=True)
class WeightScheme:
    """
    Lag window ``omega_h``.

    ``flat`` uses ``omega_h = 1``; ``bartlett`` uses ``1 - h/(b+1)``.
    """

    kind: str = "flat"

    def __post_init__(self):
        if self.kind not in ("flat", "bartlett"):
            raise ValidationError(f"unknown weight scheme {self.kind!r}")

    def weights(self, b: int) -> np.ndarray:
        """Weights ``omega_0..omega_b``."""
        h = np.arange(b + 1, dtype=float)
        if self.kind == "flat":
            return np.ones(b + 1)
        return 1.0 - h / (b + 1)


@dataclass(frozen=True, eq=False)
class OperatorEstimate:
    op: KernelOp
    kind: str
    n: int
    centered: bool
    h: Optional[int] = None
    b: Optional[int] = None
    weights: Optional[WeightScheme] = None

    @property
    def matrix(self):
        return self.op.matrix


def _centered(sample: SamplePath, center: bool) -> np.ndarray:
    X = sample.data
    return X - X.mean(axis=0) if center else X


def cov_op(sample: SamplePath, center: bool = True) -> OperatorEstimate:
    """
    Empirical covariance kernel ``(1/n) sum_k X_k(r) X_k(s)``.

    Curves are centered by the sample mean when ``center`` is True.
    """
    X = _centered(sample, center)
    m = X.T @ X / sample.n
    m = 0.5 * (m + m.T)
    return OperatorEstimate(KernelOp(sample.grid, m, True), "cov", sample.n, center, h=0)


def _lag_matrix(Xc: np.ndarray, h: int) -> np.ndarray:
    # row index r pairs with X_{k-h}, column index s with X_k
    n = Xc.shape[0]
    a = abs(h)
    m = Xc[: n - a].T @ Xc[a:] / (n - a)
    return m if h >= 0 else m.T


def lag_op(sample: SamplePath, h: int, center: bool = True) -> OperatorEstimate:
    """
    Empirical lag-``h`` kernel.

    For ``h >= 0`` the kernel is
    ``(1/(n-h)) sum_{k=h+1}^n X_k(s) X_{k-h}(r)``, so that the operator maps
    ``f`` to ``(1/(n-h)) sum_k <X_k, f> X_{k-h}``. Negative lags use the
    adjoint, whose kernel is the transpose.
    """
    h = int(h)
    if abs(h) > sample.n - 1:
        raise ValidationError(f"|h| must be at most n-1={sample.n - 1}, got {h}")
    Xc = _centered(sample, center)
    if h == 0:
        return cov_op(sample, center)
    m = _lag_matrix(Xc, h)
    return OperatorEstimate(KernelOp(sample.grid, m), "lag", sample.n, center, h=h)


def _psd_repair(m: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(m)
    top = max(abs(w).max(), 0.0)
    if top == 0:
        return m
    if w.min() < -PSD_CLIP * top:
        raise NegativeEigenvalueError(
            f"symmetrized lag kernel has eigenvalue {w.min():.3g} below -{PSD_CLIP}*max")
    if w.min() >= 0:
        return m
    w = np.clip(w, 0, None)
    out = (V * w) @ V.T
    return 0.5 * (out + out.T)


def sym_lag_op(sample: SamplePath, h: int, center: bool = True) -> OperatorEstimate:
    """
    Symmetrized lag kernel.

    .. math::

        \\hat D(r,s) = \\frac{1}{(n-h)^2} \\sum_{k,l}
        \\langle X_{l+h}, X_{k+h} \\rangle X_k(r) X_l(s)

    which is the kernel of the composition of the lag-``h`` operator with
    its adjoint. It is evaluated as that composition; tiny negative
    eigenvalues produced by rounding are clipped to zero.
    """
    h = int(h)
    if not 1 <= h <= sample.n - 1:
        raise ValidationError(f"h must lie in [1, n-1], got {h}")
    Xc = _centered(sample, center)
    L = _lag_matrix(Xc, h)
    m = L @ L.T / sample.grid.T
    m = _psd_repair(0.5 * (m + m.T))
    return OperatorEstimate(KernelOp(sample.grid, m, True), "symlag", sample.n, center, h=h)


def longrun_op(sample: SamplePath, b: int, w: WeightScheme | str = "flat",
               center: bool = True) -> OperatorEstimate:
    """
    Lag-window long-run covariance kernel
    ``C_0 + sum_{h=1}^b omega_h (C_h + C_h^T)``.

    Parameters
    ----------
    sample : SamplePath
    b : int
        Bandwidth, ``0 <= b <= n - 2``.
    w : WeightScheme or str
    center : bool
    """
    if isinstance(w, str):
        w = WeightScheme(w)
    b = int(b)
    if not 0 <= b <= sample.n - 2:
        raise ValidationError(f"bandwidth must lie in [0, n-2], got {b}")
    Xc = _centered(sample, center)
    om = w.weights(b)
    m = Xc.T @ Xc / sample.n
    for h in range(1, b + 1):
        Ch = _lag_matrix(Xc, h)
        m = m + om[h] * (Ch + Ch.T)
    m = 0.5 * (m + m.T)
    return OperatorEstimate(KernelOp(sample.grid, m, True), "longrun", sample.n, center,
                            b=b, weights=w)


@dataclass(frozen=True, eq=False)
class PopulationOperators:
    """
    Closed-form population quantities of a process.

    Attributes
    ----------
    spec : ProcessSpec
    op : KernelOp
        The requested kernel.
    kind : str
    lambdas : ndarray
        Its eigenvalues in the model basis (not sorted).
    r : ndarray, shape (J, H+1)
        Score autocorrelations ``r_j(h)`` up to the lag needed.
    phi_b : ndarray or None
        ``sum_{|h|<=b} r_j(h)`` for longrun kernels.
    """

    spec: ProcessSpec
    op: KernelOp
    kind: str
    lambdas: np.ndarray
    r: np.ndarray
    h: Optional[int] = None
    b: Optional[int] = None
    phi_b: Optional[np.ndarray] = None


def _score_acfs(spec: ProcessSpec, nlags: int) -> np.ndarray:
    J = spec.J_model
    if spec.kind == "multiplicative":
        raise UnsupportedModelError("population operators are not available for multiplicative processes")
    if spec.kind == "arh1":
        phi = np.array(spec.phi)
        return phi[:, None] ** np.arange(nlags + 1)[None, :]
    r = score_acf(spec.scores, nlags)
    return np.tile(r, (J, 1))


def population_operator(spec: ProcessSpec, kind: str = "cov", h: int = 0, b: int = 0) -> PopulationOperators:
    """
    Population kernel of ``kind`` in {'cov', 'lag', 'symlag', 'longrun'}.

    With ``lambda~_j`` the KL weights and ``r_j`` the score autocorrelations,

    * ``cov``: ``sum_j lambda~_j e_j(r) e_j(s)``
    * ``lag``: ``sum_j lambda~_j r_j(h) e_j(r) e_j(s)``
    * ``symlag``: ``sum_j (lambda~_j r_j(h))^2 e_j(r) e_j(s)``
    * ``longrun``: ``sum_j lambda~_j phi^b_j e_j(r) e_j(s)`` with
      ``phi^b_j = sum_{|h|<=b} r_j(h)``.

    Raises
    ------
    UnsupportedModelError
        For the multiplicative model.
    """
    lt = spec.lambda_tilde()
    basis = spec.basis
    if kind == "cov":
        r = _score_acfs(spec, 0)
        lam = lt
        return PopulationOperators(spec, kernel_from_expansion(_trunc(basis, spec), lam), kind, lam, r, h=0)
    if kind in ("lag", "symlag"):
        a = abs(int(h))
        r = _score_acfs(spec, a)
        lam = lt * r[:, a]
        if kind == "symlag":
            lam = lam ** 2
            op = kernel_from_expansion(_trunc(basis, spec), lam)
        else:
            op = kernel_from_expansion(_trunc(basis, spec), np.diag(lam))
        return PopulationOperators(spec, op, kind, lam, r, h=int(h))
    if kind == "longrun":
        b = int(b)
        if b < 0:
            raise ValidationError("bandwidth must be non-negative")
        r = _score_acfs(spec, b)
        phib = r[:, 0] + 2 * r[:, 1:].sum(axis=1)
        lam = lt * phib
        return PopulationOperators(spec, kernel_from_expansion(_trunc(basis, spec), lam),
                                   kind, lam, r, b=b, phi_b=phib)
    raise ValidationError(f"unknown operator kind {kind!r}")


def _trunc(basis, spec):
    if basis.J == spec.J_model:
        return basis
    from .funcgrid import BasisSet
    return BasisSet(basis.grid, spec.J_model, basis.functions[: spec.J_model])


def flr_estimate(X: SamplePath, Y: SamplePath, b: int, center: bool = False) -> KernelOp:
    """
    Plug-in estimator of the functional linear model ``X_k = Phi(Y_k) + noise``.

    .. math::

        \\hat\\Phi^b(\\cdot) = \\sum_{j \\le b} \\frac{1}{n}\\sum_k
        \\frac{\\langle Y_k, \\hat e^y_j\\rangle X_k}{\\hat\\lambda^y_j}
        \\langle \\hat e^y_j, \\cdot \\rangle

    where ``(lambda^y_j, e^y_j)`` are eigenpairs of the (uncentered by
    default) covariance of ``Y``.

    Parameters
    ----------
    X, Y : SamplePath
        Responses and regressors on the same grid with equal ``n``.
    b : int
        Number of components.
    center : bool
        Center both samples first.

    Returns
    -------
    KernelOp
        Kernel ``Phi(r, s)`` acting through :func:`~eigexpand.funcgrid.apply_kernel`.

    Raises
    ------
    TruncationError
        If ``lambda^y_b`` is below the ridge floor; ``admissible`` holds
        the largest usable ``b``.
    """
    from .spectral import eig_sym

    if X.grid != Y.grid or X.n != Y.n:
        raise ValidationError("X and Y must share grid and sample size")
    if b < 1:
        raise ValidationError("b must be at least 1")
    T = X.grid.T
    if b > T:
        raise ValidationError("b cannot exceed the grid size")
    C = cov_op(Y, center)
    eig = eig_sym(C.op, b, check_psd=False)
    lam = eig.lambdas
    floor = RIDGE_FLOOR * max(lam[0], 0.0)
    ok = lam > max(floor, 0.0)
    if lam[0] <= 0 or not ok.all():
        adm = int(np.argmin(ok)) if not ok.all() else b
        raise TruncationError(
            f"eigenvalue {b} of the regressor covariance is below the ridge floor; "
            f"largest admissible b is {adm}", adm)
    Xc = _centered(X, center)
    Yc = _centered(Y, center)
    E = eig.matrix()
    S = Yc @ E.T / T                         # <Y_k, e_j>
    G = Xc.T @ S / X.n / lam                  # g_j(r), shape (T, b)
    return KernelOp(X.grid, G @ E)
