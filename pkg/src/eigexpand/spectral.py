"""
Symmetric eigensolver on kernels, sign conventions, gap quantities and
the pathwise perturbation bounds.

A kernel ``K`` acts through quadrature, so its eigenpairs are those of
``K / T``; eigenfunctions are rescaled by ``sqrt(T)`` to have unit
discrete L2 norm.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._config import ARITH_TOL, GAP_TOL, PSD_CLIP, STRUCT_TOL
from .errors import (AmbiguousSignError, DegeneracyError, GridError,
                     NegativeEigenvalueError, ValidationError)
from .funcgrid import GridFn, KernelOp

__all__ = [
    "EigenSystem",
    "DiagnosticBundle",
    "eig_sym",
    "jacobi_eigh",
    "align_signs",
    "gap_quantities",
    "diagnostics",
    "hall_error_bound",
    "pathwise_bound_check",
    "op_norm",
]


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """
    Leading eigenpairs of a symmetric kernel.

    Attributes
    ----------
    grid : Grid
    lambdas : ndarray, shape (J,)
        Descending eigenvalues.
    vectors : ndarray, shape (J, T)
        Eigenfunction values, one per row, unit L2 norm.
    """

    grid: object
    lambdas: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lambdas, dtype=float)
        V = np.array(self.vectors, dtype=float).reshape(lam.size, -1)
        lam.setflags(write=False)
        V.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "vectors", V)

    @property
    def J(self) -> int:
        return self.lambdas.size

    @property
    def efuns(self):
        return [GridFn(self.grid, v) for v in self.vectors]

    def matrix(self) -> np.ndarray:
        return self.vectors

    @property
    def gaps(self) -> np.ndarray:
        """``psi_j`` computed within the stored spectrum."""
        return np.array([_psi(self.lambdas, j) for j in range(self.J)])

    @property
    def caps(self) -> np.ndarray:
        """``Lambda_j`` computed within the stored spectrum."""
        return np.array([gap_quantities(self.lambdas, j)[1] for j in range(self.J)])

    def truncate(self, J: int) -> "EigenSystem":
        return EigenSystem(self.grid, self.lambdas[:J], self.vectors[:J])

    def flip(self, signs) -> "EigenSystem":
        s = np.asarray(signs, dtype=float)
        return EigenSystem(self.grid, self.lambdas, self.vectors * s[:, None])


def jacobi_eigh(A: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100):
    """
    Cyclic Jacobi eigendecomposition of a real symmetric matrix.

    Rotations sweep the upper triangle in row order, so the output is
    fully deterministic. Returns ``(w, V)`` with ascending ``w`` and
    eigenvectors in the columns of ``V``, like :func:`numpy.linalg.eigh`.
    """
    A = np.array(A, dtype=float, copy=True)
    n = A.shape[0]
    V = np.eye(n)
    scale = np.linalg.norm(A)
    if scale == 0:
        return np.zeros(n), V
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(A, 1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Vp = V[:, p].copy()
                V[:, p] = c * Vp - s * V[:, q]
                V[:, q] = s * Vp + c * V[:, q]
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def _canonical_signs(V: np.ndarray) -> np.ndarray:
    # first coordinate with |value| > 1e-12 made positive
    out = V.copy()
    for j in range(out.shape[0]):
        nz = np.flatnonzero(np.abs(out[j]) > ARITH_TOL)
        if nz.size and out[j, nz[0]] < 0:
            out[j] = -out[j]
    return out


def eig_sym(K: KernelOp, J: int | None = None, method: str = "lapack",
            check_psd: bool = True) -> EigenSystem:
    """
    Top-``J`` eigenpairs of a symmetric kernel.

    Parameters
    ----------
    K : KernelOp
        Symmetric kernel.
    J : int, optional
        Number of pairs, at most ``T``. Defaults to ``T``.
    method : {'lapack', 'jacobi'}
        Dense solver. Both are deterministic.
    check_psd : bool
        Raise if an eigenvalue is below ``-1e-8 lambda_1``.

    Returns
    -------
    EigenSystem
        Eigenfunctions canonically signed: the first coordinate with
        magnitude above 1e-12 is positive.
    """
    T = K.grid.T
    J = T if J is None else int(J)
    if not 1 <= J <= T:
        raise ValidationError(f"J must lie in [1, {T}]")
    M = K.matrix
    scale = np.abs(M).max()
    if np.abs(M - M.T).max() > STRUCT_TOL * scale:
        raise ValidationError("eig_sym needs a symmetric kernel")
    A = 0.5 * (M + M.T) / T
    if method == "lapack":
        w, V = np.linalg.eigh(A)
    elif method == "jacobi":
        w, V = jacobi_eigh(A)
    else:
        raise ValidationError(f"unknown eigensolver {method!r}")
    w = w[::-1]
    V = V[:, ::-1]
    top = max(abs(w).max(), 0.0)
    if check_psd and top > 0 and w.min() < -PSD_CLIP * top:
        raise NegativeEigenvalueError(
            f"kernel has eigenvalue {w.min():.3g} below -{PSD_CLIP} * lambda_1")
    vec = _canonical_signs(V[:, :J].T * np.sqrt(T))
    return EigenSystem(K.grid, w[:J], vec)


def align_signs(hat: EigenSystem, reference: EigenSystem) -> EigenSystem:
    """
    Flip each ``hat e_j`` so that ``<hat e_j, e_j> >= 0``.

    Raises
    ------
    AmbiguousSignError
        If some inner product is exactly zero.
    """
    if hat.grid != reference.grid:
        raise GridError("eigen systems live on different grids")
    if hat.J != reference.J:
        raise ValidationError("eigen systems have different J")
    ip = np.sum(hat.vectors * reference.vectors, axis=1) / hat.grid.T
    if np.any(ip == 0):
        j = int(np.flatnonzero(ip == 0)[0])
        raise AmbiguousSignError(f"eigenfunction {j} is orthogonal to its reference")
    return hat.flip(np.sign(ip))


def _check_spectrum(lam):
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValidationError("eigenvalues must be a non-empty sequence")
    d = -np.diff(lam)
    if np.any(d <= GAP_TOL * abs(lam[0])):
        raise DegeneracyError("eigenvalues are repeated or not strictly decreasing")
    return lam


def _psi(lam, j):
    lam = np.asarray(lam)
    left = lam[j - 1] - lam[j] if j > 0 else np.inf
    right = lam[j] - lam[j + 1] if j + 1 < lam.size else np.inf
    return float(min(left, right))


def gap_quantities(lambdas, j: int):
    """
    Gap quantities of the ``j``-th (0-based) eigenvalue.

    Returns
    -------
    psi : float
        ``min(lambda_{j-1} - lambda_j, lambda_j - lambda_{j+1})``, only the
        existing neighbour at either end.
    Lam : float
        ``sum_{k != j} lambda_j lambda_k / (lambda_j - lambda_k)^2``.
    S1 : float
        ``sum_{k != j} lambda_k / |lambda_j - lambda_k|``.
    S2 : float
        Equal to ``Lam``.
    """
    lam = _check_spectrum(lambdas)
    if not 0 <= j < lam.size:
        raise ValidationError("index out of range")
    others = np.delete(lam, j)
    diff = lam[j] - others
    S1 = float(np.sum(others / np.abs(diff)))
    S2 = float(np.sum(lam[j] * others / diff ** 2))
    return _psi(lam, j), S2, S1, S2


@dataclass(frozen=True)
class DiagnosticBundle:
    S1: np.ndarray
    S2: np.ndarray
    xi: np.ndarray
    s: np.ndarray
    ER: float


def _xi(lam):
    # inf over k < j of 1 - lambda_k / lambda_j, empty inf for j = 0 set to 0
    lam = np.asarray(lam)
    xi = np.zeros(lam.size)
    for j in range(1, lam.size):
        xi[j] = np.min(1 - lam[:j] / lam[j])
    return xi


def hall_error_bound(eig: EigenSystem, n: int, Jplus: int, sup=None) -> float:
    """
    Hall-type overall error term

    ``max_{j <= Jplus} n^{-3/2} (1 - xi_j)^{-1/2} psi_j^{-3} lambda_j^{-1/2} s_j``

    with ``xi_j = inf_{k<j} (1 - lambda_k/lambda_j)`` (``xi_1 = 0``) and
    ``s_j = sup_t |e_j(t)|``. Gaps use the whole stored spectrum.

    Parameters
    ----------
    eig : EigenSystem
    n : int
    Jplus : int
        Number of leading indices in the max.
    sup : sequence, optional
        Exact sup norms when known; defaults to the grid maxima.
    """
    lam = _check_spectrum(eig.lambdas)
    if not 1 <= Jplus <= lam.size:
        raise ValidationError("Jplus out of range")
    if np.any(lam[:Jplus] <= 0):
        raise DegeneracyError("eigenvalues must be positive")
    s = np.abs(eig.vectors).max(axis=1) if sup is None else np.asarray(sup, dtype=float)
    xi = _xi(lam)
    vals = [n ** -1.5 * (1 - xi[j]) ** -0.5 * _psi(lam, j) ** -3 * lam[j] ** -0.5 * s[j]
            for j in range(Jplus)]
    return float(max(vals))


def diagnostics(eig: EigenSystem, n: int, Jplus: int, sup=None) -> DiagnosticBundle:
    lam = _check_spectrum(eig.lambdas)
    S1 = np.array([gap_quantities(lam, j)[2] for j in range(lam.size)])
    S2 = np.array([gap_quantities(lam, j)[3] for j in range(lam.size)])
    s = np.abs(eig.vectors).max(axis=1) if sup is None else np.asarray(sup, dtype=float)
    return DiagnosticBundle(S1, S2, _xi(lam), s, hall_error_bound(eig, n, Jplus, sup))


def op_norm(A: np.ndarray, T: int) -> float:
    """Operator norm of a kernel via the largest |eigenvalue| of its symmetric part."""
    S = 0.5 * (A + A.T) / T
    w = np.linalg.eigvalsh(S)
    return float(np.abs(w).max())


@dataclass(frozen=True)
class BoundCheck:
    eig_ok: np.ndarray
    fun_ok: np.ndarray
    eig_slack: np.ndarray
    fun_slack: np.ndarray
    delta: float

    @property
    def all_ok(self) -> bool:
        return bool(self.eig_ok.all() and self.fun_ok.all())


def pathwise_bound_check(hatK: KernelOp, K: KernelOp, hat: EigenSystem,
                         pop: EigenSystem) -> BoundCheck:
    """
    Check ``|hat lambda_j - lambda_j| <= ||Delta||`` and
    ``||hat e_j - e_j|| <= 2 sqrt(2) ||Delta|| / psi_j``.

    ``hat`` must already be sign aligned to ``pop``. Slack is bound minus
    observed value; a comparison passes when the slack is at least
    ``-4 eps`` times the bound scale, which only absorbs the rounding of
    the two sides.
    """
    T = K.grid.T
    delta = op_norm(hatK.matrix - K.matrix, T)
    J = min(hat.J, pop.J)
    lam = pop.lambdas
    eps = np.finfo(float).eps
    e_obs = np.abs(hat.lambdas[:J] - lam[:J])
    e_slack = delta - e_obs
    e_ok = e_slack >= -4 * eps * max(abs(lam[0]), delta)
    # gaps from the full spectrum of K, so the last stored index sees its true neighbour
    full = np.linalg.eigvalsh(0.5 * (K.matrix + K.matrix.T) / T)[::-1]
    psi = np.array([_psi(full, j) for j in range(J)])
    d = hat.vectors[:J] - pop.vectors[:J]
    f_obs = np.sqrt(np.sum(d ** 2, axis=1) / T)
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = 2 * np.sqrt(2) * delta / psi
    bound = np.where(psi > 0, bound, np.inf)
    f_slack = bound - f_obs
    f_ok = f_slack >= -4 * eps * np.maximum(bound, 1.0)
    return BoundCheck(e_ok, f_ok, e_slack, f_slack, delta)
