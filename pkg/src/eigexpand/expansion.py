"""
First-order perturbation expansions of eigenvalues and eigenfunctions.

Given an estimated kernel ``hat D`` and its population counterpart ``D``
with eigenpairs ``(lambda_j, e_j)``, the principal terms are

    I_{k,j} = <(hat D - D) e_k, e_j>,

and the residuals below measure what the first-order expansions leave
out. Every residual is computed against population quantities.
"""
from __future__ import annotations

import io as _io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._config import RIDGE_FLOOR
from .errors import DegeneracyError, GridError, ValidationError
from .funcgrid import KernelOp
from .operators import PopulationOperators, lag_op, population_operator
from .simulate import SamplePath
from .spectral import EigenSystem, _check_spectrum, gap_quantities

__all__ = [
    "ExpansionReport",
    "I_matrix",
    "perturbation_identity",
    "eigval_residual",
    "eigfun_residual",
    "f_residual",
    "svd_f_residual",
    "score_gram",
    "population_system",
    "expansion_report",
]


def population_system(pop: PopulationOperators) -> EigenSystem:
    """Eigen system of a diagonal population kernel, sorted descending."""
    lam = np.asarray(pop.lambdas, dtype=float)
    order = np.argsort(-lam, kind="stable")
    E = pop.spec.basis.matrix()[: lam.size]
    return EigenSystem(pop.spec.grid, lam[order], E[order])


def I_matrix(hatK: KernelOp, popK: KernelOp, pop: EigenSystem) -> np.ndarray:
    """
    Matrix ``I[k, j] = <(hatK - popK) e_k, e_j>`` over the population
    eigenfunctions, symmetrized exactly when both kernels are symmetric.
    """
    if hatK.grid != popK.grid or popK.grid != pop.grid:
        raise GridError("kernels and eigen system live on different grids")
    T = popK.grid.T
    E = pop.vectors
    I = (E @ (hatK.matrix - popK.matrix) @ E.T).T / T ** 2
    if hatK.symmetric and popK.symmetric:
        I = 0.5 * (I + I.T)
    return I


@dataclass(frozen=True)
class IdentityTerms:
    lhs: float
    I: float
    II: float
    III: float
    residual: float


def perturbation_identity(hat: EigenSystem, pop: EigenSystem, hatK: KernelOp,
                          popK: KernelOp, k: int, j: int) -> IdentityTerms:
    """
    Terms of ``(lambda_j - lambda_k) <e_k, d_j> = I_{k,j} + II_{k,j} + III_{k,j}``
    with ``d_j = hat e_j - e_j`` (0-based ``k != j``).

    ``II_{k,j} = <(hatK - popK) e_k, d_j>`` and
    ``III_{k,j} = -(hat lambda_j - lambda_j) <e_k, d_j>``. The identity is
    exact for symmetric kernels.
    """
    if k == j:
        raise ValidationError("k and j must differ")
    lam = pop.lambdas
    if abs(lam[j] - lam[k]) <= 0:
        raise DegeneracyError("population eigenvalues coincide")
    T = popK.grid.T
    ek, ej = pop.vectors[k], pop.vectors[j]
    d = hat.vectors[j] - ej
    De = (hatK.matrix - popK.matrix) @ ek / T
    lhs = (lam[j] - lam[k]) * np.dot(ek, d) / T
    I = np.dot(De, ej) / T
    II = np.dot(De, d) / T
    III = -(hat.lambdas[j] - lam[j]) * np.dot(ek, d) / T
    return IdentityTerms(float(lhs), float(I), float(II), float(III),
                         float(lhs - I - II - III))


def eigval_residual(hat: EigenSystem, pop: EigenSystem, I: np.ndarray, m: float = 1.0):
    """
    ``R1_j = (hat lambda_j - lambda_j - I_{j,j}) / lambda_j``.

    Returns
    -------
    R1 : ndarray
    scaled : ndarray
        ``sqrt(m) R1``.
    """
    J = min(hat.J, I.shape[0])
    lam = pop.lambdas[:J]
    if np.any(lam == 0):
        raise DegeneracyError("population eigenvalue is zero")
    R1 = (hat.lambdas[:J] - lam - np.diag(I)[:J]) / lam
    return R1, np.sqrt(m) * R1


def eigfun_residual(hat: EigenSystem, pop: EigenSystem, I: np.ndarray, j=None, m: float = 1.0):
    """
    Normalized eigenfunction residuals.

    ``R2_j = ||d_j + e_j ||d_j||^2/2 - sum_{k!=j} e_k I_{k,j}/(lambda_j - lambda_k)|| / sqrt(Lambda_j)``
    and
    ``R3_j = (||d_j||^2 - sum_{k!=j} I_{k,j}^2/(lambda_j - lambda_k)^2) / Lambda_j``,
    with sums over the whole population spectrum in ``pop``.

    Parameters
    ----------
    j : int or None
        A single 0-based index, or None for all indices covered by ``hat``.
    m : float
        Unused scale, accepted for symmetry with :func:`eigval_residual`.

    Returns
    -------
    (R2, R3) : floats or arrays
    """
    lam = _check_spectrum(pop.lambdas)
    T = pop.grid.T
    E = pop.vectors
    idx = range(min(hat.J, pop.J)) if j is None else [int(j)]
    R2, R3 = [], []
    for jj in idx:
        Lam = gap_quantities(lam, jj)[1]
        if Lam <= 0:
            raise DegeneracyError(f"Lambda_{jj} vanishes")
        d = hat.vectors[jj] - E[jj]
        nd2 = np.dot(d, d) / T
        coef = np.zeros(lam.size)
        mask = np.arange(lam.size) != jj
        coef[mask] = I[mask, jj] / (lam[jj] - lam[mask])
        resid = d + E[jj] * nd2 / 2 - coef @ E
        R2.append(np.sqrt(np.dot(resid, resid) / T) / np.sqrt(Lam))
        R3.append((nd2 - np.sum(coef ** 2)) / Lam)
    if j is not None:
        return float(R2[0]), float(R3[0])
    return np.array(R2), np.array(R3)


def f_residual(hatA: KernelOp, A: KernelOp, hat: EigenSystem, pop: EigenSystem, J=None):
    """
    Residual of the right singular function expansion.

    With ``hat f_j = hatA(hat e_j) / hat lambda_j^{1/2}`` and
    ``f_j = A(e_j) / lambda_j^{1/2}``, returns the L2 norms of

    ``hat f_j - f_j + (hat lambda_j - lambda_j) f_j / (2 lambda_j)
    - [A(hat e_j - e_j) + (hatA - A)(e_j)] / lambda_j^{1/2}``.

    ``hat`` and ``pop`` are eigen systems of ``hatA* hatA`` and ``A* A``;
    ``hat f_j`` is sign aligned with ``f_j``.
    """
    T = A.grid.T
    J = min(hat.J, pop.J) if J is None else J
    out = np.empty(J)
    top = max(hat.lambdas[0], 0.0)
    for j in range(J):
        lh, lp = hat.lambdas[j], pop.lambdas[j]
        if lh <= RIDGE_FLOOR * top or lh <= 0:
            raise DegeneracyError(f"hat lambda_{j + 1} is below the ridge floor")
        if lp <= 0:
            raise DegeneracyError(f"lambda_{j + 1} is not positive")
        eh, e = hat.vectors[j], pop.vectors[j]
        fh = hatA.matrix @ eh / T / np.sqrt(lh)
        f = A.matrix @ e / T / np.sqrt(lp)
        if np.dot(fh, f) < 0:
            fh = -fh
        lin = (A.matrix @ (eh - e) + (hatA.matrix - A.matrix) @ e) / T / np.sqrt(lp)
        r = fh - f + (lh - lp) * f / (2 * lp) - lin
        out[j] = np.sqrt(np.dot(r, r) / T)
    return out


def svd_f_residual(sample: SamplePath, h: int, hat: EigenSystem, pop: EigenSystem,
                   popA: Optional[KernelOp] = None, center: bool = True, J=None):
    """
    :func:`f_residual` for the empirical lag operator.

    ``hat`` and ``pop`` must be eigen systems of the symmetrized lag
    kernels (see :func:`~eigexpand.operators.sym_lag_op`). That kernel is
    ``B B*`` with ``B`` the lag-``h`` operator, so the factor ``A`` with
    ``A* A = B B*`` is the adjoint ``B*``, i.e. the lag ``-h`` operator.
    """
    hatA = lag_op(sample, -h, center).op
    if popA is None:
        if sample.spec is None:
            raise ValidationError("population operator needed; pass popA or a simulated sample")
        popA = population_operator(sample.spec, "lag", h).op.transpose()
    return f_residual(hatA, popA, hat, pop, J)


def score_gram(scores: np.ndarray):
    """
    Gram ``eta^C_{i,j} = (1/n) sum_k eta_{k,i} eta_{k,j}`` and remainder
    ``eta^R_{i,j} = mean_i * mean_j``.
    """
    S = np.asarray(scores, dtype=float)
    if S.ndim != 2 or S.shape[0] < 1:
        raise ValidationError("scores must be an (n, J) matrix with n >= 1")
    n = S.shape[0]
    mu = S.mean(axis=0)
    return S.T @ S / n, np.outer(mu, mu)


@dataclass(frozen=True, eq=False)
class ExpansionReport:
    J: int
    lambda_hat: np.ndarray
    lambda_pop: np.ndarray
    I: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    R3: np.ndarray
    RF: Optional[np.ndarray]
    m: float

    def to_csv(self) -> str:
        buf = _io.StringIO()
        buf.write("j,lambda_hat,lambda_pop,I_jj,R1,R2,R3,RF,m\n")
        for j in range(self.J):
            rf = "" if self.RF is None else "%.17g" % self.RF[j]
            buf.write("%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%.17g\n" % (
                j + 1, self.lambda_hat[j], self.lambda_pop[j], self.I[j, j],
                self.R1[j], self.R2[j], self.R3[j], rf, self.m))
        return buf.getvalue()


def expansion_report(hatK: KernelOp, popK: KernelOp, hat: EigenSystem, pop: EigenSystem,
                     J: int, m: float, RF=None) -> ExpansionReport:
    """Collect ``I`` and the residuals ``R1``-``R3`` of the first ``J`` indices."""
    I = I_matrix(hatK, popK, pop)
    hJ = hat.truncate(J)
    R1, _ = eigval_residual(hJ, pop, I, m)
    R2, R3 = eigfun_residual(hJ, pop, I)
    return ExpansionReport(J, hJ.lambdas.copy(), pop.lambdas[:J].copy(), I[:J, :J],
                           R1, R2, R3, None if RF is None else np.asarray(RF)[:J], m)
