"""
Discretized function space on [0, 1].

Functions are stored by their values on the midpoint grid
``t_i = (i - 0.5) / T`` and integrated with the uniform weight ``1 / T``.
Under this rule the first ``T / 4`` trigonometric functions are
orthonormal to rounding error, so quadrature never contaminates the
statistical quantities computed downstream.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._config import ARITH_TOL, STRUCT_TOL
from .errors import AliasingError, GridError, ValidationError

__all__ = [
    "Grid",
    "GridFn",
    "KernelOp",
    "BasisSet",
    "make_grid",
    "fourier_basis",
    "inner_product",
    "l2_norm",
    "apply_kernel",
    "outer",
    "kernel_from_expansion",
    "compose",
]


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """
    Uniform midpoint grid on (0, 1).

    Parameters
    ----------
    T : int
        Number of points, at least 4.
    """

    T: int

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 4:
            raise GridError(f"grid needs an integer T >= 4, got {self.T!r}")

    @property
    def points(self) -> np.ndarray:
        return (np.arange(1, self.T + 1) - 0.5) / self.T

    @property
    def weight(self) -> float:
        return 1.0 / self.T


@dataclass(frozen=True, eq=False)
class GridFn:
    """
    A function sampled on a :class:`Grid`.

    Supports ``+``, ``-`` and scalar multiplication, which keep the grid.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.T,):
            raise GridError(f"values have shape {v.shape}, grid has T={self.grid.T}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("function values must be finite")
        object.__setattr__(self, "values", v)

    def _check(self, other):
        if not isinstance(other, GridFn) or other.grid != self.grid:
            raise GridError("functions live on different grids")

    def __add__(self, other):
        self._check(other)
        return GridFn(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return GridFn(self.grid, self.values - other.values)

    def __mul__(self, c):
        return GridFn(self.grid, float(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFn(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class KernelOp:
    """
    Integral operator given by its kernel on the grid.

    Parameters
    ----------
    grid : Grid
    matrix : ndarray, shape (T, T)
        ``matrix[i, s] = K(t_i, t_s)``.
    symmetric : bool
        If True the matrix is checked for symmetry at
        ``STRUCT_TOL * max|K|``.
    """

    grid: Grid
    matrix: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        m = _frozen(self.matrix)
        T = self.grid.T
        if m.shape != (T, T):
            raise GridError(f"kernel has shape {m.shape}, grid has T={T}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("kernel entries must be finite")
        if self.symmetric:
            scale = np.max(np.abs(m)) if m.size else 0.0
            if np.max(np.abs(m - m.T)) > STRUCT_TOL * scale:
                raise ValidationError("kernel flagged symmetric is not symmetric")
        object.__setattr__(self, "matrix", m)

    @property
    def T(self):
        return self.grid.T

    def transpose(self) -> "KernelOp":
        """Kernel of the adjoint operator."""
        return KernelOp(self.grid, self.matrix.T, self.symmetric)

    def __add__(self, other):
        _same_grid(self, other)
        return KernelOp(self.grid, self.matrix + other.matrix,
                        self.symmetric and other.symmetric)

    def __sub__(self, other):
        _same_grid(self, other)
        return KernelOp(self.grid, self.matrix - other.matrix,
                        self.symmetric and other.symmetric)

    def __mul__(self, c):
        return KernelOp(self.grid, float(c) * self.matrix, self.symmetric)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class BasisSet:
    """An ordered family of functions on a common grid."""

    grid: Grid
    J: int
    functions: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        if len(self.functions) != self.J:
            raise ValidationError("J does not match the number of functions")
        for f in self.functions:
            if f.grid != self.grid:
                raise GridError("basis function on a different grid")

    def matrix(self) -> np.ndarray:
        """Values as a (J, T) array, one function per row."""
        if self.J == 0:
            return np.zeros((0, self.grid.T))
        return np.vstack([f.values for f in self.functions])

    def gram(self) -> np.ndarray:
        E = self.matrix()
        return E @ E.T / self.grid.T

    def __getitem__(self, j):
        return self.functions[j]

    def __len__(self):
        return self.J


def _same_grid(a, b):
    if a.grid != b.grid:
        raise GridError("objects live on different grids")


def make_grid(T: int) -> Grid:
    """
    Build the midpoint grid with ``T`` points.

    Examples
    --------
    >>> make_grid(4).points
    array([0.125, 0.375, 0.625, 0.875])
    """
    return Grid(T)


def fourier_basis(grid: Grid, J: int) -> BasisSet:
    """
    First ``J`` real Fourier functions on ``grid``.

    ``e_1 = 1``, ``e_{2m} = sqrt(2) cos(2 pi m t)`` and
    ``e_{2m+1} = sqrt(2) sin(2 pi m t)``.

    Parameters
    ----------
    grid : Grid
    J : int
        Number of functions, ``1 <= J <= T / 4``.

    Returns
    -------
    BasisSet

    Raises
    ------
    AliasingError
        If ``J > T / 4``.
    """
    if J < 1:
        raise ValidationError("J must be at least 1")
    if 4 * J > grid.T:
        raise AliasingError(f"J={J} Fourier modes need T >= {4 * J}, got T={grid.T}")
    t = grid.points
    funcs = [GridFn(grid, np.ones(grid.T))]
    for j in range(2, J + 1):
        m = j // 2
        trig = np.cos if j % 2 == 0 else np.sin
        funcs.append(GridFn(grid, np.sqrt(2.0) * trig(2 * np.pi * m * t)))
    return BasisSet(grid, J, funcs)


def inner_product(f: GridFn, g: GridFn) -> float:
    """Quadrature inner product ``(1/T) sum_i f(t_i) g(t_i)``."""
    _same_grid(f, g)
    return float(np.dot(f.values, g.values)) / f.grid.T


def l2_norm(f: GridFn) -> float:
    return float(np.sqrt(inner_product(f, f)))


def apply_kernel(K: KernelOp, f: GridFn) -> GridFn:
    """Action ``(Kf)(t_i) = (1/T) sum_s K(t_i, t_s) f(t_s)``."""
    _same_grid(K, f)
    return GridFn(K.grid, K.matrix @ f.values / K.grid.T)


def outer(f: GridFn, g: GridFn, c: float = 1.0) -> KernelOp:
    """Kernel ``c f(r) g(s)`` of the rank-one operator ``c <g, .> f``."""
    _same_grid(f, g)
    m = c * np.outer(f.values, g.values)
    return KernelOp(f.grid, m, symmetric=f is g)


def kernel_from_expansion(basis: BasisSet, coef) -> KernelOp:
    """
    Kernel ``sum_j c_j e_j(r) e_j(s)`` (diagonal coefficients) or
    ``sum_{ij} C_ij e_i(r) e_j(s)`` (matrix coefficients).
    """
    coef = np.asarray(coef, dtype=float)
    E = basis.matrix()
    if coef.ndim == 1:
        m = (E.T * coef) @ E
        m = 0.5 * (m + m.T)
        return KernelOp(basis.grid, m, symmetric=True)
    m = E.T @ coef @ E
    sym = np.allclose(coef, coef.T, rtol=0, atol=ARITH_TOL * max(1.0, np.abs(coef).max()))
    if sym:
        m = 0.5 * (m + m.T)
    return KernelOp(basis.grid, m, symmetric=sym)


def compose(A: KernelOp, B: KernelOp) -> KernelOp:
    """Kernel of ``A o B`` by quadrature: ``(1/T) sum_u A(r,u) B(u,s)``."""
    _same_grid(A, B)
    return KernelOp(A.grid, A.matrix @ B.matrix / A.grid.T)
