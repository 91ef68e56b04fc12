import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eigexpand import io as eio
from eigexpand.errors import AliasingError, GridError, ValidationError
from eigexpand.funcgrid import (GridFn, KernelOp, apply_kernel, compose, fourier_basis,
                                inner_product, kernel_from_expansion, make_grid, outer)


def test_make_grid_points():
    g = make_grid(4)
    np.testing.assert_array_equal(g.points, [0.125, 0.375, 0.625, 0.875])
    assert g.weight == 0.25
    g = make_grid(256)
    assert g.points.size == 256 and g.points[0] == 1 / 512
    assert np.all(np.diff(g.points) > 0) and g.weight * g.T == 1


def test_make_grid_rejects_small():
    with pytest.raises(GridError):
        make_grid(3)


def test_fourier_basis_values(grid16):
    b = fourier_basis(grid16, 1)
    np.testing.assert_array_equal(b[0].values, np.ones(16))
    assert inner_product(b[0], b[0]) == 1.0
    b = fourier_basis(grid16, 3)
    assert abs(inner_product(b[1], b[2])) < 1e-15
    t = grid16.points
    np.testing.assert_allclose(b[1].values, np.sqrt(2) * np.cos(2 * np.pi * t))
    np.testing.assert_allclose(b[2].values, np.sqrt(2) * np.sin(2 * np.pi * t))


@pytest.mark.parametrize("T", [16, 20, 64, 257])
def test_fourier_gram_identity(T):
    g = make_grid(T)
    b = fourier_basis(g, T // 4)
    np.testing.assert_allclose(b.gram(), np.eye(T // 4), atol=1e-12)


def test_fourier_aliasing(grid16):
    fourier_basis(grid16, 4)
    with pytest.raises(AliasingError):
        fourier_basis(grid16, 5)


def test_inner_product_examples(basis16):
    e1, e2 = basis16[0], basis16[1]
    assert inner_product(e1, e1) == pytest.approx(1, abs=1e-14)
    assert inner_product(e1, e2) == pytest.approx(0, abs=1e-14)
    assert inner_product(e1 + e2, e1 + e2) == pytest.approx(2, abs=1e-13)


def test_grid_mismatch(basis16):
    other = fourier_basis(make_grid(32), 1)[0]
    with pytest.raises(GridError):
        inner_product(basis16[0], other)
    with pytest.raises(GridError):
        apply_kernel(KernelOp(make_grid(32), np.zeros((32, 32))), basis16[0])


def test_apply_kernel_examples(basis16, grid16):
    e1, e2 = basis16[0], basis16[1]
    P = outer(e1, e1)
    np.testing.assert_allclose(apply_kernel(P, e1).values, e1.values, atol=1e-14)
    Z = KernelOp(grid16, np.zeros((16, 16)))
    np.testing.assert_array_equal(apply_kernel(Z, e2).values, 0)
    K = kernel_from_expansion(basis16, [2, 1, 0, 0])
    np.testing.assert_allclose(apply_kernel(K, e2).values, e2.values, atol=1e-13)
    np.testing.assert_allclose(apply_kernel(K, e1).values, 2 * e1.values, atol=1e-13)


def test_kernel_symmetry_flag(grid16, rng):
    A = rng.standard_normal((16, 16))
    with pytest.raises(ValidationError):
        KernelOp(grid16, A, symmetric=True)
    KernelOp(grid16, A + A.T, symmetric=True)


def test_nonfinite_rejected(grid16):
    v = np.ones(16)
    v[3] = np.nan
    with pytest.raises(ValidationError):
        GridFn(grid16, v)


@settings(max_examples=40, deadline=None)
@given(T=st.integers(4, 40), seed=st.integers(0, 2 ** 32 - 1),
       a=st.floats(-10, 10), b=st.floats(-10, 10))
def test_apply_kernel_linear_and_selfadjoint(T, seed, a, b):
    g = make_grid(T)
    r = np.random.default_rng(seed)
    A = r.standard_normal((T, T))
    K = KernelOp(g, A + A.T, symmetric=True)
    f = GridFn(g, r.standard_normal(T))
    h = GridFn(g, r.standard_normal(T))
    lhs = apply_kernel(K, a * f + b * h).values
    rhs = a * apply_kernel(K, f).values + b * apply_kernel(K, h).values
    scale = max(1.0, np.abs(lhs).max())
    assert np.abs(lhs - rhs).max() <= 1e-12 * scale * 10
    x = inner_product(apply_kernel(K, f), h)
    y = inner_product(f, apply_kernel(K, h))
    assert abs(x - y) <= 1e-10 * max(1.0, abs(x))


def test_compose_matches_sequential(grid16, rng):
    A = KernelOp(grid16, rng.standard_normal((16, 16)))
    B = KernelOp(grid16, rng.standard_normal((16, 16)))
    f = GridFn(grid16, rng.standard_normal(16))
    np.testing.assert_allclose(apply_kernel(compose(A, B), f).values,
                               apply_kernel(A, apply_kernel(B, f)).values, rtol=1e-12, atol=1e-12)


def test_json_roundtrip(grid16, rng):
    f = GridFn(grid16, rng.standard_normal(16))
    g = eio.from_json(eio.to_json(f))
    np.testing.assert_array_equal(g.values, f.values)
    A = rng.standard_normal((16, 16))
    K = KernelOp(grid16, A + A.T, symmetric=True)
    K2 = eio.from_json(eio.to_json(K))
    np.testing.assert_array_equal(K2.matrix, K.matrix)
    assert K2.symmetric
    assert json.loads(eio.to_json(K))["grid_T"] == 16


def test_csv_roundtrip(tmp_path, grid16, rng):
    A = rng.standard_normal((16, 16))
    K = KernelOp(grid16, A)
    p = tmp_path / "k.csv"
    eio.write_kernel_csv(p, K)
    assert p.read_text().startswith("# grid_T=16")
    np.testing.assert_array_equal(eio.read_kernel_csv(p).matrix, A)
