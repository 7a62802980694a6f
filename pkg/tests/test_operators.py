import math

import numpy as np
import pytest
from conftest import finite_difference_weights
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from mimetic_ops.errors import InvalidArgumentError, UnsupportedError
from mimetic_ops.grid import Grid, GridFunction, sample, uniform_grid
from mimetic_ops.operators import (
    DiffOp,
    OpKind,
    apply,
    averaged_gradient_Afp,
    averaging_A,
    central_periodic,
    collocation_lobatto,
    dumps_coordinate,
    exactness_orders,
    leading_error_coefficient,
    loads_coordinate,
    polynomial_exactness_order,
    sbp_first_order2,
    segment_endpoints,
)

ORDERS = [2, 4, 6]


def _mimetic_ops():
    return [
        central_periodic(uniform_grid(0.0, 2 * np.pi, 64, "periodic"), 2),
        sbp_first_order2(uniform_grid(0.0, 1.0, 64)),
        collocation_lobatto(2),
    ]


# {{{ construction


@pytest.mark.parametrize("p", ORDERS)
def test_central_matches_moment_oracle(p):
    g = uniform_grid(0.0, 1.0, 32, "periodic")
    D = central_periodic(g, p)

    offsets = np.arange(-p // 2, p // 2 + 1)
    weights = finite_difference_weights(offsets, 1) / g.h
    row = D.to_matrix()[16, 16 - p // 2: 16 + p // 2 + 1]
    np.testing.assert_allclose(row, weights, rtol=1e-12, atol=1e-9)


def test_central_known_coefficients():
    g = uniform_grid(0.0, 12.0, 12, "periodic")
    np.testing.assert_allclose(
        central_periodic(g, 4).to_matrix()[6, 4:9], [1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12]
    )
    np.testing.assert_allclose(
        central_periodic(g, 6).to_matrix()[6, 3:10],
        [-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60],
    )


@pytest.mark.parametrize("p", ORDERS)
def test_central_rows_antisymmetric(p):
    D = central_periodic(uniform_grid(0.0, 1.0, 20, "periodic"), p).to_matrix()
    np.testing.assert_allclose(D + D.T, 0.0, atol=1e-12)
    np.testing.assert_allclose(D.sum(axis=1), 0.0, atol=1e-12)


@pytest.mark.parametrize(
    "make",
    [
        lambda: central_periodic(uniform_grid(0.0, 1.0, 8), 2),
        lambda: central_periodic(uniform_grid(0.0, 1.0, 8, "periodic"), 3),
        lambda: central_periodic(uniform_grid(0.0, 1.0, 4, "periodic"), 6),
        lambda: central_periodic(Grid([0.0, 0.1, 0.5, 0.7], "periodic", period=1.0), 2),
        lambda: sbp_first_order2(uniform_grid(0.0, 1.0, 8, "periodic")),
        lambda: collocation_lobatto(4),
    ],
)
def test_invalid_constructions(make):
    with pytest.raises(InvalidArgumentError):
        make()


def test_sbp_closures():
    D = sbp_first_order2(uniform_grid(0.0, 1.0, 4)).to_matrix()
    h = 0.25
    np.testing.assert_allclose(D[0, :2], [-1 / h, 1 / h])
    np.testing.assert_allclose(D[-1, -2:], [-1 / h, 1 / h])
    np.testing.assert_allclose(D[2, 1:4], [-1 / (2 * h), 0.0, 1 / (2 * h)])


def _lagrange_oracle(x):
    # D_ij = l_j'(x_i) from fitted Lagrange basis polynomials
    n = x.size
    mat = np.zeros((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        basis = np.polynomial.Polynomial.fit(x, e, n - 1).convert()
        mat[:, j] = basis.deriv()(x)
    return mat


@pytest.mark.parametrize("n_nodes", [2, 3])
def test_lobatto_matches_lagrange_oracle(n_nodes):
    D = collocation_lobatto(n_nodes)
    np.testing.assert_allclose(D.to_matrix(), _lagrange_oracle(D.grid.nodes), atol=1e-12)


def test_lobatto3_first_row():
    np.testing.assert_allclose(collocation_lobatto(3).to_matrix()[0], [-1.5, 2.0, -0.5])


@pytest.mark.parametrize(
    "grid",
    [
        uniform_grid(0.0, 1.0, 16, "periodic"),
        uniform_grid(0.0, 1.0, 16, "bounded"),
        uniform_grid(-1.0, 1.0, 1 + 1, "bounded"),
    ],
)
def test_averaging_rows_are_convex(grid):
    A = averaging_A(grid).to_matrix()
    assert np.all(A >= 0.0)
    np.testing.assert_allclose(A.sum(axis=1), 1.0, rtol=0, atol=1e-15)


def test_diffop_validation():
    g = uniform_grid(0.0, 1.0, 4, "periodic")
    with pytest.raises(InvalidArgumentError):
        DiffOp(g, np.zeros((3, 1)), np.zeros((3, 1)), 1, OpKind.CENTRAL_PERIODIC)
    with pytest.raises(InvalidArgumentError):
        DiffOp(g, np.full((4, 1), 7), np.zeros((4, 1)), 1, OpKind.CENTRAL_PERIODIC)


# }}}


# {{{ application


@given(
    coeffs=st.tuples(st.floats(-10, 10), st.floats(-10, 10)),
    data=hnp.arrays(np.float64, (2, 24), elements=st.floats(-100, 100)),
)
@settings(max_examples=50, deadline=None)
def test_apply_is_linear(coeffs, data):
    a, b = coeffs
    g = uniform_grid(0.0, 1.0, 24, "periodic")
    for D in (central_periodic(g, 4), averaging_A(g)):
        u, v = GridFunction(g, data[0]), GridFunction(g, data[1])
        lhs = apply(D, u * a + v * b).values
        rhs = (apply(D, u) * a + apply(D, v) * b).values
        scale = D.row_norm() * (abs(a) + abs(b)) * max(np.max(np.abs(data)), 1.0)
        np.testing.assert_allclose(lhs, rhs, atol=1e-13 * scale)


def test_apply_matches_dense(periodic64):
    D = central_periodic(periodic64, 6)
    u = sample(np.sin, periodic64)
    np.testing.assert_allclose(apply(D, u).scalar, D.to_matrix() @ u.scalar, atol=1e-12)
    np.testing.assert_allclose((D @ u).scalar, apply(D, u).scalar)


def test_apply_componentwise(periodic64):
    D = central_periodic(periodic64, 2)
    w = GridFunction(periodic64, np.stack([np.sin(periodic64.nodes), np.cos(periodic64.nodes)], 1))
    out = apply(D, w)
    np.testing.assert_allclose(out.values[:, 1], apply(D, w.component(1)).scalar)


def test_apply_grid_mismatch(periodic64, bounded64):
    with pytest.raises(InvalidArgumentError):
        apply(central_periodic(periodic64, 2), sample(np.sin, bounded64))


@pytest.mark.parametrize("D", _mimetic_ops(), ids=lambda d: d.label)
@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_averaged_gradient_of_identity_is_A(D, seed):
    rng = np.random.default_rng(seed)
    u = GridFunction(D.grid, rng.uniform(-3, 3, D.n))
    afp = averaged_gradient_Afp(lambda z: np.ones_like(z) * z, u, D)
    np.testing.assert_allclose(afp.scalar, apply(averaging_A(D.grid), u).scalar, atol=1e-14)


def test_segment_endpoints_reject_wide_stencils(periodic64):
    with pytest.raises(UnsupportedError):
        segment_endpoints(central_periodic(periodic64, 4))


# }}}


# {{{ accuracy


@pytest.mark.parametrize("p", ORDERS)
def test_central_exactness(p):
    D = central_periodic(uniform_grid(0.0, 1.0, 32, "periodic"), p)
    assert polynomial_exactness_order(D) == p
    assert exactness_orders(D) == (p, None)


@pytest.mark.parametrize(
    "D, expected",
    [
        (sbp_first_order2(uniform_grid(0.0, 1.0, 32)), (2, 1)),
        (collocation_lobatto(2), (1, None)),
        (collocation_lobatto(3), (2, None)),
        (averaging_A(uniform_grid(0.0, 1.0, 32, "periodic")), (2, None)),
        (averaging_A(uniform_grid(0.0, 1.0, 32)), (2, 1)),
    ],
    ids=lambda v: getattr(v, "label", str(v)),
)
def test_detected_orders(D, expected):
    assert exactness_orders(D) == expected


@pytest.mark.parametrize("p", ORDERS)
def test_leading_error_coefficient_oracle(p):
    g = uniform_grid(0.0, 1.0, 40, "periodic")
    D = central_periodic(g, p)
    k = np.arange(-p // 2, p // 2 + 1)
    w = finite_difference_weights(k, 1)
    expected = np.sum(w * k ** (p + 1)) / math.factorial(p + 1) * g.h**p
    np.testing.assert_allclose(leading_error_coefficient(D), expected, rtol=1e-9)


def test_leading_error_coefficient_known_values():
    g = uniform_grid(0.0, 1.0, 40, "periodic")
    h = g.h
    np.testing.assert_allclose(leading_error_coefficient(central_periodic(g, 2)), h**2 / 6)
    np.testing.assert_allclose(leading_error_coefficient(central_periodic(g, 4)), -(h**4) / 30)
    np.testing.assert_allclose(leading_error_coefficient(central_periodic(g, 6)), h**6 / 140)


@pytest.mark.parametrize("p", ORDERS)
def test_expansion_remainder_bounded(p):
    # (Du - u' - u^(p+1) C h^p) / h^(p+1) stays bounded under refinement
    derivs = [np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)]
    ratios = []
    for n in (32, 64, 128):
        g = uniform_grid(0.0, 2 * np.pi, n, "periodic")
        D = central_periodic(g, p)
        du = apply(D, sample(np.sin, g)).scalar
        lead = derivs[(p + 1) % 4](g.nodes) * leading_error_coefficient(D)
        ratios.append(np.max(np.abs(du - np.cos(g.nodes) - lead)) / g.h ** (p + 1))
    assert ratios[-1] <= ratios[0] * 1.01


def test_sbp_boundary_leading_error_nonzero():
    D = sbp_first_order2(uniform_grid(0.0, 1.0, 16))
    c = leading_error_coefficient(D, 1)
    h = D.grid.h
    assert c[0] == pytest.approx(h / 2)
    assert c[-1] == pytest.approx(-h / 2)


# }}}


@pytest.mark.parametrize(
    "D",
    [
        central_periodic(uniform_grid(0.0, 1.0, 10, "periodic"), 4),
        sbp_first_order2(uniform_grid(0.0, 1.0, 6)),
        collocation_lobatto(3),
    ],
    ids=lambda d: d.label,
)
def test_coordinate_round_trip(D):
    np.testing.assert_array_equal(loads_coordinate(dumps_coordinate(D)), D.to_matrix())
