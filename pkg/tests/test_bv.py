import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimetic_ops.bv import (
    PointMassMeasure,
    StepFunction,
    averaged_composition,
    derivative_measure,
    dumps_step_function,
    loads_step_function,
    volpert_chain_residual,
    volpert_product_residual,
)
from mimetic_ops.errors import InvalidArgumentError
from mimetic_ops.quadrature import QuadratureSpec, gauss_legendre, segment_average
from mimetic_ops.suites import random_polynomial, random_polynomial_2d, random_step_function

plateau = st.floats(-5.0, 5.0, allow_nan=False)


@st.composite
def step_functions(draw, m=1, max_jumps=6):
    jumps = draw(st.integers(0, max_jumps))
    bp = draw(
        st.lists(st.floats(-0.99, 0.99), min_size=jumps, max_size=jumps, unique=True)
    )
    values = draw(
        st.lists(
            st.lists(plateau, min_size=m, max_size=m),
            min_size=len(bp) + 1,
            max_size=len(bp) + 1,
        )
    )
    return StepFunction(sorted(bp), values, -1.0, 1.0)


# {{{ quadrature


@pytest.mark.parametrize("n", [1, 2, 5, 16])
def test_gauss_legendre_degree(n):
    q = gauss_legendre(n)
    assert q.degree == 2 * n - 1
    for k in range(q.degree + 1):
        assert np.dot(q.weights, q.nodes**k) == pytest.approx(1.0 / (k + 1), rel=1e-13)


def test_quadrature_validation():
    with pytest.raises(InvalidArgumentError):
        QuadratureSpec([0.5], [0.9], 1)
    with pytest.raises(InvalidArgumentError):
        QuadratureSpec([1.5], [1.0], 1)


def test_segment_average_shapes():
    start = np.zeros((4, 3, 2))
    end = np.ones((4, 3, 2))
    out = segment_average(lambda u: u, start, end)
    assert out.shape == (4, 3, 2)
    np.testing.assert_allclose(out, 0.5)


def test_divided_difference_degenerate_segment():
    out = segment_average(lambda u: 3 * u**2, [[2.0]], [[2.0]], antiderivative=lambda u: u**3)
    assert out[0, 0] == pytest.approx(12.0)


# }}}


# {{{ step functions


def test_step_function_evaluation():
    u = StepFunction([0.0], [1.0, 3.0], -1.0, 1.0)
    assert u(-0.5)[0] == 1.0
    assert u(0.0)[0] == 3.0
    assert u(0.5)[0] == 3.0
    np.testing.assert_array_equal(u.left_limits, [[1.0]])
    np.testing.assert_array_equal(u.right_limits, [[3.0]])


@pytest.mark.parametrize(
    "bp, values",
    [
        ([0.0], [1.0]),
        ([0.5, 0.2], [1.0, 2.0, 3.0]),
        ([1.0], [1.0, 2.0]),
    ],
)
def test_step_function_validation(bp, values):
    with pytest.raises(InvalidArgumentError):
        StepFunction(bp, values, -1.0, 1.0)


def test_on_breakpoints_keeps_values():
    u = StepFunction([0.0], [1.0, 3.0], -1.0, 1.0)
    w = u.on_breakpoints([-0.5, 0.5])
    np.testing.assert_array_equal(w.breakpoints, [-0.5, 0.0, 0.5])
    np.testing.assert_array_equal(w.values[:, 0], [1.0, 1.0, 3.0, 3.0])


def test_point_mass_validation():
    with pytest.raises(InvalidArgumentError):
        PointMassMeasure([0.0, 0.0], [1.0, 2.0])


@given(step_functions())
@settings(max_examples=100, deadline=None)
def test_derivative_measure_telescopes(u):
    total = derivative_measure(u).total()
    np.testing.assert_allclose(total, u.values[-1] - u.values[0], atol=1e-12)


@given(step_functions(m=2))
@settings(max_examples=50, deadline=None)
def test_text_round_trip(u):
    back = loads_step_function(dumps_step_function(u))
    np.testing.assert_array_equal(back.breakpoints, u.breakpoints)
    np.testing.assert_array_equal(back.values, u.values)
    assert (back.a, back.b) == (u.a, u.b)


# }}}


# {{{ averaged composition


@given(a=plateau, b=plateau)
@settings(max_examples=100, deadline=None)
def test_averaged_composition_square(a, b):
    # oracle: closed-form mean of u^2 over [a, b]
    expected = (a * a + a * b + b * b) / 3.0
    got = averaged_composition(lambda u: u**2, a, b)
    assert got[0] == pytest.approx(expected, rel=1e-13, abs=1e-13)


@given(a=plateau, b=plateau)
@settings(max_examples=100, deadline=None)
def test_averaged_composition_reversal(a, b):
    g = lambda u: np.exp(np.sin(u))  # noqa: E731
    np.testing.assert_allclose(
        averaged_composition(g, a, b), averaged_composition(g, b, a), rtol=1e-14
    )


def test_averaged_composition_linear_is_midpoint():
    np.testing.assert_allclose(averaged_composition(lambda u: u, 0.2, 1.4), [0.8])


def test_averaged_composition_vector():
    got = averaged_composition(lambda u: u[..., ::-1], [0.0, 2.0], [1.0, 4.0])
    np.testing.assert_allclose(got, [3.0, 0.5])


# }}}


# {{{ Vol'pert calculus


def test_product_rule_hand_example():
    # jumps 0 -> 1 and 1 -> 3 at the same point: 3 - 0.5 * 2 - 2 * 1 = 0
    u = StepFunction([0.0], [0.0, 1.0], -1.0, 1.0)
    v = StepFunction([0.0], [1.0, 3.0], -1.0, 1.0)
    r = volpert_product_residual(u, v)
    assert r.max_abs() == 0.0


@given(step_functions(), step_functions())
@settings(max_examples=100, deadline=None)
def test_product_rule_exact(u, v):
    assert volpert_product_residual(u, v).max_abs() <= 1e-13 * 25


def test_product_rule_domain_mismatch():
    u = StepFunction([0.0], [0.0, 1.0], -1.0, 1.0)
    v = StepFunction([0.0], [0.0, 1.0], -2.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        volpert_product_residual(u, v)


@pytest.mark.parametrize("degree", range(1, 9))
def test_chain_rule_polynomials_quadrature(degree):
    rng = np.random.default_rng(degree)
    for _ in range(10):
        f, grad = random_polynomial(rng, degree)
        u = random_step_function(rng, 5)
        assert volpert_chain_residual(f, grad, u, divided_difference=False).max_abs() <= 1e-12 * max(
            1.0, np.max(np.abs(f(u.values)))
        )


def test_chain_rule_divided_difference_non_polynomial():
    rng = np.random.default_rng(7)
    u = random_step_function(rng, 6)
    r = volpert_chain_residual(lambda u: np.exp(u[..., 0]), np.exp, u)
    assert r.max_abs() <= 1e-13


def test_chain_rule_quadrature_error_on_insufficient_degree():
    # a 2-point rule integrates cubics only, f' = 5 u^4 is not covered
    u = StepFunction([0.0], [0.0, 1.0], -1.0, 1.0)
    r = volpert_chain_residual(
        lambda u: u[..., 0] ** 5, lambda u: 5 * u**4, u, quad=gauss_legendre(2),
        divided_difference=False,
    )
    assert r.max_abs() > 1e-3


@pytest.mark.parametrize("degree", [2, 5, 8])
def test_chain_rule_two_components(degree):
    rng = np.random.default_rng(100 + degree)
    f, grad = random_polynomial_2d(rng, degree)
    u = random_step_function(rng, 5, m=2)
    assert volpert_chain_residual(f, grad, u, divided_difference=False).max_abs() <= 1e-12 * max(
        1.0, np.max(np.abs(f(u.values)))
    )


@given(step_functions(), step_functions())
@settings(max_examples=50, deadline=None)
def test_chain_rule_of_product_matches_product_rule(u, v):
    points = np.union1d(u.breakpoints, v.breakpoints)
    uu, vv = u.on_breakpoints(points), v.on_breakpoints(points)
    w = StepFunction(points, np.hstack([uu.values, vv.values]), -1.0, 1.0)

    chain = volpert_chain_residual(
        lambda z: z[..., 0] * z[..., 1], lambda z: z[..., ::-1], w, divided_difference=False
    )
    product = volpert_product_residual(u, v)
    np.testing.assert_allclose(chain.weights, product.weights, atol=1e-13)


# }}}
