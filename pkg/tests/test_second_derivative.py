import numpy as np
import pytest
from conftest import finite_difference_weights
from hypothesis import given, settings
from hypothesis import strategies as st

from mimetic_ops.checks import convergence_study
from mimetic_ops.errors import InvalidArgumentError, UnsupportedClosureError
from mimetic_ops.grid import GridFunction, uniform_grid
from mimetic_ops.operators import apply, exactness_orders
from mimetic_ops.second_derivative import (
    CoefficientField,
    MassMatrix,
    Stencil,
    d2_periodic_order2,
    d2_periodic_order4,
    d2_stencil,
    d2_varcoef_nonmimetic,
    d2_varcoef_sbp,
    find_negative_offcenter,
    mass_matrix,
    moment_conditions,
)

ORDERS = [2, 4, 6]


@st.composite
def viscosities(draw, n, bounded):
    eps = np.array(draw(st.lists(st.floats(0.0, 5.0), min_size=n, max_size=n)))
    if bounded:
        eps[0] = eps[-1] = 0.0
    return eps


# {{{ stencils


@pytest.mark.parametrize("p", ORDERS)
def test_d2_stencil_matches_moment_oracle(p):
    st_ = d2_stencil(p, h=0.1)
    k = np.arange(-p // 2, p // 2 + 1)
    np.testing.assert_array_equal(st_.offsets, k)
    np.testing.assert_allclose(st_.coefficients, finite_difference_weights(k, 2) / 0.01, rtol=1e-10)


def test_d2_stencil_known_values():
    np.testing.assert_allclose(d2_stencil(2).coefficients, [1.0, -2.0, 1.0])
    np.testing.assert_allclose(d2_stencil(4).coefficients, [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])
    np.testing.assert_allclose(
        d2_stencil(6).coefficients,
        [1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90],
    )


@pytest.mark.parametrize("p", ORDERS)
@pytest.mark.parametrize("h", [1.0, 0.1, 2.0**-6])
def test_moments_vanish_up_to_p_plus_1(p, h):
    res = moment_conditions(d2_stencil(p, h), range(p + 2))
    scale = np.sum(np.abs(d2_stencil(p, h).coefficients))
    np.testing.assert_allclose(res, 0.0, atol=1e-12 * max(scale, 1.0))


@pytest.mark.parametrize("h", [1.0, 0.25])
def test_order2_fourth_moment(h):
    res = moment_conditions(d2_stencil(2, h))
    np.testing.assert_allclose(res[:4], 0.0, atol=1e-12)
    assert res[4] == pytest.approx(2 * h**2)


def test_order4_sixth_moment_nonzero():
    assert abs(moment_conditions(d2_stencil(4), [6])[0]) > 1.0


@pytest.mark.parametrize("p, expected", [(2, None), (4, 2), (6, 2)])
def test_find_negative_offcenter(p, expected):
    assert find_negative_offcenter(d2_stencil(p)) == expected


def test_find_negative_offcenter_prefers_positive_on_ties():
    assert find_negative_offcenter(Stencil([-1, 0, 1], [-1.0, 2.0, -1.0])) == 1
    assert find_negative_offcenter(Stencil([-1, 0, 2], [-1.0, 2.0, -1.0])) == -1


def test_stencil_validation():
    with pytest.raises(InvalidArgumentError):
        Stencil([0, 0], [1.0, 2.0])
    with pytest.raises(InvalidArgumentError):
        Stencil([0, 1], [1.0])


def test_stencil_from_op_wraps():
    g = uniform_grid(0.0, 8.0, 8, "periodic")
    st0 = Stencil.from_op(d2_periodic_order4(g), 0)
    np.testing.assert_array_equal(st0.offsets, [-2, -1, 0, 1, 2])
    assert st0.coefficient(2) == pytest.approx(-1 / 12)
    assert st0.coefficient(5) == 0.0


# }}}


# {{{ operators


@pytest.mark.parametrize("make, p", [(d2_periodic_order2, 2), (d2_periodic_order4, 4)])
def test_periodic_d2_orders(make, p):
    D2 = make(uniform_grid(0.0, 1.0, 32, "periodic"))
    assert exactness_orders(D2).interior == p
    np.testing.assert_allclose(D2.to_matrix().sum(axis=1), 0.0, atol=1e-9)


@pytest.mark.parametrize("bounded", [False, True])
@given(data=st.data(), n=st.integers(4, 30))
@settings(max_examples=40, deadline=None)
def test_varcoef_row_sums_vanish(bounded, data, n):
    g = uniform_grid(0.0, 1.0, n, "bounded" if bounded else "periodic")
    eps = data.draw(viscosities(g.n, bounded))
    D2 = d2_varcoef_sbp(g, eps).to_matrix()
    np.testing.assert_allclose(D2.sum(axis=1), 0.0, atol=1e-12 * max(1.0, np.max(np.abs(D2))))


@pytest.mark.parametrize("bounded", [False, True])
@given(data=st.data(), n=st.integers(4, 30))
@settings(max_examples=40, deadline=None)
def test_varcoef_is_self_adjoint_in_mass_inner_product(bounded, data, n):
    g = uniform_grid(0.0, 1.0, n, "bounded" if bounded else "periodic")
    eps = data.draw(viscosities(g.n, bounded))
    WD = mass_matrix(g).weights[:, None] * d2_varcoef_sbp(g, eps).to_matrix()
    np.testing.assert_allclose(WD, WD.T, atol=1e-12 * max(1.0, np.max(np.abs(WD))))


def test_varcoef_constant_reduces_to_classical():
    g = uniform_grid(0.0, 1.0, 10, "periodic")
    np.testing.assert_allclose(
        d2_varcoef_sbp(g, np.full(10, 3.0)).to_matrix(),
        3.0 * d2_periodic_order2(g).to_matrix(),
        rtol=1e-14,
    )


def test_varcoef_bounded_closures():
    g = uniform_grid(0.0, 1.0, 4)
    eps = np.array([0.0, 2.0, 1.0, 3.0, 0.0])
    D2 = d2_varcoef_sbp(g, eps).to_matrix()
    h2 = g.h**2
    np.testing.assert_allclose(D2[0, :2], [-2.0 / h2, 2.0 / h2])
    np.testing.assert_allclose(D2[-1, -2:], [3.0 / h2, -3.0 / h2])
    np.testing.assert_allclose(D2[1, :3], [1.0 / h2, -2.5 / h2, 1.5 / h2])


@pytest.mark.parametrize("eps0, epsN", [(0.1, 0.0), (0.0, 0.1)])
def test_varcoef_unreduced_closure_unsupported(eps0, epsN):
    g = uniform_grid(0.0, 1.0, 4)
    with pytest.raises(UnsupportedClosureError):
        d2_varcoef_sbp(g, [eps0, 1.0, 1.0, 1.0, epsN])


@pytest.mark.parametrize("eps", [[1.0, -0.1, 1.0, 1.0], [1.0, 1.0, 1.0], [np.inf, 1, 1, 1]])
def test_invalid_viscosity(eps):
    g = uniform_grid(0.0, 1.0, 4, "periodic")
    with pytest.raises(InvalidArgumentError):
        d2_varcoef_sbp(g, eps)


def test_nonmimetic_requires_periodic():
    with pytest.raises(InvalidArgumentError):
        d2_varcoef_nonmimetic(uniform_grid(0.0, 1.0, 4), np.ones(5))


def test_nonmimetic_not_symmetric():
    g = uniform_grid(0.0, 3.0, 3, "periodic")
    D2 = d2_varcoef_nonmimetic(g, CoefficientField([0.4, 0.2, 0.8])).to_matrix()
    assert not np.allclose(D2, D2.T)


@pytest.mark.parametrize("make", [d2_varcoef_sbp, d2_varcoef_nonmimetic])
def test_varcoef_second_order_convergence(make):
    def builder(n):
        g = uniform_grid(0.0, 2 * np.pi, n, "periodic")
        op = make(g, 2.0 + np.sin(g.nodes))
        return op, lambda x: np.cos(x) * np.cos(x) - (2.0 + np.sin(x)) * np.sin(x)

    table = convergence_study(builder, np.sin, [32, 64, 128, 256])
    for order in table.orders:
        assert order == pytest.approx(2.0, abs=0.1)


def test_varcoef_zero_viscosity_is_zero():
    g = uniform_grid(0.0, 1.0, 6, "periodic")
    u = GridFunction(g, np.arange(6.0))
    assert apply(d2_varcoef_sbp(g, np.zeros(6)), u).max_abs() == 0.0


# }}}


# {{{ mass matrix


def test_mass_matrix_weights():
    np.testing.assert_allclose(mass_matrix(uniform_grid(0.0, 1.0, 4)).weights, [0.125, 0.25, 0.25, 0.25, 0.125])
    np.testing.assert_allclose(mass_matrix(uniform_grid(0.0, 1.0, 4, "periodic")).weights, 0.25)


@pytest.mark.parametrize("topology", ["periodic", "bounded"])
def test_mass_matrix_integrates_length(topology):
    g = uniform_grid(-1.0, 2.0, 17, topology)
    assert mass_matrix(g).integrate(np.ones(g.n)) == pytest.approx(3.0)


def test_mass_matrix_positive():
    with pytest.raises(InvalidArgumentError):
        MassMatrix([1.0, 0.0])


# }}}
