r"""
Second derivatives
------------------

Approximations of :math:`\partial_x (\epsilon \partial_x u)` and
:math:`\partial_x^2 u`, the diagonal mass matrix pairing them with a discrete
integral, and stencil diagnostics.

The variable coefficient operator

.. math::

    (D_2^\epsilon u)_i = \frac{\epsilon_i + \epsilon_{i+1}}{2 h^2} u_{i+1}
        - \frac{\epsilon_{i-1} + 2 \epsilon_i + \epsilon_{i+1}}{2 h^2} u_i
        + \frac{\epsilon_{i-1} + \epsilon_i}{2 h^2} u_{i-1}

is built so that :math:`\sum_i w_i U'(u_i) \cdot (D_2^\epsilon u)_i`
telescopes into a sum of edge terms
:math:`-(U'_{i+1} - U'_i) \cdot (u_{i+1} - u_i)`, each non-positive for
convex :math:`U`. On bounded grids only the closures for
:math:`\epsilon_0 = 0 = \epsilon_N` are provided.

.. autoclass:: CoefficientField
.. autoclass:: MassMatrix
.. autoclass:: Stencil

.. autofunction:: d2_periodic_order2
.. autofunction:: d2_periodic_order4
.. autofunction:: d2_varcoef_sbp
.. autofunction:: d2_varcoef_nonmimetic
.. autofunction:: mass_matrix
.. autofunction:: moment_conditions
.. autofunction:: find_negative_offcenter
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from mimetic_ops.errors import InvalidArgumentError, UnsupportedClosureError
from mimetic_ops.grid import Grid
from mimetic_ops.operators import (
    DiffOp,
    OpKind,
    from_periodic_stencil,
    from_rows,
)

Array = Any


# {{{ types


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Non-negative per-node viscosity :math:`\\epsilon_i`."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise InvalidArgumentError("viscosity values must be finite and >= 0")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class MassMatrix:
    """Positive diagonal quadrature weights."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if np.any(w <= 0.0):
            raise InvalidArgumentError("mass matrix weights must be positive")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def integrate(self, values: Array) -> float:
        return float(np.sum(self.weights * np.asarray(values)))


@dataclass(frozen=True, eq=False)
class Stencil:
    """Coefficients :math:`c_k` applied to :math:`u_{j+k}` on a uniform grid
    with spacing *h*."""

    offsets: np.ndarray
    coefficients: np.ndarray
    h: float = 1.0

    def __post_init__(self) -> None:
        offsets = np.array(self.offsets, dtype=np.intp).reshape(-1)
        coeffs = np.array(self.coefficients, dtype=np.float64).reshape(-1)
        if offsets.shape != coeffs.shape:
            raise InvalidArgumentError("one coefficient per offset is required")
        if np.unique(offsets).size != offsets.size:
            raise InvalidArgumentError("stencil offsets must be distinct")

        order = np.argsort(offsets)
        offsets, coeffs = offsets[order], coeffs[order]
        offsets.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def from_op(cls, op: DiffOp, center: int) -> "Stencil":
        """Row *center* of a uniform-grid operator."""
        h = op.grid.h
        cols, coeffs = op.row(center)
        d = op.grid.displacement(np.full(cols.shape, center), cols)
        return cls(np.rint(d / h).astype(np.intp), coeffs, h)

    def coefficient(self, k: int) -> float:
        idx = np.flatnonzero(self.offsets == k)
        return float(self.coefficients[idx[0]]) if idx.size else 0.0


# }}}


# {{{ operators

# c_k for k = 0, 1, 2, ...; symmetric
_D2_STENCILS = {
    2: (-2.0, 1.0),
    4: (-5 / 2, 4 / 3, -1 / 12),
    6: (-49 / 18, 3 / 2, -3 / 20, 1 / 90),
}


def d2_stencil(p: int, h: float = 1.0) -> Stencil:
    """Classical central second-derivative stencil of order *p*."""
    if p not in _D2_STENCILS:
        raise InvalidArgumentError(f"unsupported order {p}; expected 2, 4 or 6")
    half = np.asarray(_D2_STENCILS[p])
    k = np.arange(half.size)
    return Stencil(
        np.r_[-k[:0:-1], k], np.r_[half[:0:-1], half] / h**2, h
    )


def _periodic_d2(grid: Grid, p: int) -> DiffOp:
    if not grid.is_periodic:
        raise InvalidArgumentError("periodic second derivatives need a periodic grid")
    if not grid.is_uniform():
        raise InvalidArgumentError("second derivatives require a uniform grid")

    st = d2_stencil(p, grid.h)
    if grid.n < st.offsets.size:
        raise InvalidArgumentError(
            f"order {p} needs at least {st.offsets.size} nodes, got {grid.n}"
        )
    return from_periodic_stencil(
        grid,
        st.offsets,
        st.coefficients,
        p,
        OpKind.SECOND_DERIVATIVE,
        label=f"d2-order{p}",
    )


def d2_periodic_order2(grid: Grid) -> DiffOp:
    return _periodic_d2(grid, 2)


def d2_periodic_order4(grid: Grid) -> DiffOp:
    return _periodic_d2(grid, 4)


def _coefficient_field(grid: Grid, eps: Union[CoefficientField, Array]) -> np.ndarray:
    if not isinstance(eps, CoefficientField):
        eps = CoefficientField(eps)
    if len(eps) != grid.n:
        raise InvalidArgumentError(f"expected {grid.n} viscosity values, got {len(eps)}")
    return eps.values


def d2_varcoef_sbp(grid: Grid, eps: Union[CoefficientField, Array]) -> DiffOp:
    """Variable coefficient second-order operator.

    Bounded grids require :math:`\\epsilon_0 = 0 = \\epsilon_N` and use the
    closures :math:`\\epsilon_1 (u_1 - u_0) / h^2` and
    :math:`-\\epsilon_{N-1} (u_N - u_{N-1}) / h^2`; any other boundary value
    raises :class:`UnsupportedClosureError`.
    """
    if not grid.is_uniform():
        raise InvalidArgumentError("d2_varcoef_sbp requires a uniform grid")
    e = _coefficient_field(grid, eps)
    n, h2 = grid.n, grid.h**2

    # edge viscosity between node i and i + 1
    if grid.is_periodic:
        if n < 3:
            raise InvalidArgumentError("periodic d2_varcoef_sbp needs 3 nodes")
        edge = 0.5 * (e + np.roll(e, -1)) / h2
        rows = [
            {(i - 1) % n: edge[i - 1], i: -(edge[i - 1] + edge[i]), (i + 1) % n: edge[i]}
            for i in range(n)
        ]
        return from_rows(grid, rows, 2, OpKind.SECOND_DERIVATIVE, label="d2-varcoef")

    if e[0] != 0.0 or e[-1] != 0.0:
        raise UnsupportedClosureError(
            "bounded closures are only provided for vanishing boundary "
            f"viscosity, got eps_0={e[0]}, eps_N={e[-1]}"
        )

    edge = 0.5 * (e[:-1] + e[1:]) / h2
    rows: List[Dict[int, float]] = [{0: -e[1] / h2, 1: e[1] / h2}]
    rows += [
        {i - 1: edge[i - 1], i: -(edge[i - 1] + edge[i]), i + 1: edge[i]}
        for i in range(1, n - 1)
    ]
    rows += [{n - 2: e[-2] / h2, n - 1: -e[-2] / h2}]

    return from_rows(
        grid,
        rows,
        2,
        OpKind.SECOND_DERIVATIVE,
        closure=1,
        label="d2-varcoef",
    )


def d2_varcoef_nonmimetic(grid: Grid, eps: Union[CoefficientField, Array]) -> DiffOp:
    r"""Second-order product-rule expansion
    :math:`\epsilon u'' + \epsilon' u'` with central differences. Consistent,
    but not dissipative for every entropy."""
    if not grid.is_periodic:
        raise InvalidArgumentError("d2_varcoef_nonmimetic requires a periodic grid")
    if not grid.is_uniform():
        raise InvalidArgumentError("d2_varcoef_nonmimetic requires a uniform grid")
    if grid.n < 3:
        raise InvalidArgumentError("d2_varcoef_nonmimetic needs 3 nodes")

    e = _coefficient_field(grid, eps)
    n, h = grid.n, grid.h
    de = (np.roll(e, -1) - np.roll(e, 1)) / (2 * h)

    rows = [
        {
            (i - 1) % n: e[i] / h**2 - de[i] / (2 * h),
            i: -2 * e[i] / h**2,
            (i + 1) % n: e[i] / h**2 + de[i] / (2 * h),
        }
        for i in range(n)
    ]
    return from_rows(grid, rows, 2, OpKind.SECOND_DERIVATIVE, label="d2-nonmimetic")


def mass_matrix(grid: Grid) -> MassMatrix:
    """Trapezoidal weights ``h * (1/2, 1, ..., 1, 1/2)``; ``h`` everywhere on
    periodic grids."""
    if not grid.is_uniform():
        raise InvalidArgumentError("mass_matrix requires a uniform grid")

    w = np.full(grid.n, grid.h)
    if not grid.is_periodic:
        w[0] = w[-1] = grid.h / 2
    return MassMatrix(w)


# }}}


# {{{ stencil diagnostics


def moment_conditions(
    stencil: Stencil, orders: Optional[Sequence[int]] = None
) -> np.ndarray:
    r"""Residuals :math:`\sum_k c_k (k h)^q - 2 \delta_{q2}` of the
    second-derivative order conditions, by default for :math:`q = 0, \dots, 4`."""
    if orders is None:
        orders = range(5)

    d = stencil.offsets * stencil.h
    out = []
    for q in orders:
        target = float(math.factorial(2)) if q == 2 else 0.0
        out.append(np.sum(stencil.coefficients * d**q) - target)

    return np.array(out)


def find_negative_offcenter(stencil: Stencil) -> Optional[int]:
    """Off-center offset of smallest magnitude with a negative coefficient
    (positive offset on ties), or *None*."""
    candidates = [
        int(k)
        for k, c in zip(stencil.offsets, stencil.coefficients)
        if k != 0 and c < 0.0
    ]
    if not candidates:
        return None
    return min(candidates, key=lambda k: (abs(k), -k))


# }}}
