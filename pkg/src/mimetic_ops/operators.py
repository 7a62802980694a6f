r"""
Difference operators
--------------------

Linear operators on grid functions are stored row-wise as padded stencils:
row :math:`i` combines the node values with column indices
``columns[i]`` using weights ``coefficients[i]``,

.. math::

    (D u)_i = \sum_j D_{ij} u_j.

Besides the first derivative operators (central periodic, classical
second-order SBP, Lobatto collocation), this module provides the averaging
operator :math:`A` and the segment-averaged gradient :math:`A_{f'}` that
turn the second-order operators into exact discrete product and chain rules

.. math::

    D(uv) = (A u)(D v) + (D u)(A v),
    \qquad
    D f(u) = (A_{f'} u) \cdot (D u).

.. autoclass:: OpKind
.. autoclass:: DiffOp

.. autofunction:: central_periodic
.. autofunction:: sbp_first_order2
.. autofunction:: collocation_lobatto
.. autofunction:: averaging_A
.. autofunction:: apply
.. autofunction:: averaged_gradient_Afp
.. autofunction:: polynomial_exactness_order
.. autofunction:: exactness_orders
.. autofunction:: leading_error_coefficient
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from mimetic_ops.errors import InvalidArgumentError, UnsupportedError
from mimetic_ops.grid import Grid, GridFunction
from mimetic_ops.quadrature import QuadratureSpec, segment_average

Array = Any

#: Highest accuracy order probed by :func:`polynomial_exactness_order`.
MAX_PROBED_ORDER = 12


class OpKind(str, enum.Enum):
    CENTRAL_PERIODIC = "central_periodic"
    SBP_BOUNDED = "sbp_bounded"
    COLLOCATION = "collocation"
    AVERAGING = "averaging"
    SECOND_DERIVATIVE = "second_derivative"

    @property
    def derivative(self) -> int:
        """Order of the derivative the operator approximates."""
        if self is OpKind.AVERAGING:
            return 0
        if self is OpKind.SECOND_DERIVATIVE:
            return 2
        return 1


# {{{ operator type


@dataclass(frozen=True, eq=False)
class DiffOp:
    """Row-wise stored linear operator.

    .. attribute:: columns

        Integer array of shape ``(n, w)``. Padding entries point at the row
        itself and carry a zero coefficient.

    .. attribute:: coefficients

        Array of shape ``(n, w)``.

    .. attribute:: order

        Declared accuracy order in the interior.

    .. attribute:: boundary_order

        Declared accuracy order of the closure rows, or *None* when the
        operator has none.

    .. attribute:: closure

        Number of rows at each end that use boundary closures.
    """

    grid: Grid
    columns: np.ndarray
    coefficients: np.ndarray
    order: int
    kind: OpKind
    boundary_order: Optional[int] = None
    closure: int = 0
    label: str = ""

    def __post_init__(self) -> None:
        cols = np.array(self.columns, dtype=np.intp)
        coeffs = np.array(self.coefficients, dtype=np.float64)
        n = self.grid.n

        if cols.shape != coeffs.shape or cols.ndim != 2 or cols.shape[0] != n:
            raise InvalidArgumentError(
                f"expected ({n}, w) columns and coefficients, "
                f"got {cols.shape} and {coeffs.shape}"
            )
        if np.any(cols < 0) or np.any(cols >= n):
            raise InvalidArgumentError("column index out of range")
        if not np.all(np.isfinite(coeffs)):
            raise InvalidArgumentError("operator coefficients must be finite")

        cols.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "kind", OpKind(self.kind))

    @property
    def n(self) -> int:
        return self.grid.n

    def row(self, i: int) -> tuple:
        """Nonzero ``(columns, coefficients)`` of row *i*."""
        mask = self.coefficients[i] != 0.0
        return self.columns[i][mask], self.coefficients[i][mask]

    def rows(self) -> List[tuple]:
        return [self.row(i) for i in range(self.n)]

    def displacements(self) -> np.ndarray:
        """``x_j - x_i`` for every stored entry, shape ``(n, w)``."""
        rows = np.broadcast_to(np.arange(self.n)[:, None], self.columns.shape)
        return self.grid.displacement(rows, self.columns)

    def to_matrix(self) -> np.ndarray:
        mat = np.zeros((self.n, self.n))
        rows = np.broadcast_to(np.arange(self.n)[:, None], self.columns.shape)
        np.add.at(mat, (rows, self.columns), self.coefficients)
        return mat

    def row_norm(self) -> float:
        """Maximum absolute row sum."""
        return float(np.max(np.sum(np.abs(self.coefficients), axis=1)))

    def boundary_rows(self) -> np.ndarray:
        if self.closure == 0:
            return np.zeros(0, dtype=np.intp)
        c = min(self.closure, self.n)
        return np.unique(np.r_[np.arange(c), np.arange(self.n - c, self.n)])

    def interior_rows(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.n), self.boundary_rows())

    def __matmul__(self, u: GridFunction) -> GridFunction:
        return apply(self, u)

    def __repr__(self) -> str:
        return (
            f"DiffOp({self.label or self.kind.value}, n={self.n}, "
            f"order={self.order}, boundary_order={self.boundary_order})"
        )


def from_rows(
    grid: Grid,
    rows: Sequence[Dict[int, float]],
    order: int,
    kind: OpKind,
    **kwargs: Any,
) -> DiffOp:
    """Build a :class:`DiffOp` from per-row ``{column: coefficient}`` maps.
    Repeated columns (possible after periodic wrapping) are summed."""
    width = max(1, max(len(r) for r in rows))
    cols = np.tile(np.arange(len(rows))[:, None], (1, width))
    coeffs = np.zeros((len(rows), width))
    for i, r in enumerate(rows):
        for slot, (j, c) in enumerate(sorted(r.items())):
            cols[i, slot] = j
            coeffs[i, slot] = c

    return DiffOp(grid, cols, coeffs, order, kind, **kwargs)


def from_periodic_stencil(
    grid: Grid,
    offsets: Sequence[int],
    coefficients: Sequence[float],
    order: int,
    kind: OpKind,
    **kwargs: Any,
) -> DiffOp:
    """Translation invariant operator on a periodic grid."""
    n = grid.n
    offsets = np.asarray(offsets, dtype=np.intp)
    if np.unique(np.mod(offsets, n)).size != offsets.size:
        raise InvalidArgumentError(
            f"stencil of width {offsets.size} does not fit on {n} periodic nodes"
        )

    cols = np.mod(np.arange(n)[:, None] + offsets[None, :], n)
    coeffs = np.broadcast_to(np.asarray(coefficients, dtype=np.float64), cols.shape)
    return DiffOp(grid, cols, coeffs, order, kind, **kwargs)


def _require_uniform(grid: Grid, what: str) -> None:
    if not grid.is_uniform():
        raise InvalidArgumentError(f"{what} requires a uniform grid")


# }}}


# {{{ first derivatives

# one-sided coefficients c_k for offsets k = 1, 2, ...; c_{-k} = -c_k
_CENTRAL_STENCILS = {
    2: (1 / 2,),
    4: (2 / 3, -1 / 12),
    6: (3 / 4, -3 / 20, 1 / 60),
}


def central_periodic(grid: Grid, p: int = 2) -> DiffOp:
    """Classical central first derivative of order *p* on a periodic grid."""
    if p not in _CENTRAL_STENCILS:
        raise InvalidArgumentError(f"unsupported order {p}; expected 2, 4 or 6")
    if not grid.is_periodic:
        raise InvalidArgumentError("central_periodic requires a periodic grid")
    _require_uniform(grid, "central_periodic")
    if grid.n < p + 1:
        raise InvalidArgumentError(f"order {p} needs at least {p + 1} nodes")

    half = np.asarray(_CENTRAL_STENCILS[p])
    k = np.arange(1, half.size + 1)
    offsets = np.r_[-k[::-1], k]
    coeffs = np.r_[-half[::-1], half] / grid.h

    return from_periodic_stencil(
        grid, offsets, coeffs, p, OpKind.CENTRAL_PERIODIC, label=f"central{p}"
    )


def sbp_first_order2(grid: Grid) -> DiffOp:
    """Central interior stencil with one-sided first-order closures."""
    if grid.is_periodic:
        raise InvalidArgumentError("sbp_first_order2 requires a bounded grid")
    _require_uniform(grid, "sbp_first_order2")

    n, h = grid.n, grid.h
    rows: List[Dict[int, float]] = [{0: -1 / h, 1: 1 / h}]
    rows += [{i - 1: -1 / (2 * h), i + 1: 1 / (2 * h)} for i in range(1, n - 1)]
    rows += [{n - 2: -1 / h, n - 1: 1 / h}]

    return from_rows(
        grid,
        rows,
        2 if n > 2 else 1,
        OpKind.SBP_BOUNDED,
        boundary_order=1,
        closure=1,
        label="sbp2",
    )


def _lagrange_derivative_matrix(x: np.ndarray) -> np.ndarray:
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)

    mat = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(mat, 0.0)
    np.fill_diagonal(mat, -np.sum(mat, axis=1))
    return mat


def collocation_lobatto(n_nodes: int = 3) -> DiffOp:
    """Polynomial collocation derivative on the Lobatto nodes of
    :math:`[-1, 1]` (two or three nodes)."""
    nodes = {2: np.array([-1.0, 1.0]), 3: np.array([-1.0, 0.0, 1.0])}
    if n_nodes not in nodes:
        raise InvalidArgumentError(f"only 2 or 3 Lobatto nodes supported: {n_nodes}")

    grid = Grid(nodes[n_nodes])
    mat = _lagrange_derivative_matrix(grid.nodes)
    cols = np.tile(np.arange(n_nodes), (n_nodes, 1))

    return DiffOp(
        grid, cols, mat, n_nodes - 1, OpKind.COLLOCATION, label=f"lobatto{n_nodes}"
    )


def averaging_A(grid: Grid) -> DiffOp:
    """Neighbour average matching the classical second-order operators."""
    _require_uniform(grid, "averaging_A")

    if grid.is_periodic:
        return from_periodic_stencil(
            grid, [-1, 1], [0.5, 0.5], 2, OpKind.AVERAGING, label="average"
        )

    n = grid.n
    rows: List[Dict[int, float]] = [{0: 0.5, 1: 0.5}]
    rows += [{i - 1: 0.5, i + 1: 0.5} for i in range(1, n - 1)]
    rows += [{n - 2: 0.5, n - 1: 0.5}]

    return from_rows(
        grid,
        rows,
        2 if n > 2 else 1,
        OpKind.AVERAGING,
        boundary_order=1,
        closure=1,
        label="average",
    )


# }}}


# {{{ application


def _check_grid(op: DiffOp, u: GridFunction) -> None:
    if op.grid != u.grid:
        raise InvalidArgumentError("operator and grid function use different grids")


def apply(op: DiffOp, u: GridFunction) -> GridFunction:
    """Row-wise linear combination, componentwise for vector values."""
    _check_grid(op, u)
    values = np.einsum("nw,nwm->nm", op.coefficients, u.values[op.columns])
    return GridFunction(u.grid, values)


def segment_endpoints(op: DiffOp) -> tuple:
    """Columns of the leftmost and rightmost nonzero entry of every row.

    These delimit the segments averaged by :func:`averaged_gradient_Afp`.
    """
    nonzero = op.coefficients != 0.0
    if np.any(np.sum(nonzero, axis=1) > 3):
        raise UnsupportedError(
            "segment-averaged gradients are only defined for 3-point stencils"
        )

    d = op.displacements()
    left = np.argmin(np.where(nonzero, d, np.inf), axis=1)
    right = np.argmax(np.where(nonzero, d, -np.inf), axis=1)
    rows = np.arange(op.n)
    return op.columns[rows, left], op.columns[rows, right]


def averaged_gradient_Afp(
    f_grad: Callable[[np.ndarray], Array],
    u: GridFunction,
    op_shape: DiffOp,
    quad: Optional[QuadratureSpec] = None,
    f: Optional[Callable[[np.ndarray], Array]] = None,
) -> GridFunction:
    r"""Segment average of the gradient between the end points of each row of
    *op_shape*,

    .. math::

        (A_{f'} u)_i = \int_0^1 f'(u_{l(i)} + s (u_{r(i)} - u_{l(i)})) \,\mathrm{d}s.

    If *f* is given and ``u`` is scalar, the divided difference of *f* is
    used instead of quadrature.
    """
    _check_grid(op_shape, u)
    left, right = segment_endpoints(op_shape)

    values = segment_average(
        f_grad, u.values[left], u.values[right], quad, antiderivative=f
    )
    if values.shape[-1] != u.m:
        raise InvalidArgumentError(
            f"gradient has {values.shape[-1]} components, expected {u.m}"
        )

    return GridFunction(u.grid, values)


# }}}


# {{{ accuracy analysis


class ExactnessOrders(NamedTuple):
    interior: Optional[int]
    boundary: Optional[int]


def _row_exact_degrees(op: DiffOp) -> np.ndarray:
    """Largest monomial degree differentiated exactly by each row, using
    monomials centred at the row's node and scaled by ``h``."""
    k = op.kind.derivative
    h = op.grid.h
    s = op.displacements() / h
    c = op.coefficients * h**k

    degrees = np.full(op.n, -1)
    alive = np.ones(op.n, dtype=bool)
    for q in range(MAX_PROBED_ORDER + k):
        terms = c * s**q
        target = math.factorial(q) if q == k else 0.0
        residual = np.abs(np.sum(terms, axis=1) - target)
        scale = np.maximum(1.0, np.sum(np.abs(terms), axis=1))

        alive &= residual <= 1.0e-10 * scale
        degrees[alive] = q
        if not alive.any():
            break

    return degrees


def exactness_orders(op: DiffOp) -> ExactnessOrders:
    """Accuracy orders detected from polynomial exactness, split into
    interior and closure rows."""
    k = op.kind.derivative
    orders = _row_exact_degrees(op) + 1 - k

    interior = op.interior_rows()
    boundary = op.boundary_rows()
    return ExactnessOrders(
        int(np.min(orders[interior])) if interior.size else None,
        int(np.min(orders[boundary])) if boundary.size else None,
    )


def polynomial_exactness_order(op: DiffOp) -> int:
    """Largest :math:`p \\le 12` for which every row is exact on polynomials
    of degree :math:`p + k - 1`, where :math:`k` is the derivative order.
    For first derivatives this is the usual exactness degree."""
    k = op.kind.derivative
    return int(np.min(_row_exact_degrees(op))) + 1 - k


def leading_error_coefficient(op: DiffOp, p: Optional[int] = None) -> np.ndarray:
    r"""Per-node :math:`C_i h^p` in the expansion

    .. math::

        (D u)_i = u^{(k)}(x_i) + u^{(p+k)}(x_i) C_i h^p + O(h^{p+1}),
        \qquad
        C_i h^p = \frac{1}{(p+k)!} \sum_j D_{ij} (x_j - x_i)^{p+k}.
    """
    if p is None:
        p = op.order
    q = p + op.kind.derivative
    d = op.displacements()
    return np.sum(op.coefficients * d**q, axis=1) / math.factorial(q)


# }}}


# {{{ coordinate export


def dumps_coordinate(op: DiffOp) -> str:
    """``row col coeff`` lines for every nonzero entry, row-major."""
    lines = [f"# diffop kind={op.kind.value} order={op.order} n={op.n}"]
    mat = op.to_matrix()
    for i, j in zip(*np.nonzero(mat)):
        lines.append(f"{i} {j} {float(mat[i, j])!r}")

    return "\n".join(lines) + "\n"


def loads_coordinate(text: str, n: Optional[int] = None) -> np.ndarray:
    """Dense matrix from :func:`dumps_coordinate` output."""
    entries = []
    for line in text.splitlines():
        if line.startswith("#"):
            for item in line.split():
                if item.startswith("n="):
                    n = int(item[2:]) if n is None else n
            continue
        if line.strip():
            i, j, c = line.split()
            entries.append((int(i), int(j), float(c)))

    if n is None:
        n = 1 + max(max(i, j) for i, j, _ in entries)

    mat = np.zeros((n, n))
    for i, j, c in entries:
        mat[i, j] += c
    return mat


# }}}
