"""Quadrature on :math:`[0, 1]` and segment averages of vector maps.

User callbacks are vectorized over leading axes: a map on
:math:`\\mathbb{R}^m` receives an array of shape ``(..., m)`` and returns
``(...)`` for scalar output or ``(..., k)`` for vector output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from mimetic_ops.errors import InvalidArgumentError

Array = Any

#: Number of Gauss-Legendre nodes used when no rule is given.
DEFAULT_QUADRATURE_NODES = 16


@dataclass(frozen=True, eq=False)
class QuadratureSpec:
    """Weighted node set on :math:`[0, 1]`.

    .. attribute:: degree

        Exactness degree: polynomials up to this degree are integrated
        exactly (up to rounding).
    """

    nodes: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self) -> None:
        nodes = np.array(self.nodes, dtype=np.float64)
        weights = np.array(self.weights, dtype=np.float64)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise InvalidArgumentError("nodes and weights must be matching 1d arrays")
        if np.any(nodes < 0.0) or np.any(nodes > 1.0):
            raise InvalidArgumentError("quadrature nodes must lie in [0, 1]")
        if abs(np.sum(weights) - 1.0) > 1.0e-13:
            raise InvalidArgumentError(f"weights sum to {np.sum(weights)}, not 1")

        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return int(self.nodes.size)


def gauss_legendre(n: int = DEFAULT_QUADRATURE_NODES) -> QuadratureSpec:
    """*n*-point Gauss-Legendre rule mapped to :math:`[0, 1]`, exact for
    degree ``2n - 1``."""
    if n < 1:
        raise InvalidArgumentError(f"need at least one node: {n}")

    x, w = np.polynomial.legendre.leggauss(n)
    return QuadratureSpec((x + 1.0) / 2.0, w / 2.0, degree=2 * n - 1)


def default_quadrature() -> QuadratureSpec:
    return _DEFAULT


_DEFAULT = gauss_legendre(DEFAULT_QUADRATURE_NODES)


# {{{ evaluation helpers


def eval_scalar(f: Callable[[np.ndarray], Array], points: np.ndarray) -> np.ndarray:
    """Evaluate a real-valued map on points of shape ``(..., m)``."""
    out = np.asarray(f(points), dtype=np.float64)
    lead = points.shape[:-1]
    if out.shape == lead + (1,):
        out = out[..., 0]
    return np.broadcast_to(out, lead)


def eval_vector(g: Callable[[np.ndarray], Array], points: np.ndarray) -> np.ndarray:
    """Evaluate a vector-valued map on points of shape ``(..., m)``; scalar
    outputs get a trailing axis of length one."""
    out = np.asarray(g(points), dtype=np.float64)
    lead = points.shape[:-1]
    if out.shape == lead:
        out = out[..., None]
    if out.shape[:-1] != lead:
        out = np.broadcast_to(out, lead + out.shape[-1:])
    return out


def segment_average(
    g: Callable[[np.ndarray], Array],
    start: Array,
    end: Array,
    quad: Optional[QuadratureSpec] = None,
    antiderivative: Optional[Callable[[np.ndarray], Array]] = None,
) -> np.ndarray:
    r"""Average of *g* along the straight segments from *start* to *end*,

    .. math::

        \int_0^1 g(u_- + s (u_+ - u_-)) \,\mathrm{d}s.

    *start* and *end* have shape ``(..., m)``; the result has shape
    ``(..., k)``. When *antiderivative* :math:`F` (with :math:`F' = g`) is
    given and ``m = 1``, non-degenerate segments use the divided difference
    :math:`(F(u_+) - F(u_-)) / (u_+ - u_-)` instead of quadrature, and
    nearly degenerate ones use *g* at the midpoint.
    """
    if quad is None:
        quad = _DEFAULT

    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    if start.shape != end.shape or start.ndim == 0:
        raise InvalidArgumentError(
            f"segment end points differ in shape: {start.shape} vs {end.shape}"
        )

    if antiderivative is not None and start.shape[-1] == 1:
        return _divided_difference(g, antiderivative, start, end)

    s = quad.nodes[:, None]
    points = start[..., None, :] + s * (end - start)[..., None, :]
    values = eval_vector(g, points)
    return np.einsum("q,...qk->...k", quad.weights, values)


def _divided_difference(
    g: Callable[[np.ndarray], Array],
    antiderivative: Callable[[np.ndarray], Array],
    start: np.ndarray,
    end: np.ndarray,
) -> np.ndarray:
    du = (end - start)[..., 0]
    threshold = 1.0e-8 * (1.0 + np.abs(start[..., 0]) + np.abs(end[..., 0]))
    wide = np.abs(du) > threshold

    mid = eval_vector(g, 0.5 * (start + end))[..., 0]
    jump = eval_scalar(antiderivative, end) - eval_scalar(antiderivative, start)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(wide, jump / np.where(wide, du, 1.0), mid)

    return ratio[..., None]


# }}}
