"""
Grids and grid functions
------------------------

.. autoclass:: Topology
.. autoclass:: Grid
.. autoclass:: GridFunction

.. autofunction:: uniform_grid
.. autofunction:: refine
.. autofunction:: sample

Text format
^^^^^^^^^^^

A grid function is written as a header line followed by one row per node::

    # grid topology=p N=3 period=3.0
    0.0 0.6
    1.0 0.8
    2.0 0.2

``topology`` is ``p`` (periodic) or ``b`` (bounded), ``N`` is the number of
rows. ``period`` is only present for periodic grids. A bare grid is written
with the node coordinate alone on each row.

.. autofunction:: dumps_grid_function
.. autofunction:: loads_grid_function
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Callable, Optional, Union

import numpy as np

from mimetic_ops.errors import InvalidArgumentError, UnsupportedError

Array = Any


class Topology(str, enum.Enum):
    PERIODIC = "periodic"
    BOUNDED = "bounded"

    @classmethod
    def parse(cls, value: Union[str, "Topology"]) -> "Topology":
        if isinstance(value, Topology):
            return value
        aliases = {"p": cls.PERIODIC, "b": cls.BOUNDED}
        try:
            return aliases.get(value) or cls(value)
        except ValueError:
            raise InvalidArgumentError(f"unknown topology: {value!r}") from None


def _frozen(a: Array, dtype: Any = np.float64) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


# {{{ grid


@dataclass(frozen=True, eq=False)
class Grid:
    """Ordered one-dimensional node set.

    .. attribute:: nodes

        Strictly increasing coordinates of shape ``(n,)``.

    .. attribute:: topology

    .. attribute:: period

        Length of the periodic domain. Must exceed ``nodes[-1] - nodes[0]``
        and is *None* for bounded grids.
    """

    nodes: np.ndarray
    topology: Topology = Topology.BOUNDED
    period: Optional[float] = None

    def __post_init__(self) -> None:
        nodes = _frozen(self.nodes)
        topology = Topology.parse(self.topology)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "topology", topology)

        if nodes.ndim != 1 or nodes.size < 2:
            raise InvalidArgumentError("a grid needs at least two nodes")
        if not np.all(np.isfinite(nodes)):
            raise InvalidArgumentError("grid nodes must be finite")
        if not np.all(np.diff(nodes) > 0):
            raise InvalidArgumentError("grid nodes must be strictly increasing")

        if topology is Topology.PERIODIC:
            if self.period is None:
                raise InvalidArgumentError("periodic grids require a period")
            period = float(self.period)
            if not period > nodes[-1] - nodes[0]:
                raise InvalidArgumentError(
                    "period must exceed the node span: "
                    f"{period} <= {nodes[-1] - nodes[0]}"
                )
            object.__setattr__(self, "period", period)
        elif self.period is not None:
            raise InvalidArgumentError("bounded grids do not carry a period")

    @property
    def n(self) -> int:
        """Number of distinct nodes."""
        return int(self.nodes.size)

    @property
    def is_periodic(self) -> bool:
        return self.topology is Topology.PERIODIC

    @property
    def spacings(self) -> np.ndarray:
        """Consecutive node spacings, including the wraparound gap for
        periodic grids."""
        dx = np.diff(self.nodes)
        if self.is_periodic:
            dx = np.append(dx, self.nodes[0] + self.period - self.nodes[-1])
        return dx

    @property
    def h(self) -> float:
        return float(np.min(self.spacings))

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        """Right end of the domain (``a + period`` for periodic grids)."""
        if self.is_periodic:
            return float(self.nodes[0] + self.period)
        return float(self.nodes[-1])

    def is_uniform(self, rtol: float = 1.0e-10) -> bool:
        dx = self.spacings
        return bool(np.max(np.abs(dx - dx[0])) <= rtol * dx[0])

    def wrap(self, index: Array) -> np.ndarray:
        index = np.asarray(index)
        if self.is_periodic:
            return np.mod(index, self.n)
        return index

    def displacement(self, rows: Array, cols: Array) -> np.ndarray:
        """Signed distance ``x_j - x_i``; periodic grids use the nearest
        periodic image."""
        d = self.nodes[np.asarray(cols)] - self.nodes[np.asarray(rows)]
        if self.is_periodic:
            d = d - self.period * np.round(d / self.period)
        return d

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            self.topology is other.topology
            and self.period == other.period
            and np.array_equal(self.nodes, other.nodes)
        )

    def __hash__(self) -> int:
        return hash((self.topology, self.period, self.nodes.tobytes()))

    def __repr__(self) -> str:
        return (
            f"Grid(n={self.n}, topology={self.topology.value}, "
            f"a={self.a}, b={self.b}, h={self.h})"
        )


def uniform_grid(
    a: float, b: float, n: int, topology: Union[str, Topology] = Topology.BOUNDED
) -> Grid:
    """Equally spaced grid with *n* cells on :math:`[a, b]`.

    Bounded grids have ``n + 1`` nodes including both end points. Periodic
    grids have ``n`` nodes, the node at *b* being identified with *a*.
    """
    topology = Topology.parse(topology)
    if not a < b:
        raise InvalidArgumentError(f"expected a < b, got a={a}, b={b}")
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"expected at least 2 cells, got {n}")

    n = int(n)
    h = (b - a) / n
    if topology is Topology.PERIODIC:
        return Grid(a + h * np.arange(n), topology, period=b - a)

    nodes = a + h * np.arange(n + 1)
    nodes[-1] = b
    return Grid(nodes, topology)


def cell_count(grid: Grid) -> int:
    return grid.n if grid.is_periodic else grid.n - 1


def refine(grid: Grid, factor: int) -> Grid:
    """Uniform grid over the same domain with *factor* times as many cells."""
    if int(factor) != factor or factor < 2:
        raise InvalidArgumentError(f"refinement factor must be >= 2: {factor}")
    if not grid.is_uniform():
        raise UnsupportedError("only uniform grids can be refined")

    return uniform_grid(grid.a, grid.b, cell_count(grid) * int(factor), grid.topology)


# }}}


# {{{ grid functions


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Per-node values with ``m`` components.

    .. attribute:: values

        Array of shape ``(n, m)``. One-dimensional input is promoted to a
        single component.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] != self.grid.n:
            raise InvalidArgumentError(
                f"expected {self.grid.n} node values, got shape {values.shape}"
            )
        if values.shape[1] < 1:
            raise InvalidArgumentError("grid functions need at least one component")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return int(self.values.shape[1])

    @property
    def scalar(self) -> np.ndarray:
        """Values as a flat array; only valid for ``m = 1``."""
        if self.m != 1:
            raise InvalidArgumentError(f"grid function has {self.m} components")
        return self.values[:, 0]

    def component(self, k: int) -> "GridFunction":
        return GridFunction(self.grid, self.values[:, k])

    def _operand(self, other: Any) -> Any:
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise InvalidArgumentError("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other: Any) -> "GridFunction":
        return GridFunction(self.grid, self.values + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other: Any) -> "GridFunction":
        return GridFunction(self.grid, self.values - self._operand(other))

    def __rsub__(self, other: Any) -> "GridFunction":
        return GridFunction(self.grid, self._operand(other) - self.values)

    def __mul__(self, other: Any) -> "GridFunction":
        return GridFunction(self.grid, self.values * self._operand(other))

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def sample(f: Callable[[np.ndarray], Array], grid: Grid) -> GridFunction:
    """Evaluate *f* at the grid nodes.

    *f* is called once with the full node array and may return shape
    ``(n,)`` or ``(n, m)``; scalars are broadcast.
    """
    values = np.asarray(f(grid.nodes), dtype=np.float64)
    if values.ndim == 0:
        values = np.full(grid.n, float(values))
    return GridFunction(grid, values)


# }}}


# {{{ text format


def _header_fields(line: str, tag: str) -> dict:
    parts = line.split()
    if len(parts) < 2 or parts[0] != "#" or parts[1] != tag:
        raise InvalidArgumentError(f"expected '# {tag} ...' header, got {line!r}")
    fields = {}
    for item in parts[2:]:
        key, sep, value = item.partition("=")
        if not sep:
            raise InvalidArgumentError(f"malformed header field: {item!r}")
        fields[key] = value
    return fields


def dumps_grid_function(u: Union[GridFunction, Grid]) -> str:
    grid = u if isinstance(u, Grid) else u.grid
    header = f"# grid topology={grid.topology.value[0]} N={grid.n}"
    if grid.is_periodic:
        header += f" period={grid.period!r}"

    lines = [header]
    for i, x in enumerate(grid.nodes):
        row = [repr(float(x))]
        if isinstance(u, GridFunction):
            row.extend(repr(float(v)) for v in u.values[i])
        lines.append(" ".join(row))

    return "\n".join(lines) + "\n"


def loads_grid_function(text: str) -> Union[GridFunction, Grid]:
    """Parse :func:`dumps_grid_function` output. Returns a :class:`Grid` when
    the rows carry no values."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidArgumentError("empty grid text")

    fields = _header_fields(lines[0], "grid")
    topology = Topology.parse(fields.get("topology", "b"))
    period = float(fields["period"]) if "period" in fields else None

    rows = [[float(v) for v in ln.split()] for ln in lines[1:]]
    if "N" in fields and int(fields["N"]) != len(rows):
        raise InvalidArgumentError(
            f"header declares N={fields['N']} but {len(rows)} rows follow"
        )

    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidArgumentError("rows have inconsistent value counts")

    data = np.array(rows)
    grid = Grid(data[:, 0], topology, period=period)
    if data.shape[1] == 1:
        return grid

    return GridFunction(grid, data[:, 1:])


# }}}
