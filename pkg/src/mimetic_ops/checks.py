r"""
Mimetic checks
--------------

Residuals of the discrete product and chain rules, the coefficient-matching
feasibility analysis for linear averaging operators, discrete entropy
production, the explicit counterexamples that separate second-order from
higher-order operators, and convergence tables.

Every residual comes with a rounding scale so exact identities can be
checked against a relative tolerance:

* product rule: ``row_norm(D) * max|u| * max|v|``,
* chain rule: ``row_norm(D) * max(max|f(u)|, max|A_f' u| * max|u|)``,
* entropy production: ``sum_i w_i sum_j |U'_i| |D_ij| |u_j|``.

.. autofunction:: product_rule_residual
.. autofunction:: chain_rule_residual
.. autofunction:: product_rule_feasibility
.. autofunction:: entropy_production
.. autofunction:: entropy_production_telescoped
.. autofunction:: counterexample_lobatto
.. autofunction:: counterexample_nonmimetic_d2
.. autofunction:: counterexample_hinge_entropy
.. autofunction:: convergence_study
.. autofunction:: residual_convergence
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from mimetic_ops.entropy import Entropy, hinge, linear, smooth_hinge
from mimetic_ops.errors import InvalidArgumentError
from mimetic_ops.grid import Grid, GridFunction, uniform_grid
from mimetic_ops.operators import (
    DiffOp,
    apply,
    averaged_gradient_Afp,
    averaging_A,
    collocation_lobatto,
)
from mimetic_ops.quadrature import QuadratureSpec, eval_scalar
from mimetic_ops.second_derivative import (
    CoefficientField,
    MassMatrix,
    Stencil,
    d2_periodic_order4,
    d2_varcoef_nonmimetic,
    find_negative_offcenter,
    mass_matrix,
)

Array = Any

#: Tolerance used when checking counterexample values against their targets.
COUNTEREXAMPLE_TOL = 1.0e-12


# {{{ product and chain rule


def _require_scalar(*fns: GridFunction) -> None:
    for u in fns:
        if u.m != 1:
            raise InvalidArgumentError("the product rule is stated for scalar functions")


def product_rule_residual(
    D: DiffOp, A: DiffOp, u: GridFunction, v: GridFunction
) -> GridFunction:
    """``D(uv) - (Au)(Dv) - (Du)(Av)`` per node."""
    _require_scalar(u, v)
    if not (D.grid == A.grid == u.grid == v.grid):
        raise InvalidArgumentError("operators and grid functions use different grids")

    return apply(D, u * v) - apply(A, u) * apply(D, v) - apply(D, u) * apply(A, v)


def product_rule_scale(D: DiffOp, u: GridFunction, v: GridFunction) -> float:
    return D.row_norm() * max(u.max_abs(), 1.0e-300) * max(v.max_abs(), 1.0e-300)


def chain_rule_terms(
    D: DiffOp,
    f: Callable[[np.ndarray], Array],
    f_grad: Callable[[np.ndarray], Array],
    u: GridFunction,
    quad: Optional[QuadratureSpec] = None,
    divided_difference: bool = True,
) -> Tuple[GridFunction, GridFunction, GridFunction]:
    """``(D f(u), A_f' u, D u)``; see :func:`chain_rule_residual`."""
    fu = GridFunction(u.grid, eval_scalar(f, u.values))
    afp = averaged_gradient_Afp(
        f_grad, u, D, quad, f=f if divided_difference else None
    )
    return apply(D, fu), afp, apply(D, u)


def chain_rule_residual(
    D: DiffOp,
    f: Callable[[np.ndarray], Array],
    f_grad: Callable[[np.ndarray], Array],
    u: GridFunction,
    quad: Optional[QuadratureSpec] = None,
    divided_difference: bool = True,
) -> GridFunction:
    r"""``D f(u) - (A_f' u) \cdot (D u)`` per node.

    *f* and *f_grad* act on arrays of shape ``(..., m)``. With
    *divided_difference* unset the gradient average always uses *quad*,
    which is the meaningful test of the quadrature path.
    """
    dfu, afp, du = chain_rule_terms(D, f, f_grad, u, quad, divided_difference)
    return GridFunction(u.grid, dfu.values[:, 0] - np.sum(afp.values * du.values, axis=1))


def chain_rule_scale(
    D: DiffOp,
    f: Callable[[np.ndarray], Array],
    f_grad: Callable[[np.ndarray], Array],
    u: GridFunction,
    quad: Optional[QuadratureSpec] = None,
) -> float:
    fu = np.max(np.abs(eval_scalar(f, u.values)))
    afp = averaged_gradient_Afp(f_grad, u, D, quad).max_abs()
    return D.row_norm() * max(fu, afp * u.max_abs(), 1.0e-300)


# }}}


# {{{ feasibility


@dataclass(frozen=True)
class RowFeasibility:
    row: int
    columns: Tuple[int, ...]
    residual: float
    coefficients: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class FeasibilityReport:
    """Per-row relative least-squares residuals of the linear system that a
    product-rule averaging row must satisfy."""

    label: str
    n: int
    bandwidth: int
    tolerance: float
    rows: Tuple[RowFeasibility, ...]

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.rows])

    @property
    def min_residual(self) -> float:
        return float(np.min(self.residuals))

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))

    @property
    def feasible(self) -> bool:
        return self.max_residual <= self.tolerance

    def to_dict(self, include_rows: bool = True) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "operator": self.label,
            "n": self.n,
            "bandwidth": self.bandwidth,
            "tolerance": self.tolerance,
            "min_residual": self.min_residual,
            "max_residual": self.max_residual,
            "feasible": bool(self.feasible),
        }
        if include_rows:
            out["rows"] = [
                {
                    "row": r.row,
                    "columns": list(r.columns),
                    "residual": r.residual,
                    "coefficients": None if r.coefficients is None else list(r.coefficients),
                }
                for r in self.rows
            ]
        return out


def _window(grid: Grid, i: int, bandwidth: int) -> List[int]:
    if grid.is_periodic:
        if grid.n < 2 * bandwidth + 1:
            raise InvalidArgumentError(
                f"bandwidth {bandwidth} does not fit on {grid.n} periodic nodes"
            )
        return [int(j) for j in np.mod(np.arange(i - bandwidth, i + bandwidth + 1), grid.n)]
    return list(range(max(0, i - bandwidth), min(grid.n, i + bandwidth + 1)))


def _feasibility_row(D: DiffOp, i: int, bandwidth: int, tol: float) -> RowFeasibility:
    cols, coeffs = D.row(i)
    d_row = dict(zip(cols.tolist(), coeffs.tolist()))

    window = _window(D.grid, i, bandwidth)
    where = {j: s for s, j in enumerate(window)}
    support = sorted(set(window) | set(d_row))

    # coefficient of u_j v_k in (Au)(Dv) + (Du)(Av) must equal D_ij delta_jk
    mat = np.zeros((len(support) ** 2, len(window)))
    rhs = np.zeros(len(support) ** 2)
    for r, (j, k) in enumerate((j, k) for j in support for k in support):
        if j in where:
            mat[r, where[j]] += d_row.get(k, 0.0)
        if k in where:
            mat[r, where[k]] += d_row.get(j, 0.0)
        if j == k:
            rhs[r] = d_row.get(j, 0.0)

    norm = np.linalg.norm(rhs)
    if norm == 0.0:
        return RowFeasibility(i, tuple(window), 0.0, tuple(0.0 for _ in window))

    a, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    residual = float(np.linalg.norm(mat @ a - rhs) / norm)
    recovered = tuple(float(c) for c in a) if residual <= tol else None
    return RowFeasibility(i, tuple(window), residual, recovered)


def product_rule_feasibility(
    D: DiffOp, bandwidth: int = 1, tol: float = 1.0e-12
) -> FeasibilityReport:
    """Search, row by row, for a linear averaging row ``a`` supported within
    *bandwidth* of the diagonal such that ``D(uv) = (Au)(Dv) + (Du)(Av)``
    holds for all ``u, v``.

    The identity is bilinear in ``(u, v)``, so it is equivalent to
    ``a_j D_ik + D_ij a_k = D_ij delta_jk`` for all column pairs ``(j, k)``.
    Residuals are relative to the norm of the right-hand side and are
    independent of the grid spacing.
    """
    if bandwidth < 1:
        raise InvalidArgumentError(f"bandwidth must be >= 1: {bandwidth}")

    rows = tuple(_feasibility_row(D, i, bandwidth, tol) for i in range(D.n))
    return FeasibilityReport(D.label or D.kind.value, D.n, bandwidth, tol, rows)


# }}}


# {{{ entropy production


def _as_mass(W: Union[MassMatrix, Array]) -> np.ndarray:
    return W.weights if isinstance(W, MassMatrix) else np.asarray(W, dtype=np.float64)


def entropy_production_terms(
    D2: DiffOp, W: Union[MassMatrix, Array], S: Entropy, u: GridFunction
) -> np.ndarray:
    """Per-node contributions ``w_i U'(u_i) . (D2 u)_i``."""
    w = _as_mass(W)
    if w.shape != (u.grid.n,):
        raise InvalidArgumentError("mass matrix does not match the grid")

    du = apply(D2, u).values
    return w * np.sum(S.grad_U(u.values) * du, axis=1)


def entropy_production(
    D2: DiffOp, W: Union[MassMatrix, Array], S: Entropy, u: GridFunction
) -> float:
    r""":math:`\sum_i w_i U'(u_i) \cdot (D_2 u)_i`; non-positive for
    dissipative operators."""
    return float(np.sum(entropy_production_terms(D2, W, S, u)))


def entropy_production_scale(
    D2: DiffOp, W: Union[MassMatrix, Array], S: Entropy, u: GridFunction
) -> float:
    w = _as_mass(W)
    absdu = np.einsum("nw,nwm->nm", np.abs(D2.coefficients), np.abs(u.values[D2.columns]))
    return float(np.sum(w * np.sum(np.abs(S.grad_U(u.values)) * absdu, axis=1)))


def entropy_production_telescoped(
    grid: Grid, eps: Union[CoefficientField, Array], S: Entropy, u: GridFunction
) -> float:
    r"""Edge form of the production of :func:`d2_varcoef_sbp` with mass
    weights from :func:`mass_matrix`,

    .. math::

        -h \sum_{\text{edges}} \frac{\epsilon_i + \epsilon_{i+1}}{2}
        (U'_{i+1} - U'_i) \cdot \frac{u_{i+1} - u_i}{h^2}.
    """
    e = eps.values if isinstance(eps, CoefficientField) else np.asarray(eps, dtype=np.float64)
    g = S.grad_U(u.values)
    x = u.values
    if grid.is_periodic:
        nxt = np.roll(np.arange(grid.n), -1)
        e_edge = 0.5 * (e + e[nxt])
        dg, dx = g[nxt] - g, x[nxt] - x
    else:
        e_edge = 0.5 * (e[:-1] + e[1:])
        dg, dx = np.diff(g, axis=0), np.diff(x, axis=0)

    h = grid.h
    return float(-h * np.sum(e_edge * np.sum(dg * dx, axis=1)) / h**2)


# }}}


# {{{ counterexamples


def counterexample_lobatto() -> Dict[str, Any]:
    """Three-node Lobatto collocation with ``u = v = (1 + x)^2``.

    Both derivatives vanish at ``x = -1`` while ``D(uv)`` does not, so no
    averaging operator can produce a product rule at that node.
    """
    D = collocation_lobatto(3)
    u = GridFunction(D.grid, (1.0 + D.grid.nodes) ** 2)
    du = apply(D, u).scalar
    duv = apply(D, u * u).scalar
    split = product_rule_residual(D, averaging_A(D.grid), u, u).scalar

    expected = {"Du": 0.0, "Dv": 0.0, "Duv": -6.0}
    observed = {"Du": float(du[0]), "Dv": float(du[0]), "Duv": float(duv[0])}
    matches = all(
        abs(observed[k] - expected[k]) <= COUNTEREXAMPLE_TOL for k in expected
    )

    return {
        "name": "lobatto",
        "nodes": D.grid.nodes.tolist(),
        "u": u.scalar.tolist(),
        "first_row": D.row(0)[1].tolist(),
        "observed": observed,
        "expected": expected,
        "split_residual_at_left": float(split[0]),
        "tolerance": COUNTEREXAMPLE_TOL,
        "violation_observed": bool(abs(observed["Duv"]) > COUNTEREXAMPLE_TOL),
        "matches_expected": bool(matches),
    }


def counterexample_nonmimetic_d2() -> Dict[str, Any]:
    """Linear entropy, three periodic nodes with unit spacing: the
    product-rule expansion of ``(eps u')'`` produces entropy."""
    grid = uniform_grid(0.0, 3.0, 3, "periodic")
    eps = CoefficientField([0.4, 0.2, 0.8])
    u = GridFunction(grid, [0.6, 0.8, 0.2])

    D2 = d2_varcoef_nonmimetic(grid, eps)
    terms = entropy_production_terms(D2, mass_matrix(grid), linear(), u)
    production = float(np.sum(terms))

    target_terms = [-0.17, -0.20, 0.79]
    target = 0.42
    matches = abs(production - target) <= COUNTEREXAMPLE_TOL and all(
        abs(t - e) <= COUNTEREXAMPLE_TOL for t, e in zip(terms, target_terms)
    )

    return {
        "name": "nonmimetic-d2",
        "eps": eps.values.tolist(),
        "u": u.scalar.tolist(),
        "contributions": terms.tolist(),
        "production": production,
        "expected_contributions": target_terms,
        "expected_production": target,
        "tolerance": COUNTEREXAMPLE_TOL,
        "violation_observed": bool(production > 0.0),
        "matches_expected": bool(matches),
    }


def counterexample_hinge_entropy(
    eps: float = 0.01,
    n: int = 8,
    smoothing: Optional[float] = None,
) -> Dict[str, Any]:
    """Entropy production of the fourth-order periodic second derivative for
    ``u_j = eps``, ``u_{j+k} = -1`` (zero elsewhere), where ``c_k < 0`` is a
    negative off-center coefficient, and the hinge entropy with threshold
    ``eps / 2``. The grid has unit spacing.

    With *smoothing* set the C^1 hinge of that band width is used; it must
    stay below *eps* so the samples avoid the smoothed region.
    """
    if not eps > 0.0:
        raise InvalidArgumentError(f"eps must be positive: {eps}")
    if n < 5:
        raise InvalidArgumentError(f"the order-4 stencil needs n >= 5: {n}")
    if smoothing is not None and not 0.0 < smoothing < eps:
        raise InvalidArgumentError(f"smoothing width must lie in (0, eps): {smoothing}")

    grid = uniform_grid(0.0, float(n), n, "periodic")
    D2 = d2_periodic_order4(grid)

    j = n // 2
    stencil = Stencil.from_op(D2, j)
    k = find_negative_offcenter(stencil)
    assert k is not None

    values = np.zeros(n)
    values[j] = eps
    values[(j + k) % n] = -1.0
    u = GridFunction(grid, values)

    S = hinge(eps / 2) if smoothing is None else smooth_hinge(eps / 2, smoothing)
    W = mass_matrix(grid)
    production = entropy_production(D2, W, S, u)

    c0, ck = stencil.coefficient(0), stencil.coefficient(k)
    predicted = W.weights[j] * (c0 * eps - ck)
    report = {
        "name": "hinge-entropy",
        "eps": eps,
        "n": n,
        "node": j,
        "offset": k,
        "c0": c0,
        "ck": ck,
        "entropy": S.label,
        "production": production,
        "predicted": predicted,
        "tolerance": COUNTEREXAMPLE_TOL,
        "violation_observed": bool(production > 0.0),
        "matches_expected": bool(abs(production - predicted) <= COUNTEREXAMPLE_TOL),
    }
    if production <= 0.0:
        report["diagnostic"] = (
            f"eps={eps} is too large: c0*eps={c0 * eps} outweighs -c_k={-ck}; "
            f"need eps < {-ck / -c0}"
        )
    return report


# }}}


# {{{ convergence


@dataclass(frozen=True)
class ConvergenceTable:
    """Error norms under refinement.

    .. attribute:: rows

        Tuples ``(n, h, error, observed_order)``; the first order is *None*,
        and so is any order involving an error at or below ``floor``.
    """

    rows: Tuple[Tuple[int, float, float, Optional[float]], ...]
    norm: str = "max"

    def __post_init__(self) -> None:
        hs = [r[1] for r in self.rows]
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise InvalidArgumentError("h must decrease strictly down the table")

    @property
    def h(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    @property
    def errors(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    @property
    def orders(self) -> List[Optional[float]]:
        return [r[3] for r in self.rows[1:]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,h,error,observed_order\n")
        for n, h, e, p in self.rows:
            buf.write(f"{n},{h!r},{e!r},{'' if p is None else repr(p)}\n")
        return buf.getvalue()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "norm": self.norm,
            "rows": [
                {"n": n, "h": h, "error": e, "observed_order": p}
                for n, h, e, p in self.rows
            ],
        }


def _norm(values: np.ndarray, h: float, kind: str) -> float:
    if values.size == 0:
        return 0.0
    if kind == "max":
        return float(np.max(np.abs(values)))
    if kind == "l2":
        return float(np.sqrt(h * np.sum(values**2)))
    raise InvalidArgumentError(f"unknown norm {kind!r}; expected 'max' or 'l2'")


def make_table(
    ns: Sequence[int],
    hs: Sequence[float],
    errors: Sequence[float],
    norm: str = "max",
    floor: float = 0.0,
) -> ConvergenceTable:
    rows = []
    for i, (n, h, e) in enumerate(zip(ns, hs, errors)):
        order = None
        if i > 0 and e > floor and errors[i - 1] > floor:
            order = math.log(errors[i - 1] / e) / math.log(hs[i - 1] / h)
        rows.append((int(n), float(h), float(e), order))
    return ConvergenceTable(tuple(rows), norm)


def _select(op: DiffOp, region: Union[str, Callable[[DiffOp], np.ndarray]]) -> np.ndarray:
    if callable(region):
        return np.asarray(region(op))
    if region == "all":
        return np.arange(op.n)
    if region == "interior":
        return op.interior_rows()
    if region == "boundary":
        return op.boundary_rows()
    raise InvalidArgumentError(f"unknown region {region!r}")


def convergence_study(
    builder: Callable[[int], Tuple[DiffOp, Callable[[np.ndarray], Array]]],
    test_fn: Callable[[np.ndarray], Array],
    n_list: Sequence[int],
    norm: str = "max",
    region: Union[str, Callable[[DiffOp], np.ndarray]] = "all",
    floor: float = 0.0,
) -> ConvergenceTable:
    """Error of ``op`` applied to samples of *test_fn* against samples of the
    reference map, where ``builder(n)`` returns ``(op, reference)``."""
    if len(n_list) < 3 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise InvalidArgumentError("n_list must be increasing with at least 3 entries")

    hs, errors = [], []
    for n in n_list:
        op, reference = builder(n)
        nodes = op.grid.nodes
        u = GridFunction(op.grid, np.asarray(test_fn(nodes), dtype=np.float64))
        err = apply(op, u).values - GridFunction(op.grid, reference(nodes)).values

        hs.append(op.grid.h)
        errors.append(_norm(err[_select(op, region)], op.grid.h, norm))

    return make_table(n_list, hs, errors, norm, floor)


def residual_convergence(
    residual_fn: Callable[[int], GridFunction],
    n_list: Sequence[int],
    norm: str = "max",
    floor: float = 0.0,
) -> ConvergenceTable:
    """Convergence table of an arbitrary residual ``residual_fn(n)``."""
    if len(n_list) < 3 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise InvalidArgumentError("n_list must be increasing with at least 3 entries")

    hs, errors = [], []
    for n in n_list:
        r = residual_fn(n)
        hs.append(r.grid.h)
        errors.append(_norm(r.values, r.grid.h, norm))

    return make_table(n_list, hs, errors, norm, floor)


# }}}
