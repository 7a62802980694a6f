"""
Seeded verification suites
--------------------------

Randomized batteries behind ``mimetic-ops verify`` and ``bv-check``. Each
trial draws from its own generator spawned from the base seed, so results do
not depend on trial order and batches could be split across workers.

Default domains: periodic operators live on ``[0, 2 pi)`` with ``n`` nodes,
bounded SBP operators on ``[0, 2 pi]`` with ``n`` cells, Lobatto collocation
on its fixed nodes (``n`` is ignored).
"""

from __future__ import annotations

import os
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from mimetic_ops import checks
from mimetic_ops.bv import StepFunction, volpert_chain_residual, volpert_product_residual
from mimetic_ops.entropy import Entropy, linear, parse_entropy, smooth_hinge, square
from mimetic_ops.errors import InvalidArgumentError
from mimetic_ops.grid import Grid, GridFunction, uniform_grid
from mimetic_ops.operators import (
    DiffOp,
    averaging_A,
    central_periodic,
    collocation_lobatto,
    exactness_orders,
    sbp_first_order2,
)
from mimetic_ops.second_derivative import (
    d2_periodic_order2,
    d2_periodic_order4,
    d2_varcoef_nonmimetic,
    d2_varcoef_sbp,
    mass_matrix,
)

DEFAULT_SEED = 42
SEED_ENV = "MIMETIC_OPS_SEED"

FIRST_DERIVATIVE_OPS = ("central2", "central4", "central6", "sbp2", "lobatto2", "lobatto3")
SECOND_DERIVATIVE_OPS = ("d2-order2", "d2-varcoef", "d2-nonmimetic", "d2-order4")
OPERATOR_NAMES = FIRST_DERIVATIVE_OPS + SECOND_DERIVATIVE_OPS

# operators for which the exact product and chain rules hold
MIMETIC_OPS = ("central2", "sbp2", "lobatto2")


def resolve_seed(seed: Optional[int] = None) -> int:
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise InvalidArgumentError(f"{SEED_ENV} is not an integer: {env!r}") from None
    return DEFAULT_SEED


def trial_generators(seed: int, trials: int) -> List[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


# {{{ operator registry


def default_eps(x: np.ndarray) -> np.ndarray:
    return 2.0 + np.sin(x)


def default_grid(name: str, n: int) -> Grid:
    if name == "sbp2":
        return uniform_grid(0.0, 2 * np.pi, n, "bounded")
    return uniform_grid(0.0, 2 * np.pi, n, "periodic")


def make_operator(name: str, n: int = 64, eps: Optional[np.ndarray] = None) -> DiffOp:
    """Operator by CLI name. Variable coefficient operators default to
    ``eps(x) = 2 + sin(x)``."""
    if name not in OPERATOR_NAMES:
        raise InvalidArgumentError(f"unknown operator {name!r}")
    if name.startswith("lobatto"):
        return collocation_lobatto(int(name[-1]))

    grid = default_grid(name, n)
    if name.startswith("central"):
        return central_periodic(grid, int(name[-1]))
    if name == "sbp2":
        return sbp_first_order2(grid)
    if name == "d2-order2":
        return d2_periodic_order2(grid)
    if name == "d2-order4":
        return d2_periodic_order4(grid)

    e = default_eps(grid.nodes) if eps is None else eps
    if name == "d2-varcoef":
        return d2_varcoef_sbp(grid, e)
    return d2_varcoef_nonmimetic(grid, e)


# }}}


# {{{ product and chain rule


def product_rule_suite(
    op: DiffOp, trials: int = 100, seed: int = DEFAULT_SEED, tol: float = 1.0e-13
) -> Dict[str, Any]:
    A = averaging_A(op.grid)
    worst = 0.0
    for rng in trial_generators(seed, trials):
        u = GridFunction(op.grid, rng.uniform(-1.0, 1.0, op.n))
        v = GridFunction(op.grid, rng.uniform(-1.0, 1.0, op.n))
        r = checks.product_rule_residual(op, A, u, v).max_abs()
        worst = max(worst, r / checks.product_rule_scale(op, u, v))

    return {
        "suite": "product-rule",
        "operator": op.label,
        "n": op.n,
        "trials": trials,
        "seed": seed,
        "tolerance": tol,
        "max_scaled_residual": worst,
        "passed": bool(worst <= tol),
    }


def _poly(power: int) -> Tuple[Callable, Callable]:
    return (
        lambda u: u[..., 0] ** power,
        lambda u: power * u ** (power - 1),
    )


def _product(u: np.ndarray) -> np.ndarray:
    return u[..., 0] * u[..., 1]


def _product_grad(u: np.ndarray) -> np.ndarray:
    return u[..., ::-1].copy()


#: ``name -> (f, f_grad, m)``
CHAIN_RULE_FUNCTIONS = {
    "u^2": _poly(2) + (1,),
    "u^3": _poly(3) + (1,),
    "u1*u2": (_product, _product_grad, 2),
}


def chain_rule_suite(
    op: DiffOp,
    functions: Sequence[str] = tuple(CHAIN_RULE_FUNCTIONS),
    trials: int = 100,
    seed: int = DEFAULT_SEED,
    tol: float = 1.0e-12,
    divided_difference: bool = False,
) -> Dict[str, Any]:
    results = {}
    for name in functions:
        f, f_grad, m = CHAIN_RULE_FUNCTIONS[name]
        worst = 0.0
        for rng in trial_generators(seed, trials):
            u = GridFunction(op.grid, rng.uniform(-1.0, 1.0, (op.n, m)))
            r = checks.chain_rule_residual(
                op, f, f_grad, u, divided_difference=divided_difference
            ).max_abs()
            worst = max(worst, r / checks.chain_rule_scale(op, f, f_grad, u))
        results[name] = worst

    worst = max(results.values())
    return {
        "suite": "chain-rule",
        "operator": op.label,
        "n": op.n,
        "trials": trials,
        "seed": seed,
        "tolerance": tol,
        "divided_difference": divided_difference,
        "max_scaled_residual": results,
        "passed": bool(worst <= tol),
    }


# }}}


# {{{ entropy dissipation


def _random_entropy(rng: np.random.Generator, kind: str) -> Entropy:
    if kind == "square":
        return square()
    if kind == "linear":
        return linear()
    if kind == "smoothhinge":
        return smooth_hinge(rng.uniform(-1.0, 1.0), rng.uniform(0.01, 1.0))
    return parse_entropy(kind)


def _random_eps(rng: np.random.Generator, n: int, bounded: bool) -> np.ndarray:
    eps = rng.uniform(0.0, 2.0, n)
    eps[rng.random(n) < 0.2] = 0.0
    if bounded:
        eps[0] = eps[-1] = 0.0
    return eps


def dissipation_trial(
    rng: np.random.Generator, op_name: str, entropy: str, bounded: bool
) -> Dict[str, Any]:
    m = int(rng.integers(1, 3))
    n = int(rng.integers(5, 41))
    topology = "bounded" if bounded else "periodic"
    grid = uniform_grid(0.0, float(rng.uniform(0.5, 4.0)), n, topology)

    eps = _random_eps(rng, grid.n, bounded)
    if op_name == "d2-varcoef":
        D2 = d2_varcoef_sbp(grid, eps)
    elif op_name == "d2-nonmimetic":
        D2 = d2_varcoef_nonmimetic(grid, eps)
    elif op_name == "d2-order2":
        D2 = d2_periodic_order2(grid)
    elif op_name == "d2-order4":
        D2 = d2_periodic_order4(grid)
    else:
        raise InvalidArgumentError(f"{op_name!r} is not a second derivative operator")

    S = _random_entropy(rng, entropy)
    u = GridFunction(grid, rng.normal(0.0, rng.uniform(0.1, 3.0), (grid.n, m)))
    W = mass_matrix(grid)

    production = checks.entropy_production(D2, W, S, u)
    scale = max(checks.entropy_production_scale(D2, W, S, u), 1.0e-300)
    out = {
        "topology": topology,
        "n": grid.n,
        "m": m,
        "entropy": S.label,
        "production": production,
        "scale": scale,
    }
    if op_name == "d2-varcoef":
        telescoped = checks.entropy_production_telescoped(grid, eps, S, u)
        out["telescoped_mismatch"] = abs(production - telescoped) / scale
    return out


def dissipation_suite(
    op_name: str = "d2-varcoef",
    entropies: Sequence[str] = ("square", "linear", "smoothhinge"),
    trials: int = 1000,
    seed: int = DEFAULT_SEED,
    tol: float = 1.0e-14,
    telescope_tol: float = 1.0e-13,
) -> Dict[str, Any]:
    """Random ``eps >= 0``, ``u`` with ``m`` in ``{1, 2}``; periodic and
    bounded trials alternate for ``d2-varcoef`` (bounded ones with vanishing
    boundary viscosity), the other operators are periodic only."""
    both = op_name == "d2-varcoef"
    worst_production = -np.inf
    worst_mismatch = 0.0
    failures: List[Dict[str, Any]] = []

    for t, rng in enumerate(trial_generators(seed, trials)):
        entropy = entropies[t % len(entropies)]
        bounded = both and (t // len(entropies)) % 2 == 1
        r = dissipation_trial(rng, op_name, entropy, bounded)

        scaled = r["production"] / r["scale"]
        mismatch = r.get("telescoped_mismatch", 0.0)
        worst_production = max(worst_production, scaled)
        worst_mismatch = max(worst_mismatch, mismatch)
        if scaled > tol or mismatch > telescope_tol:
            failures.append(dict(r, trial=t))

    return {
        "suite": "dissipation",
        "operator": op_name,
        "entropies": list(entropies),
        "trials": trials,
        "seed": seed,
        "tolerance": tol,
        "telescope_tolerance": telescope_tol,
        "max_scaled_production": float(worst_production),
        "max_telescoped_mismatch": float(worst_mismatch),
        "failures": len(failures),
        "first_failure": failures[0] if failures else None,
        "passed": not failures,
    }


# }}}


# {{{ exactness


def exactness_suite(op: DiffOp) -> Dict[str, Any]:
    detected = exactness_orders(op)
    declared_boundary = op.boundary_order
    passed = detected.interior in (None, op.order) and (
        declared_boundary is None or detected.boundary == declared_boundary
    )
    return {
        "suite": "exactness",
        "operator": op.label,
        "n": op.n,
        "declared_order": op.order,
        "declared_boundary_order": declared_boundary,
        "interior_order": detected.interior,
        "boundary_order": detected.boundary,
        "passed": bool(passed),
    }


# }}}


# {{{ bv calculus


def random_step_function(
    rng: np.random.Generator, jumps: int, m: int = 1, a: float = -1.0, b: float = 1.0
) -> StepFunction:
    bp = np.sort(rng.uniform(a, b, jumps))
    while np.unique(bp).size != jumps or (jumps and (bp[0] <= a or bp[-1] >= b)):
        bp = np.sort(rng.uniform(a, b, jumps))
    return StepFunction(bp, rng.uniform(-2.0, 2.0, (jumps + 1, m)), a, b)


def random_polynomial(rng: np.random.Generator, degree: int) -> Tuple[Callable, Callable]:
    coeffs = rng.uniform(-1.0, 1.0, degree + 1)
    poly = np.polynomial.Polynomial(coeffs)
    dpoly = poly.deriv()
    return (lambda u: poly(u[..., 0]), lambda u: dpoly(u))


def random_polynomial_2d(rng: np.random.Generator, degree: int) -> Tuple[Callable, Callable]:
    """Random polynomial of total degree *degree* in two variables."""
    coeffs = np.zeros((degree + 1, degree + 1))
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            coeffs[i, j] = rng.uniform(-1.0, 1.0)
    dx = np.polynomial.polynomial.polyder(coeffs, axis=0)
    dy = np.polynomial.polynomial.polyder(coeffs, axis=1)
    pv = np.polynomial.polynomial.polyval2d

    def f(u: np.ndarray) -> np.ndarray:
        return pv(u[..., 0], u[..., 1], coeffs)

    def grad(u: np.ndarray) -> np.ndarray:
        return np.stack([pv(u[..., 0], u[..., 1], dx), pv(u[..., 0], u[..., 1], dy)], axis=-1)

    return f, grad


def bv_suite(
    trials: int = 100,
    jumps: int = 5,
    max_degree: int = 8,
    seed: int = DEFAULT_SEED,
    product_tol: float = 1.0e-13,
    chain_tol: float = 1.0e-12,
) -> Dict[str, Any]:
    """Product rule on random scalar step pairs and chain rule for random
    polynomials of degree ``<= max_degree`` (scalar and two-component),
    always through the quadrature path."""
    product_worst = 0.0
    chain_worst = 0.0
    for rng in trial_generators(seed, trials):
        u = random_step_function(rng, jumps)
        v = random_step_function(rng, jumps)
        r = volpert_product_residual(u, v).max_abs()
        scale = max(np.max(np.abs(u.values)) * np.max(np.abs(v.values)), 1.0e-300)
        product_worst = max(product_worst, r / scale)

        for degree in range(1, max_degree + 1):
            for m, make in ((1, random_polynomial), (2, random_polynomial_2d)):
                f, grad = make(rng, degree)
                w = random_step_function(rng, jumps, m=m)
                r = volpert_chain_residual(f, grad, w, divided_difference=False).max_abs()
                fscale = max(np.max(np.abs(f(w.values))), 1.0)
                chain_worst = max(chain_worst, r / fscale)

    return {
        "suite": "bv",
        "trials": trials,
        "jumps": jumps,
        "max_degree": max_degree,
        "seed": seed,
        "product_tolerance": product_tol,
        "chain_tolerance": chain_tol,
        "max_product_residual": product_worst,
        "max_chain_residual": chain_worst,
        "passed": bool(product_worst <= product_tol and chain_worst <= chain_tol),
    }


# }}}
