"""
Convex entropies
----------------

Entropies act on values of shape ``(..., m)`` and are separable sums over
components, except :func:`square`, which is the squared Euclidean norm.

.. autoclass:: Entropy
.. autofunction:: square
.. autofunction:: linear
.. autofunction:: hinge
.. autofunction:: smooth_hinge
.. autofunction:: parse_entropy
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from mimetic_ops.errors import InvalidArgumentError

Array = Any


@dataclass(frozen=True)
class Entropy:
    U: Callable[[np.ndarray], np.ndarray]
    grad_U: Callable[[np.ndarray], np.ndarray]
    label: str
    convex: bool = True
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def spot_check(
        self,
        m: int = 1,
        trials: int = 256,
        rng: Optional[np.random.Generator] = None,
        scale: float = 2.0,
    ) -> bool:
        """Randomized midpoint convexity and gradient monotonicity test."""
        if rng is None:
            rng = np.random.default_rng(0)

        a = rng.uniform(-scale, scale, size=(trials, m))
        b = rng.uniform(-scale, scale, size=(trials, m))

        monotone = np.sum((self.grad_U(a) - self.grad_U(b)) * (a - b), axis=-1)
        if np.any(monotone < -1.0e-12):
            return False
        if not self.convex:
            return True

        mid = self.U(0.5 * (a + b))
        return bool(np.all(mid <= 0.5 * (self.U(a) + self.U(b)) + 1.0e-12))


def square() -> Entropy:
    return Entropy(
        U=lambda u: 0.5 * np.sum(u * u, axis=-1),
        grad_U=lambda u: np.array(u, dtype=np.float64),
        label="square",
        hessian=lambda u: np.broadcast_to(np.eye(u.shape[-1]), u.shape + u.shape[-1:]),
    )


def linear() -> Entropy:
    return Entropy(
        U=lambda u: np.sum(u, axis=-1),
        grad_U=lambda u: np.ones_like(u, dtype=np.float64),
        label="linear",
        hessian=lambda u: np.zeros(u.shape + u.shape[-1:]),
    )


def hinge(threshold: float) -> Entropy:
    """``sum_k max(0, u_k - threshold)`` with gradient 0 at the kink."""
    c = float(threshold)
    return Entropy(
        U=lambda u: np.sum(np.maximum(0.0, u - c), axis=-1),
        grad_U=lambda u: np.where(u > c, 1.0, 0.0),
        label=f"hinge:{c!r}",
    )


def smooth_hinge(threshold: float, width: float) -> Entropy:
    """C^1 hinge: quadratic on ``|u - threshold| < width / 2``, equal to the
    hinge outside that band."""
    c, w = float(threshold), float(width)
    if not w > 0.0:
        raise InvalidArgumentError(f"smoothing width must be positive: {w}")

    def U(u: np.ndarray) -> np.ndarray:
        t = u - c
        inner = (t + w / 2) ** 2 / (2 * w)
        return np.sum(np.where(t <= -w / 2, 0.0, np.where(t >= w / 2, t, inner)), axis=-1)

    def grad_U(u: np.ndarray) -> np.ndarray:
        return np.clip((u - c + w / 2) / w, 0.0, 1.0)

    def hessian(u: np.ndarray) -> np.ndarray:
        d = np.where(np.abs(u - c) < w / 2, 1.0 / w, 0.0)
        return d[..., None] * np.eye(u.shape[-1])

    return Entropy(U, grad_U, label=f"smoothhinge:{c!r}:{w!r}", hessian=hessian)


def parse_entropy(text: str) -> Entropy:
    """Parse ``square``, ``linear``, ``hinge:<c>`` or ``smoothhinge:<c>:<w>``."""
    name, *args = text.split(":")
    try:
        if name == "square" and not args:
            return square()
        if name == "linear" and not args:
            return linear()
        if name == "hinge" and len(args) == 1:
            return hinge(float(args[0]))
        if name == "smoothhinge" and len(args) == 2:
            return smooth_hinge(float(args[0]), float(args[1]))
    except ValueError as exc:
        raise InvalidArgumentError(f"invalid entropy {text!r}: {exc}") from None

    raise InvalidArgumentError(f"unknown entropy {text!r}")
