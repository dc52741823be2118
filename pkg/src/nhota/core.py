"""Shared problem types and the l1 nonsmooth term.

Conventions used throughout the package: iterates are 1-D float64 numpy
arrays, ``||.||`` is the Euclidean norm, and Hessians are dense symmetric
matrices.  No NaN or Inf is ever stored in an iterate; oracle outputs are
checked at the points where they enter the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

Vector = np.ndarray
Matrix = np.ndarray


class CapabilityError(RuntimeError):
    """A requested derivative or operation is not provided by this instance."""


class OracleFailure(RuntimeError):
    """An oracle callback returned a non-finite value."""


def as_vector(x, dim: int | None = None) -> Vector:
    """Convert to a 1-D float64 array, rejecting non-finite entries."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"expected dimension {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains non-finite entries")
    return v


def prox_l1(v: Vector, tau: float) -> Vector:
    """Soft threshold: argmin_y tau*||y||_1 + (1/2)||y - v||^2, coordinatewise.

    ``tau`` is the full threshold; any scale factor on the l1 term must be
    folded into it by the caller.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    v = as_vector(v)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def subdiff_dist_l1(g: Vector, x: Vector, lam: float) -> float:
    """Euclidean distance from 0 to g + lam * d||x||_1 (exact, coordinatewise).

    Coordinates with x_i != 0 contribute g_i + lam*sign(x_i); coordinates at
    zero contribute the residual left after the interval [-lam, lam] absorbs
    as much of g_i as it can.
    """
    g = as_vector(g)
    x = as_vector(x)
    if g.shape != x.shape:
        raise ValueError(f"shape mismatch: g {g.shape} vs x {x.shape}")
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    r = np.where(
        x != 0.0,
        g + lam * np.sign(x),
        np.sign(g) * np.maximum(np.abs(g) - lam, 0.0),
    )
    return float(np.linalg.norm(r))


@dataclass(frozen=True)
class SmoothOracle:
    """Callbacks for the smooth part F of a composite objective.

    ``order`` is the highest derivative available (1 or 2).  All callbacks
    must be deterministic and side-effect free; ``hess`` must return a dense
    symmetric matrix.
    """

    dim: int
    order: int
    value: Callable[[Vector], float]
    grad: Callable[[Vector], Vector]
    hess: Optional[Callable[[Vector], Matrix]] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.order not in (1, 2):
            raise ValueError(f"order must be 1 or 2, got {self.order}")
        if self.order == 2 and self.hess is None:
            raise ValueError("order=2 requires a hess callback")


@dataclass(frozen=True)
class NonsmoothTerm:
    """Callbacks for the nonsmooth part h (convex, prox-friendly).

    ``prox(v, tau)`` returns argmin_y h(y) + (1/2 tau)||y - v||^2.
    ``subdiff_dist(g, x)`` returns dist(0, g + dh(x)) when the instance can
    compute it exactly; leave it ``None`` otherwise and callers fall back to
    a prox-residual surrogate.  Instances must be bounded below by an affine
    function (trivially true for the shipped l1 term).
    """

    value: Callable[[Vector], float]
    prox: Callable[[Vector, float], Vector]
    subdiff_dist: Optional[Callable[[Vector, Vector], float]] = None


def l1_term(lam: float) -> NonsmoothTerm:
    """The term h(x) = lam*||x||_1; lam=0 gives the zero term (prox = identity)."""
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")

    def value(x: Vector) -> float:
        return lam * float(np.abs(np.asarray(x, dtype=float)).sum())

    if lam == 0.0:
        def prox(v: Vector, tau: float) -> Vector:
            if not tau > 0:
                raise ValueError(f"tau must be positive, got {tau}")
            return as_vector(v).copy()
    else:
        def prox(v: Vector, tau: float) -> Vector:
            return prox_l1(v, tau * lam)

    def subdiff_dist(g: Vector, x: Vector) -> float:
        return subdiff_dist_l1(g, x, lam)

    return NonsmoothTerm(value=value, prox=prox, subdiff_dist=subdiff_dist)


@dataclass(frozen=True)
class CompositeProblem:
    """A composite objective f(x) = F(x) + h(x).

    ``known_opt`` optionally carries (x_star, f_star) when a closed-form
    minimizer exists; it is validated for stationarity at construction.
    """

    smooth: SmoothOracle
    nonsmooth: NonsmoothTerm
    known_opt: Optional[tuple[Vector, float]] = None

    def __post_init__(self):
        if self.known_opt is not None:
            x_star, f_star = self.known_opt
            x_star = as_vector(x_star, dim=self.smooth.dim)
            if not np.isfinite(f_star):
                raise ValueError("known_opt f_star is not finite")
            if self.nonsmooth.subdiff_dist is not None:
                g = as_vector(self.smooth.grad(x_star), dim=self.smooth.dim)
                d = self.nonsmooth.subdiff_dist(g, x_star)
                if d > 1e-8:
                    raise ValueError(
                        f"known_opt fails stationarity: dist(0, df(x*)) = {d:.3e}"
                    )

    @property
    def dim(self) -> int:
        return self.smooth.dim

    def f(self, x: Vector) -> float:
        """Full objective value F(x) + h(x)."""
        return float(self.smooth.value(x)) + float(self.nonsmooth.value(x))
