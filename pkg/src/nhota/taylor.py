"""Truncated Taylor models of the smooth part and their power regularization.

The regularized model used by the solver is

    model_value(y) = T_p(y; x) + M/(p+1)! * ||y - x||^(p+1)

where T_p is the p-th order Taylor expansion of F around x (p = 1 or 2).
The nonsmooth term h is *not* part of the model; callers add h(y) on top
when they need the full subproblem objective.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Optional

import numpy as np

from .core import (
    CapabilityError,
    Matrix,
    OracleFailure,
    SmoothOracle,
    Vector,
    as_vector,
)

HESS_SYMMETRY_ATOL = 1e-12  # absolute per-entry tolerance on hess(x)


@dataclass(frozen=True)
class ModelCenter:
    """Cached derivatives of F at an expansion point x.

    Holds everything needed to evaluate T_p and its gradient without
    further oracle calls.  ``Hx`` is None when p = 1.
    """

    x: Vector
    fx: float
    gx: Vector
    Hx: Optional[Matrix]
    p: int

    @classmethod
    def from_oracle(cls, oracle: SmoothOracle, x: Vector, p: int) -> "ModelCenter":
        if p not in (1, 2):
            raise ValueError(f"p must be 1 or 2, got {p}")
        if p > oracle.order:
            raise CapabilityError(
                f"model order p={p} exceeds oracle derivative order {oracle.order}"
            )
        x = as_vector(x, dim=oracle.dim)
        fx = float(oracle.value(x))
        if not np.isfinite(fx):
            raise OracleFailure(f"F(x) is non-finite at x = {x!r}")
        gx = np.asarray(oracle.grad(x), dtype=float)
        if gx.shape != x.shape:
            raise ValueError(f"gradient shape {gx.shape} != point shape {x.shape}")
        if not np.all(np.isfinite(gx)):
            raise OracleFailure("gradient is non-finite")
        Hx = None
        if p == 2:
            Hx = np.asarray(oracle.hess(x), dtype=float)
            if Hx.shape != (oracle.dim, oracle.dim):
                raise ValueError(f"Hessian shape {Hx.shape} != ({oracle.dim}, {oracle.dim})")
            if not np.all(np.isfinite(Hx)):
                raise OracleFailure("Hessian is non-finite")
            if np.max(np.abs(Hx - Hx.T)) > HESS_SYMMETRY_ATOL:
                raise ValueError("Hessian is not symmetric to within 1e-12 per entry")
        return cls(x=x, fx=fx, gx=gx, Hx=Hx, p=p)


def _displacement(center: ModelCenter, y: Vector) -> Vector:
    y = np.asarray(y, dtype=float)
    if y.shape != center.x.shape:
        raise ValueError(f"point shape {y.shape} != center shape {center.x.shape}")
    return y - center.x


def taylor_value(center: ModelCenter, y: Vector) -> float:
    """T_p(y; x): the pure Taylor polynomial, no regularization, no h."""
    d = _displacement(center, y)
    val = center.fx + float(center.gx @ d)
    if center.p == 2:
        val += 0.5 * float(d @ (center.Hx @ d))
    return val


def taylor_grad(center: ModelCenter, y: Vector) -> Vector:
    """Gradient of T_p(.; x) at y."""
    d = _displacement(center, y)
    if center.p == 2:
        return center.gx + center.Hx @ d
    return center.gx.copy()


def model_value(center: ModelCenter, y: Vector, M: float) -> float:
    """T_p(y; x) + M/(p+1)! * ||y - x||^(p+1)."""
    if not M > 0:
        raise ValueError(f"M must be positive, got {M}")
    d = _displacement(center, y)
    reg = M / factorial(center.p + 1) * float(np.linalg.norm(d)) ** (center.p + 1)
    return taylor_value(center, y) + reg


def model_grad(center: ModelCenter, y: Vector, M: float) -> Vector:
    """Gradient of the regularized model at y.

    The regularization contributes M/p! * ||y-x||^(p-1) * (y-x); for p = 1
    the power ||y-x||^0 is taken as 1 so the term is just M*(y-x), and at
    y = x the gradient reduces to the cached gx for either p.
    """
    if not M > 0:
        raise ValueError(f"M must be positive, got {M}")
    d = _displacement(center, y)
    g = taylor_grad(center, y)
    if center.p == 1:
        return g + M * d
    return g + (M / factorial(center.p)) * float(np.linalg.norm(d)) ** (center.p - 1) * d
