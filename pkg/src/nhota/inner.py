"""Inexact subproblem solver with verifiable stopping certificates.

Each outer step minimizes m(y) = model_value(y; x, M) + h(y) approximately.
A returned point y is acceptable when

  (1) m(y) <= f(x)                                   (model decrease), and
  (2) dist(0, model_grad(y) + dh(y)) <= theta*||y - x||^p   (residual).

Condition (1) holds by construction: the proximal gradient iteration below
starts at y0 = x, where m(x) = f(x) exactly, and never increases m.
Condition (2) is certified either through the exact subdifferential distance
(when h provides one) or through the prox-step witness subgradient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import CompositeProblem, Vector
from .taylor import ModelCenter, model_grad, model_value

# A candidate this close to the center with this small a residual means the
# center itself is stationary; the driver stops rather than looping on
# zero-length steps.
DEGENERATE_STEP_RTOL = 1e-14
DEGENERATE_RESIDUAL = 1e-10

# The residual is a difference of near-cancelling O(||grad||) terms, so it
# cannot be computed below roughly eps * ||grad|| no matter how far the inner
# iteration runs.  Near stationarity the geometric target theta*||step||^p
# drops beneath that floor; without the allowance the solver would burn its
# budget and the driver would double M forever on a point that is already
# stationary to working precision.
RESIDUAL_FLOOR_COEFF = 1e-11

_DECREASE_SLACK = 1e-12  # relative slack when re-checking model decrease

_SQRT_EPS = float(np.sqrt(np.finfo(float).eps))


def residual_floor(center: ModelCenter) -> float:
    """Smallest residual distinguishable from zero at this center's scale."""
    return RESIDUAL_FLOOR_COEFF * (1.0 + float(np.linalg.norm(center.gx)))


def stationarity_resolution(center: ModelCenter) -> float:
    """Smallest stationarity residual double precision can resolve here.

    Model-value differences round at eps * |m|, so an iterate cannot be
    placed more accurately than within a sqrt(eps * |m| / curvature)-sized
    set around the model minimizer; the curvature turns that placement
    uncertainty back into a residual of order sqrt(eps) at the problem's own
    scale.  An inner solve stalled at or below this residual has located the
    minimizer as precisely as the arithmetic allows.
    """
    scale = 1.0 + abs(center.fx) + float(np.linalg.norm(center.gx))
    return _SQRT_EPS * scale


def center_stationarity(problem: CompositeProblem, center: ModelCenter) -> float:
    """Stationarity residual of the center itself: dist(0, grad F(x) + dh(x)).

    At y = x the regularization gradient vanishes, so the model gradient is
    exactly grad F(x) and the subdifferential distance (when h provides one)
    is the true composite residual.  Otherwise the unit prox-gradient
    fixed-point residual ||x - prox_h(x - grad F(x))|| stands in: it is zero
    exactly at stationary points and continuous in x.

    The driver compares this against ``stationarity_resolution(center)`` to
    decide whether a stalled inner solve means the *center* is stationary to
    working precision (stop) or merely that the model minimizer has been
    pinned down as far as floats allow (treat the candidate as an ordinary
    step and let the acceptance test decide).
    """
    h = problem.nonsmooth
    if h.subdiff_dist is not None:
        return float(h.subdiff_dist(center.gx, center.x))
    z = np.asarray(h.prox(center.x - center.gx, 1.0), dtype=float)
    return float(np.linalg.norm(center.x - z))


class InnerSolveFailure(RuntimeError):
    """The iteration budget ran out before a certificate was reached."""

    def __init__(self, message: str, iterations: int = 0):
        super().__init__(message)
        self.iterations = iterations


@dataclass(frozen=True)
class StepCertificate:
    """Facts certifying one inexact subproblem solve.

    ``residual`` is dist(0, model_grad(y) + dh(y)) (or the witness upper
    bound on it), ``threshold`` is theta*||y - x||^p, and ``step_norm`` is
    ||y - x||.  The certificate is valid when the model decreased and the
    residual clears the threshold.

    ``stalled`` marks a solve that ended because floating point ran out of
    room rather than because the threshold was met: the iterate froze with
    the residual at or below ``stationarity_resolution(center)``.  Such a
    candidate is the model minimizer to working precision, but its residual
    may sit far above theta*||y - x||^p, so the caller must not treat the
    threshold as certified.
    """

    decrease_ok: bool
    residual: float
    threshold: float
    step_norm: float
    inner_iters: int
    stalled: bool = False

    @property
    def valid(self) -> bool:
        return self.decrease_ok and self.residual <= self.threshold


def _residual(problem: CompositeProblem, g_reg: Vector, y: Vector,
              witness: Optional[Vector]) -> float:
    """dist(0, g_reg + dh(y)): exact when h knows its subdifferential,
    otherwise the upper bound ||g_reg + witness|| from a prox witness."""
    h = problem.nonsmooth
    if h.subdiff_dist is not None:
        return float(h.subdiff_dist(g_reg, y))
    if witness is None:
        raise ValueError("h has no subdiff_dist and no witness was supplied")
    return float(np.linalg.norm(g_reg + witness))


def solve_subproblem(
    problem: CompositeProblem,
    center: ModelCenter,
    M: float,
    theta: float,
    max_inner: int = 500,
    step_guess: float = 1.0,
    warm: Optional[Vector] = None,
) -> tuple[Vector, StepCertificate, Optional[Vector]]:
    """Proximal gradient on the regularized model until certified.

    Starts at y0 = x (or at ``warm`` if m(warm) <= f(x), so the decrease
    guarantee is preserved).  Each iteration backtracks the step size by
    halving from ``step_guess`` until the standard sufficient-decrease test
    holds and m does not increase, takes the prox step, and keeps the
    witness subgradient p = (y_t - y_{t+1})/alpha - model_grad(y_t), which
    lies in dh(y_{t+1}) by the prox optimality condition.

    Stops when the residual clears theta*||y - x||^p plus the working-
    precision floor ``residual_floor(center)`` (the residual is computed from
    near-cancelling O(||grad||) terms and cannot honestly resolve below that
    scale), or when the candidate has collapsed onto the center to machine
    precision (the center is then stationary and the driver terminates).

    Near the model minimizer the iteration can stall: model-value differences
    round to zero, so no step size produces a float-visible decrease and the
    iterate stops moving.  A stall with the residual at or below
    ``stationarity_resolution(center)`` means the minimizer has been located
    as precisely as double precision allows; the point is returned with the
    certificate marked ``stalled`` and the driver decides what it means —
    stop if the center itself is stationary to working precision
    (``center_stationarity``), otherwise put the candidate through the
    ordinary acceptance test.  A stall or budget exhaustion with a larger
    residual raises ``InnerSolveFailure``; the driver responds by doubling M.

    Returns (y, certificate, witness); witness is None when the certificate
    came from the exact subdifferential distance at y = y0.
    """
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    if not step_guess > 0:
        raise ValueError(f"step_guess must be positive, got {step_guess}")
    h = problem.nonsmooth
    x = center.x
    p = center.p
    x_norm = float(np.linalg.norm(x))
    f_center = center.fx + float(h.value(x))

    y = x.copy()
    m_smooth = center.fx  # model_value(center, x, M) == fx exactly
    m_total = f_center
    if warm is not None:
        warm = np.asarray(warm, dtype=float)
        ms = model_value(center, warm, M)
        mt = ms + float(h.value(warm))
        if np.isfinite(mt) and mt <= f_center:
            y, m_smooth, m_total = warm.copy(), ms, mt

    g_reg = model_grad(center, y, M)
    floor = residual_floor(center)

    # The start point may already be certified (e.g. a stationary center,
    # or a warm start that survived an M increase).
    if h.subdiff_dist is not None:
        step_norm = float(np.linalg.norm(y - x))
        res = _residual(problem, g_reg, y, None)
        thr = theta * step_norm**p
        if res <= thr + floor:
            cert = StepCertificate(True, res, thr, step_norm, 0)
            return y, cert, None

    resolution = max(DEGENERATE_RESIDUAL, stationarity_resolution(center))
    last: Optional[tuple[float, float, float, Optional[Vector]]] = None

    def stalled_state(t: int) -> tuple[float, float, float, Optional[Vector]]:
        """(res, thr, step_norm, witness) at the current, frozen iterate."""
        if h.subdiff_dist is not None:
            s_n = float(np.linalg.norm(y - x))
            return _residual(problem, g_reg, y, None), theta * s_n**p, s_n, None
        if last is not None:
            return last
        raise InnerSolveFailure(
            f"iterate frozen at inner iteration {t} before any residual "
            "was measured", iterations=t,
        )

    for t in range(1, max_inner + 1):
        alpha = step_guess
        frozen = False
        while True:
            y_new = np.asarray(h.prox(y - alpha * g_reg, alpha), dtype=float)
            d = y_new - y
            ms_new = model_value(center, y_new, M)
            if ms_new <= m_smooth + float(g_reg @ d) + float(d @ d) / (2.0 * alpha):
                mt_new = ms_new + float(h.value(y_new))
                if mt_new <= m_total:
                    break
            alpha *= 0.5
            if alpha < step_guess * 2.0**-60:
                frozen = True  # no step size gives a float-visible decrease
                break
        if not frozen:
            frozen = bool(np.array_equal(y_new, y))
        if frozen:
            res, thr, step_norm, witness = stalled_state(t)
            if res <= resolution:
                cert = StepCertificate(True, res, thr, step_norm, t, stalled=True)
                return y, cert, witness
            raise InnerSolveFailure(
                f"inner iterate stalled at residual {res:.3e} above the "
                f"working-precision resolution {resolution:.3e} "
                f"(threshold {thr:.3e}) at iteration {t}", iterations=t,
            )
        witness = (y - y_new) / alpha - g_reg
        y, m_smooth, m_total = y_new, ms_new, mt_new

        g_reg = model_grad(center, y, M)
        step_norm = float(np.linalg.norm(y - x))
        res = _residual(problem, g_reg, y, witness)
        thr = theta * step_norm**p
        if res <= thr + floor:
            return y, StepCertificate(True, res, thr, step_norm, t), witness
        if step_norm <= DEGENERATE_STEP_RTOL * (1.0 + x_norm) and res <= DEGENERATE_RESIDUAL:
            cert = StepCertificate(True, res, thr, step_norm, t, stalled=True)
            return y, cert, witness
        last = (res, thr, step_norm, witness)

    if res <= resolution:
        cert = StepCertificate(True, res, thr, step_norm, max_inner, stalled=True)
        return y, cert, witness
    raise InnerSolveFailure(
        f"no certificate within {max_inner} inner iterations "
        f"(last residual {res:.3e} vs threshold {thr:.3e})",
        iterations=max_inner,
    )


def certify(
    problem: CompositeProblem,
    center: ModelCenter,
    y: Vector,
    M: float,
    theta: float,
    witness_p: Optional[Vector] = None,
) -> StepCertificate:
    """Recompute a certificate for y from scratch (no trust in solver state).

    Uses the exact subdifferential distance when h provides one; otherwise
    ``witness_p`` must be the prox-step witness subgradient at y.
    """
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    y = np.asarray(y, dtype=float)
    h = problem.nonsmooth
    f_center = center.fx + float(h.value(center.x))
    m_total = model_value(center, y, M) + float(h.value(y))
    decrease_ok = m_total <= f_center + _DECREASE_SLACK * max(1.0, abs(f_center))
    g_reg = model_grad(center, y, M)
    res = _residual(problem, g_reg, y, witness_p)
    step_norm = float(np.linalg.norm(y - center.x))
    return StepCertificate(
        decrease_ok=decrease_ok,
        residual=res,
        threshold=theta * step_norm**center.p,
        step_norm=step_norm,
        inner_iters=0,
    )
