"""Accelerated proximal gradient engine and the proximal operators it uses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

__all__ = [
    "NumericError",
    "SolverConfig",
    "Solution",
    "soft_threshold",
    "singular_value_threshold",
    "apg_solve",
]

# halvings allowed per iteration before the line search is declared broken
_MAX_BACKTRACKS = 200


class NumericError(FloatingPointError):
    """Raised when the solver meets a non-finite objective or gradient."""

    def __init__(self, message: str, iteration: int | None = None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 5000
    tol: float = 1e-6
    step_init: float = 1.0
    backtrack_factor: float = 0.5
    monotone: bool = True
    restart: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if not self.step_init > 0:
            raise ValueError("step_init must be > 0")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")


@dataclass(frozen=True)
class Solution:
    W: Any
    objective_trace: np.ndarray
    iterations: int
    converged: bool
    rel_change: float = math.inf
    step: float = math.nan
    info: dict = field(default_factory=dict)


def soft_threshold(v, tau: float):
    """Elementwise ``sign(v) * max(|v| - tau, 0)``, the prox of ``tau * ||.||_1``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def singular_value_threshold(W, tau: float) -> np.ndarray:
    """Prox of ``tau * ||W||_*``: soft-threshold the singular values of ``W``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    W = np.asarray(W, dtype=float)
    if not np.all(np.isfinite(W)):
        raise NumericError("singular value thresholding of a non-finite matrix")
    if W.size == 0:
        return W.copy()
    U, s, Vt = np.linalg.svd(W, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    keep = s > 0
    return (U[:, keep] * s[keep]) @ Vt[keep]


def nuclear_norm(W) -> float:
    return float(np.linalg.svd(np.asarray(W, dtype=float), compute_uv=False).sum())


def _finite(x) -> bool:
    return bool(np.all(np.isfinite(x)))


def apg_solve(
    smooth_value: Callable[[np.ndarray], float],
    smooth_grad: Callable[[np.ndarray], np.ndarray],
    prox: Callable[[np.ndarray, float], np.ndarray],
    nonsmooth_value: Callable[[np.ndarray], float],
    W0,
    cfg: SolverConfig | None = None,
) -> Solution:
    """Minimize ``smooth(W) + nonsmooth(W)`` by FISTA with backtracking.

    ``prox(V, step)`` must return ``argmin_W nonsmooth(W) + ||W - V||^2 / (2 step)``.
    The step size starts at ``cfg.step_init`` and is multiplied by
    ``cfg.backtrack_factor`` until the quadratic upper bound holds at the
    candidate point; it never grows back.

    With ``cfg.monotone`` the iterate is the best point seen so far (the
    MFISTA variant), so the objective trace is non-increasing. With
    ``cfg.restart`` the momentum is reset whenever a candidate increases
    the objective.

    The run stops once the relative change between the previous objective
    and the newest candidate objective drops below ``cfg.tol``. The
    denominator is floored at machine precision times the starting
    objective so problems whose optimum is exactly zero still terminate.
    A momentum-free step that fails to lower the objective also ends the run
    as converged: no representable progress is left at that point.
    """
    cfg = cfg or SolverConfig()
    W = np.array(W0, dtype=float, copy=True)

    def total(X):
        return float(smooth_value(X)) + float(nonsmooth_value(X))

    F_prev = total(W)
    if not math.isfinite(F_prev):
        raise NumericError("non-finite objective at the starting point", 0)
    floor = np.finfo(float).eps * max(abs(F_prev), np.finfo(float).tiny)

    V = W.copy()
    t = 1.0
    step = cfg.step_init
    trace = []
    converged = False
    rel = math.inf
    n_backtracks = 0
    n_restarts = 0
    plain = True  # V == W, no momentum in the current search point

    for k in range(1, cfg.max_iters + 1):
        fV = float(smooth_value(V))
        gV = smooth_grad(V)
        if not (math.isfinite(fV) and _finite(gV)):
            raise NumericError("non-finite smooth value or gradient", k)

        for _ in range(_MAX_BACKTRACKS):
            Z = prox(V - step * gV, step)
            D = Z - V
            fZ = float(smooth_value(Z))
            bound = fV + float(np.vdot(gV, D)) + float(np.vdot(D, D)) / (2.0 * step)
            if math.isfinite(fZ) and fZ <= bound + 1e-12 * max(1.0, abs(fV)):
                break
            step *= cfg.backtrack_factor
            n_backtracks += 1
        else:
            raise NumericError("line search failed to find a valid step", k)
        assert fZ <= bound + 1e-12 * max(1.0, abs(fV)), "sufficient decrease violated"

        F_cand = fZ + float(nonsmooth_value(Z))
        if not math.isfinite(F_cand):
            raise NumericError("non-finite objective", k)

        t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        increased = F_cand > F_prev

        if cfg.monotone and increased:
            W_next, F_next = W, F_prev
        else:
            W_next, F_next = Z, F_cand

        if cfg.restart and increased:
            t_next = 1.0
            V = W_next.copy()
            n_restarts += 1
        elif cfg.monotone:
            V = W_next + (t / t_next) * (Z - W_next) + ((t - 1.0) / t_next) * (W_next - W)
        else:
            V = Z + ((t - 1.0) / t_next) * (Z - W)

        rel = abs(F_prev - F_cand) / max(abs(F_prev), floor)
        stalled = plain and increased
        plain = cfg.restart and increased
        W, F_prev, t = W_next, F_next, t_next
        trace.append(F_prev)
        if rel < cfg.tol or stalled:
            converged = True
            break

    return Solution(
        W=W,
        objective_trace=np.asarray(trace),
        iterations=len(trace),
        converged=converged,
        rel_change=rel,
        step=step,
        info={"backtracks": n_backtracks, "restarts": n_restarts},
    )
