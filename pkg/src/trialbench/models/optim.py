"""Quasi-Newton minimizer used to train the neural net and calibrators.

Full BFGS on the inverse Hessian with a backtracking Armijo line search.
A non-finite objective during the line search rejects the step and
halves it; if no finite decreasing step exists the optimizer raises.
"""

from dataclasses import dataclass

import numpy as np

from trialbench.errors import OptimizationError

_ARMIJO_C1 = 1e-4
_MAX_BACKTRACKS = 50
_CURVATURE_EPS = 1e-10


@dataclass(frozen=True)
class MinimizeResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    n_iter: int
    converged: bool


def bfgs_minimize(fun_grad, x0, tol: float = 1e-6, max_iter: int = 500) -> MinimizeResult:
    """Minimize fun_grad(x) -> (value, gradient) from x0.

    Stops when the max-abs gradient component drops to tol; hitting
    max_iter first is flagged via converged=False. The objective is
    non-increasing across accepted line-search steps.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    n = x.size
    fx, g = fun_grad(x)
    if not (np.isfinite(fx) and np.isfinite(g).all()):
        raise OptimizationError("objective or gradient non-finite at x0")
    h_inv = np.eye(n)
    first_update = True
    for iteration in range(max_iter):
        gnorm = float(np.abs(g).max(initial=0.0))
        if gnorm <= tol:
            return MinimizeResult(x, float(fx), gnorm, iteration, True)
        p = -h_inv @ g
        slope = float(g @ p)
        if slope >= 0.0:  # numerical loss of descent: restart on steepest
            h_inv = np.eye(n)
            p = -g
            slope = float(g @ p)
            if slope >= 0.0:
                return MinimizeResult(x, float(fx), gnorm, iteration, gnorm <= tol)
        step = 1.0
        for _ in range(_MAX_BACKTRACKS):
            x_new = x + step * p
            f_new, g_new = fun_grad(x_new)
            if np.isfinite(f_new) and f_new <= fx + _ARMIJO_C1 * step * slope \
                    and np.isfinite(g_new).all():
                break
            step *= 0.5
        else:
            raise OptimizationError("line search failed to find a finite "
                                    f"decreasing step at iteration {iteration}")
        s = x_new - x
        yv = g_new - g
        sy = float(s @ yv)
        if sy > _CURVATURE_EPS * float(np.linalg.norm(s) * np.linalg.norm(yv)):
            if first_update:
                h_inv *= sy / float(yv @ yv)
                first_update = False
            rho = 1.0 / sy
            hy = h_inv @ yv
            # BFGS inverse update: (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            h_inv -= rho * (np.outer(s, hy) + np.outer(hy, s))
            h_inv += rho * rho * (float(yv @ hy) + sy) * np.outer(s, s)
        x, fx, g = x_new, f_new, g_new
    gnorm = float(np.abs(g).max(initial=0.0))
    return MinimizeResult(x, float(fx), gnorm, max_iter, gnorm <= tol)
