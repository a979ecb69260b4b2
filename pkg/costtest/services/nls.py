"""Nonlinear least squares by damped Gauss–Newton (Levenberg–Marquardt).

Minimizes Σᵢ{Yᵢ − g(θ, Xᵢ)}² over θ:
1. At the current θ form J (n×p Jacobian of g) and residuals r.
2. Solve (JᵀJ + λI)δ = Jᵀr.
3. Accept θ + δ if the loss does not increase: λ ← λ/2.
   Otherwise reject: λ ← 10λ.
4. Stop when an accepted step decreases the loss by at most loss_tolerance
   relative, moves θ by at most step_tolerance relative, or the iteration
   budget runs out (converged=False).
5. On convergence, take up to POLISH_STEPS undamped Gauss–Newton steps
   (least squares on J). For a linear mean the first such step lands on the
   least-squares solution.

Optional multi-start draws extra starting points uniformly from
[−start_scale, start_scale]^p and keeps the lowest-loss fit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import structlog
from numpy.typing import NDArray

from costtest.errors import ConfigurationError, DimensionError, NumericError, UnderdeterminedError
from costtest.schemas.options import FitOptions
from costtest.services.models import Dataset, ParametricModel

logger = structlog.get_logger()

LAMBDA_MIN = 1e-12
# Rejected steps beyond this damping mean no descent direction is left.
LAMBDA_REJECT_MAX = 1e16
# A linear solve that still fails at this damping is a numeric error.
LAMBDA_SOLVE_MAX = 1e6
POLISH_STEPS = 3
# Singular values of J below this fraction of the largest are treated as zero.
POLISH_RCOND = 1e-12
# Relative loss change treated as rounding when accepting a polish step.
POLISH_LOSS_SLACK = 1e-12


@dataclass(frozen=True)
class FitResult:
    theta_hat: NDArray[np.float64]
    final_loss: float
    iterations: int
    converged: bool
    loss_history: tuple[float, ...] = field(default=(), repr=False)


def _sum_of_squares(residuals: NDArray[np.float64]) -> float:
    return float(residuals @ residuals)


def _damped_step(
    JtJ: NDArray[np.float64], Jtr: NDArray[np.float64], lam: float
) -> tuple[NDArray[np.float64], float]:
    """Solve (JᵀJ + λI)δ = Jᵀr, raising λ until the system is solvable."""
    eye = np.eye(JtJ.shape[0])
    while True:
        try:
            delta = scipy.linalg.solve(JtJ + lam * eye, Jtr, assume_a="pos")
            if np.all(np.isfinite(delta)):
                return delta, lam
        except (np.linalg.LinAlgError, ValueError):
            pass
        lam *= 10.0
        if lam > LAMBDA_SOLVE_MAX:
            raise NumericError(f"damped normal equations unsolvable up to λ={LAMBDA_SOLVE_MAX:g}")


def _gauss_newton_polish(
    model: ParametricModel,
    data: Dataset,
    theta: NDArray[np.float64],
    r: NDArray[np.float64],
    loss: float,
    history: list[float],
) -> tuple[NDArray[np.float64], float]:
    """Undamped steps δ = argmin ‖r − Jδ‖ from a converged LM iterate.

    A step is kept when it lowers the loss, or when it shrinks ‖Jᵀr‖ while the
    loss moves by no more than rounding; the recorded loss never increases.
    """
    X, y = data.predictors, data.responses
    J = model.jacobian(theta, X)
    grad = float(np.linalg.norm(J.T @ r))
    for _ in range(POLISH_STEPS):
        if loss == 0.0 or grad == 0.0:
            break
        try:
            delta = scipy.linalg.lstsq(J, r, cond=POLISH_RCOND)[0]
        except (np.linalg.LinAlgError, ValueError):
            break
        if not np.all(np.isfinite(delta)):
            break
        candidate = theta + delta
        r_new = y - model.mean(candidate, X)
        loss_new = _sum_of_squares(r_new)
        if not np.isfinite(loss_new):
            break
        J_new = model.jacobian(candidate, X)
        grad_new = float(np.linalg.norm(J_new.T @ r_new))
        if loss_new < loss:
            loss = loss_new
            history.append(loss)
        elif not (grad_new < grad and loss_new <= loss * (1.0 + POLISH_LOSS_SLACK)):
            break
        theta, r, J, grad = candidate, r_new, J_new, grad_new
    return theta, loss


def _levenberg_marquardt(
    model: ParametricModel, data: Dataset, start: NDArray[np.float64], opts: FitOptions
) -> FitResult:
    X, y = data.predictors, data.responses
    theta = start.copy()
    r = y - model.mean(theta, X)
    loss = _sum_of_squares(r)
    if not np.isfinite(loss):
        raise NumericError(f"{model.label}: non-finite loss at starting point {theta.tolist()}")

    history = [loss]
    lam = opts.damping_initial
    converged = False
    iterations = 0

    J = model.jacobian(theta, X)
    JtJ, Jtr = J.T @ J, J.T @ r

    while iterations < opts.max_iterations:
        if loss == 0.0:
            converged = True
            break
        iterations += 1

        delta, lam = _damped_step(JtJ, Jtr, lam)
        candidate = theta + delta
        r_new = y - model.mean(candidate, X)
        loss_new = _sum_of_squares(r_new)

        if np.isfinite(loss_new) and loss_new <= loss:
            decrease = loss - loss_new
            previous = loss
            theta, r, loss = candidate, r_new, loss_new
            history.append(loss)
            lam = max(lam * 0.5, LAMBDA_MIN)

            step_small = np.linalg.norm(delta) <= opts.step_tolerance * (
                np.linalg.norm(theta) + opts.step_tolerance
            )
            if decrease <= opts.loss_tolerance * previous or step_small:
                converged = True
                break

            J = model.jacobian(theta, X)
            JtJ, Jtr = J.T @ J, J.T @ r
        else:
            lam *= 10.0
            if lam > LAMBDA_REJECT_MAX:
                converged = True
                break

    if converged:
        theta, loss = _gauss_newton_polish(model, data, theta, r, loss, history)

    return FitResult(
        theta_hat=theta,
        final_loss=loss,
        iterations=iterations,
        converged=converged,
        loss_history=tuple(history),
    )


def _starting_points(p: int, opts: FitOptions) -> list[NDArray[np.float64]]:
    if opts.initial_point is None:
        first = np.zeros(p)
    else:
        first = np.asarray(opts.initial_point, dtype=np.float64)
        if first.shape != (p,):
            raise ConfigurationError(f"initial_point has length {first.size}, expected p={p}")

    starts = [first]
    if opts.n_starts > 1:
        rng = np.random.default_rng(opts.start_seed)
        for _ in range(opts.n_starts - 1):
            starts.append(rng.uniform(-opts.start_scale, opts.start_scale, size=p))
    return starts


def fit(model: ParametricModel, data: Dataset, opts: FitOptions | None = None) -> FitResult:
    """Least-squares estimate of θ on data.

    Raises:
        UnderdeterminedError: fewer rows than parameters.
        NumericError: non-finite loss at the initial point, or an unsolvable step.
    """
    opts = opts or FitOptions()
    if data.q != model.q:
        raise DimensionError(f"{model.label}: data has q={data.q}, model expects q={model.q}")
    if data.n < model.p:
        raise UnderdeterminedError(f"{model.label}: n={data.n} rows for p={model.p} parameters")

    best: FitResult | None = None
    for k, start in enumerate(_starting_points(model.p, opts)):
        try:
            result = _levenberg_marquardt(model, data, start, opts)
        except NumericError:
            if k == 0:
                raise
            logger.debug("nls_start_skipped", model=model.label, start=k)
            continue
        if best is None or result.final_loss < best.final_loss:
            best = result

    if not best.converged:
        logger.warning(
            "nls_not_converged",
            model=model.label,
            iterations=best.iterations,
            loss=best.final_loss,
        )
    return best
