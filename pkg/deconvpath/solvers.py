"""Solvers for the penalized Poisson deconvolution objective.

- ``solve_l2``: dense BFGS with a strong-Wolfe line search on
  l(theta) + tau/2 ||Delta^(k+1) theta||_2^2.
- ``solve_l1``: scaled-form ADMM on the split alpha = Delta^(k) theta, with a
  BFGS theta-step and the fused-lasso dynamic program as the alpha-step.
  At or above the critical tau the l1 solution is the best polynomial of
  degree k, which is returned directly.

Line searches run on the deviance (nll minus its saturated value), which
has the same gradient as nll but a much smaller magnitude.
"""
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import line_search

from deconvpath.errors import AdmmDivergedError, LineSearchError, ObjectiveError, SolverError
from deconvpath.fused_prox import fused_prox
from deconvpath.objective import (
    SolveDiagnostics, deviance, nll, nll_grad, objective_value, observed_information,
    penalty_value_grad, shift_to_density,
)
from deconvpath.operators import apply, apply_transpose, gram, make_diff

logger = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e8
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolverConfig:
    max_outer_iters: int = 500
    grad_tol: float = 1e-8
    primal_tol: float = 1e-6
    dual_tol: float = 1e-6
    rel_tol: float = 1e-4
    rho: float = None
    rho_floor: float = 1e-8
    rho_ceiling: float = None
    bfgs_max_iters: int = 200
    reseed_every: int = 10
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9

    def __post_init__(self):
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise SolverError("Wolfe constants must satisfy 0 < c1 < c2 < 1")
        for name in ("grad_tol", "primal_tol", "dual_tol", "rel_tol", "rho_floor"):
            if not getattr(self, name) > 0:
                raise SolverError(f"{name} must be positive")
        for name in ("rho", "rho_ceiling"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise SolverError(f"{name} must be positive")
        if self.max_outer_iters < 1 or self.bfgs_max_iters < 1 or self.reseed_every < 1:
            raise SolverError("iteration limits must be at least 1")

    def rho_for(self, tau, scale=None):
        """ADMM penalty weight.

        The configured ``rho`` wins. Otherwise rho = tau, kept at or above
        ``rho_floor`` (so tau = 0 works) and at or below ``rho_ceiling``,
        which defaults to ``scale`` (the data's curvature scale, n / D).
        """
        if self.rho is not None:
            return self.rho
        rho = max(float(tau), self.rho_floor)
        ceiling = self.rho_ceiling if self.rho_ceiling is not None else scale
        if ceiling is not None:
            rho = min(rho, max(float(ceiling), self.rho_floor))
        return rho


@dataclass
class AdmmState:
    theta: np.ndarray
    alpha: np.ndarray
    u: np.ndarray
    iter: int = 0
    primal_res: float = 0.0
    dual_res: float = 0.0
    rho: float = 1.0


@dataclass
class BfgsResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    iterations: int
    converged: bool
    message: str = ""
    trace: list = field(default_factory=list)


def cold_start(grid):
    """Smoothed log-counts on the unconstrained scale."""
    if grid.n <= 0:
        raise SolverError("no counts to fit")
    smoothed = grid.counts + 0.5
    return np.log(smoothed) - np.log(smoothed.sum() * grid.width) + np.log(grid.n * grid.width)


def penalty_operator(size, order):
    """Delta^(order) on ``size`` points, or None when it would have no rows."""
    return make_diff(size, order) if size > order else None


def rho_scale(grid):
    """Expected count per bin, the curvature scale of nll along constant shifts."""
    return grid.n / grid.size


def _invert(hessian):
    ridge = 1e-8 * max(1.0, float(np.mean(np.diag(hessian))))
    hessian = hessian + ridge * np.eye(hessian.shape[0])
    try:
        factor = scipy.linalg.cho_factor(hessian)
    except (np.linalg.LinAlgError, ValueError):
        logger.debug("inverse-Hessian seed not positive definite; using identity scaling")
        return None
    return scipy.linalg.cho_solve(factor, np.eye(hessian.shape[0]))


def seed_inverse_hessian(theta, grid, kernel, curvature=None):
    """(observed information + curvature + ridge)^-1, a starting inverse Hessian for BFGS."""
    try:
        hessian = observed_information(theta, grid, kernel)
    except ObjectiveError:
        return None
    if curvature is not None:
        hessian = hessian + curvature
    return _invert(hessian)


def _guarded(fun):
    def wrapped(x):
        try:
            return fun(x)
        except ObjectiveError:
            return np.inf
    return wrapped


def bfgs_minimize(fun, grad, x0, cfg, h0=None, tol=None, max_iters=None, reseed=None):
    """Minimize ``fun`` by BFGS with dense inverse-Hessian updates.

    The line search enforces the strong Wolfe conditions, so accepted
    iterates never increase the objective; ``trace`` records the value
    after every accepted step. ``reseed(x)``, when given, returns a fresh
    inverse-Hessian estimate at x; it replaces the running one every
    ``cfg.reseed_every`` iterations and after a failed line search.

    Raises:
        LineSearchError: the line search failed twice in a row (once after
            resetting the inverse Hessian); ``best`` holds the best iterate.
    """
    tol = cfg.grad_tol if tol is None else tol
    max_iters = max_iters or cfg.bfgs_max_iters
    x = np.array(x0, dtype=float)
    f = fun(x)
    g = grad(x)
    size = x.size
    trace = [f]
    safe_fun = _guarded(fun)

    def restart(at):
        fresh = reseed(at) if reseed is not None else None
        if fresh is None:
            fresh = h0
        return np.eye(size) if fresh is None else np.array(fresh, dtype=float)

    H = np.eye(size) if h0 is None else np.array(h0, dtype=float)
    reset = False

    for it in range(max_iters):
        gnorm = float(np.max(np.abs(g), initial=0.0))
        if gnorm <= tol:
            return BfgsResult(x, f, gnorm, it, True, "gradient tolerance reached", trace)
        if reseed is not None and it > 0 and it % cfg.reseed_every == 0:
            H = restart(x)
        p = -H @ g
        slope = float(g @ p)
        if slope >= 0:
            H = restart(x)
            p = -H @ g
            slope = float(g @ p)
        if slope >= 0 or abs(slope) <= _EPS * (1.0 + abs(f)):
            # the predicted decrease is below the resolution of f
            return BfgsResult(x, f, gnorm, it, False, "precision limit reached", trace)
        amax = 50.0 / max(float(np.max(np.abs(p))), 1e-300)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            step = line_search(safe_fun, grad, x, p, gfk=g, old_fval=f,
                               c1=cfg.wolfe_c1, c2=cfg.wolfe_c2, amax=amax, maxiter=30)
        alpha = step[0]
        if alpha is None or not np.isfinite(step[3]):
            if reset:
                raise LineSearchError("line search failed", best=x, best_value=f)
            logger.debug("line search failed at iteration %d; resetting inverse Hessian", it)
            H = restart(x)
            reset = True
            continue
        reset = False
        s = alpha * p
        x_new = x + s
        f_new = float(step[3])
        g_new = grad(x_new)
        y = g_new - g
        sy = float(s @ y)
        if it == 0 and h0 is None and reseed is None and sy > 0:
            H = (sy / float(y @ y)) * np.eye(size)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            Hy = H @ y
            H += ((sy + float(y @ Hy)) / sy ** 2) * np.outer(s, s) - (np.outer(Hy, s) + np.outer(s, Hy)) / sy
        x, f, g = x_new, f_new, g_new
        trace.append(f)

    gnorm = float(np.max(np.abs(g), initial=0.0))
    return BfgsResult(x, f, gnorm, max_iters, gnorm <= tol, "iteration limit reached", trace)


def _gradient_tolerance(grid, cfg):
    # the Poisson objective and its gradient scale with the sample size
    return cfg.grad_tol * (1.0 + grid.n)


def solve_l2(grid, kernel, spec, init=None, cfg=None):
    """Minimize l(theta) + tau/2 ||Delta^(k+1) theta||_2^2 by BFGS."""
    cfg = cfg or SolverConfig()
    if spec.q != 2:
        raise SolverError("solve_l2 requires an l2 penalty (q=2)")
    op = penalty_operator(grid.size, spec.k + 1)
    theta0 = cold_start(grid) if init is None else np.asarray(init, dtype=float)

    def fun(theta):
        return deviance(theta, grid, kernel) + penalty_value_grad(theta, spec, op)[0]

    def grad(theta):
        return nll_grad(theta, grid, kernel) + penalty_value_grad(theta, spec, op)[1]

    curvature = spec.tau * gram(op) if op is not None else None

    def reseed(theta):
        return seed_inverse_hessian(theta, grid, kernel, curvature)

    result = bfgs_minimize(fun, grad, theta0, cfg, h0=reseed(theta0), tol=_gradient_tolerance(grid, cfg),
                           max_iters=cfg.max_outer_iters, reseed=reseed)
    if not result.converged:
        logger.warning("l2 solve at tau=%g stopped without converging: %s", spec.tau, result.message)
    diagnostics = SolveDiagnostics(converged=result.converged, iterations=result.iterations,
                                   inner_iterations=result.iterations,
                                   objective=objective_value(result.x, grid, kernel, spec, op),
                                   grad_norm=result.grad_norm, message=result.message)
    return shift_to_density(result.x, grid, kernel, spec, diagnostics)


def theta_subproblem(theta_init, alpha, u, rho, grid, kernel, op_k, cfg, tol=None):
    """ADMM theta-step: argmin l(theta) + rho/2 ||alpha + u - Delta^(k) theta||^2.

    Returns the BfgsResult; ``.x`` is the new theta. A failed line search
    is not fatal here: the best iterate is returned unconverged.
    """
    target = alpha + u
    tol = _gradient_tolerance(grid, cfg) if tol is None else tol

    def fun(theta):
        resid = target - apply(op_k, theta)
        return deviance(theta, grid, kernel) + 0.5 * rho * float(resid @ resid)

    def grad(theta):
        return nll_grad(theta, grid, kernel) + rho * apply_transpose(op_k, apply(op_k, theta) - target)

    curvature = rho * gram(op_k) if rho > 0 else None

    def reseed(theta):
        return seed_inverse_hessian(theta, grid, kernel, curvature)

    theta_init = np.asarray(theta_init, dtype=float)
    try:
        return bfgs_minimize(fun, grad, theta_init, cfg, h0=reseed(theta_init), tol=tol, reseed=reseed)
    except LineSearchError as e:
        logger.debug("theta-step line search failed; keeping best iterate")
        best = np.asarray(e.best)
        return BfgsResult(best, e.best_value, float(np.max(np.abs(grad(best)))), 0, False, str(e))


def polynomial_fit(grid, kernel, k, cfg, init=None):
    """Minimize nll over theta in the null space of Delta^(k+1): polynomials of degree <= k.

    Returns (theta, BfgsResult); the BFGS runs on the k + 1 coefficients
    of an orthonormal polynomial basis.
    """
    t = np.linspace(-1.0, 1.0, grid.size)
    basis, _ = np.linalg.qr(np.vander(t, k + 1, increasing=True))
    theta0 = cold_start(grid) if init is None else np.asarray(init, dtype=float)

    def fun(beta):
        return deviance(basis @ beta, grid, kernel)

    def grad(beta):
        return basis.T @ nll_grad(basis @ beta, grid, kernel)

    def reseed(beta):
        try:
            hessian = observed_information(basis @ beta, grid, kernel)
        except ObjectiveError:
            return None
        return _invert(basis.T @ hessian @ basis)

    beta0 = basis.T @ theta0
    try:
        result = bfgs_minimize(fun, grad, beta0, cfg, h0=reseed(beta0), tol=_gradient_tolerance(grid, cfg),
                               max_iters=cfg.max_outer_iters, reseed=reseed)
    except LineSearchError as e:
        raise LineSearchError(str(e), best=basis @ np.asarray(e.best), best_value=e.best_value) from e
    return basis @ result.x, result


def critical_dual(theta, grid, kernel, k):
    """s with Delta^(k+1)^T s = nll_grad(theta); tau >= 2 max|s| makes theta l1-optimal.

    Delta^(k+1)^T is inverted by k + 1 rounds of cumulative summation; this
    is exact when the gradient is orthogonal to polynomials of degree <= k.
    """
    s = nll_grad(theta, grid, kernel)
    for _ in range(k + 1):
        s = np.cumsum(s)[:-1]
    return s


def _l1_objective(theta, grid, kernel, spec, op_full):
    return nll(theta, grid, kernel) + penalty_value_grad(theta, spec, op_full)[0]


def _polynomial_estimate(theta, fit, s, tau_c, grid, kernel, spec, op_k, op_full, rho):
    message = f"polynomial solution; tau at or above the critical value {tau_c:.6g}"
    diagnostics = SolveDiagnostics(converged=fit.converged, iterations=0, inner_iterations=fit.iterations,
                                   objective=_l1_objective(theta, grid, kernel, spec, op_full),
                                   grad_norm=fit.grad_norm, primal_res=0.0, dual_res=0.0, message=message)
    logger.debug("tau=%g: %s", spec.tau, message)
    estimate = shift_to_density(theta, grid, kernel, spec, diagnostics)
    # scaled dual with nll_grad = rho * Delta^(k)^T u
    u = apply_transpose(make_diff(op_k.rows, 1), s) / rho
    estimate.state = AdmmState(theta=theta.copy(), alpha=apply(op_k, theta), u=u, rho=rho)
    return estimate


def solve_l1(grid, kernel, spec, init=None, cfg=None, warm=None):
    """Minimize l(theta) + tau/2 ||Delta^(k+1) theta||_1 by ADMM.

    ``warm`` is an AdmmState from a neighbouring solve; its alpha and u
    seed the split variables (theta comes from ``init`` or ``warm.theta``).
    """
    cfg = cfg or SolverConfig()
    if spec.q != 1:
        raise SolverError("solve_l1 requires an l1 penalty (q=1)")
    size = grid.size
    if size < spec.k + 2:
        raise SolverError("grid too small for penalty order")
    op_k = make_diff(size, spec.k)
    op_full = make_diff(size, spec.k + 1)
    rho = cfg.rho_for(spec.tau, rho_scale(grid))
    prox_weight = spec.tau / (2.0 * rho)

    if init is not None:
        theta = np.asarray(init, dtype=float).copy()
    elif warm is not None:
        theta = np.asarray(warm.theta, dtype=float).copy()
    else:
        theta = cold_start(grid)

    poly_theta, fit = polynomial_fit(grid, kernel, spec.k, cfg)
    s = critical_dual(poly_theta, grid, kernel, spec.k)
    tau_c = 2.0 * float(np.max(np.abs(s), initial=0.0))
    if spec.tau >= tau_c:
        return _polynomial_estimate(poly_theta, fit, s, tau_c, grid, kernel, spec, op_k, op_full, rho)

    if warm is not None and warm.alpha.shape == (op_k.rows,):
        # u is the dual scaled by 1/rho; rescale when rho changes along a path
        alpha, u = warm.alpha.copy(), warm.u * (warm.rho / rho)
    else:
        alpha, u = apply(op_k, theta), np.zeros(op_k.rows)

    tol = _gradient_tolerance(grid, cfg)
    inner_tol = tol
    best_theta = theta.copy()
    best_value = _l1_objective(theta, grid, kernel, spec, op_full)
    converged = False
    primal = dual = float("nan")
    inner = 0
    iteration = 0
    for iteration in range(1, cfg.max_outer_iters + 1):
        sub = theta_subproblem(theta, alpha, u, rho, grid, kernel, op_k, cfg, tol=inner_tol)
        theta = sub.x
        inner += sub.iterations
        d_theta = apply(op_k, theta)
        alpha_new = fused_prox(d_theta - u, prox_weight)
        u = u + alpha_new - d_theta
        primal = float(np.linalg.norm(alpha_new - d_theta))
        dual = rho * float(np.linalg.norm(apply_transpose(op_k, alpha_new - alpha)))
        alpha = alpha_new

        if not (np.isfinite(primal) and np.isfinite(dual)) or primal > DIVERGENCE_LIMIT \
                or dual / rho > DIVERGENCE_LIMIT:
            raise AdmmDivergedError("ADMM diverged; reduce ρ or τ")

        value = _l1_objective(theta, grid, kernel, spec, op_full)
        if value < best_value:
            best_value, best_theta = value, theta.copy()

        eps_primal = np.sqrt(op_k.rows) * cfg.primal_tol \
            + cfg.rel_tol * max(np.linalg.norm(alpha), np.linalg.norm(d_theta))
        eps_dual = np.sqrt(size) * cfg.dual_tol \
            + cfg.rel_tol * rho * np.linalg.norm(apply_transpose(op_k, u))
        logger.debug("admm it=%d primal=%.3e/%.3e dual=%.3e/%.3e obj=%.10g",
                     iteration, primal, eps_primal, dual, eps_dual, value)
        if primal <= eps_primal and dual <= eps_dual:
            converged = True
            break
        # theta-steps tighten with the dual threshold so their error cannot hold the dual residual up
        inner_tol = float(np.clip(0.1 * eps_dual, 0.1 * tol, tol))

    final_value = _l1_objective(theta, grid, kernel, spec, op_full)
    if final_value > best_value + 1e-6 * abs(best_value):
        theta, final_value = best_theta, best_value
    message = "residual tolerances reached" if converged else "iteration limit reached"
    if not converged:
        logger.warning("ADMM at tau=%g stopped after %d iterations (primal %.3e, dual %.3e)",
                       spec.tau, iteration, primal, dual)
    diagnostics = SolveDiagnostics(converged=converged, iterations=iteration, inner_iterations=inner,
                                   objective=final_value, primal_res=primal, dual_res=dual,
                                   message=message)
    estimate = shift_to_density(theta, grid, kernel, spec, diagnostics)
    estimate.state = AdmmState(theta=theta.copy(), alpha=alpha, u=u, iter=iteration,
                               primal_res=primal, dual_res=dual, rho=rho)
    return estimate


def solve(grid, kernel, spec, init=None, cfg=None, warm=None):
    """Dispatch on the penalty norm."""
    if spec.q == 1:
        return solve_l1(grid, kernel, spec, init=init, cfg=cfg, warm=warm)
    return solve_l2(grid, kernel, spec, init=init, cfg=cfg)
