"""Poisson surrogate likelihood, trend-filtering penalties and the density shift.

theta is the unconstrained log-intensity; lambda_j = sum_i G_ij exp(theta_i)
is the expected count in bin j and the surrogate loss is
l(theta) = sum_j lambda_j - x_j log lambda_j. Shifting a minimizer by
-log(n * width) gives the log mixing density.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import softmax

from deconvpath.errors import ObjectiveError
from deconvpath.grid import build_kernel
from deconvpath.operators import apply, apply_transpose

logger = logging.getLogger(__name__)

THETA_LIMIT = 700.0


@dataclass(frozen=True)
class PenaltySpec:
    """tau/2 * ||Delta^(k+1) theta||_q^q with q in {1, 2}."""
    k: int
    q: int
    tau: float

    def __post_init__(self):
        if self.q not in (1, 2):
            raise ObjectiveError("penalty norm q must be 1 or 2")
        if self.k < 0:
            raise ObjectiveError("penalty order k must be nonnegative")
        if not self.tau >= 0 or not np.isfinite(self.tau):
            raise ObjectiveError("tau must be a finite nonnegative number")

    @property
    def name(self):
        return f"l{self.q}"

    def with_tau(self, tau):
        return PenaltySpec(k=self.k, q=self.q, tau=float(tau))


@dataclass
class SolveDiagnostics:
    converged: bool = True
    iterations: int = 0
    inner_iterations: int = 0
    objective: float = float("nan")
    grad_norm: float = float("nan")
    primal_res: float = float("nan")
    dual_res: float = float("nan")
    mass_before: float = float("nan")
    message: str = ""

    def to_dict(self):
        return {key: value for key, value in self.__dict__.items()}


@dataclass(eq=False)
class ThetaEstimate:
    """A solved theta with its normalized mixing density and fitted marginal."""
    theta: np.ndarray
    f_hat: np.ndarray
    m_hat: np.ndarray
    tau: float
    penalty: PenaltySpec = None
    diagnostics: SolveDiagnostics = field(default_factory=SolveDiagnostics)
    # ADMM warm-start state (alpha, u); None for the l2 solver
    state: object = field(default=None, repr=False)


def _check_theta(theta):
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)) or np.max(np.abs(theta), initial=0.0) > THETA_LIMIT:
        raise ObjectiveError("theta out of range")
    return theta


def intensity(theta, kernel):
    """lambda_j = sum_i G_ij exp(theta_i)."""
    theta = _check_theta(theta)
    if theta.shape != (kernel.size,):
        raise ObjectiveError("theta length does not match kernel")
    return kernel.G.T @ np.exp(theta)


def _positive_intensity(theta, kernel):
    lam = intensity(theta, kernel)
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise ObjectiveError("invalid intensity")
    return lam


def nll(theta, grid, kernel):
    lam = _positive_intensity(theta, kernel)
    return float(np.sum(lam - grid.counts * np.log(lam)))


def nll_grad(theta, grid, kernel):
    """d l / d theta_j = exp(theta_j) * sum_i G_ji (1 - x_i / lambda_i)."""
    lam = _positive_intensity(theta, kernel)
    return np.exp(theta) * (kernel.G @ (1.0 - grid.counts / lam))


def fisher_information(theta, kernel):
    """Poisson Fisher matrix E G diag(1/lambda) G^T E with E = diag(exp(theta))."""
    lam = _positive_intensity(theta, kernel)
    scaled = kernel.G * np.exp(theta)[:, np.newaxis]
    return (scaled / lam[np.newaxis, :]) @ scaled.T


def observed_information(theta, grid, kernel):
    """Hessian of nll with negative diagonal parts dropped, so it stays positive semidefinite.

    The exact Hessian is E G diag(x/lambda^2) G^T E + diag(exp(theta) * G (1 - x/lambda)).
    """
    lam = _positive_intensity(theta, kernel)
    weights = np.exp(theta)
    scaled = kernel.G * weights[:, np.newaxis]
    hessian = (scaled * (grid.counts / lam ** 2)[np.newaxis, :]) @ scaled.T
    diagonal = weights * (kernel.G @ (1.0 - grid.counts / lam))
    hessian[np.diag_indices_from(hessian)] += np.clip(diagonal, 0.0, None)
    return hessian


def deviance(theta, grid, kernel):
    """nll(theta) - nll at the saturated fit lambda = x.

    Same gradient and minimizers as nll, but the value is of order D rather
    than n, so line searches can resolve much smaller decreases.
    """
    lam = _positive_intensity(theta, kernel)
    x = grid.counts.astype(float)
    observed = x > 0
    terms = lam.copy()
    rel = (lam[observed] - x[observed]) / x[observed]
    terms[observed] = x[observed] * (rel - np.log1p(rel))
    return float(np.sum(terms))


def penalty_value_grad(theta, spec, op):
    """Return (value, gradient); the gradient is None for the nonsmooth q=1 penalty."""
    if op is None:
        return 0.0, (np.zeros_like(np.asarray(theta, dtype=float)) if spec.q == 2 else None)
    diffs = apply(op, theta)
    if spec.q == 1:
        return 0.5 * spec.tau * float(np.sum(np.abs(diffs))), None
    value = 0.5 * spec.tau * float(diffs @ diffs)
    return value, spec.tau * apply_transpose(op, diffs)


def objective_value(theta, grid, kernel, spec, op):
    """nll plus penalty, the quantity every solver reports."""
    return nll(theta, grid, kernel) + penalty_value_grad(theta, spec, op)[0]


def shift_to_density(theta, grid, kernel=None, penalty=None, diagnostics=None):
    """Map theta to f_hat = exp(theta - log(n * width)), renormalized.

    The mass before renormalization is kept in ``diagnostics.mass_before``;
    it is 1 only at an exact stationary point.
    """
    theta = _check_theta(theta)
    kernel = kernel if kernel is not None else build_kernel(grid)
    diagnostics = diagnostics if diagnostics is not None else SolveDiagnostics()
    n = max(grid.n, 1)
    diagnostics.mass_before = float(np.exp(theta).sum() / n)
    logger.debug("pre-normalization mass %.12g", diagnostics.mass_before)
    f_hat = softmax(theta) / grid.width
    m_hat = kernel.G.T @ f_hat
    tau = penalty.tau if penalty is not None else float("nan")
    return ThetaEstimate(theta=theta.copy(), f_hat=f_hat, m_hat=m_hat, tau=tau,
                         penalty=penalty, diagnostics=diagnostics)
