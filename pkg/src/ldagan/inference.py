"""
Variational EM engine over the mode distribution of a generators bank.

For one noise draw z', with likelihood vector D_k = D(G_k(z')), the posterior over (pi, z) is approximated by
q(pi | gamma) q(z | omega). The E-step alternates gamma = alpha + omega and
omega_k ~ D_k exp(psi(gamma_k) - psi(sum(gamma))) until omega stabilizes; the M-step on alpha ascends the
minibatch mean of the alpha-dependent terms of the lower bound.
"""

from dataclasses import dataclass
from typing import Any, Callable, List

import numpy as np

from ldagan.errors import LdaganException, ResultCode
from ldagan.special_math import SimplexVector, as_simplex, digamma, log_gamma, normalize_log_weights

# Probability clamping constant, for all logs of discriminator outputs
EPS_D = 1e-7

# Default floor for Dirichlet parameters
ALPHA_MIN = 1e-3

# Default E-step convergence settings
ESTEP_TOL = 1e-10
ESTEP_MAX_ITER = 1000


@dataclass(frozen=True)
class DirichletParams:
    """
    Dirichlet concentration vector alpha, with its configured floor
    """

    alpha: np.ndarray
    alpha_min: float = ALPHA_MIN

    def __post_init__(self):
        values = np.array(self.alpha, dtype=np.float64)
        if values.ndim != 1 or len(values) < 1:
            raise LdaganException(f"Dirichlet parameters must be a non-empty vector, got {self.alpha}", ResultCode.ERROR_SHAPE)
        if not np.all(np.isfinite(values)) or np.any(values < self.alpha_min) or self.alpha_min <= 0:
            raise LdaganException(f"Dirichlet parameters must be finite and >= {self.alpha_min}, got {self.alpha}", ResultCode.ERROR_DOMAIN)
        values.flags.writeable = False
        object.__setattr__(self, "alpha", values)

    @property
    def K(self) -> int:  # NOQA: N802
        return len(self.alpha)

    @property
    def total(self) -> float:
        return float(np.sum(self.alpha))

    def to_list(self) -> List[float]:
        return [float(a) for a in self.alpha]


@dataclass
class VariationalState:
    """
    Variational parameters for one noise sample (or one row per noise sample, when stacked)
    """

    omega: SimplexVector
    gamma: np.ndarray


@dataclass
class EStepReport:
    """
    E-step convergence report: sweeps count, max omega change at last sweep, and convergence status
    """

    iterations: int
    final_delta: float
    converged: bool


@dataclass
class BatchEStepResult:
    """
    Batched E-step outcome: M x K variational parameters, and per-row convergence diagnostics
    """

    omega: np.ndarray
    gamma: np.ndarray
    iterations: np.ndarray
    final_delta: np.ndarray
    converged: np.ndarray

    @property
    def state(self) -> VariationalState:
        return VariationalState(self.omega, self.gamma)


def as_likelihood(d: Any, K: int = None) -> np.ndarray:  # NOQA: N803
    """
    Realness scores D(G_k(z')) (one vector, or one row per noise sample), clamped to [EPS_D, 1 - EPS_D]
    """
    values = np.array(d, dtype=np.float64)
    if values.ndim == 0 or (K is not None and values.shape[-1] != K):
        raise LdaganException(f"Likelihood vector shape {values.shape} doesn't match K={K}", ResultCode.ERROR_SHAPE)
    if not np.all(np.isfinite(values)) or np.any(values < 0) or np.any(values > 1):
        raise LdaganException(f"Likelihood values must lie in [0, 1], got {d}", ResultCode.ERROR_DOMAIN)
    return np.clip(values, EPS_D, 1.0 - EPS_D)


def _positive_gamma(gamma: Any) -> np.ndarray:
    values = np.array(gamma, dtype=np.float64)
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise LdaganException(f"Variational Dirichlet parameters must be finite and positive, got {gamma}", ResultCode.ERROR_DOMAIN)
    return values


def expected_log_pi(gamma: np.ndarray) -> np.ndarray:
    # E_q[log pi_k] = psi(gamma_k) - psi(sum(gamma)), along the last axis
    return digamma(gamma) - digamma(np.sum(gamma, axis=-1, keepdims=True))


def update_omega(like: Any, gamma: Any) -> SimplexVector:
    """
    Variational multinomial update: omega_k ~ D_k exp(psi(gamma_k) - psi(sum(gamma))), computed in log domain
    """
    g = _positive_gamma(gamma)
    d = as_likelihood(like, g.shape[-1])
    if d.shape != g.shape:
        raise LdaganException(f"Shape mismatch between likelihood {d.shape} and gamma {g.shape}", ResultCode.ERROR_SHAPE)
    return normalize_log_weights(np.log(d) + expected_log_pi(g))


def update_gamma(alpha: DirichletParams, omega: Any) -> np.ndarray:
    """
    Variational Dirichlet update: gamma_k = alpha_k + omega_k
    """
    w = np.asarray(omega, dtype=np.float64)
    if w.shape[-1] != alpha.K:
        raise LdaganException(f"Shape mismatch between alpha (K={alpha.K}) and omega {w.shape}", ResultCode.ERROR_SHAPE)
    return alpha.alpha + w


def e_step(
    like: Any, alpha: DirichletParams, tol: float = ESTEP_TOL, max_iter: int = ESTEP_MAX_ITER, on_sweep: Callable[[VariationalState], None] = None
) -> (VariationalState, EStepReport):
    """
    E-step fixed point for one noise sample.

    Starting from uniform omega, each sweep computes gamma from the current omega, then omega from the new gamma,
    until max_k |delta omega_k| <= tol or max_iter sweeps. Non-convergence is reported, not raised.
    The on_sweep callback (if any) receives the (gamma, omega) pair reached at the end of each sweep.
    """
    if tol <= 0 or max_iter < 1:
        raise LdaganException(f"Invalid E-step settings (tol={tol}, max_iter={max_iter})", ResultCode.ERROR_PARAM_INVALID)
    d = as_likelihood(like, alpha.K)

    omega = np.full(alpha.K, 1.0 / alpha.K)
    delta = np.inf
    iterations = 0
    while iterations < max_iter:
        gamma = update_gamma(alpha, omega)
        new_omega = update_omega(d, gamma)
        delta = float(np.max(np.abs(new_omega - omega)))
        omega = new_omega
        iterations += 1
        if on_sweep is not None:
            on_sweep(VariationalState(omega, gamma))
        if delta <= tol:
            break

    # Emitted state always satisfies gamma = alpha + omega
    return VariationalState(omega, update_gamma(alpha, omega)), EStepReport(iterations, delta, delta <= tol)


def e_step_batch(like: Any, alpha: DirichletParams, tol: float = ESTEP_TOL, max_iter: int = ESTEP_MAX_ITER) -> BatchEStepResult:
    """
    Same fixed point as e_step, for M noise samples at once (M x K likelihood matrix).
    Converged rows are frozen while the others keep iterating.
    """
    if tol <= 0 or max_iter < 1:
        raise LdaganException(f"Invalid E-step settings (tol={tol}, max_iter={max_iter})", ResultCode.ERROR_PARAM_INVALID)
    d = as_likelihood(like, alpha.K)
    if d.ndim != 2:
        raise LdaganException(f"Batched E-step expects an M x K likelihood matrix, got shape {d.shape}", ResultCode.ERROR_SHAPE)
    m = d.shape[0]

    omega = np.full(d.shape, 1.0 / alpha.K)
    iterations = np.zeros(m, dtype=np.int64)
    final_delta = np.full(m, np.inf)
    active = np.arange(m)
    for _ in range(max_iter):
        if len(active) == 0:
            break
        gamma = update_gamma(alpha, omega[active])
        new_omega = update_omega(d[active], gamma)
        delta = np.max(np.abs(new_omega - omega[active]), axis=1)
        omega[active] = new_omega
        iterations[active] += 1
        final_delta[active] = delta
        active = active[delta > tol]

    return BatchEStepResult(omega, update_gamma(alpha, omega), iterations, final_delta, final_delta <= tol)


def exact_log_marginal(like: Any, alpha: DirichletParams) -> float:
    """
    log p(y=1 | z'): the integrand is linear in pi, so the marginal is sum_k (alpha_k / alpha_0) D_k
    """
    d = as_likelihood(like, alpha.K)
    return float(np.log(np.dot(d, alpha.alpha) / alpha.total))


def exact_mode_posterior(like: Any, alpha: DirichletParams) -> SimplexVector:
    """
    True posterior p(z_k=1 | y=1, z'), proportional to alpha_k D_k
    """
    d = as_likelihood(like, alpha.K)
    w = alpha.alpha * d
    return w / np.sum(w)


def lower_bound(like: Any, alpha: DirichletParams, state: VariationalState) -> float:
    """
    Evidence lower bound L(gamma, omega; alpha, theta), term by term
    """
    d = as_likelihood(like, alpha.K)
    gamma = _positive_gamma(state.gamma)
    omega = as_simplex(state.omega, "omega")
    if gamma.shape != (alpha.K,) or omega.shape != (alpha.K,):
        raise LdaganException(f"State shapes {gamma.shape}/{omega.shape} don't match K={alpha.K}", ResultCode.ERROR_SHAPE)
    a = alpha.alpha
    e_log_pi = expected_log_pi(gamma)

    # E_q[log p(pi | alpha)]
    log_p_pi = log_gamma(alpha.total) - np.sum(log_gamma(a)) + np.dot(a - 1.0, e_log_pi)

    # E_q[log p(z | pi)]
    log_p_z = np.dot(omega, e_log_pi)

    # E_q[log p(y=1 | z, z')]
    log_p_y = np.dot(omega, np.log(d))

    # E_q[log q(pi | gamma)]
    log_q_pi = log_gamma(np.sum(gamma)) - np.sum(log_gamma(gamma)) + np.dot(gamma - 1.0, e_log_pi)

    # E_q[log q(z | omega)], with 0 log 0 = 0
    nz = omega > 0
    log_q_z = np.sum(omega[nz] * np.log(omega[nz]))

    return float(log_p_pi + log_p_z + log_p_y - log_q_pi - log_q_z)


def kl_gap(like: Any, alpha: DirichletParams, state: VariationalState) -> float:
    """
    KL divergence between the variational distribution and the true posterior (log marginal minus lower bound)
    """
    return exact_log_marginal(like, alpha) - lower_bound(like, alpha, state)


def _gamma_batch(gamma_batch: Any, alpha: DirichletParams) -> np.ndarray:
    g = _positive_gamma(gamma_batch)
    if g.ndim != 2 or g.shape[0] < 1 or g.shape[1] != alpha.K:
        raise LdaganException(f"Expecting a non-empty batch of gamma vectors of length {alpha.K}, got shape {g.shape}", ResultCode.ERROR_SHAPE)
    return g


def alpha_objective(gamma_batch: Any, alpha: DirichletParams) -> float:
    """
    Alpha-dependent terms of the expected lower bound, the expectation over z' being the minibatch mean
    """
    g = _gamma_batch(gamma_batch, alpha)
    a = alpha.alpha
    data_term = np.mean(np.sum((a - 1.0) * expected_log_pi(g), axis=1))
    return float(log_gamma(alpha.total) - np.sum(log_gamma(a)) + data_term)


def alpha_gradient(gamma_batch: Any, alpha: DirichletParams) -> np.ndarray:
    """
    Exact gradient of alpha_objective: psi(sum(alpha)) - psi(alpha_k) + mean_batch[psi(gamma_k) - psi(sum(gamma))]
    """
    g = _gamma_batch(gamma_batch, alpha)
    return digamma(alpha.total) - digamma(alpha.alpha) + np.mean(expected_log_pi(g), axis=0)


def alpha_step(alpha: DirichletParams, grad: Any, lr: float) -> DirichletParams:
    """
    One gradient ascent step on alpha, clamped to the alpha floor
    """
    g = np.asarray(grad, dtype=np.float64)
    if g.shape != alpha.alpha.shape:
        raise LdaganException(f"Gradient shape {g.shape} doesn't match alpha shape {alpha.alpha.shape}", ResultCode.ERROR_SHAPE)
    if not np.all(np.isfinite(g)):
        raise LdaganException(f"Non-finite alpha gradient: {grad}", ResultCode.ERROR_DIVERGENCE)
    return DirichletParams(np.maximum(alpha.alpha + lr * g, alpha.alpha_min), alpha.alpha_min)
