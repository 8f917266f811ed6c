"""
Self-check suites: E-step fidelity, evidence bounds, and finite-difference gradient checks.
"""

import logging
import time
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from ldagan.errors import LdaganException, ResultCode
from ldagan.gan import (
    NoiseBatch,
    discriminator_loss_and_grads,
    generator_loss_and_grads,
    init_bank,
    init_discriminator,
    sample_noise
)
from ldagan.inference import (
    DirichletParams,
    alpha_gradient,
    alpha_objective,
    e_step,
    exact_log_marginal,
    exact_mode_posterior,
    kl_gap,
    lower_bound,
    update_gamma,
    update_omega
)
from ldagan.neural import IDENTITY, RELU, SIGMOID, InitScheme, init_mlp, mlp_backward, mlp_forward
from ldagan.special_math import RngStream

LOGGER = logging.getLogger("Oracle")

# Random instances settings
INSTANCES = 1000
K_RANGE = (2, 10)
ALPHA_RANGE = (0.5, 10.0)
LIKELIHOOD_RANGE = (0.01, 0.99)

# Tolerances
BOUND_SLACK = 1e-9
SWEEP_SLACK = 1e-12
MIN_POSTERIOR_GAP = 0.05
MIN_ARGMAX_AGREEMENT = 0.99
FD_STEP = 1e-5
FD_NETS_TOL = 1e-4
FD_ALPHA_TOL = 1e-6

# Suite names
ESTEP = "estep"
GRADIENTS = "gradients"
BOUNDS = "bounds"
ORACLE_SUITES = [ESTEP, GRADIENTS, BOUNDS]


@dataclass
class OracleCheck:
    """
    Outcome of one oracle check
    """

    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""


@dataclass
class Instance:
    alpha: DirichletParams
    like: np.ndarray


def random_instances(rng: RngStream, n: int = INSTANCES) -> List[Instance]:
    out = []
    for _ in range(n):
        k = K_RANGE[0] + int(rng.integers(K_RANGE[1] - K_RANGE[0] + 1))
        out.append(Instance(DirichletParams(rng.uniform(*ALPHA_RANGE, k)), rng.uniform(*LIKELIHOOD_RANGE, k)))
    return out


def relative_error(analytic: List[np.ndarray], numeric: List[np.ndarray]) -> float:
    a = np.concatenate([np.ravel(x) for x in analytic])
    n = np.concatenate([np.ravel(x) for x in numeric])
    return float(np.linalg.norm(a - n) / max(np.linalg.norm(a), np.linalg.norm(n), 1e-12))


def numeric_gradient(f: Callable[[], float], arrays: List[np.ndarray], h: float = FD_STEP) -> List[np.ndarray]:
    """
    Central finite differences of f wrt every entry of the provided arrays (perturbed in place, then restored)
    """
    out = []
    for a in arrays:
        g = np.zeros_like(a)
        for idx in np.ndindex(a.shape):
            saved = a[idx]
            a[idx] = saved + h
            f_plus = f()
            a[idx] = saved - h
            f_minus = f()
            a[idx] = saved
            g[idx] = (f_plus - f_minus) / (2.0 * h)
        out.append(g)
    return out


def bounds_suite(rng: RngStream) -> List[OracleCheck]:
    worst_bound = -np.inf
    worst_sweep = np.inf
    worst_gap = np.inf
    for inst in random_instances(rng):
        bounds = []
        state, _ = e_step(inst.like, inst.alpha, on_sweep=lambda s: bounds.append(lower_bound(inst.like, inst.alpha, s)))
        bounds.append(lower_bound(inst.like, inst.alpha, state))
        worst_bound = max(worst_bound, max(bounds) - exact_log_marginal(inst.like, inst.alpha))
        worst_sweep = min(worst_sweep, float(np.min(np.diff(bounds))) if len(bounds) > 1 else 0.0)
        worst_gap = min(worst_gap, kl_gap(inst.like, inst.alpha, state))
    return [
        OracleCheck("lower bound <= log marginal", worst_bound <= BOUND_SLACK, worst_bound, BOUND_SLACK),
        OracleCheck("lower bound non-decreasing over sweeps", worst_sweep >= -SWEEP_SLACK, worst_sweep, -SWEEP_SLACK),
        OracleCheck("KL gap >= 0", worst_gap >= -BOUND_SLACK, worst_gap, -BOUND_SLACK),
    ]


def estep_suite(rng: RngStream) -> List[OracleCheck]:
    agree = total = 0
    converged = 0
    consistent = 0
    worst_fixed_point = 0.0
    instances = random_instances(rng)
    for inst in instances:
        state, report = e_step(inst.like, inst.alpha)
        converged += int(report.converged)
        consistent += int(np.array_equal(state.gamma, update_gamma(inst.alpha, state.omega)))
        worst_fixed_point = max(worst_fixed_point, float(np.max(np.abs(update_omega(inst.like, state.gamma) - state.omega))))

        post = np.sort(exact_mode_posterior(inst.like, inst.alpha))
        if post[-1] - post[-2] >= MIN_POSTERIOR_GAP:
            total += 1
            agree += int(np.argmax(state.omega) == np.argmax(exact_mode_posterior(inst.like, inst.alpha)))
    n = len(instances)
    agreement = agree / total if total else 1.0
    return [
        OracleCheck("E-step converged", converged == n, converged / n, 1.0),
        OracleCheck("gamma = alpha + omega", consistent == n, consistent / n, 1.0),
        OracleCheck("fixed point stable", worst_fixed_point <= 1e-9, worst_fixed_point, 1e-9),
        OracleCheck("argmax(omega) = argmax(posterior)", agreement >= MIN_ARGMAX_AGREEMENT, agreement, MIN_ARGMAX_AGREEMENT, f"{agree}/{total} instances"),
    ]


def gradients_suite(rng: RngStream) -> List[OracleCheck]:
    scheme = InitScheme()
    out = []

    # Plain network, all activations
    net = init_mlp([3, 4, 4, 2], [RELU, SIGMOID, IDENTITY], scheme, rng)
    x = rng.normal((5, 3))
    r = rng.normal((5, 2))
    grads, _ = mlp_backward(net, mlp_forward(net, x), r)
    err = relative_error(grads.arrays(), numeric_gradient(lambda: float(np.sum(mlp_forward(net, x).output * r)), net.arrays()))
    out.append(OracleCheck("network gradients", err <= FD_NETS_TOL, err, FD_NETS_TOL))

    # Discriminator objective
    disc = init_discriminator([6, 6], scheme, rng)
    reals = rng.normal((7, 2))
    fakes = rng.normal((5, 2))
    _, grads = discriminator_loss_and_grads(disc, reals, fakes)
    err = relative_error(grads.arrays(), numeric_gradient(lambda: discriminator_loss_and_grads(disc, reals, fakes)[0], disc.arrays()))
    out.append(OracleCheck("discriminator gradients", err <= FD_NETS_TOL, err, FD_NETS_TOL))

    # Weighted generators objective, through D
    bank = init_bank(3, 4, 5, [3], scheme, rng)
    noise: NoiseBatch = sample_noise(6, 4, rng)
    omega = rng.random((6, 3))
    omega /= np.sum(omega, axis=1, keepdims=True)
    _, bank_grads = generator_loss_and_grads(bank, disc, noise, omega)
    analytic = [a for g in bank_grads.heads for a in g.arrays()] + bank_grads.trunk.arrays()
    err = relative_error(analytic, numeric_gradient(lambda: float(np.sum(generator_loss_and_grads(bank, disc, noise, omega)[0])), bank.arrays()))
    out.append(OracleCheck("generators gradients", err <= FD_NETS_TOL, err, FD_NETS_TOL))

    # Dirichlet parameters objective
    alpha_values = rng.uniform(*ALPHA_RANGE, 4)
    gamma = rng.uniform(*ALPHA_RANGE, (8, 4))
    analytic = alpha_gradient(gamma, DirichletParams(alpha_values))
    err = relative_error([analytic], numeric_gradient(lambda: alpha_objective(gamma, DirichletParams(alpha_values)), [alpha_values]))
    out.append(OracleCheck("alpha gradient", err <= FD_ALPHA_TOL, err, FD_ALPHA_TOL))
    return out


SUITES: Dict[str, Callable[[RngStream], List[OracleCheck]]] = {ESTEP: estep_suite, GRADIENTS: gradients_suite, BOUNDS: bounds_suite}


def run_suite(name: str, seed: int = 0) -> List[OracleCheck]:
    """
    Runs one of the oracle suites, with instances drawn from the seeded stream
    """
    if name not in SUITES:
        raise LdaganException(f"Unknown oracle suite: {name} (expected one of {', '.join(ORACLE_SUITES)})", ResultCode.ERROR_PARAM_INVALID)
    start = time.time()
    checks = SUITES[name](RngStream(seed))
    for c in checks:
        LOGGER.info(f"[{name}] {c.name}: {'PASS' if c.passed else 'FAIL'} (value={c.value}, threshold={c.threshold}) {c.detail}")
    LOGGER.debug(f"[{name}] suite ran in {time.time() - start:.2f}s")
    return checks
