"""
Scalar special functions and seedable random samplers for the Dirichlet-multinomial machinery.

All functions accept scalars or numpy arrays (element-wise evaluation), and return a float for scalar inputs.
"""

import math
from typing import Any, Dict, Union

import numpy as np

from ldagan.errors import LdaganException, ResultCode

# A probability vector (or a stack of them, one per row)
SimplexVector = np.ndarray

# Accepted distance to 1 for simplex sums
SIMPLEX_TOL = 1e-12

# Arguments below this value are shifted up by recurrence before the asymptotic expansions
DIGAMMA_SHIFT = 6
LOG_GAMMA_SHIFT = 8

# Asymptotic expansion coefficients (Bernoulli numbers terms), for increasing even powers of 1/x
DIGAMMA_SERIES = (-1.0 / 12.0, 1.0 / 120.0, -1.0 / 252.0, 1.0 / 240.0, -1.0 / 132.0, 691.0 / 32760.0)
STIRLING_SERIES = (1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360360.0)

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

Real = Union[float, np.ndarray]


def _positive_args(name: str, x: Any) -> np.ndarray:
    # Float64 copy of the input, verified to be finite and strictly positive
    values = np.array(x, dtype=np.float64)
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise LdaganException(f"{name} domain error: expected finite positive arguments, got {x}", ResultCode.ERROR_DOMAIN)
    return values


def _out(x: Any, values: np.ndarray) -> Real:
    return float(values) if np.ndim(x) == 0 else values


def digamma(x: Real) -> Real:
    """
    Digamma function: derivative of log(Gamma(x)), for x > 0
    """
    values = _positive_args("digamma", x)

    # Upward recurrence: psi(x) = psi(x + n) - sum(1 / (x + i), i < n)
    small = values < DIGAMMA_SHIFT
    acc = np.zeros_like(values)
    shifted = values.copy()
    for _ in range(DIGAMMA_SHIFT):
        acc -= np.where(small, 1.0 / shifted, 0.0)
        shifted = np.where(small, shifted + 1.0, shifted)

    # Asymptotic expansion, through x^-12
    inv2 = 1.0 / (shifted * shifted)
    series = np.zeros_like(values)
    for c in reversed(DIGAMMA_SERIES):
        series = (series + c) * inv2
    return _out(x, acc + np.log(shifted) - 0.5 / shifted + series)


def log_gamma(x: Real) -> Real:
    """
    Natural logarithm of the Gamma function, for x > 0
    """
    values = _positive_args("log_gamma", x)

    # Upward recurrence: lnG(x) = lnG(x + n) - ln(x (x + 1) ... (x + n - 1))
    small = values < LOG_GAMMA_SHIFT
    prod = np.ones_like(values)
    for i in range(LOG_GAMMA_SHIFT):
        prod *= np.where(small, values + i, 1.0)
    shifted = np.where(small, values + LOG_GAMMA_SHIFT, values)

    # Stirling series, through x^-11
    inv = 1.0 / shifted
    inv2 = inv * inv
    series = np.zeros_like(values)
    for c in reversed(STIRLING_SERIES):
        series = series * inv2 + c
    out = (shifted - 0.5) * np.log(shifted) - shifted + HALF_LOG_2PI + series * inv - np.log(prod)
    return _out(x, out)


def normalize_log_weights(logw: Any) -> SimplexVector:
    """
    Stable normalization of log weights to the simplex (along the last axis):
    exp(logw_k - logsumexp(logw)); invariant under adding a constant to all entries
    """
    values = np.array(logw, dtype=np.float64)
    if np.any(np.isnan(values)) or np.any(values == np.inf):
        raise LdaganException(f"Invalid log weights (NaN or +inf): {logw}", ResultCode.ERROR_DOMAIN)
    top = np.max(values, axis=-1, keepdims=True)
    if np.any(top == -np.inf):
        raise LdaganException("Can't normalize log weights: all entries are -inf", ResultCode.ERROR_DOMAIN)
    weights = np.exp(values - top)
    return weights / np.sum(weights, axis=-1, keepdims=True)


def as_simplex(p: Any, name: str = "p") -> SimplexVector:
    """
    Verifies that p is a simplex vector (or a stack of simplex rows), and returns it as a float64 array
    """
    values = np.array(p, dtype=np.float64)
    if values.ndim == 0 or values.shape[-1] < 1:
        raise LdaganException(f"Invalid simplex vector {name}: {p}", ResultCode.ERROR_SHAPE)
    if not np.all(np.isfinite(values)) or np.any(values < 0) or np.any(np.abs(np.sum(values, axis=-1) - 1.0) > SIMPLEX_TOL):
        raise LdaganException(f"Invalid simplex vector {name} (expecting non-negative entries summing to 1): {p}", ResultCode.ERROR_DOMAIN)
    return values


class RngStream:
    """
    Seedable random stream (PCG64 bit generator).

    Two streams built with the same seed produce identical draw sequences.
    A stream is owned by a single writer; it can be serialized (see state) to be resumed later.

    Constructor arguments:
        seed:
            64-bit integer seed (negative values are wrapped modulo 2^64)
        keys:
            optional extra integers, to derive independent sub-streams from the same seed
    """

    def __init__(self, seed: int, *keys: int):
        self.seed = int(seed)
        self.keys = tuple(int(k) for k in keys)
        entropy = [self.seed % (1 << 64)] + [k % (1 << 64) for k in self.keys]
        self.__bit_generator = np.random.PCG64(np.random.SeedSequence(entropy))
        self.generator = np.random.Generator(self.__bit_generator)

    @property
    def state(self) -> Dict[str, Any]:
        """
        JSON-friendly snapshot of the stream state
        """
        s = self.__bit_generator.state
        return {"seed": self.seed, "keys": list(self.keys), "state": int(s["state"]["state"]), "inc": int(s["state"]["inc"]), "has_uint32": int(s["has_uint32"]), "uinteger": int(s["uinteger"])}

    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "RngStream":
        out = cls(state["seed"], *state["keys"])
        out.__bit_generator.state = {
            "bit_generator": "PCG64",
            "state": {"state": int(state["state"]), "inc": int(state["inc"])},
            "has_uint32": int(state["has_uint32"]),
            "uinteger": int(state["uinteger"]),
        }
        return out

    def uniform(self, low: float, high: float, size: Any = None) -> np.ndarray:
        return self.generator.uniform(low, high, size)

    def random(self, size: Any = None) -> np.ndarray:
        return self.generator.random(size)

    def normal(self, size: Any = None) -> np.ndarray:
        return self.generator.standard_normal(size)

    def standard_gamma(self, shape: Any) -> np.ndarray:
        return self.generator.standard_gamma(shape)

    def integers(self, high: int, size: Any = None) -> np.ndarray:
        return self.generator.integers(0, high, size)


def sample_dirichlet(alpha: Any, rng: RngStream, size: int = None) -> SimplexVector:
    """
    Draws pi ~ Dir(alpha) (or size such rows), by normalizing independent Gamma(alpha_k, 1) draws.

    Draw order (per row): K standard gamma draws, then K uniforms.
    Shapes below 1 are boosted: G(a) = G(a + 1) * U^(1/a), evaluated in log domain so that tiny draws don't underflow.
    """
    a = _positive_args("Dirichlet", getattr(alpha, "alpha", alpha))
    if a.ndim != 1:
        raise LdaganException(f"Dirichlet parameters must be a vector, got shape {a.shape}", ResultCode.ERROR_SHAPE)
    shape = a.shape if size is None else (size,) + a.shape
    boosted = a < 1.0
    g = rng.standard_gamma(np.broadcast_to(np.where(boosted, a + 1.0, a), shape))
    u = rng.random(shape)
    with np.errstate(divide="ignore"):
        log_g = np.log(g) + np.where(boosted, np.log(u) / a, 0.0)
    return normalize_log_weights(log_g)


def sample_categorical(p: Any, rng: RngStream, size: int = None) -> Union[int, np.ndarray]:
    """
    Draws a mode index k with probability p_k (0-based).
    p may also be a stack of simplex rows, in which case one index is drawn per row.
    """
    probs = as_simplex(p)
    if probs.ndim == 1 and size is None:
        u = rng.random()
    else:
        u = rng.random(size if probs.ndim == 1 else probs.shape[:-1])
    cdf = np.cumsum(probs, axis=-1)
    idx = np.sum(cdf <= np.expand_dims(u, -1), axis=-1)

    # Zero-mass tail entries can't be reached, even with rounding on the cdf
    last_valid = probs.shape[-1] - 1 - np.argmax(np.flip(probs, axis=-1) > 0, axis=-1)
    idx = np.minimum(idx, last_valid)
    return int(idx) if np.ndim(idx) == 0 else idx.astype(np.int64)
