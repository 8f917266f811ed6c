"""
Generators bank (untied first layers, shared trunk), discriminator, adversarial losses and fake batch samplers.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import numpy as np

from ldagan.errors import LdaganException, ResultCode
from ldagan.inference import EPS_D, DirichletParams
from ldagan.neural import (
    GAUSSIAN,
    IDENTITY,
    RELU,
    SIGMOID,
    GradientBuffer,
    InitScheme,
    LayerParams,
    MlpParams,
    MlpTrace,
    init_layer,
    init_mlp,
    layer_backward,
    layer_forward,
    mlp_backward,
    mlp_forward
)
from ldagan.special_math import RngStream, as_simplex, sample_categorical, sample_dirichlet

# Generated samples dimension
DATA_DIM = 2

# Variance of one Uniform[-1, 1] noise entry
NOISE_VARIANCE = 1.0 / 3.0


@dataclass
class NoiseBatch:
    """
    M noise rows z', each entry in [-1, 1]
    """

    values: np.ndarray

    def __post_init__(self):
        self.values = np.array(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] < 1:
            raise LdaganException(f"Noise batch must be a non-empty matrix, got shape {self.values.shape}", ResultCode.ERROR_SHAPE)
        if not np.all(np.abs(self.values) <= 1.0):
            raise LdaganException("Noise values must lie in [-1, 1]", ResultCode.ERROR_DOMAIN)

    @property
    def M(self) -> int:  # NOQA: N802
        return self.values.shape[0]

    @property
    def noise_dim(self) -> int:
        return self.values.shape[1]


def sample_noise(M: int, noise_dim: int, rng: RngStream) -> NoiseBatch:  # NOQA: N803
    return NoiseBatch(rng.uniform(-1.0, 1.0, (M, noise_dim)))


@dataclass
class FakeBatch:
    """
    Generated samples x' (M x 2), with the generator index used for each row and the noise rows it was fed with
    """

    samples: np.ndarray
    mode_ids: np.ndarray
    noise: NoiseBatch

    @property
    def M(self) -> int:  # NOQA: N802
        return self.samples.shape[0]


@dataclass
class BankGradients:
    """
    Gradients for a generators bank: one buffer per head, one for the shared trunk
    """

    heads: List[GradientBuffer]
    trunk: GradientBuffer


@dataclass
class GeneratorBank:
    """
    K generators sharing all their parameters but the first layer:
    G_k(z) = trunk(relu(W_k.z + b_k))
    """

    heads: List[LayerParams]
    trunk: MlpParams

    def __post_init__(self):
        if len(self.heads) < 1:
            raise LdaganException("A generators bank needs at least one head", ResultCode.ERROR_SHAPE)
        for k, head in enumerate(self.heads):
            if head.out_dim != self.trunk.in_dim or head.in_dim != self.heads[0].in_dim:
                raise LdaganException(f"Head {k} shape {head.weights.shape} doesn't match the bank layout", ResultCode.ERROR_SHAPE)
        if self.trunk.out_dim != DATA_DIM or self.trunk.layers[-1].activation != IDENTITY:
            raise LdaganException(f"Generators trunk must end with a linear {DATA_DIM}D output", ResultCode.ERROR_SHAPE)

    @property
    def K(self) -> int:  # NOQA: N802
        return len(self.heads)

    @property
    def noise_dim(self) -> int:
        return self.heads[0].in_dim

    def arrays(self) -> List[np.ndarray]:
        return [a for h in self.heads for a in h.arrays()] + self.trunk.arrays()

    def copy(self) -> "GeneratorBank":
        return GeneratorBank([h.copy() for h in self.heads], self.trunk.copy())

    def to_dict(self) -> Dict[str, Any]:
        return {"heads": [h.to_dict() for h in self.heads], "trunk": self.trunk.to_dict()}

    @staticmethod
    def from_dict(model: Dict[str, Any]) -> "GeneratorBank":
        return GeneratorBank([LayerParams.from_dict(h) for h in model["heads"]], MlpParams.from_dict(model["trunk"]))


@dataclass
class DiscriminatorNet:
    """
    Discriminator D(x; phi): 2D input, sigmoid probability output
    """

    net: MlpParams

    def __post_init__(self):
        if self.net.in_dim != DATA_DIM or self.net.out_dim != 1 or self.net.layers[-1].activation != SIGMOID:
            raise LdaganException(f"Discriminator must map {DATA_DIM}D inputs to one sigmoid output", ResultCode.ERROR_SHAPE)

    def arrays(self) -> List[np.ndarray]:
        return self.net.arrays()

    def copy(self) -> "DiscriminatorNet":
        return DiscriminatorNet(self.net.copy())

    def to_dict(self) -> Dict[str, Any]:
        return self.net.to_dict()

    @staticmethod
    def from_dict(model: Dict[str, Any]) -> "DiscriminatorNet":
        return DiscriminatorNet(MlpParams.from_dict(model))


def head_init_scheme(noise_dim: int, preact_std: float, bias_sigma: float) -> InitScheme:
    """
    Gaussian scheme for the untied heads, with weights scaled so that W_k.z has preact_std standard deviation on uniform noise
    """
    if noise_dim < 1 or preact_std <= 0 or bias_sigma < 0:
        raise LdaganException(f"Invalid heads init settings (noise_dim={noise_dim}, preact_std={preact_std}, bias_sigma={bias_sigma})", ResultCode.ERROR_PARAM_INVALID)
    return InitScheme(GAUSSIAN, preact_std / np.sqrt(noise_dim * NOISE_VARIANCE), bias_sigma)


def init_bank(
    K: int, noise_dim: int, head_width: int, trunk_hidden: List[int], scheme: InitScheme, rng: RngStream, head_scheme: InitScheme = None  # NOQA: N803
) -> GeneratorBank:
    """
    Initializes K heads (noise_dim -> head_width, ReLU) in order, then the shared trunk (head_width -> trunk_hidden... -> 2).
    Heads use head_scheme if provided, scheme otherwise.
    """
    if K < 1:
        raise LdaganException(f"Invalid generators count: {K}", ResultCode.ERROR_PARAM_INVALID)
    heads = [init_layer(noise_dim, head_width, RELU, head_scheme or scheme, rng) for _ in range(K)]
    dims = [head_width] + list(trunk_hidden) + [DATA_DIM]
    trunk = init_mlp(dims, [RELU] * len(trunk_hidden) + [IDENTITY], scheme, rng)
    return GeneratorBank(heads, trunk)


def init_discriminator(hidden: List[int], scheme: InitScheme, rng: RngStream) -> DiscriminatorNet:
    dims = [DATA_DIM] + list(hidden) + [1]
    return DiscriminatorNet(init_mlp(dims, [RELU] * len(hidden) + [SIGMOID], scheme, rng))


def _check_noise(bank: GeneratorBank, z: Any) -> np.ndarray:
    values = np.array(z, dtype=np.float64)
    if values.ndim == 1:
        values = values.reshape(1, -1)
    if values.ndim != 2 or values.shape[1] != bank.noise_dim:
        raise LdaganException(f"Noise shape {np.shape(z)} doesn't match bank noise dimension {bank.noise_dim}", ResultCode.ERROR_SHAPE)
    if not np.all(np.abs(values) <= 1.0):
        raise LdaganException("Noise values must lie in [-1, 1]", ResultCode.ERROR_DOMAIN)
    return values


def generate_batch(bank: GeneratorBank, mode_ids: Any, z: Any) -> np.ndarray:
    """
    Row m of the output is G_{mode_ids[m]}(z[m])
    """
    noise = _check_noise(bank, z)
    ids = np.asarray(mode_ids, dtype=np.int64).reshape(-1)
    if len(ids) != noise.shape[0]:
        raise LdaganException(f"Mode ids count ({len(ids)}) doesn't match noise rows ({noise.shape[0]})", ResultCode.ERROR_SHAPE)
    if np.any(ids < 0) or np.any(ids >= bank.K):
        raise LdaganException(f"Generator index out of range [0, {bank.K})", ResultCode.ERROR_PARAM_INVALID)

    # Untied layer, grouped by generator
    h = np.zeros((noise.shape[0], bank.trunk.in_dim))
    for k in np.unique(ids):
        rows = ids == k
        _, h[rows] = layer_forward(bank.heads[k], noise[rows])
    return mlp_forward(bank.trunk, h).output


def generate(bank: GeneratorBank, k: int, z: Any) -> np.ndarray:
    """
    Generates one 2D sample x = G_k(z)
    """
    return generate_batch(bank, [k], z)[0]


def _disc_forward(d: DiscriminatorNet, x: Any) -> (Any, np.ndarray, np.ndarray):
    # Returns the trace, the clamped probabilities, and the mask of rows where the clamp is inactive
    trace = mlp_forward(d.net, x)
    raw = trace.output[:, 0]
    probs = np.clip(raw, EPS_D, 1.0 - EPS_D)
    return trace, probs, (probs == raw).astype(np.float64)


def discriminate(d: DiscriminatorNet, x: Any) -> Any:
    """
    Probability that x (one 2D sample, or a batch) is real, clamped to [EPS_D, 1 - EPS_D]
    """
    _, probs, _ = _disc_forward(d, x)
    return float(probs[0]) if np.ndim(x) == 1 else probs


def discriminator_loss_and_grads(d: DiscriminatorNet, real: Any, fake: Any) -> (float, GradientBuffer):
    """
    Discriminator objective mean(log D(real)) + mean(log(1 - D(fake))), with its gradient wrt phi (for ascent)
    """
    x_real = np.array(real, dtype=np.float64)
    x_fake = np.array(fake.samples if isinstance(fake, FakeBatch) else fake, dtype=np.float64)
    if x_real.ndim != 2 or x_fake.ndim != 2 or len(x_real) == 0 or len(x_fake) == 0:
        raise LdaganException("Discriminator step needs non-empty real and fake batches", ResultCode.ERROR_SHAPE)
    n_real, n_fake = len(x_real), len(x_fake)

    # Single pass on stacked real + fake rows
    trace, probs, mask = _disc_forward(d, np.concatenate([x_real, x_fake]))
    p_real, p_fake = probs[:n_real], probs[n_real:]
    loss = float(np.mean(np.log(p_real)) + np.mean(np.log(1.0 - p_fake)))

    out_grad = np.concatenate([1.0 / (n_real * p_real), -1.0 / (n_fake * (1.0 - p_fake))]) * mask
    grads, _ = mlp_backward(d.net, trace, out_grad.reshape(-1, 1))
    return loss, grads


@dataclass
class GeneratorsPass:
    """
    Forward pass of all generators on the same noise rows, then through the discriminator (rows stacked k-major)
    """

    noise: np.ndarray
    heads: List[Tuple[np.ndarray, np.ndarray]]
    trunk: MlpTrace
    disc: MlpTrace
    probs: np.ndarray
    mask: np.ndarray

    @property
    def likelihood(self) -> np.ndarray:
        # M x K matrix of D(G_k(z_m))
        return self.probs.reshape(len(self.heads), -1).T


def generators_forward(bank: GeneratorBank, d: DiscriminatorNet, noise: NoiseBatch) -> GeneratorsPass:
    z = _check_noise(bank, noise.values)
    heads = [layer_forward(head, z) for head in bank.heads]
    trunk_trace = mlp_forward(bank.trunk, np.concatenate([post for _, post in heads]))
    disc_trace, probs, mask = _disc_forward(d, trunk_trace.output)
    return GeneratorsPass(z, heads, trunk_trace, disc_trace, probs, mask)


def generator_loss_and_grads(
    bank: GeneratorBank, d: DiscriminatorNet, noise: NoiseBatch, weights: Any, fwd: GeneratorsPass = None
) -> (np.ndarray, BankGradients):
    """
    Weighted non-saturating generators objective: for each k, loss_k = mean_m(omega[m, k] log D(G_k(z_m))).
    Head k gradient comes from loss_k only; trunk gradient is summed over all k. Discriminator is left untouched.
    A forward pass already computed on the same bank, discriminator and noise may be reused through fwd.
    """
    fwd = generators_forward(bank, d, noise) if fwd is None else fwd
    M, K = fwd.noise.shape[0], bank.K  # NOQA: N806
    omega = as_simplex(weights, "omega")
    if omega.shape != (M, K):
        raise LdaganException(f"Weights shape {omega.shape} doesn't match noise rows x generators ({M}, {K})", ResultCode.ERROR_SHAPE)

    w = omega.T.reshape(-1)
    losses = np.sum((w * np.log(fwd.probs)).reshape(K, M), axis=1) / M

    # Back through D (inputs only), trunk, then each head
    _, x_grad = mlp_backward(d.net, fwd.disc, (w * fwd.mask / (M * fwd.probs)).reshape(-1, 1))
    trunk_grads, h_grad = mlp_backward(bank.trunk, fwd.trunk, x_grad)
    head_grads = []
    for k, (head, (pre, post)) in enumerate(zip(bank.heads, fwd.heads)):
        g, _ = layer_backward(head, fwd.noise, pre, post, h_grad[k * M : (k + 1) * M])
        head_grads.append(GradientBuffer(g))
    return losses, BankGradients(head_grads, trunk_grads)


def ancestral_sample_fakes(bank: GeneratorBank, alpha: DirichletParams, M: int, rng: RngStream) -> FakeBatch:  # NOQA: N803
    """
    Per row: pi ~ Dir(alpha), k ~ Mult(pi), z' ~ U[-1, 1], x' = G_k(z').
    Draw order: all pi rows, then all k, then all noise rows.
    """
    if M < 1:
        raise LdaganException(f"Invalid fake samples count: {M}", ResultCode.ERROR_PARAM_INVALID)
    if alpha.K != bank.K:
        raise LdaganException(f"Dirichlet parameters length ({alpha.K}) doesn't match generators count ({bank.K})", ResultCode.ERROR_SHAPE)
    pi = sample_dirichlet(alpha, rng, size=M)
    ids = sample_categorical(pi, rng)
    noise = sample_noise(M, bank.noise_dim, rng)
    return FakeBatch(generate_batch(bank, ids, noise.values), ids, noise)


def stratified_sample_fakes(bank: GeneratorBank, per_gen: int, rng: RngStream) -> FakeBatch:
    """
    Exactly per_gen samples from each generator (rows grouped by generator index)
    """
    if per_gen < 1:
        raise LdaganException(f"Invalid per-generator samples count: {per_gen}", ResultCode.ERROR_PARAM_INVALID)
    return balanced_sample_fakes(bank, bank.K * per_gen, rng)


def balanced_sample_fakes(bank: GeneratorBank, M: int, rng: RngStream) -> FakeBatch:  # NOQA: N803
    """
    M samples spread as evenly as possible over the generators (counts differ by at most one, rows grouped by generator index)
    """
    if M < 1:
        raise LdaganException(f"Invalid fake samples count: {M}", ResultCode.ERROR_PARAM_INVALID)
    ids = np.sort(np.arange(M, dtype=np.int64) % bank.K)
    noise = sample_noise(M, bank.noise_dim, rng)
    return FakeBatch(generate_batch(bank, ids, noise.values), ids, noise)


def likelihood_matrix(bank: GeneratorBank, d: DiscriminatorNet, noise: NoiseBatch) -> np.ndarray:
    """
    M x K matrix of D(G_k(z_m)) values
    """
    return generators_forward(bank, d, noise).likelihood


def marginal_fake_probability(bank: GeneratorBank, d: DiscriminatorNet, alpha: DirichletParams, noise: NoiseBatch) -> np.ndarray:
    """
    Per noise row: sum_k (alpha_k / alpha_0) D(G_k(z')), i.e. p(y=1 | z') with pi integrated out
    """
    if alpha.K != bank.K:
        raise LdaganException(f"Dirichlet parameters length ({alpha.K}) doesn't match generators count ({bank.K})", ResultCode.ERROR_SHAPE)
    return likelihood_matrix(bank, d, noise) @ (alpha.alpha / alpha.total)
