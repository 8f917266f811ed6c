"""
Minimal dense feed-forward networks (float64), with exact reverse-mode gradients and the Adam optimizer.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np

from ldagan.errors import LdaganException, ResultCode
from ldagan.special_math import RngStream

# Supported activation tags
RELU = "relu"
SIGMOID = "sigmoid"
IDENTITY = "identity"
ACTIVATIONS = [RELU, SIGMOID, IDENTITY]

# Supported init schemes
XAVIER = "xavier"
GAUSSIAN = "gaussian"
ZERO = "zero"


def sigmoid(x: np.ndarray) -> np.ndarray:
    # Stable branch form: exp is only evaluated on non-positive arguments
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _activate(tag: str, pre: np.ndarray) -> np.ndarray:
    if tag == RELU:
        return np.maximum(pre, 0.0)
    if tag == SIGMOID:
        return sigmoid(pre)
    return pre


def _activation_grad(tag: str, pre: np.ndarray, post: np.ndarray) -> np.ndarray:
    # ReLU derivative at exactly 0 is 0
    if tag == RELU:
        return (pre > 0).astype(np.float64)
    if tag == SIGMOID:
        return post * (1.0 - post)
    return np.ones_like(pre)


@dataclass
class LayerParams:
    """
    Dense layer: activation(W.x + b), with W of shape (out_dim, in_dim)
    """

    weights: np.ndarray
    bias: np.ndarray
    activation: str = IDENTITY

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64)
        self.bias = np.array(self.bias, dtype=np.float64)
        if self.activation not in ACTIVATIONS:
            raise LdaganException(f"Unknown activation: {self.activation}", ResultCode.ERROR_PARAM_INVALID)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise LdaganException(f"Inconsistent layer shapes: weights {self.weights.shape}, bias {self.bias.shape}", ResultCode.ERROR_SHAPE)
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise LdaganException("Non-finite layer parameters", ResultCode.ERROR_DOMAIN)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    def arrays(self) -> List[np.ndarray]:
        return [self.weights, self.bias]

    def copy(self) -> "LayerParams":
        return LayerParams(self.weights.copy(), self.bias.copy(), self.activation)

    def to_dict(self) -> Dict[str, Any]:
        return {"activation": self.activation, "weights": self.weights.tolist(), "bias": self.bias.tolist()}

    @staticmethod
    def from_dict(model: Dict[str, Any]) -> "LayerParams":
        return LayerParams(np.array(model["weights"], dtype=np.float64).reshape(len(model["weights"]), -1), model["bias"], model["activation"])


@dataclass
class MlpParams:
    """
    Ordered chain of dense layers
    """

    layers: List[LayerParams]

    def __post_init__(self):
        if len(self.layers) == 0:
            raise LdaganException("A network needs at least one layer", ResultCode.ERROR_SHAPE)
        for i, (a, b) in enumerate(zip(self.layers[:-1], self.layers[1:])):
            if a.out_dim != b.in_dim:
                raise LdaganException(f"Layers {i} and {i + 1} don't chain: {a.out_dim} outputs vs {b.in_dim} inputs", ResultCode.ERROR_SHAPE)

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def arrays(self) -> List[np.ndarray]:
        return [a for layer in self.layers for a in layer.arrays()]

    def copy(self) -> "MlpParams":
        return MlpParams([layer.copy() for layer in self.layers])

    def to_dict(self) -> Dict[str, Any]:
        return {"layers": [layer.to_dict() for layer in self.layers]}

    @staticmethod
    def from_dict(model: Dict[str, Any]) -> "MlpParams":
        return MlpParams([LayerParams.from_dict(m) for m in model["layers"]])


@dataclass
class GradientBuffer:
    """
    Gradients mirroring the arrays of a parameters object (same order, same shapes)
    """

    grads: List[np.ndarray] = field(default_factory=list)

    @staticmethod
    def zeros_like(params: Any) -> "GradientBuffer":
        return GradientBuffer([np.zeros_like(a) for a in params.arrays()])

    def arrays(self) -> List[np.ndarray]:
        return self.grads

    def add(self, other: "GradientBuffer") -> "GradientBuffer":
        if [g.shape for g in self.grads] != [g.shape for g in other.grads]:
            raise LdaganException("Can't add gradient buffers with different shapes", ResultCode.ERROR_SHAPE)
        return GradientBuffer([a + b for a, b in zip(self.grads, other.grads)])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(g)) for g in self.grads)


@dataclass
class MlpTrace:
    """
    Forward pass record: input batch, and pre/post activation values of each layer
    """

    input: np.ndarray
    pre: List[np.ndarray]
    post: List[np.ndarray]

    @property
    def output(self) -> np.ndarray:
        return self.post[-1]


@dataclass
class InitScheme:
    """
    Weights initialization scheme; biases are zero, or drawn from Normal(0, bias_sigma) if bias_sigma > 0
    """

    name: str = XAVIER
    sigma: float = 0.02
    bias_sigma: float = 0.0

    def draw_bias(self, out_dim: int, rng: RngStream) -> np.ndarray:
        # No draw at all for zero biases (stream untouched)
        if self.name == ZERO or self.bias_sigma <= 0.0:
            return np.zeros(out_dim)
        return self.bias_sigma * rng.normal(out_dim)

    def draw(self, out_dim: int, in_dim: int, rng: RngStream) -> np.ndarray:
        if self.name == XAVIER:
            limit = np.sqrt(6.0 / (in_dim + out_dim))
            return rng.uniform(-limit, limit, (out_dim, in_dim))
        if self.name == GAUSSIAN:
            return self.sigma * rng.normal((out_dim, in_dim))
        if self.name == ZERO:
            return np.zeros((out_dim, in_dim))
        raise LdaganException(f"Unknown init scheme: {self.name}", ResultCode.ERROR_PARAM_INVALID)


def init_layer(in_dim: int, out_dim: int, activation: str, scheme: InitScheme, rng: RngStream) -> LayerParams:
    if in_dim < 1 or out_dim < 1:
        raise LdaganException(f"Invalid layer dimensions: {in_dim} -> {out_dim}", ResultCode.ERROR_PARAM_INVALID)
    return LayerParams(scheme.draw(out_dim, in_dim, rng), scheme.draw_bias(out_dim, rng), activation)


def init_mlp(dims: List[int], activations: List[str], scheme: InitScheme, rng: RngStream) -> MlpParams:
    """
    Builds a network with len(dims) - 1 layers; layer weights are drawn in order, from the provided stream
    """
    if len(dims) < 2 or len(activations) != len(dims) - 1:
        raise LdaganException(f"Invalid network dimensions: {dims} (activations: {activations})", ResultCode.ERROR_PARAM_INVALID)
    return MlpParams([init_layer(i, o, a, scheme, rng) for i, o, a in zip(dims[:-1], dims[1:], activations)])


def layer_forward(layer: LayerParams, x: np.ndarray) -> (np.ndarray, np.ndarray):
    pre = x @ layer.weights.T + layer.bias
    return pre, _activate(layer.activation, pre)


def layer_backward(layer: LayerParams, x: np.ndarray, pre: np.ndarray, post: np.ndarray, output_grad: np.ndarray) -> (List[np.ndarray], np.ndarray):
    delta = output_grad * _activation_grad(layer.activation, pre, post)
    return [delta.T @ x, np.sum(delta, axis=0)], delta @ layer.weights


def _as_batch(x: Any, in_dim: int) -> np.ndarray:
    values = np.array(x, dtype=np.float64)
    if values.ndim == 1:
        values = values.reshape(1, -1)
    if values.ndim != 2 or values.shape[1] != in_dim:
        raise LdaganException(f"Input shape {np.shape(x)} doesn't match network input dimension {in_dim}", ResultCode.ERROR_SHAPE)
    return values


def mlp_forward(params: MlpParams, x: Any) -> MlpTrace:
    """
    Forward pass on one input vector or a batch (one row per sample); the trace output is always a batch
    """
    h = _as_batch(x, params.in_dim)
    trace = MlpTrace(h, [], [])
    for layer in params.layers:
        pre, h = layer_forward(layer, h)
        trace.pre.append(pre)
        trace.post.append(h)
    return trace


def mlp_backward(params: MlpParams, trace: MlpTrace, output_grad: Any) -> (GradientBuffer, np.ndarray):
    """
    Reverse-mode pass for the scalar loss whose gradient wrt the trace output is output_grad.
    Parameter gradients are summed over the batch rows.
    """
    g = np.array(output_grad, dtype=np.float64)
    if g.shape != trace.output.shape or len(trace.pre) != len(params.layers):
        raise LdaganException(f"Output gradient shape {g.shape} doesn't match forward output {trace.output.shape}", ResultCode.ERROR_SHAPE)
    grads = []
    for i in reversed(range(len(params.layers))):
        x = trace.input if i == 0 else trace.post[i - 1]
        layer_grads, g = layer_backward(params.layers[i], x, trace.pre[i], trace.post[i], g)
        grads = layer_grads + grads
    return GradientBuffer(grads), g


@dataclass
class AdamState:
    """
    Adam optimizer state for one parameters object (moments mirror its arrays)
    """

    m: List[np.ndarray]
    v: List[np.ndarray]
    t: int = 0
    lr: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def for_params(params: Any, lr: float = 1e-4, beta1: float = 0.5, beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return AdamState([np.zeros_like(a) for a in params.arrays()], [np.zeros_like(a) for a in params.arrays()], 0, lr, beta1, beta2, eps)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "m": [a.tolist() for a in self.m],
            "v": [a.tolist() for a in self.v],
        }

    @staticmethod
    def from_dict(model: Dict[str, Any], params: Any) -> "AdamState":
        # Moments are reshaped against the params they belong to
        shapes = [a.shape for a in params.arrays()]
        if len(model["m"]) != len(shapes) or len(model["v"]) != len(shapes):
            raise LdaganException("Adam state doesn't match parameters layout", ResultCode.ERROR_MODEL_INVALID)
        m = [np.array(a, dtype=np.float64).reshape(s) for a, s in zip(model["m"], shapes)]
        v = [np.array(a, dtype=np.float64).reshape(s) for a, s in zip(model["v"], shapes)]
        return AdamState(m, v, int(model["t"]), float(model["lr"]), float(model["beta1"]), float(model["beta2"]), float(model["eps"]))


def adam_update(state: AdamState, params: Any, grads: GradientBuffer, ascend: bool = False) -> (Any, AdamState):
    """
    One bias-corrected Adam step, applied in place on params arrays (descent, or ascent if ascend is True)
    """
    arrays = params.arrays()
    if [a.shape for a in arrays] != [g.shape for g in grads.arrays()] or len(arrays) != len(state.m):
        raise LdaganException("Gradients don't match parameters layout", ResultCode.ERROR_SHAPE)
    if not grads.is_finite():
        raise LdaganException("Non-finite gradients", ResultCode.ERROR_DIVERGENCE)

    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    sign = 1.0 if ascend else -1.0
    for p, g, m, v in zip(arrays, grads.arrays(), state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        np.add(p, sign * state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps), out=p)
    return params, state
