import json

import numpy as np

from ldagan.errors import LdaganException, ResultCode
from ldagan.neural import (
    IDENTITY,
    RELU,
    SIGMOID,
    AdamState,
    GradientBuffer,
    InitScheme,
    LayerParams,
    MlpParams,
    adam_update,
    init_mlp,
    mlp_backward,
    mlp_forward
)
from ldagan.oracle import numeric_gradient, relative_error
from ldagan.special_math import RngStream
from tests.utils import TestUtils


class TestNeural(TestUtils):
    def test_zero_init(self):
        net = init_mlp([3, 4, 1], [RELU, SIGMOID], InitScheme("zero"), RngStream(0))
        assert np.array_equal(mlp_forward(net, [1.0, -2.0, 3.0]).output, [[0.5]])
        net = init_mlp([3, 2], [IDENTITY], InitScheme("zero"), RngStream(0))
        assert np.array_equal(mlp_forward(net, np.ones((5, 3))).output, np.zeros((5, 2)))

    def test_init_determinism(self):
        a = init_mlp([4, 8, 2], [RELU, IDENTITY], InitScheme(), RngStream(9))
        b = init_mlp([4, 8, 2], [RELU, IDENTITY], InitScheme(), RngStream(9))
        self.assert_same_arrays(a.arrays(), b.arrays())

    def test_init_schemes(self):
        net = init_mlp([10, 20], [IDENTITY], InitScheme("xavier"), RngStream(1))
        limit = np.sqrt(6.0 / 30.0)
        assert np.all(np.abs(net.layers[0].weights) <= limit)
        assert np.array_equal(net.layers[0].bias, np.zeros(20))

        net = init_mlp([100, 100], [IDENTITY], InitScheme("gaussian", 0.02), RngStream(1))
        assert abs(np.std(net.layers[0].weights) - 0.02) <= 0.001

        # Random biases
        net = init_mlp([100, 400], [IDENTITY], InitScheme("gaussian", 0.02, bias_sigma=0.5), RngStream(1))
        assert abs(np.std(net.layers[0].bias) - 0.5) <= 0.1

        # Zero biases don't consume the stream
        rng = RngStream(1)
        InitScheme("xavier").draw_bias(20, rng)
        assert rng.state == RngStream(1).state

        try:
            init_mlp([2, 2], [IDENTITY], InitScheme("foo"), RngStream(1))
            raise AssertionError("Shouldn't get here")
        except LdaganException as e:
            assert e.rc == ResultCode.ERROR_PARAM_INVALID

    def test_identity_layer(self):
        net = MlpParams([LayerParams(np.eye(3), np.zeros(3), IDENTITY)])
        x = RngStream(0).normal((4, 3))
        assert np.array_equal(mlp_forward(net, x).output, x)

    def test_activations(self):
        net = MlpParams([LayerParams(np.eye(2), np.zeros(2), RELU)])
        assert np.array_equal(mlp_forward(net, [-1.0, 2.0]).output, [[0.0, 2.0]])

        net = MlpParams([LayerParams(np.eye(2), np.zeros(2), SIGMOID)])
        out = mlp_forward(net, 5.0 * RngStream(0).normal((100, 2))).output
        assert np.all(out > 0.0) and np.all(out < 1.0)

        # Stable for large arguments
        out = mlp_forward(net, [[-1000.0, 1000.0]]).output
        assert np.all(np.isfinite(out))
        assert out[0, 0] == 0.0 and out[0, 1] == 1.0

    def test_batch_forward(self):
        rng = RngStream(2)
        net = init_mlp([3, 5, 5, 2], [RELU, SIGMOID, IDENTITY], InitScheme(), rng)
        x = rng.normal((6, 3))
        batch = mlp_forward(net, x).output
        for i in range(6):
            assert np.allclose(batch[i], mlp_forward(net, x[i]).output[0], atol=1e-12, rtol=0)

    def test_zero_output_gradient(self):
        rng = RngStream(3)
        net = init_mlp([3, 4, 2], [RELU, IDENTITY], InitScheme(), rng)
        trace = mlp_forward(net, rng.normal((5, 3)))
        grads, x_grad = mlp_backward(net, trace, np.zeros((5, 2)))
        assert all(np.array_equal(g, np.zeros_like(g)) for g in grads.arrays())
        assert np.array_equal(x_grad, np.zeros((5, 3)))

    def test_relu_zero_subgradient(self):
        # Inactive ReLU units (pre-activation exactly 0) don't propagate gradients
        net = MlpParams([LayerParams(np.zeros((3, 2)), np.zeros(3), RELU), LayerParams(np.ones((1, 3)), np.zeros(1), IDENTITY)])
        trace = mlp_forward(net, [[1.0, 2.0]])
        grads, x_grad = mlp_backward(net, trace, np.ones((1, 1)))
        assert np.array_equal(grads.arrays()[0], np.zeros((3, 2)))
        assert np.array_equal(grads.arrays()[1], np.zeros(3))
        assert np.array_equal(x_grad, np.zeros((1, 2)))

    def test_finite_differences(self):
        rng = RngStream(4)
        for activations in [[RELU, SIGMOID], [SIGMOID, IDENTITY], [RELU, IDENTITY]]:
            net = init_mlp([3, 6, 2], activations, InitScheme(), rng)
            x = rng.normal((4, 3))
            r = rng.normal((4, 2))
            grads, x_grad = mlp_backward(net, mlp_forward(net, x), r)
            numeric = numeric_gradient(lambda: float(np.sum(mlp_forward(net, x).output * r)), net.arrays())
            assert relative_error(grads.arrays(), numeric) <= 1e-4

            # Input gradient too
            numeric = numeric_gradient(lambda: float(np.sum(mlp_forward(net, x).output * r)), [x])
            assert relative_error([x_grad], numeric) <= 1e-4

    def test_backward_errors(self):
        net = init_mlp([3, 2], [IDENTITY], InitScheme(), RngStream(0))
        trace = mlp_forward(net, np.zeros((2, 3)))
        try:
            mlp_backward(net, trace, np.zeros((3, 2)))
            raise AssertionError("Shouldn't get here")
        except LdaganException as e:
            assert e.rc == ResultCode.ERROR_SHAPE
        try:
            mlp_forward(net, np.zeros((2, 4)))
            raise AssertionError("Shouldn't get here")
        except LdaganException as e:
            assert e.rc == ResultCode.ERROR_SHAPE

    def test_params_errors(self):
        for build, rc in [
            (lambda: LayerParams(np.zeros((2, 3)), np.zeros(3)), ResultCode.ERROR_SHAPE),
            (lambda: LayerParams(np.zeros((2, 3)), np.zeros(2), "tanh"), ResultCode.ERROR_PARAM_INVALID),
            (lambda: LayerParams(np.full((2, 3), np.nan), np.zeros(2)), ResultCode.ERROR_DOMAIN),
            (lambda: MlpParams([LayerParams(np.zeros((2, 3)), np.zeros(2)), LayerParams(np.zeros((1, 3)), np.zeros(1))]), ResultCode.ERROR_SHAPE),
            (lambda: MlpParams([]), ResultCode.ERROR_SHAPE),
        ]:
            try:
                build()
                raise AssertionError("Shouldn't get here")
            except LdaganException as e:
                assert e.rc == rc

    def test_serialization(self):
        rng = RngStream(5)
        net = init_mlp([3, 4, 1], [RELU, SIGMOID], InitScheme(), rng)
        loaded = MlpParams.from_dict(json.loads(json.dumps(net.to_dict())))
        self.assert_same_arrays(net.arrays(), loaded.arrays())
        x = rng.normal((3, 3))
        assert np.array_equal(mlp_forward(net, x).output, mlp_forward(loaded, x).output)

    def test_adam_zero_gradient(self):
        net = init_mlp([2, 3], [IDENTITY], InitScheme(), RngStream(0))
        before = net.copy()
        state = AdamState.for_params(net, lr=0.1)
        adam_update(state, net, GradientBuffer.zeros_like(net))
        assert state.t == 1
        self.assert_same_arrays(net.arrays(), before.arrays())

    def test_adam_first_step(self):
        # First bias-corrected step has magnitude ~lr, along the gradient sign
        net = MlpParams([LayerParams(np.zeros((1, 2)), np.zeros(1))])
        grads = GradientBuffer([np.array([[0.5, -2.0]]), np.array([1.0])])
        adam_update(AdamState.for_params(net, lr=1e-3), net, grads)
        assert np.allclose(net.layers[0].weights, [[-1e-3, 1e-3]], atol=1e-10, rtol=0)
        assert np.allclose(net.layers[0].bias, [-1e-3], atol=1e-10, rtol=0)

        net = MlpParams([LayerParams(np.zeros((1, 2)), np.zeros(1))])
        adam_update(AdamState.for_params(net, lr=1e-3), net, grads, ascend=True)
        assert np.allclose(net.layers[0].weights, [[1e-3, -1e-3]], atol=1e-10, rtol=0)

    def test_adam_determinism(self):
        def run() -> MlpParams:
            rng = RngStream(6)
            net = init_mlp([2, 4, 1], [RELU, IDENTITY], InitScheme(), rng)
            state = AdamState.for_params(net, lr=1e-2)
            for _ in range(10):
                x = rng.normal((8, 2))
                grads, _ = mlp_backward(net, mlp_forward(net, x), np.ones((8, 1)))
                adam_update(state, net, grads)
            return net

        self.assert_same_arrays(run().arrays(), run().arrays())

    def test_adam_serialization(self):
        rng = RngStream(7)
        net = init_mlp([2, 3], [IDENTITY], InitScheme(), rng)
        state = AdamState.for_params(net, lr=1e-2)
        adam_update(state, net, GradientBuffer([rng.normal((3, 2)), rng.normal(3)]))
        loaded = AdamState.from_dict(json.loads(json.dumps(state.to_dict())), net)
        assert loaded.t == 1
        self.assert_same_arrays(loaded.m, state.m)
        self.assert_same_arrays(loaded.v, state.v)

    def test_adam_errors(self):
        net = init_mlp([2, 3], [IDENTITY], InitScheme(), RngStream(0))
        before = net.copy()
        state = AdamState.for_params(net)
        try:
            adam_update(state, net, GradientBuffer([np.full((3, 2), np.nan), np.zeros(3)]))
            raise AssertionError("Shouldn't get here")
        except LdaganException as e:
            assert e.rc == ResultCode.ERROR_DIVERGENCE

        # Nothing changed
        assert state.t == 0
        self.assert_same_arrays(net.arrays(), before.arrays())

        try:
            adam_update(state, net, GradientBuffer([np.zeros((2, 2)), np.zeros(3)]))
            raise AssertionError("Shouldn't get here")
        except LdaganException as e:
            assert e.rc == ResultCode.ERROR_SHAPE
