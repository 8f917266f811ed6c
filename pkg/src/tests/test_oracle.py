import numpy as np

from ldagan.errors import LdaganException, ResultCode
from ldagan.oracle import BOUNDS, ESTEP, GRADIENTS, numeric_gradient, random_instances, relative_error, run_suite
from ldagan.special_math import RngStream
from tests.utils import TestUtils


class TestOracle(TestUtils):
    def test_instances(self):
        instances = random_instances(RngStream(0), 50)
        assert len(instances) == 50
        for inst in instances:
            assert 2 <= inst.alpha.K <= 10
            assert inst.like.shape == (inst.alpha.K,)
            assert np.all((inst.like >= 0.01) & (inst.like <= 0.99))
            assert np.all((inst.alpha.alpha >= 0.5) & (inst.alpha.alpha <= 10.0))

    def test_numeric_gradient(self):
        x = np.array([1.0, 2.0])
        g = numeric_gradient(lambda: float(x[0] ** 2 + 3.0 * x[1]), [x])
        assert np.allclose(g[0], [2.0, 3.0], atol=1e-8)

        # Arrays are restored
        assert x.tolist() == [1.0, 2.0]
        assert relative_error([np.array([1.0])], [np.array([1.0])]) == 0.0

    def test_suites(self):
        for name in [ESTEP, GRADIENTS, BOUNDS]:
            checks = run_suite(name)
            assert len(checks) > 0
            for c in checks:
                assert c.passed, f"{name}: {c.name} failed (value={c.value}, threshold={c.threshold})"
            self.check_logs(f"[{name}]")

    def test_unknown_suite(self):
        try:
            run_suite("foo")
            raise AssertionError("Shouldn't get here")
        except LdaganException as e:
            assert e.rc == ResultCode.ERROR_PARAM_INVALID
