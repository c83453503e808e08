import numpy as np
import pytest

from deig.config.constants import OP_TOLERANCE
from deig.core.tensor import Parameter, corrupt_gradient, ops
from deig.core.tensor.gradcheck import (
    check_op,
    check_parameters,
    numerical_gradient,
    op_cases,
    relative_error,
    run_op_suite,
)


@pytest.mark.unit
@pytest.mark.kernel
class TestFiniteDifferences:
    def test_numerical_gradient_of_quadratic(self):
        x = np.array([1.0, -2.0, 0.5])

        grad = numerical_gradient(lambda: float(np.sum(x**2)), x)

        np.testing.assert_allclose(grad, 2.0 * x, atol=1e-8)

    def test_numerical_gradient_restores_the_array(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        before = x.copy()

        numerical_gradient(lambda: float(np.sum(x**3)), x, indices=[(0, 1), (1, 0)])

        np.testing.assert_array_equal(x, before)

    def test_relative_error_uses_unit_floor(self):
        error = relative_error(np.array([1e-9, 100.0]), np.array([2e-9, 101.0]))

        np.testing.assert_allclose(error, [1e-9, 1.0 / 101.0])

    def test_error_is_absolute_below_unit_magnitude(self):
        analytic = np.array([1e-3, 0.5, 3.0])
        numeric = analytic + 1e-7

        error = relative_error(analytic, numeric)

        np.testing.assert_allclose(error[:2], [1e-7, 1e-7], rtol=1e-6)
        assert error[2] == pytest.approx(1e-7 / (3.0 + 1e-7))


@pytest.mark.unit
@pytest.mark.kernel
class TestOpSuite:
    def test_every_op_has_three_cases(self, rng):
        cases = op_cases(rng)

        assert {"matmul", "masked_softmax", "layer_norm", "take", "fourier_features"} <= set(cases)
        assert all(len(entries) == 3 for entries in cases.values())

    def test_op_suite_passes(self, rng):
        results = run_op_suite(rng)

        failing = [(r.name, r.max_rel_error) for r in results if not r.passed]
        assert failing == []
        assert all(r.tolerance == OP_TOLERANCE for r in results)

    @pytest.mark.parametrize("op", ["mul", "masked_softmax", "layer_norm", "take"])
    def test_corrupted_backward_is_detected(self, rng, op):
        # Arrange
        fn, inputs = op_cases(rng)[op][0]

        # Act
        with corrupt_gradient(op, 1.01):
            result = check_op(op, fn, inputs, rng)

        # Assert
        assert not result.passed
        assert result.max_rel_error > OP_TOLERANCE

    def test_corruption_is_scoped_to_the_block(self, rng):
        fn, inputs = op_cases(rng)["mul"][0]
        with corrupt_gradient("mul", 2.0):
            pass

        assert check_op("mul", fn, inputs, rng).passed

    def test_check_parameters_reports_each_parameter(self, rng):
        w = Parameter(rng.normal(size=(3, 2)), name="w")
        b = Parameter(rng.normal(size=2), name="b")
        x = rng.normal(size=(4, 3))

        result, per_param = check_parameters(
            "affine", lambda: ops.sum(ops.tanh(ops.add(ops.matmul(x, w), b))), [("w", w), ("b", b)], rng
        )

        assert result.passed
        assert set(per_param) == {"w", "b"}
        assert result.checked == 4 + 2
