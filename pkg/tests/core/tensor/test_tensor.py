import numpy as np
import pytest

from deig.core.commons.errors import ContractViolation
from deig.core.tensor import Parameter, Tensor, backward, is_grad_enabled, no_grad, ops


@pytest.mark.unit
@pytest.mark.kernel
class TestTape:
    def test_data_is_float64(self):
        assert Tensor([1, 2, 3]).data.dtype == np.float64

    def test_backward_of_simple_expression(self):
        # Arrange
        a = Tensor([1.0, 2.0, 3.0], requires_grad=True)
        b = Tensor([4.0, 5.0, 6.0], requires_grad=True)

        # Act
        backward(ops.sum(ops.mul(a, b)))

        # Assert
        np.testing.assert_array_equal(a.grad, b.data)
        np.testing.assert_array_equal(b.grad, a.data)

    def test_reused_node_accumulates(self):
        x = Tensor([3.0], requires_grad=True)
        y = ops.add(ops.mul(x, x), x)

        backward(ops.sum(y))

        np.testing.assert_allclose(x.grad, [7.0])

    def test_repeated_backward_accumulates_into_leaves(self):
        x = Parameter(np.ones(3))

        backward(ops.sum(x))
        backward(ops.sum(x))

        np.testing.assert_array_equal(x.grad, np.full(3, 2.0))

    def test_zero_grad_resets(self):
        x = Parameter(np.ones(2))
        backward(ops.sum(x))

        x.zero_grad()

        assert x.grad is None

    def test_backward_returns_leaf_gradients(self):
        x = Parameter(np.array([1.0, -1.0]))

        grads = backward(ops.sum(ops.square(x)))

        np.testing.assert_array_equal(grads[x], [2.0, -2.0])

    def test_non_scalar_loss_is_rejected(self):
        x = Tensor(np.ones((2, 2)), requires_grad=True)

        with pytest.raises(ContractViolation, match="scalar"):
            backward(ops.mul(x, 2.0))

    def test_item(self):
        assert Tensor(np.full((1, 1), 2.5)).item() == 2.5

    def test_item_of_non_scalar_is_rejected(self):
        with pytest.raises(ContractViolation, match="single-element"):
            Tensor(np.ones(3)).item()

    def test_constant_loss_returns_no_gradients(self):
        assert backward(ops.sum(Tensor(np.ones(3)))) == {}

    def test_frozen_parameter_gets_no_gradient(self):
        frozen = Parameter(np.ones(2), requires_grad=False)
        live = Parameter(np.ones(2))

        backward(ops.sum(ops.mul(frozen, live)))

        assert frozen.grad is None
        np.testing.assert_array_equal(live.grad, np.ones(2))


@pytest.mark.unit
@pytest.mark.kernel
class TestNoGrad:
    def test_no_grad_disables_taping(self):
        x = Parameter(np.ones(3))

        with no_grad():
            assert not is_grad_enabled()
            y = ops.mul(x, 2.0)

        assert is_grad_enabled()
        assert not y.requires_grad

    def test_no_grad_restores_after_exception(self):
        with pytest.raises(RuntimeError):
            with no_grad():
                raise RuntimeError("boom")

        assert is_grad_enabled()

    def test_operators_delegate_to_ops(self):
        a = Tensor([[1.0, 2.0]])
        b = Tensor([[3.0], [4.0]])

        np.testing.assert_array_equal((a @ b).data, [[11.0]])
        np.testing.assert_array_equal((1.0 - a).data, [[0.0, -1.0]])
        np.testing.assert_array_equal((-a).data, [[-1.0, -2.0]])
