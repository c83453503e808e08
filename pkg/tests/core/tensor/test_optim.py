import numpy as np
import pytest

from deig.core.commons.errors import ContractViolation
from deig.core.tensor import Parameter
from deig.core.tensor.optim import SGD, AdamW, warmup_lr
from deig.models.deig_model import DeigModel


@pytest.mark.unit
@pytest.mark.kernel
class TestOptimizers:
    def test_warmup_is_linear_then_constant(self):
        assert warmup_lr(1.0, 0, 4) == pytest.approx(0.25)
        assert warmup_lr(1.0, 3, 4) == pytest.approx(1.0)
        assert warmup_lr(1.0, 10, 4) == pytest.approx(1.0)
        assert warmup_lr(1.0, 0, 0) == pytest.approx(1.0)

    def test_sgd_step(self):
        p = Parameter(np.array([1.0, 2.0]))
        p.grad = np.array([0.5, -1.0])

        SGD([p], lr=0.1).step()

        np.testing.assert_allclose(p.data, [0.95, 2.1])

    def test_frozen_parameters_are_not_updated(self):
        p = Parameter(np.array([1.0]), requires_grad=False)
        p.grad = np.array([1.0])

        SGD([p], lr=0.1).step()

        np.testing.assert_array_equal(p.data, [1.0])

    def test_adamw_first_step_moves_by_lr(self):
        p = Parameter(np.array([1.0, -1.0]))
        p.grad = np.array([3.0, -0.2])

        AdamW([p], lr=0.01).step()

        np.testing.assert_allclose(p.data, [0.99, -0.99], atol=1e-6)

    def test_adamw_decays_matrices_only(self):
        matrix = Parameter(np.ones((2, 2)))
        vector = Parameter(np.ones(2))
        matrix.grad = np.zeros((2, 2))
        vector.grad = np.zeros(2)

        AdamW([matrix, vector], lr=0.1, weight_decay=0.5).step()

        np.testing.assert_allclose(matrix.data, np.full((2, 2), 0.95))
        np.testing.assert_array_equal(vector.data, np.ones(2))

    def test_adamw_decays_extractor_queries(self, tiny_config):
        model = DeigModel(tiny_config)
        queries = model.ide.queries
        gate = model.backbone.dfm_modules()[0].gamma
        queries.data = np.ones(queries.shape)
        gate.data = np.ones(1)
        queries.grad = np.zeros(queries.shape)
        gate.grad = np.zeros(1)

        AdamW([queries, gate], lr=0.1, weight_decay=0.5).step()

        assert queries.ndim == 4
        np.testing.assert_allclose(queries.data, np.full(queries.shape, 0.95))
        np.testing.assert_array_equal(gate.data, np.ones(1))

    def test_zero_grad(self):
        p = Parameter(np.ones(2))
        p.grad = np.ones(2)

        SGD([p], lr=1.0).zero_grad()

        assert p.grad is None

    def test_learning_rate_must_be_positive(self):
        with pytest.raises(ContractViolation):
            SGD([], lr=0.0)
