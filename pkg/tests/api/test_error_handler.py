import pytest

from deig.api.middleware.error_handler import exit_code_for, handle_errors
from deig.core.commons.errors import (
    BenchGenerationError,
    CheckpointError,
    ContractViolation,
    DivergenceError,
    GradcheckFailure,
    UsageError,
)
from deig.types import ExitCode


def _raising(error):
    @handle_errors
    def command():
        raise error

    return command


@pytest.mark.unit
class TestHandleErrors:
    def test_success_passes_through(self):
        assert handle_errors(lambda: None)() == ExitCode.SUCCESS
        assert handle_errors(lambda: 0)() == 0

    @pytest.mark.parametrize(
        "error, code",
        [
            (UsageError("missing file"), ExitCode.USAGE_ERROR),
            (ContractViolation("bad box"), ExitCode.CONTRACT_VIOLATION),
            (CheckpointError("crc"), ExitCode.CONTRACT_VIOLATION),
            (BenchGenerationError("max_iou", 200), ExitCode.CONTRACT_VIOLATION),
            (DivergenceError("nan"), ExitCode.NUMERICAL_FAILURE),
            (GradcheckFailure(["ops:mul"]), ExitCode.NUMERICAL_FAILURE),
            (RuntimeError("boom"), ExitCode.CONTRACT_VIOLATION),
        ],
    )
    def test_exceptions_map_to_exit_codes(self, error, code):
        assert _raising(error)() == int(code)

    def test_exit_code_for(self):
        assert exit_code_for(UsageError("x")) == ExitCode.USAGE_ERROR
        assert exit_code_for(KeyError("x")) == ExitCode.CONTRACT_VIOLATION
