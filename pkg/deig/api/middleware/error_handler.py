import functools
from typing import Callable

from deig.core.commons.errors import ContractViolation, NumericalFailure, UsageError
from deig.core.commons.logger import get_logger
from deig.types import ExitCode

logger = get_logger(__name__)


def exit_code_for(error: BaseException) -> ExitCode:
    if isinstance(error, UsageError):
        return ExitCode.USAGE_ERROR
    if isinstance(error, NumericalFailure):
        return ExitCode.NUMERICAL_FAILURE
    return ExitCode.CONTRACT_VIOLATION


def handle_errors(func: Callable[..., int]) -> Callable[..., int]:
    """Run a CLI command and map its exceptions to stable exit codes."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> int:
        try:
            result = func(*args, **kwargs)
            return int(ExitCode.SUCCESS if result is None else result)
        except UsageError as e:
            logger.error(f"Usage error: {str(e)}")
            return int(ExitCode.USAGE_ERROR)
        except ContractViolation as e:
            logger.error(f"Contract violation: {str(e)}", exc_info=True)
            return int(ExitCode.CONTRACT_VIOLATION)
        except NumericalFailure as e:
            logger.error(f"Numerical failure: {str(e)}", exc_info=True)
            return int(ExitCode.NUMERICAL_FAILURE)
        except Exception as e:
            logger.error(f"Unexpected error: {str(e)}", exc_info=True)
            return int(exit_code_for(e))

    return wrapper
