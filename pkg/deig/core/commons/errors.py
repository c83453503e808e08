"""Exception hierarchy shared by every DEIG module.

The CLI maps each branch to a stable exit code (see ``deig.types.ExitCode``).
"""

from typing import Sequence


class DeigError(Exception):
    """Base exception class for DEIG errors"""

    pass


class ContractViolation(DeigError, ValueError):
    """An operation was called outside its documented preconditions."""

    pass


class ShapeMismatchError(ContractViolation):
    """Operand shapes are incompatible for an operation."""

    def __init__(self, op: str, *shapes: Sequence[int], detail: str = ""):
        self.op = op
        self.shapes = [tuple(s) for s in shapes]
        rendered = " vs ".join(str(s) for s in self.shapes)
        message = f"{op}: incompatible shapes {rendered}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class InvalidBoxError(ContractViolation):
    """Bounding box coordinates violate 0 <= x0 < x1 <= 1, 0 <= y0 < y1 <= 1."""

    pass


class CheckpointError(ContractViolation):
    """Checkpoint file is malformed, corrupt or does not match the model."""

    pass


class BenchGenerationError(ContractViolation):
    """Rejection sampling exhausted its retry budget."""

    def __init__(self, constraint: str, attempts: int):
        self.constraint = constraint
        self.attempts = attempts
        super().__init__(
            f"Scene generation failed after {attempts} attempts; "
            f"last failing constraint: {constraint}"
        )


class NumericalFailure(DeigError, ArithmeticError):
    """A numerical check failed or a computation produced non-finite values."""

    pass


class DivergenceError(NumericalFailure):
    """Training loss became NaN or infinite."""

    pass


class GradcheckFailure(NumericalFailure):
    """A finite-difference gradient check exceeded its tolerance."""

    def __init__(self, failing: Sequence[str]):
        self.failing = list(failing)
        super().__init__(f"Gradient check failed for: {', '.join(self.failing)}")


class UsageError(DeigError):
    """Command-line usage error."""

    pass
