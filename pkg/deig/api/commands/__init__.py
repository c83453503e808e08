# Command package
from deig.api.commands import ablate, bench, dumps, evaluate, gradcheck, sample, train

COMMAND_MODULES = [bench, train, sample, evaluate, ablate, dumps, gradcheck]

__all__ = ["COMMAND_MODULES"]
