from .parser import parse, pretty, compile_pattern
from .eval import evaluate, evaluate_program, select_representation

__all__ = [
    "parse",
    "pretty",
    "compile_pattern",
    "evaluate",
    "evaluate_program",
    "select_representation",
]
