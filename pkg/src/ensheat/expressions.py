"""Tiny arithmetic-expression compiler for scenario data functions.

Expressions are parsed with :mod:`ast` and restricted to arithmetic on the
variables ``x``, ``y``, ``t``, number literals, the constants ``pi`` and
``e``, and a short whitelist of functions.  ``gate(t, a, b)`` is the
piecewise time gate: 1 where a <= t <= b, else 0.  Compiled expressions
evaluate vectorized over numpy arrays.
"""

from __future__ import annotations

import ast
from typing import Callable

import numpy as np

__all__ = ["ExpressionError", "compile_expression"]


class ExpressionError(ValueError):
    pass


def _gate(t, lo, hi):
    t = np.asarray(t, dtype=np.float64)
    return np.where((t >= lo) & (t <= hi), 1.0, 0.0)


def _sqr(v):
    return v * v


_FUNCTIONS: dict[str, Callable] = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sqrt": np.sqrt,
    "sqr": _sqr,
    "log": np.log,
    "abs": np.abs,
    "min": np.minimum,
    "max": np.maximum,
    "gate": _gate,
}

_CONSTANTS = {"pi": np.pi, "e": np.e}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
    ast.Mod: lambda a, b: a % b,
}


def _check(node: ast.AST, source: str) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, source)
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ExpressionError(f"operator not allowed in {source!r}")
        _check(node.left, source)
        _check(node.right, source)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.UAdd, ast.USub)):
            raise ExpressionError(f"operator not allowed in {source!r}")
        _check(node.operand, source)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise ExpressionError(f"unknown function in {source!r}")
        if node.keywords:
            raise ExpressionError(f"keyword arguments not allowed in {source!r}")
        for arg in node.args:
            _check(arg, source)
    elif isinstance(node, ast.Name):
        if node.id not in ("x", "y", "t") and node.id not in _CONSTANTS:
            raise ExpressionError(f"unknown name {node.id!r} in {source!r}")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ExpressionError(f"non-numeric literal in {source!r}")
    else:
        raise ExpressionError(
            f"syntax element {type(node).__name__} not allowed in {source!r}"
        )


def compile_expression(source: str) -> Callable:
    """Compile an expression of x, y, t into a vectorized callable."""
    try:
        tree = ast.parse(source.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse expression {source!r}: {exc.msg}") from None
    _check(tree, source)
    code = compile(tree, f"<expression {source!r}>", "eval")
    namespace = dict(_FUNCTIONS)
    namespace.update(_CONSTANTS)

    def fn(x, y, t):
        local = {"x": x, "y": y, "t": t}
        return eval(code, {"__builtins__": {}, **namespace}, local)

    fn.source = source
    return fn
