"""Tiny arithmetic-expression compiler for family config files.

Only numbers, the variables ``t``, ``j``, ``i`` and a handful of numpy
functions are accepted; anything else is rejected at parse time.
"""
from __future__ import annotations

import ast
import operator
from typing import Callable

import numpy as np

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {
    "sqrt": np.sqrt,
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "abs": np.abs,
    "conj": np.conj,
    "real": np.real,
    "imag": np.imag,
}
_CONSTS = {"pi": np.pi, "e": np.e}
VARIABLES = ("t", "j", "i")


class ExpressionError(ValueError):
    pass


def compile_expression(text: str) -> Callable[[int, int, object], object]:
    """Return f(j, i, t) for an expression in t, j (level, 1-based), i (symbol, 1-based)."""
    try:
        tree = ast.parse(str(text), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    _check(tree.body, text)
    body = tree.body

    def rule(j, i, t):
        return _eval(body, {"t": t, "j": j, "i": i + 1})

    rule.expression = str(text)
    return rule


def _check(node, text):
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _check(node.left, text)
        _check(node.right, text)
    elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        _check(node.operand, text)
    elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
        pass
    elif isinstance(node, ast.Name) and (node.id in VARIABLES or node.id in _CONSTS):
        pass
    elif (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _FUNCS
        and not node.keywords
        and len(node.args) == 1
    ):
        _check(node.args[0], text)
    else:
        raise ExpressionError(f"unsupported construct in {text!r}: {ast.dump(node)[:60]}")


def _eval(node, env):
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        return _UNARY[type(node.op)](_eval(node.operand, env))
    if isinstance(node, ast.Constant):
        return node.value
    if isinstance(node, ast.Name):
        return env[node.id] if node.id in env else _CONSTS[node.id]
    return _FUNCS[node.func.id](_eval(node.args[0], env))
