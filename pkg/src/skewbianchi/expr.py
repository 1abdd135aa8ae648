"""Restricted expression vocabulary for chart component functions.

Grammar: numbers, coordinates ``x1..xn``, ``pi``, ``+ - * /``, ``**`` with a
numeric exponent, and the functions ``exp``, ``sin``, ``cos`` and ``bump``
(``bump(s) = exp(-1/(1 - s^2))`` for ``|s| < 1``, else 0).  Expressions are
compiled to closures over numpy arrays; nothing is passed to ``eval``.
"""

from __future__ import annotations

import ast
import math
import operator
from typing import Callable

import numpy as np

from .errors import GeometryParseError

Compiled = Callable[[np.ndarray], np.ndarray]


def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


FUNCTIONS = {"exp": np.exp, "sin": np.sin, "cos": np.cos, "bump": _bump}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def compile_expression(text: str, dim: int, location: str = "$") -> Compiled:
    """Compile ``text`` into ``f(X) -> values`` with ``X`` of shape ``(..., dim)``."""
    if not isinstance(text, str):
        raise GeometryParseError("expression must be a string", location)
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise GeometryParseError(f"cannot parse expression {text!r}: {exc.msg}", location) from None

    def build(node) -> Compiled:
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            value = float(node.value)
            return lambda X: np.full(X.shape[:-1], value)
        if isinstance(node, ast.Name):
            if node.id == "pi":
                return lambda X: np.full(X.shape[:-1], math.pi)
            if node.id.startswith("x") and node.id[1:].isdigit():
                k = int(node.id[1:])
                if 1 <= k <= dim:
                    return lambda X: X[..., k - 1]
            raise GeometryParseError(f"unknown name {node.id!r} in {text!r}", location)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = build(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda X: -inner(X)
            return inner
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            left, right = build(node.left), build(node.right)
            op = _BINOPS[type(node.op)]
            return lambda X: op(left(X), right(X))
        if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Pow):
            exponent = _numeric_constant(node.right)
            if exponent is None:
                raise GeometryParseError(f"exponent must be a number in {text!r}", location)
            base = build(node.left)
            if float(exponent).is_integer() and exponent >= 0:
                k = int(exponent)
                return lambda X: base(X) ** k
            return lambda X: np.power(base(X), exponent)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in FUNCTIONS and len(node.args) == 1 and not node.keywords:
            fn = FUNCTIONS[node.func.id]
            arg = build(node.args[0])
            return lambda X: fn(arg(X))
        raise GeometryParseError(f"unsupported construct in {text!r}", location)

    return build(tree.body)


def _numeric_constant(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        inner = _numeric_constant(node.operand)
        return None if inner is None else -inner
    return None
