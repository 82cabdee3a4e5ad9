"""Tiny arithmetic expression evaluator for config-supplied formulas.

Supports +, -, *, /, ** (power), unary minus, the functions sin, cos, exp,
abs, numeric literals, and a caller-supplied set of variable names (the
coordinates ``x1`` .. ``xN`` and, for nonlinearities, the state ``s``).
Everything is evaluated with numpy, so variables may be arrays.

Implemented on top of :mod:`ast` with an explicit whitelist; anything outside
the grammar raises :class:`~pxlap.errors.ConfigError`.
"""
from __future__ import annotations

import ast
from typing import Mapping

import numpy as np

from .errors import ConfigError

__all__ = ["compile_expression", "evaluate"]

_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "abs": np.abs,
}

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.true_divide,
    ast.Pow: np.power,
}

_UNARY = {ast.USub: np.negative, ast.UAdd: lambda v: v}


def _check(node: ast.AST, variables: frozenset[str]) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, variables)
    elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _check(node.left, variables)
        _check(node.right, variables)
    elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        _check(node.operand, variables)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise ConfigError(f"unknown function in expression: {ast.dump(node.func)}")
        if len(node.args) != 1 or node.keywords:
            raise ConfigError("expression functions take exactly one argument")
        _check(node.args[0], variables)
    elif isinstance(node, ast.Name):
        if node.id not in variables:
            raise ConfigError(f"unknown variable {node.id!r} in expression")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ConfigError(f"non-numeric literal in expression: {node.value!r}")
    else:
        raise ConfigError(f"unsupported syntax in expression: {type(node).__name__}")


def _eval(node: ast.AST, env: Mapping[str, object]):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        return _UNARY[type(node.op)](_eval(node.operand, env))
    if isinstance(node, ast.Call):
        return _FUNCTIONS[node.func.id](_eval(node.args[0], env))
    if isinstance(node, ast.Name):
        return env[node.id]
    if isinstance(node, ast.Constant):
        return node.value
    raise AssertionError("unreachable: expression was validated")


def compile_expression(text: str, variables: tuple[str, ...]):
    """Parse ``text`` and return a callable taking the named variables.

    The callable accepts keyword arguments matching ``variables`` (extras are
    rejected at parse time, missing ones at call time) and returns a float or
    ndarray following numpy broadcasting.
    """
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc}") from None
    _check(tree, frozenset(variables))

    def fn(**env):
        missing = [v for v in variables if v not in env]
        if missing:
            raise ConfigError(f"expression {text!r} missing variables {missing}")
        return _eval(tree, env)

    fn.source = text  # type: ignore[attr-defined]
    return fn


def evaluate(text: str, **env):
    """One-shot helper: compile ``text`` against the given variables and call it."""
    return compile_expression(text, tuple(env))(**env)
