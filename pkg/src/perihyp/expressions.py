"""A small arithmetic expression language for coefficients in run configs.

Grammar: numbers, variables, + - * / ^ (power), unary minus, parentheses and
calls of sin, cos, exp, sqrt, log, tan, sinh, cosh, tanh. Constants pi and e
are predefined. Expressions are parsed with `ast`, checked against a
whitelist, and evaluated with numpy, so complex arguments work and partial
derivatives can be taken by complex-step differentiation.
"""
from __future__ import annotations

import ast
import re

import numpy as np

from .errors import ConfigError

FUNCTIONS = {
    "sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "log": np.log,
    "tan": np.tan, "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh,
}
CONSTANTS = {"pi": np.pi, "e": np.e}
STEP = 1e-30
_LAMBDA = "lambda_"  # 'lambda' is a Python keyword; renamed before parsing

_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNARY = (ast.UAdd, ast.USub)


def _py(text: str) -> str:
    return re.sub(r"\blambda\b", _LAMBDA, text)


def _user(name: str) -> str:
    return "lambda" if name == _LAMBDA else name


class Expression:
    """Compiled expression; call with keyword arrays for its variables."""

    def __init__(self, text, variables, tables: dict | None = None, where: str = "expression"):
        if isinstance(text, (int, float)) and not isinstance(text, bool):
            text = repr(float(text))
        if not isinstance(text, str):
            raise ConfigError(f"{where}: expected a number or an expression string")
        self.text = text
        self.where = where
        self.tables = dict(tables or {})
        allowed = {_py(v) for v in variables} | set(CONSTANTS) | set(self.tables)
        try:
            tree = ast.parse(_py(text).replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"{where}: cannot parse {text!r} at column {exc.offset}: {exc.msg}") from None
        self.names = set()
        self._check(tree.body, allowed)
        self._code = compile(tree, f"<{where}>", "eval")

    def _check(self, node, allowed):
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                self._reject(node, "only numeric literals are allowed")
        elif isinstance(node, ast.Name):
            if node.id not in allowed:
                self._reject(node, f"unknown name {_user(node.id)!r}")
            self.names.add(_user(node.id))
        elif isinstance(node, ast.BinOp):
            if not isinstance(node.op, _BINOPS):
                self._reject(node, "unsupported operator")
            self._check(node.left, allowed)
            self._check(node.right, allowed)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, _UNARY):
                self._reject(node, "unsupported unary operator")
            self._check(node.operand, allowed)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                self._reject(node, "only sin, cos, exp, sqrt, log, tan, sinh, cosh, tanh may be called")
            if len(node.args) != 1 or node.keywords:
                self._reject(node, f"{node.func.id} takes exactly one argument")
            self._check(node.args[0], allowed)
        else:
            self._reject(node, f"unsupported syntax {type(node).__name__}")

    def _reject(self, node, msg):
        col = getattr(node, "col_offset", 0) + 1
        raise ConfigError(f"{self.where}: {msg} in {self.text!r} (column {col})")

    def uses(self, name: str) -> bool:
        return name in self.names

    def __call__(self, **env):
        ns = dict(CONSTANTS)
        ns.update(FUNCTIONS)
        ns.update({_py(k): v for k, v in env.items()})
        for nm, table in self.tables.items():
            if nm in self.names:
                ns[nm] = table(t=env.get("t"), x=env.get("x"), lam=env.get("lambda"))
        return eval(self._code, {"__builtins__": {}}, ns)

    def derivative(self, name: str, **env):
        """d/d(name) by complex step; the variable must enter analytically."""
        if name not in self.names:
            return np.zeros(np.broadcast(*[np.asarray(v) for v in env.values()]).shape)
        shifted = dict(env)
        shifted[name] = np.asarray(env[name], dtype=complex) + 1j * STEP
        return np.imag(self(**shifted)) / STEP

    def __repr__(self):
        return f"Expression({self.text!r})"
