"""A small closed-form expression language evaluated with numpy.

Expressions are parsed with :mod:`ast` and evaluated against named array
arguments, so ``"sin(x*y)"`` over broadcast grids yields a full matrix.
Only whitelisted names and operators are accepted.
"""
import ast
import math

import numpy as np

__all__ = ["ExpressionError", "Expression", "compile_expr"]


class ExpressionError(ValueError):
    pass


def _indicator(cond, upper=None):
    # indicator(a <= b) or the two-argument form indicator(a, b) meaning a <= b
    if upper is not None:
        cond = np.asarray(cond) <= np.asarray(upper)
    return np.asarray(cond, dtype=float)


def _nary(fn):
    def wrapped(*args):
        if len(args) < 2:
            raise ExpressionError("min/max need at least two arguments")
        out = args[0]
        for a in args[1:]:
            out = fn(out, a)
        return out
    return wrapped


FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sign": np.sign,
    "floor": np.floor,
    "min": _nary(np.minimum),
    "max": _nary(np.maximum),
    "indicator": _indicator,
}

CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.true_divide,
    ast.Pow: np.power,
    ast.Mod: np.mod,
}
_CMPOPS = {
    ast.Lt: np.less,
    ast.LtE: np.less_equal,
    ast.Gt: np.greater,
    ast.GtE: np.greater_equal,
    ast.Eq: np.equal,
    ast.NotEq: np.not_equal,
}


class Expression:
    """Compiled expression; call with keyword arrays for its variables."""

    def __init__(self, source):
        self.source = source
        try:
            tree = ast.parse(source.strip(), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
        self._tree = tree.body
        self.variables = sorted(self._check(self._tree))

    def __repr__(self):
        return f"Expression({self.source!r})"

    def _check(self, node):
        names = set()
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ExpressionError(f"unsupported constant {node.value!r}")
        elif isinstance(node, ast.Name):
            if node.id in FUNCTIONS:
                raise ExpressionError(f"function {node.id!r} used as a value")
            if node.id not in CONSTANTS:
                names.add(node.id)
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
            names |= self._check(node.left) | self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
            names |= self._check(node.operand)
        elif isinstance(node, ast.Compare):
            if any(type(op) not in _CMPOPS for op in node.ops):
                raise ExpressionError("unsupported comparison")
            names |= self._check(node.left)
            for c in node.comparators:
                names |= self._check(c)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ExpressionError(f"unknown function in {ast.unparse(node)!r}")
            if node.keywords:
                raise ExpressionError("keyword arguments are not allowed")
            for a in node.args:
                names |= self._check(a)
        else:
            raise ExpressionError(f"unsupported syntax: {ast.unparse(node)!r}")
        return names

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            return CONSTANTS[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            val = self._eval(node.operand, env)
            return np.negative(val) if isinstance(node.op, ast.USub) else val
        if isinstance(node, ast.Compare):
            left = self._eval(node.left, env)
            result = None
            for op, comp in zip(node.ops, node.comparators):
                right = self._eval(comp, env)
                part = _CMPOPS[type(op)](left, right)
                result = part if result is None else np.logical_and(result, part)
                left = right
            return result
        # ast.Call
        args = [self._eval(a, env) for a in node.args]
        return FUNCTIONS[node.func.id](*args)

    def __call__(self, **env):
        missing = [v for v in self.variables if v not in env]
        if missing:
            raise ExpressionError(f"unbound variables {missing} in {self.source!r}")
        with np.errstate(all="ignore"):
            out = self._eval(self._tree, env)
        shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()


def compile_expr(source):
    if isinstance(source, Expression):
        return source
    return Expression(source)
