"""Closed expression language shared by propagation rules and dictionary transforms.

Supports comparisons, integer/decimal arithmetic, min/max, string equality,
and conditionals — nothing else. Expressions are parsed with the stdlib
``ast`` module and evaluated by a small recursive interpreter over an explicit
environment; no Python evaluation, names, attributes, or calls beyond
min/max ever execute.

Float literals become exact decimals. Type mismatches and division by zero
raise DerivationTypeError; a name missing from the environment raises KeyError
(callers treat it as "rule does not apply here").
"""

from __future__ import annotations

import ast
from datetime import date
from decimal import Decimal, InvalidOperation

from .errors import DerivationTypeError

_ALLOWED_CALLS = ("min", "max")

_BIN_OPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.FloorDiv, ast.Mod)
_CMP_OPS = (ast.Eq, ast.NotEq, ast.Lt, ast.LtE, ast.Gt, ast.GtE)


class Expr:
    """A parsed, validated expression."""

    def __init__(self, text: str):
        self.text = text
        try:
            tree = ast.parse(text, mode="eval")
        except SyntaxError as exc:
            raise DerivationTypeError(f"unparseable expression: {text!r}") from exc
        _validate(tree.body)
        self._body = tree.body

    def free_names(self) -> set[str]:
        return {n.id for n in ast.walk(self._body)
                if isinstance(n, ast.Name)} - set(_ALLOWED_CALLS)

    def evaluate(self, env: dict):
        return _eval(self._body, env)


def _validate(node: ast.AST) -> None:
    if isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float, str, bool)):
            raise DerivationTypeError(f"unsupported literal: {node.value!r}")
        return
    if isinstance(node, ast.Name):
        return
    if isinstance(node, ast.IfExp):
        for sub in (node.test, node.body, node.orelse):
            _validate(sub)
        return
    if isinstance(node, ast.BoolOp):
        for sub in node.values:
            _validate(sub)
        return
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.Not)):
        _validate(node.operand)
        return
    if isinstance(node, ast.BinOp) and isinstance(node.op, _BIN_OPS):
        _validate(node.left)
        _validate(node.right)
        return
    if isinstance(node, ast.Compare):
        if not all(isinstance(op, _CMP_OPS) for op in node.ops):
            raise DerivationTypeError("unsupported comparison")
        _validate(node.left)
        for sub in node.comparators:
            _validate(sub)
        return
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_CALLS \
                or node.keywords:
            raise DerivationTypeError("only min()/max() may be called")
        for sub in node.args:
            _validate(sub)
        return
    raise DerivationTypeError(f"unsupported syntax: {type(node).__name__}")


def _num(v):
    return isinstance(v, (int, Decimal)) and not isinstance(v, bool)


def _eval(node: ast.AST, env: dict):
    if isinstance(node, ast.Constant):
        if isinstance(node.value, float):
            return Decimal(str(node.value))
        return node.value
    if isinstance(node, ast.Name):
        return env[node.id]  # KeyError means: not applicable here
    if isinstance(node, ast.IfExp):
        return _eval(node.body, env) if _truthy(_eval(node.test, env)) \
            else _eval(node.orelse, env)
    if isinstance(node, ast.BoolOp):
        if isinstance(node.op, ast.And):
            out = True
            for sub in node.values:
                out = _truthy(_eval(sub, env))
                if not out:
                    return False
            return out
        for sub in node.values:
            if _truthy(_eval(sub, env)):
                return True
        return False
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, env)
        if isinstance(node.op, ast.Not):
            return not _truthy(v)
        if not _num(v):
            raise DerivationTypeError(f"cannot negate {v!r}")
        return -v
    if isinstance(node, ast.BinOp):
        return _arith(node.op, _eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.Compare):
        left = _eval(node.left, env)
        for op, comp in zip(node.ops, node.comparators):
            right = _eval(comp, env)
            if not _compare(op, left, right):
                return False
            left = right
        return True
    if isinstance(node, ast.Call):
        args = [_eval(a, env) for a in node.args]
        if not args:
            raise DerivationTypeError("min()/max() need arguments")
        try:
            return min(args) if node.func.id == "min" else max(args)
        except TypeError as exc:
            raise DerivationTypeError(str(exc)) from exc
    raise DerivationTypeError(f"unsupported syntax: {type(node).__name__}")


def _truthy(v) -> bool:
    if isinstance(v, bool):
        return v
    raise DerivationTypeError(f"condition is not boolean: {v!r}")


def _arith(op, a, b):
    if not (_num(a) and _num(b)):
        raise DerivationTypeError(f"arithmetic on non-numbers: {a!r}, {b!r}")
    if isinstance(a, Decimal) or isinstance(b, Decimal):
        a, b = Decimal(a), Decimal(b)
    try:
        if isinstance(op, ast.Add):
            return a + b
        if isinstance(op, ast.Sub):
            return a - b
        if isinstance(op, ast.Mult):
            return a * b
        if isinstance(op, ast.Div):
            return Decimal(a) / Decimal(b)
        if isinstance(op, ast.FloorDiv):
            return a // b
        return a % b
    except (ZeroDivisionError, InvalidOperation) as exc:
        raise DerivationTypeError(f"arithmetic error: {exc}") from exc


def _compare(op, a, b) -> bool:
    if isinstance(op, ast.Eq):
        return _eq(a, b)
    if isinstance(op, ast.NotEq):
        return not _eq(a, b)
    ordered = (_num(a) and _num(b)) or \
        (isinstance(a, str) and isinstance(b, str)) or \
        (isinstance(a, date) and isinstance(b, date))
    if not ordered:
        raise DerivationTypeError(f"cannot order {a!r} and {b!r}")
    if isinstance(op, ast.Lt):
        return a < b
    if isinstance(op, ast.LtE):
        return a <= b
    if isinstance(op, ast.Gt):
        return a > b
    return a >= b


def _eq(a, b) -> bool:
    if _num(a) and _num(b):
        return Decimal(a) == Decimal(b)
    if type(a) is not type(b) and not (isinstance(a, str) and isinstance(b, str)):
        return False
    return a == b
