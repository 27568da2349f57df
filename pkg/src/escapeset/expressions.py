"""Arithmetic expressions for user-defined maps, flows and vector fields.

Expressions use Python syntax restricted to numbers, the declared variable
names, the constants ``pi`` and ``e``, the operators ``+ - * / **`` and the
functions ``exp log sin cos abs pow sqrt cbrt``. They are validated on the
AST, then compiled once and evaluated on numpy arrays, so a single call can
map a whole batch of points.

>>> m = CustomMap(["x / 2"], ["x"])
>>> m([[1.0], [3.0]]).ravel().tolist()
[0.5, 1.5]
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError

FUNCTIONS = {
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "abs": np.abs,
    "pow": np.power,
    "sqrt": np.sqrt,
    "cbrt": np.cbrt,
}
CONSTANTS = {"pi": math.pi, "e": math.e}
# scalar counterparts for the single-point fast path; they raise instead of returning nan/inf
_SCALAR_FUNCTIONS = {
    "exp": math.exp,
    "log": math.log,
    "sin": math.sin,
    "cos": math.cos,
    "abs": abs,
    "pow": math.pow,
    "sqrt": math.sqrt,
    "cbrt": lambda v: float(np.cbrt(v)),
}

_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNARY = (ast.UAdd, ast.USub)


class ExpressionError(ValueError):
    """Expression uses syntax or names outside the grammar."""


def _validate(node: ast.AST, names: frozenset[str]) -> None:
    if isinstance(node, ast.Expression):
        _validate(node.body, names)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _BINOPS):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _validate(node.left, names)
        _validate(node.right, names)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, _UNARY):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _validate(node.operand, names)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ExpressionError("only exp, log, sin, cos, abs, pow, sqrt, cbrt may be called")
        if node.keywords:
            raise ExpressionError("keyword arguments not allowed")
        want = 2 if node.func.id == "pow" else 1
        if len(node.args) != want:
            raise ExpressionError(f"{node.func.id} takes {want} argument(s)")
        for arg in node.args:
            _validate(arg, names)
    elif isinstance(node, ast.Name):
        if node.id not in names and node.id not in CONSTANTS:
            raise ExpressionError(f"unknown name {node.id!r}")
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"literal {node.value!r} not allowed")
    else:
        raise ExpressionError(f"syntax {type(node).__name__} not allowed")


@dataclass(frozen=True)
class Expression:
    source: str
    variables: tuple[str, ...]
    _code: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        try:
            tree = ast.parse(self.source.strip(), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {self.source!r}: {exc.msg}") from None
        _validate(tree, frozenset(self.variables))
        object.__setattr__(self, "_code", compile(tree, f"<expr {self.source}>", "eval"))

    def evaluate(self, env: dict) -> np.ndarray:
        scope = {**FUNCTIONS, **CONSTANTS, **env}
        return eval(self._code, {"__builtins__": {}}, scope)  # noqa: S307 - validated AST


def _as_batch(x, dim: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {arr.shape}")
    return arr, single


class CustomMap:
    """A self-map of R^n given componentwise by expressions.

    ``inverse`` (optional) gives the components of the inverse map in the
    same variables; it turns the map into a homeomorphism usable for
    conjugacies and backward iteration.
    """

    def __init__(
        self,
        components: Sequence[str],
        variables: Sequence[str] | None = None,
        inverse: Sequence[str] | None = None,
        name: str = "",
    ):
        if isinstance(components, str):
            components = [components]
        components = list(components)
        if variables is None:
            variables = ["x"] if len(components) == 1 else [f"x{i}" for i in range(len(components))]
        if len(variables) != len(components):
            raise ValueError("need one component expression per variable")
        self.variables = tuple(variables)
        self.components = tuple(Expression(c, self.variables) for c in components)
        self.inverse_components = (
            tuple(Expression(c, self.variables) for c in inverse) if inverse is not None else None
        )
        if self.inverse_components is not None and len(self.inverse_components) != len(components):
            raise ValueError("inverse must have as many components as the map")
        self.name = name or "(" + ", ".join(components) + ")"
        self._fn = self._compiled(self.components)
        self._scalar_fn = self._compiled(self.components, _SCALAR_FUNCTIONS)
        self._inv_fn = self._compiled(self.inverse_components) if self.inverse_components else None

    @property
    def dim(self) -> int:
        return len(self.variables)

    @property
    def has_inverse(self) -> bool:
        return self.inverse_components is not None

    def _compiled(self, exprs, functions=FUNCTIONS):
        # one function for all components: f(*columns) -> tuple
        args = [ast.arg(v) for v in self.variables]
        body = ast.Tuple([ast.parse(e.source.strip(), mode="eval").body for e in exprs], ast.Load())
        lam = ast.Expression(ast.Lambda(ast.arguments([], args, None, [], [], None, []), body))
        ast.fix_missing_locations(lam)
        return eval(compile(lam, f"<map {self.name}>", "eval"), {"__builtins__": {}, **functions, **CONSTANTS})  # noqa: S307

    def _apply(self, fn, x):
        arr, single = _as_batch(x, self.dim)
        out = np.empty_like(arr)
        with np.errstate(all="ignore"):
            for i, col in enumerate(fn(*arr.T)):
                out[:, i] = col
        if np.isnan(out).any() and not np.isnan(arr).any():
            raise DomainError(f"map {self.name} left the real domain")
        return out[0] if single else out

    def __call__(self, x) -> np.ndarray:
        return self._apply(self._fn, x)

    def step(self, point: tuple) -> tuple:
        """Fast evaluation at one point given as a tuple of floats.

        Pure float arithmetic; anything exceptional (overflow, division by
        zero, leaving the real domain) is redone through the checked array
        path, which returns inf or raises :class:`DomainError`.
        """
        try:
            out = self._scalar_fn(*point)
            if all(type(v) is float for v in out):
                return out
        except (ArithmeticError, ValueError, TypeError):
            pass
        return tuple(self(np.array(point)).tolist())

    def inverse(self, x) -> np.ndarray:
        if self.inverse_components is None:
            raise ValueError(f"map {self.name} has no inverse")
        return self._apply(self._inv_fn, x)

    def inverted(self) -> "CustomMap":
        if self.inverse_components is None:
            raise ValueError(f"map {self.name} has no inverse")
        return CustomMap(
            [e.source for e in self.inverse_components],
            self.variables,
            [e.source for e in self.components],
            name=f"inverse of {self.name}",
        )

    def to_dict(self) -> dict:
        out = {"components": [e.source for e in self.components], "variables": list(self.variables)}
        if self.inverse_components is not None:
            out["inverse"] = [e.source for e in self.inverse_components]
        return out

    def __repr__(self):
        return f"CustomMap({self.name})"


def identity_map(dim: int) -> CustomMap:
    names = ["x"] if dim == 1 else [f"x{i}" for i in range(dim)]
    return CustomMap(names, names, names, name="identity")
