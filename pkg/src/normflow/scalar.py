"""Scalar function objects used by the spectral calculus.

A :class:`ScalarFunction` bundles a vectorised evaluator with optional
analytic derivatives, a declared domain and a monotonicity flag.  Divided
differences at coincident points and the condition checks in
:mod:`normflow.philib` need the derivatives, so they travel with the
function instead of being estimated numerically.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import CapabilityError, ConfigError

# Derivative order attached to built-in transcendental functions.
DEFAULT_ORDER = 16


@dataclass(frozen=True)
class ScalarFunction:
    fn: Callable[[np.ndarray], np.ndarray]
    derivatives: tuple = ()
    domain: tuple = (-math.inf, math.inf)
    increasing: bool = False
    name: str = "f"

    @property
    def order(self) -> int:
        """Highest derivative order available."""
        return len(self.derivatives)

    def __call__(self, x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.fn(np.asarray(x, dtype=float))

    def derivative(self, x, k: int = 1):
        if k == 0:
            return self(x)
        if k > self.order:
            raise CapabilityError(
                f"{self.name}: derivative of order {k} requested, only {self.order} available"
            )
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.derivatives[k - 1](np.asarray(x, dtype=float))

    def times_power(self, j: int) -> "ScalarFunction":
        """Return ``x**j * f`` with derivatives from the Leibniz rule."""
        if j == 0:
            return self
        base = self

        def make(m):
            def d(x):
                total = np.zeros_like(x, dtype=float)
                for i in range(min(m, j) + 1):
                    falling = math.perm(j, i)
                    total = total + math.comb(m, i) * falling * x ** (j - i) * base.derivative(x, m - i)
                return total
            return d

        return ScalarFunction(
            fn=lambda x: x**j * base(x),
            derivatives=tuple(make(m) for m in range(1, self.order + 1)),
            domain=self.domain,
            increasing=False,
            name=f"x^{j}*{self.name}",
        )


def identity(domain=(-math.inf, math.inf)) -> ScalarFunction:
    return ScalarFunction(
        fn=lambda x: x.copy(),
        derivatives=(lambda x: np.ones_like(x),) + tuple(lambda x: np.zeros_like(x) for _ in range(DEFAULT_ORDER - 1)),
        domain=domain, increasing=True, name="x",
    )


def constant(c: float, domain=(-math.inf, math.inf)) -> ScalarFunction:
    return ScalarFunction(
        fn=lambda x: np.full_like(x, c, dtype=float),
        derivatives=tuple(lambda x: np.zeros_like(x) for _ in range(DEFAULT_ORDER)),
        domain=domain, increasing=True, name=repr(c),
    )


def zero(domain=(-math.inf, math.inf)) -> ScalarFunction:
    return constant(0.0, domain)


def log(domain=(0.0, math.inf), order: int = DEFAULT_ORDER) -> ScalarFunction:
    def make(k):
        c = (-1) ** (k - 1) * math.factorial(k - 1)
        return lambda x: c / x**k
    return ScalarFunction(np.log, tuple(make(k) for k in range(1, order + 1)), domain, True, "log")


def exp(domain=(-math.inf, math.inf), order: int = DEFAULT_ORDER) -> ScalarFunction:
    return ScalarFunction(np.exp, tuple(np.exp for _ in range(order)), domain, True, "exp")


def power(alpha: float, domain=(0.0, math.inf), order: int = DEFAULT_ORDER) -> ScalarFunction:
    """``x**alpha``.  Integer exponents get exact vanishing high derivatives."""
    def make(k):
        coeff = 1.0
        for i in range(k):
            coeff *= alpha - i
        if coeff == 0.0:
            return lambda x: np.zeros_like(x)
        return lambda x: coeff * x ** (alpha - k)
    return ScalarFunction(
        fn=lambda x: x**alpha,
        derivatives=tuple(make(k) for k in range(1, order + 1)),
        domain=domain, increasing=alpha > 0, name=f"x^{alpha:g}",
    )


# --- expression grammar -----------------------------------------------------

_FUNCS = {"log": np.log, "exp": np.exp, "sqrt": np.sqrt, "pow": np.power}
_BINOPS = {
    ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
    ast.Div: np.divide, ast.Pow: np.power,
}


def _compile(node):
    if isinstance(node, ast.Expression):
        return _compile(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        v = float(node.value)
        return lambda x: np.full_like(x, v, dtype=float)
    if isinstance(node, ast.Name):
        if node.id == "x":
            return lambda x: x
        if node.id in ("e", "pi"):
            v = getattr(math, node.id)
            return lambda x: np.full_like(x, v, dtype=float)
        raise ConfigError(f"unknown name {node.id!r} in expression")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile(node.operand)
        sign = -1.0 if isinstance(node.op, ast.USub) else 1.0
        return lambda x: sign * inner(x)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        lhs, rhs = _compile(node.left), _compile(node.right)
        return lambda x: op(lhs(x), rhs(x))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        f = _FUNCS[node.func.id]
        args = [_compile(a) for a in node.args]
        if node.keywords or len(args) != (2 if node.func.id == "pow" else 1):
            raise ConfigError(f"bad arguments to {node.func.id}()")
        return lambda x: f(*(a(x) for a in args))
    raise ConfigError(f"unsupported syntax in expression: {ast.dump(node)[:60]}")


def parse_expression(text: str, domain=(-math.inf, math.inf), increasing: bool = True) -> ScalarFunction:
    """Compile an arithmetic expression in ``x`` into a ScalarFunction.

    The grammar allows numbers, ``x``, the constants ``e`` and ``pi``,
    ``+ - * / **`` (``^`` is accepted as a synonym for ``**``), parentheses
    and the functions ``log``, ``exp``, ``sqrt`` and ``pow(a, b)``.  No
    derivatives are attached.
    """
    src = str(text).replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None
    fn = _compile(tree)
    return ScalarFunction(fn=fn, domain=tuple(domain), increasing=increasing, name=str(text))


def as_scalar_function(f, domain: Sequence[float] = (-math.inf, math.inf)) -> ScalarFunction:
    """Wrap a plain callable (no derivatives); ScalarFunctions pass through."""
    if isinstance(f, ScalarFunction):
        return f
    if isinstance(f, str):
        return parse_expression(f, domain)
    return ScalarFunction(fn=lambda x: np.asarray(f(x), dtype=float), domain=tuple(domain),
                          name=getattr(f, "__name__", "f"))
