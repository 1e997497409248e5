"""Function pairs phi = (phi1, phi2) and the map X -> phi1(|X|) - phi2(|X*|)."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import scalar
from .errors import ConfigError, DomainError
from .matcore import abs_function, as_cmatrix
from .scalar import ScalarFunction

TOL_DOMAIN = 1e-9
CLASSES = ("C0", "CL", "C1")


@dataclass(frozen=True)
class PhiPair:
    phi1: ScalarFunction
    phi2: ScalarFunction
    domain: tuple
    declared_class: str = "C0"
    lipschitz_bound: float | None = None
    name: str = "custom"

    def __post_init__(self):
        a, b = self.domain
        if not (0.0 <= a < b < math.inf):
            raise DomainError(f"pair domain must satisfy 0 <= a < b < inf, got [{a}, {b}]")
        if self.declared_class not in CLASSES:
            raise ConfigError(f"declared_class must be one of {CLASSES}")
        if self.declared_class != "C0" and self.lipschitz_bound is None:
            raise ConfigError(f"class {self.declared_class} needs a lipschitz_bound")


@dataclass
class ConditionReport:
    c0_ok: bool
    cl_ok: bool
    c1_ok: bool
    witnesses: list = field(default_factory=list)
    grid_size: int = 0


def validate_conditions(p: PhiPair, grid_size: int = 1024, flat_is_failure: bool = False) -> ConditionReport:
    """Sampled check of the monotonicity / Lipschitz / C1 conditions.

    The verdict is necessary, not sufficient: a violation between grid
    points goes unnoticed.  A point where ``phi1' + phi2'`` vanishes away
    from 0 only warns unless ``flat_is_failure`` is set.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    a, b = p.domain
    x = np.linspace(a, b, grid_size)
    y1, y2 = _eval(p.phi1, x), _eval(p.phi2, x)
    w = []
    c0 = True
    for name, y in (("phi1", y1), ("phi2", y2)):
        bad = np.nonzero(np.diff(y) < 0)[0]
        if bad.size:
            c0 = False
            i = bad[0]
            w.append((float(x[i]), float(x[i + 1]), f"{name} decreasing: {name}({x[i]:.6g})={y[i]:.6g} > {name}({x[i+1]:.6g})={y[i+1]:.6g}"))
    s = y1 + y2
    bad = np.nonzero(np.diff(s) <= 0)[0]
    if bad.size:
        c0 = False
        i = bad[0]
        w.append((float(x[i]), float(x[i + 1]), "phi1+phi2 not strictly increasing"))

    cl = c0
    if p.lipschitz_bound is None:
        cl = False
        w.append((a, b, "no lipschitz_bound declared"))
    else:
        for name, y in (("phi1", y1), ("phi2", y2)):
            slopes = np.abs(np.diff(y)) / np.diff(x)
            i = int(np.argmax(slopes))
            if slopes[i] > p.lipschitz_bound * (1 + 1e-9):
                cl = False
                w.append((float(x[i]), float(x[i + 1]), f"{name} slope {slopes[i]:.6g} exceeds lipschitz_bound {p.lipschitz_bound:g}"))

    c1 = cl
    if p.phi1.order >= 1 and p.phi2.order >= 1:
        d = np.asarray(p.phi1.derivative(x, 1), float) + np.asarray(p.phi2.derivative(x, 1), float)
        if not np.all(np.isfinite(d)):
            c1 = False
            w.append((a, b, "derivative not finite on the domain"))
        flat = (d <= 0) & (x != 0)
        if np.any(flat):
            i = int(np.nonzero(flat)[0][0])
            msg = f"phi1'+phi2' = {d[i]:.3g} at x={x[i]:.6g}"
            if flat_is_failure or d[i] < 0:
                c1 = False
                w.append((float(x[i]), float(x[i]), msg))
            else:
                warnings.warn(msg)
    else:
        c1 = False
        w.append((a, b, "derivatives unavailable, C1 cannot be checked"))
    return ConditionReport(c0_ok=c0, cl_ok=cl, c1_ok=c1, witnesses=w, grid_size=grid_size)


def _eval(f, x):
    y = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(y)):
        i = int(np.nonzero(~np.isfinite(y))[0][0])
        raise DomainError(f"{f.name} not finite at x={x[i]:.6g}")
    return y


def apply_phi(p: PhiPair, X, tol_domain: float = TOL_DOMAIN) -> np.ndarray:
    """phi(X) = phi1(|X|) - phi2(|X*|), a Hermitian matrix.

    Singular values within ``tol_domain`` of the pair's domain are clamped
    onto it; anything further out raises DomainError.
    """
    X = as_cmatrix(X)
    f1 = _with_domain(p.phi1, p.domain)
    out = abs_function(f1, X, "left", tol_domain)
    if not _is_zero(p.phi2):
        out = out - abs_function(_with_domain(p.phi2, p.domain), X, "right", tol_domain)
    return 0.5 * (out + out.conj().T)


def _with_domain(f: ScalarFunction, domain) -> ScalarFunction:
    if tuple(f.domain) == tuple(domain):
        return f
    return ScalarFunction(f.fn, f.derivatives, tuple(domain), f.increasing, f.name)


def _is_zero(f: ScalarFunction) -> bool:
    return f.name in ("0.0", "0")


def builtin_pair(name: str, domain, alpha: float | None = None, f: ScalarFunction | None = None) -> PhiPair:
    """Built-in pairs: ``aluthge`` (log x, 0), ``haagerup`` (x^2, x^2),
    ``power`` (x^alpha, 0) and ``left_only`` (f, 0).

    ``name`` may also be given as ``"power(3)"``.
    """
    a, b = (float(v) for v in domain)
    dom = (a, b)
    key = name.strip().lower()
    if key.startswith("power(") and key.endswith(")"):
        alpha = float(key[6:-1])
        key = "power"
    if key == "aluthge":
        if a <= 0:
            raise DomainError("the Aluthge pair needs a > 0 (log is undefined at 0)")
        return PhiPair(scalar.log(dom), scalar.zero(dom), dom, "C1", 1.0 / a, "aluthge")
    if key == "haagerup":
        sq = scalar.power(2.0, dom)
        return PhiPair(sq, sq, dom, "C1", 2.0 * b, "haagerup")
    if key == "power":
        if alpha is None or alpha <= 0:
            raise DomainError("power pair needs alpha > 0")
        if alpha >= 1 or a > 0:
            lip = alpha * (b ** (alpha - 1) if alpha >= 1 else a ** (alpha - 1))
            cls = "C1"
        else:
            lip, cls = None, "C0"
        return PhiPair(scalar.power(alpha, dom), scalar.zero(dom), dom, cls, lip, f"power({alpha:g})")
    if key == "left_only":
        if f is None:
            raise ConfigError("left_only needs a scalar function f")
        lip = None
        cls = "C0"
        if f.order >= 1:
            xs = np.linspace(a, b, 1024)
            lip = float(np.max(np.abs(f.derivative(xs, 1))))
            cls = "C1" if np.isfinite(lip) else "C0"
            lip = lip if np.isfinite(lip) else None
        return PhiPair(_with_domain(f, dom), scalar.zero(dom), dom, cls, lip, f"left_only({f.name})")
    raise ConfigError(f"unknown pair {name!r}")


def custom_pair(phi1: str, phi2: str, domain, declared_class: str = "C0",
                lipschitz_bound: float | None = None) -> PhiPair:
    dom = tuple(float(v) for v in domain)
    f1 = scalar.parse_expression(phi1, dom)
    f2 = scalar.zero(dom) if str(phi2).strip() in ("0", "0.0") else scalar.parse_expression(phi2, dom)
    if declared_class != "C0" and lipschitz_bound is None:
        xs = np.linspace(dom[0], dom[1], 4097)
        lipschitz_bound = float(max(np.max(np.abs(np.diff(f(xs)))) for f in (f1, f2)) / (xs[1] - xs[0]))
    return PhiPair(f1, f2, dom, declared_class, lipschitz_bound, f"custom({phi1}, {phi2})")


def pair_from_config(block: dict) -> PhiPair:
    """Build a PhiPair from a config block (see :mod:`normflow.cli` for the schema)."""
    if not isinstance(block, dict):
        raise ConfigError("phi block must be a mapping")
    if "domain" not in block:
        raise ConfigError("phi block needs a 'domain: [a, b]' entry")
    domain = block["domain"]
    if "custom" in block:
        c = block["custom"]
        return custom_pair(c["phi1"], c.get("phi2", "0"), domain, block.get("class", "C0"),
                           block.get("lipschitz_bound"))
    name = block.get("name")
    if name is None:
        raise ConfigError("phi block needs 'name' or 'custom'")
    alpha = block.get("alpha")
    f = None
    if str(name).lower() == "left_only":
        f = scalar.parse_expression(block["f"], domain)
    pair = builtin_pair(str(name), domain, alpha=alpha, f=f)
    if "class" in block and block["class"] != pair.declared_class:
        pair = PhiPair(pair.phi1, pair.phi2, pair.domain, block["class"],
                       pair.lipschitz_bound, pair.name)
    return pair
