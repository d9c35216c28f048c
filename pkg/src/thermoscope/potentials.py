"""Potentials phi(x) = phi(0) + c x^gamma + h(x) x^gamma on [0, 1].

Evaluators are vectorised over numpy arrays. Every potential carries its
derivative so that the seminorm sup |phi'| / (gamma x^(gamma-1)) and the
leading coefficient c can be estimated without finite differences.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import DomainError, NonConvergent
from .mp_map import MapParams, map_forward

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PotentialSpec:
    value_at_zero: float
    gamma: float
    c: float
    h_eval: Evaluator
    deriv_eval: Evaluator
    name: Optional[str] = None
    direct_eval: Optional[Evaluator] = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma!r}")


def _positive(x):
    return np.asarray(x, dtype=float)


def evaluate_array(phi: PotentialSpec, x) -> np.ndarray:
    """phi on an array of points of [0, 1]; the value at 0 is exact."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, float(phi.value_at_zero))
    mask = x > 0
    if np.any(mask):
        xm = x[mask]
        if phi.direct_eval is not None:
            out[mask] = phi.direct_eval(xm)
        else:
            out[mask] = phi.value_at_zero + xm ** phi.gamma * (phi.c + phi.h_eval(xm))
    return out


def evaluate_normal_form(phi: PotentialSpec, x) -> np.ndarray:
    """phi(0) + c x^gamma + h(x) x^gamma, bypassing any closed form."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, float(phi.value_at_zero))
    mask = x > 0
    xm = x[mask]
    out[mask] = phi.value_at_zero + phi.c * xm ** phi.gamma + phi.h_eval(xm) * xm ** phi.gamma
    return out


def evaluate(phi: PotentialSpec, x: float) -> float:
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x={x!r} is outside [0, 1]")
    if x == 0.0:
        return float(phi.value_at_zero)
    return float(evaluate_array(phi, np.array([x]))[0])


def derivative_array(phi: PotentialSpec, x) -> np.ndarray:
    return np.asarray(phi.deriv_eval(np.asarray(x, dtype=float)), dtype=float)


def ratio_array(phi: PotentialSpec, x) -> np.ndarray:
    """(phi(x) - phi(0)) / x^gamma = c + h(x) on (0, 1]."""
    return phi.c + np.asarray(phi.h_eval(np.asarray(x, dtype=float)), dtype=float)


def scaled(phi: PotentialSpec, beta: float) -> PotentialSpec:
    """beta * phi, keeping the normal form."""
    b = float(beta)
    name = None if phi.name is None else f"{b!r}*{phi.name}"
    direct = None if phi.direct_eval is None else (lambda x, f=phi.direct_eval: b * f(x))
    return PotentialSpec(
        value_at_zero=b * phi.value_at_zero,
        gamma=phi.gamma,
        c=b * phi.c,
        h_eval=lambda x, f=phi.h_eval: b * f(x),
        deriv_eval=lambda x, f=phi.deriv_eval: b * f(x),
        name=name,
        direct_eval=direct,
    )


def shifted(phi: PotentialSpec, kappa: float) -> PotentialSpec:
    """phi + kappa."""
    k = float(kappa)
    direct = None if phi.direct_eval is None else (lambda x, f=phi.direct_eval: f(x) + k)
    name = None if phi.name is None else f"{phi.name}+{k!r}"
    return replace(phi, value_at_zero=phi.value_at_zero + k, direct_eval=direct, name=name)


# --- built-in potentials -------------------------------------------------

def omega(gamma: float) -> PotentialSpec:
    g = float(gamma)
    return PotentialSpec(
        value_at_zero=0.0,
        gamma=g,
        c=-1.0,
        h_eval=lambda x: np.zeros_like(_positive(x)),
        deriv_eval=lambda x: -g * _positive(x) ** (g - 1.0),
        name=f"omega({g!r})",
        direct_eval=lambda x: -_positive(x) ** g,
    )


def geometric(alpha: float) -> PotentialSpec:
    """-log Df."""
    a = float(alpha)
    k = 1.0 + a

    def h(x):
        u = k * _positive(x) ** a
        return k * (1.0 - np.log1p(u) / u)

    def deriv(x):
        x = _positive(x)
        return -k * a * x ** (a - 1.0) / (1.0 + k * x ** a)

    return PotentialSpec(
        value_at_zero=0.0,
        gamma=a,
        c=-k,
        h_eval=h,
        deriv_eval=deriv,
        name="geometric",
        direct_eval=lambda x: -np.log1p(k * _positive(x) ** a),
    )


def hat(alpha: float) -> PotentialSpec:
    """-x^alpha (1 - x), equal at both fixed points."""
    a = float(alpha)
    return PotentialSpec(
        value_at_zero=0.0,
        gamma=a,
        c=-1.0,
        h_eval=lambda x: _positive(x).copy(),
        deriv_eval=lambda x: -a * _positive(x) ** (a - 1.0) + (a + 1.0) * _positive(x) ** a,
        name="hat",
        direct_eval=lambda x: -_positive(x) ** a * (1.0 - _positive(x)),
    )


def psi(alpha: float) -> PotentialSpec:
    """-x^alpha (x - x1)^2, vanishing at 0 and at the discontinuity."""
    a = float(alpha)
    x1 = MapParams(a).branch_point

    def deriv(x):
        x = _positive(x)
        return -a * x ** (a - 1.0) * (x - x1) ** 2 - 2.0 * x ** a * (x - x1)

    return PotentialSpec(
        value_at_zero=0.0,
        gamma=a,
        c=-x1 * x1,
        h_eval=lambda x: -_positive(x) ** 2 + 2.0 * x1 * _positive(x),
        deriv_eval=deriv,
        name="psi",
        direct_eval=lambda x: -_positive(x) ** a * (_positive(x) - x1) ** 2,
    )


def tilde(gamma: float) -> PotentialSpec:
    """x^gamma / (log x - x), extended by 0 at the origin."""
    g = float(gamma)

    def deriv(x):
        x = _positive(x)
        L = np.log(x) - x
        return g * x ** (g - 1.0) / L - x ** g * (1.0 / x - 1.0) / L ** 2

    return PotentialSpec(
        value_at_zero=0.0,
        gamma=g,
        c=0.0,
        h_eval=lambda x: 1.0 / (np.log(_positive(x)) - _positive(x)),
        deriv_eval=deriv,
        name=f"tilde({g!r})",
        direct_eval=lambda x: _positive(x) ** g / (np.log(_positive(x)) - _positive(x)),
    )


def constant(kappa: float, gamma: float = 1.0) -> PotentialSpec:
    k = float(kappa)
    return PotentialSpec(
        value_at_zero=k,
        gamma=float(gamma),
        c=0.0,
        h_eval=lambda x: np.zeros_like(_positive(x)),
        deriv_eval=lambda x: np.zeros_like(_positive(x)),
        name="zero" if k == 0.0 else f"constant({k!r})",
        direct_eval=lambda x: np.full_like(_positive(x), k),
    )


def zero(gamma: float = 1.0) -> PotentialSpec:
    return constant(0.0, gamma)


BUILTIN_NAMES = ("zero", "geometric", "hat", "psi", "omega", "tilde", "constant")


def builtin(name: str, alpha: float, gamma: Optional[float] = None) -> PotentialSpec:
    """Look up a built-in by name; omega and tilde need gamma, constant reads it as kappa."""
    if name == "zero":
        return zero(alpha if gamma is None else gamma)
    if name == "geometric":
        return geometric(alpha)
    if name == "hat":
        return hat(alpha)
    if name == "psi":
        return psi(alpha)
    if name in ("omega", "tilde", "constant"):
        if gamma is None:
            raise DomainError(f"potential {name!r} needs a gamma (or kappa) value")
        return {"omega": omega, "tilde": tilde, "constant": constant}[name](gamma)
    m = re.fullmatch(r"(omega|tilde|constant)\(([^)]+)\)", name)
    if m:
        return builtin(m.group(1), alpha, float(m.group(2)))
    raise DomainError(f"unknown potential {name!r}")


# --- tiny expression grammar --------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(log|exp|x)|(.))")


def _tokenize(text):
    text = text.replace("−", "-")
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        pos = m.end()
        num, word, op = m.groups()
        if num is not None:
            tokens.append(("num", float(num)))
        elif word is not None:
            tokens.append((word, None))
        elif op is not None and not op.isspace():
            if op not in "+-*/^()":
                raise DomainError(f"unexpected character {op!r} in expression")
            tokens.append((op, None))
    tokens.append(("end", None))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i][0]

    def take(self, kind=None):
        tok = self.tokens[self.i]
        if kind is not None and tok[0] != kind:
            raise DomainError(f"expected {kind!r}, found {tok[0]!r}")
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        self.take("end")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in "+-":
            op = self.take()[0]
            node = ("add" if op == "+" else "sub", node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek() in ("*", "/"):
            op = self.take()[0]
            node = ("mul" if op == "*" else "div", node, self.unary())
        return node

    def unary(self):
        if self.peek() == "-":
            self.take()
            return ("neg", self.unary())
        if self.peek() == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == "^":
            self.take()
            return ("pow", base, self.unary())
        return base

    def atom(self):
        kind, value = self.take()
        if kind == "num":
            return ("num", value)
        if kind == "x":
            return ("x",)
        if kind in ("log", "exp"):
            self.take("(")
            inner = self.expr()
            self.take(")")
            return (kind, inner)
        if kind == "(":
            inner = self.expr()
            self.take(")")
            return inner
        raise DomainError(f"unexpected token {kind!r}")


def parse_expression(text: str):
    """Parse +, -, *, /, ^, log, exp, x and numbers into a small tree."""
    return _Parser(text).parse()


def _eval(node, x):
    kind = node[0]
    if kind == "num":
        return np.full_like(x, node[1])
    if kind == "x":
        return x
    if kind == "neg":
        return -_eval(node[1], x)
    if kind == "log":
        return np.log(_eval(node[1], x))
    if kind == "exp":
        return np.exp(_eval(node[1], x))
    a, b = _eval(node[1], x), _eval(node[2], x)
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "div":
        return a / b
    return a ** b


def _has_x(node):
    return node[0] == "x" or any(isinstance(n, tuple) and _has_x(n) for n in node[1:])


def _diff(node):
    kind = node[0]
    if kind == "num":
        return ("num", 0.0)
    if kind == "x":
        return ("num", 1.0)
    if kind == "neg":
        return ("neg", _diff(node[1]))
    if kind == "log":
        return ("div", _diff(node[1]), node[1])
    if kind == "exp":
        return ("mul", node, _diff(node[1]))
    a, b = node[1], node[2]
    if kind in ("add", "sub"):
        return (kind, _diff(a), _diff(b))
    if kind == "mul":
        return ("add", ("mul", _diff(a), b), ("mul", a, _diff(b)))
    if kind == "div":
        return ("div", ("sub", ("mul", _diff(a), b), ("mul", a, _diff(b))), ("mul", b, b))
    if not _has_x(b):
        return ("mul", ("mul", b, ("pow", a, ("sub", b, ("num", 1.0)))), _diff(a))
    return ("mul", node, ("add", ("mul", _diff(b), ("log", a)), ("div", ("mul", b, _diff(a)), a)))


def compile_expression(text: str):
    """Return (f, f') evaluators for an expression in x."""
    tree = parse_expression(text)
    dtree = _diff(tree)

    def f(x):
        with np.errstate(all="ignore"):
            return _eval(tree, np.asarray(x, dtype=float))

    def df(x):
        with np.errstate(all="ignore"):
            return _eval(dtree, np.asarray(x, dtype=float))

    return f, df


def from_normal_form(phi0: float, gamma: float, c: float, h: str, name: Optional[str] = None) -> PotentialSpec:
    """Build a potential from phi(0), gamma, c and an expression for h."""
    h_f, h_df = compile_expression(h)
    g = float(gamma)

    def deriv(x):
        x = _positive(x)
        return c * g * x ** (g - 1.0) + h_df(x) * x ** g + h_f(x) * g * x ** (g - 1.0)

    return PotentialSpec(
        value_at_zero=float(phi0), gamma=g, c=float(c), h_eval=h_f, deriv_eval=deriv, name=name
    )


def load_potential_file(path) -> tuple:
    """Read a JSON potential spec; returns (PotentialSpec, alpha or None)."""
    with open(path) as fh:
        data = json.load(fh)
    missing = {"gamma", "phi0", "c", "h"} - set(data)
    if missing:
        raise DomainError(f"potential file {path} lacks fields {sorted(missing)}")
    phi = from_normal_form(data["phi0"], data["gamma"], data["c"], data["h"], data.get("name"))
    return phi, data.get("alpha")


# --- limits and norms -----------------------------------------------------

class LeadingCoefficient(NamedTuple):
    value: float
    error_bar: float


def leading_coefficient(phi, gamma: float, tol: float = 1e-5) -> LeadingCoefficient:
    """lim phi'(x) / (gamma x^(gamma-1)) at 0+, by Richardson extrapolation.

    ``phi`` is a PotentialSpec or a callable returning phi'. Samples sit at
    x = 2^-k for k = 10..40 and the order-1 extrapolants 2 r_(k+1) - r_k are
    compared over the last few levels to form the error bar.
    """
    deriv = phi.deriv_eval if isinstance(phi, PotentialSpec) else phi
    ks = np.arange(10, 41)
    x = 2.0 ** (-ks.astype(float))
    r = np.asarray(deriv(x), dtype=float) / (gamma * x ** (gamma - 1.0))
    if not np.all(np.isfinite(r)):
        raise NonConvergent("derivative ratio is not finite near 0")
    rich = 2.0 * r[1:] - r[:-1]
    value = float(rich[-1])
    tail = rich[-6:]
    error_bar = float(np.max(np.abs(tail - value)) + np.abs(r[-1] - value))
    if error_bar > tol * max(1.0, abs(value)):
        raise NonConvergent(
            f"extrapolants disagree by {error_bar:.3g}; phi may lie outside the class for gamma={gamma}"
        )
    return LeadingCoefficient(value, error_bar)


class GridBound(NamedTuple):
    upper: float
    lower: float


def _gap_bound(nodes, values, limit_first=False):
    """Sup bound for a function sampled at sorted nodes.

    On a gap of width w with Lipschitz constant L the function stays below
    (v_left + v_right + L w) / 2. L is estimated from the secant slopes of the
    gap and its neighbours plus their spread, which covers curvature. With
    limit_first the first value is a limit approached monotonically across the
    first gap, which is then bounded by its endpoint values.
    """
    if limit_first:
        upper, top = _gap_bound(nodes[1:], values[1:])
        return max(upper, float(values[0])), max(top, float(values[0]))
    gaps = np.diff(nodes)
    slopes = np.abs(np.diff(values)) / np.where(gaps > 0, gaps, 1.0)
    padded = np.concatenate(([slopes[0]], slopes, [slopes[-1]]))
    left, mid, right = padded[:-2], padded[1:-1], padded[2:]
    lip = np.maximum(np.maximum(left, mid), right) + np.abs(right - left)
    upper = np.max(0.5 * (values[:-1] + values[1:] + lip * gaps))
    return float(max(upper, np.max(values))), float(np.max(values))


def grid_sup(func, lo: float, hi: float, limit_at_lo: Optional[float] = None,
             rtol: float = 1e-8, max_rounds: int = 8) -> GridBound:
    """Upper and lower bounds for sup of func on [lo, hi], refined adaptively.

    Nodes mix a uniform grid and a geometric grid accumulating at lo, so
    functions with power-law behaviour at the left end are resolved. When
    ``limit_at_lo`` is given it replaces func(lo) (func may be singular there).
    """
    prev = None
    for r in range(max_rounds):
        m = 512 * 2 ** r
        uni = np.linspace(lo, hi, m + 1)[1:]
        span = hi - lo
        geo = lo + span * 2.0 ** (-np.arange(0, 40 * 2 ** r + 1) / 2 ** r)
        nodes = np.unique(np.concatenate((uni, geo, [hi])))
        nodes = nodes[nodes > lo]
        with np.errstate(all="ignore"):
            vals = np.asarray(func(nodes), dtype=float)
            first = func(np.array([lo]))[0] if limit_at_lo is None else limit_at_lo
        nodes = np.concatenate(([lo], nodes))
        vals = np.concatenate(([first], vals))
        if not np.all(np.isfinite(vals)):
            raise NonConvergent("function is not finite on the sampling grid")
        bound = GridBound(*_gap_bound(nodes, vals, limit_at_lo is not None))
        if prev is not None and abs(bound.upper - prev.upper) <= rtol * (1.0 + abs(bound.upper)):
            return bound
        prev = bound
    raise NonConvergent(f"grid sup did not stabilise after {max_rounds} refinements")


class Norms(NamedTuple):
    """Upper bounds (sup_norm, seminorm) and node-maximum lower bounds."""

    sup_norm: float
    seminorm: float
    sup_norm_lower: float
    seminorm_lower: float


def norms(phi: PotentialSpec) -> Norms:
    g = phi.gamma
    sup = grid_sup(lambda x: np.abs(evaluate_array(phi, x)), 0.0, 1.0)
    semi = grid_sup(
        lambda x: np.abs(derivative_array(phi, x)) / (g * x ** (g - 1.0)),
        0.0, 1.0, limit_at_lo=abs(phi.c),
    )
    return Norms(sup.upper, semi.upper, sup.lower, semi.lower)


def ratio_sup(phi: PotentialSpec, hi: float) -> GridBound:
    """Bounds for sup over (0, hi] of (phi(x) - phi(0)) / x^gamma."""
    return grid_sup(lambda x: ratio_array(phi, x), 0.0, hi, limit_at_lo=phi.c)


def ratio_inf(phi: PotentialSpec, hi: float) -> GridBound:
    """Bounds for inf over (0, hi] of the same ratio, as (lower bound, node minimum)."""
    b = grid_sup(lambda x: -ratio_array(phi, x), 0.0, hi, limit_at_lo=-phi.c)
    return GridBound(-b.upper, -b.lower)


def birkhoff_sum(phi: PotentialSpec, x: float, n: int, params: MapParams) -> float:
    """Sum of phi over the first n points of the forward orbit of x."""
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x={x!r} is outside [0, 1]")
    pts = []
    for _ in range(n):
        pts.append(x)
        x = map_forward(x, params)
    return math.fsum(evaluate_array(phi, np.array(pts)))


def holder_constant(phi: PotentialSpec, exponent: float, n_grid: int = 400) -> float:
    """Sampled max of |phi(x) - phi(y)| / |x - y|^exponent over grid pairs."""
    x = np.concatenate((np.geomspace(1e-8, 1.0, n_grid // 2), np.linspace(0.0, 1.0, n_grid // 2)))
    x = np.unique(x)
    v = evaluate_array(phi, x)
    dx = np.abs(x[:, None] - x[None, :])
    dv = np.abs(v[:, None] - v[None, :])
    off = dx > 0
    return float(np.max(dv[off] / dx[off] ** exponent))


class TotalVariation:
    """x -> integral of |phi'| over [0, x], from the turning points of phi.

    Between consecutive turning points phi is monotone, so the variation is a
    difference of values. Turning points are sign changes of phi' on a fine
    grid, refined by bisection; a sign change hidden between two grid nodes
    would be missed, which is why callers also keep the seminorm bound.
    """

    def __init__(self, phi: PotentialSpec, grid: int = 1 << 14):
        self.phi = phi
        nodes = np.unique(np.concatenate((np.linspace(0.0, 1.0, grid + 1)[1:],
                                          np.geomspace(1e-12, 1.0, 2048))))
        with np.errstate(all="ignore"):
            d = derivative_array(phi, nodes)
        d = np.where(np.isfinite(d), d, 0.0)
        keep = np.sign(d) != 0
        nodes, sign = nodes[keep], np.sign(d[keep])
        turns = []
        for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
            a, b = nodes[i], nodes[i + 1]
            sa = sign[i]
            for _ in range(80):
                m = 0.5 * (a + b)
                if np.sign(derivative_array(phi, np.array([m]))[0]) == sa:
                    a = m
                else:
                    b = m
            turns.append(0.5 * (a + b))
        self.knots = np.array([0.0] + turns + [1.0])
        vals = evaluate_array(phi, self.knots)
        self.knot_values = vals
        self.cumulative = np.concatenate(([0.0], np.cumsum(np.abs(np.diff(vals)))))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.knots, x, side="right") - 1, 0, len(self.knots) - 2)
        return self.cumulative[idx] + np.abs(evaluate_array(self.phi, x) - self.knot_values[idx])

    @property
    def total(self) -> float:
        return float(self.cumulative[-1])
