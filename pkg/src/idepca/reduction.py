"""Reduction of the hybrid system to a delayed/advanced difference equation.

For each unit interval [n, n+1) the continuous problem collapses to

    z_{n+1} = a_n z_n + b_n z_{n -+ k}

with

    a_n = r_{n+1} * exp( I(n, n+1) ),
    b_n = r_{n+1} * int_n^{n+1} exp( I(s, n+1) ) b(s) ds,

where I(s, T) is the integral of the continuous coefficient a over [s, T]
and r_n is the jump factor applied when crossing node n (r_n = 1 for the
non-impulsive case).  From a_n the cumulative weights alpha_n and the
reduced-form coefficients Q_n are derived.

Q_n is computed by two independent routes -- the alpha-ratio definition and
a direct nested quadrature with the jump-factor product -- and the build
aborts if they disagree.  That audit is the main defense against index and
sign bugs in this file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from .exprlang import Expr, compile_expr, evaluate, _safe_exp
from .quad import integrate, exponent

__all__ = [
    "Direction",
    "ImpulseSpec",
    "ProblemSpec",
    "DiscreteSystem",
    "ZeroImpulseFactor",
    "ZeroCoefficient",
    "CoefficientError",
    "DiagnosticMismatch",
    "IndexOutOfRange",
    "compute_an",
    "compute_bn",
    "compute_alpha",
    "compute_qn",
    "compute_qn_direct",
    "build_discrete_system",
]


class Direction(Enum):
    DELAYED = "delayed"
    ADVANCED = "advanced"


class ZeroImpulseFactor(Exception):
    """A realized jump factor is zero (or not finite) at some node."""

    def __init__(self, n: int, value: float):
        self.index = n
        self.value = value
        super().__init__(f"jump factor at node {n} is {value!r}; must be finite and nonzero")


class ZeroCoefficient(Exception):
    """a_n = 0 makes the cumulative weight alpha undefined past n."""

    def __init__(self, n: int):
        self.index = n
        super().__init__(f"a_{n} = 0; alpha is undefined past index {n}")


class CoefficientError(Exception):
    """Numeric failure while computing a coefficient; carries the index."""

    def __init__(self, n: int, message: str):
        self.index = n
        super().__init__(f"at index {n}: {message}")


class DiagnosticMismatch(Exception):
    """The alpha-ratio and direct-quadrature routes for Q_n disagree."""

    def __init__(self, n: int, ratio_value: float, direct_value: float):
        self.index = n
        self.ratio_value = ratio_value
        self.direct_value = direct_value
        super().__init__(
            f"Q_{n} mismatch: alpha-ratio {ratio_value!r} vs direct {direct_value!r}"
        )


class IndexOutOfRange(Exception):
    def __init__(self, n: int, message: str):
        self.index = n
        super().__init__(f"index {n}: {message}")


@dataclass(frozen=True)
class ImpulseSpec:
    """Jump factors r_n = 1 + c_n applied at integer nodes.

    kind is one of "none", "factor", "formula", "table".  For "formula" the
    expression is in the node index n; for "table" indices past the end of
    the list fall back to the default.
    """

    kind: str = "none"
    value: float = 1.0
    expr: Optional[Expr] = None
    values: Tuple[float, ...] = ()
    default: float = 1.0
    n0: int = 0  # first index the table entry list refers to

    @classmethod
    def none(cls) -> "ImpulseSpec":
        return cls(kind="none")

    @classmethod
    def constant(cls, r: float) -> "ImpulseSpec":
        return cls(kind="factor", value=r)

    @classmethod
    def formula(cls, expr: Expr) -> "ImpulseSpec":
        return cls(kind="formula", expr=expr)

    @classmethod
    def table(cls, values: Sequence[float], default: float = 1.0,
              n0: int = 0) -> "ImpulseSpec":
        return cls(kind="table", values=tuple(values), default=default, n0=n0)

    def factor(self, n: int) -> float:
        """The realized jump factor 1 + c_n; never zero."""
        if self.kind == "none":
            return 1.0
        elif self.kind == "factor":
            r = self.value
        elif self.kind == "formula":
            r = evaluate(self.expr, float(n))
        elif self.kind == "table":
            i = n - self.n0
            r = self.values[i] if 0 <= i < len(self.values) else self.default
        else:
            raise ValueError(f"unknown impulse kind {self.kind!r}")
        if not math.isfinite(r) or r == 0.0:
            raise ZeroImpulseFactor(n, r)
        return r


@dataclass(frozen=True)
class ProblemSpec:
    """One problem instance: coefficients, deviation, impulses, window."""

    a: Expr
    b: Expr
    direction: Direction
    k: int
    impulse: ImpulseSpec
    initial_window: Tuple[float, ...]
    horizon: int
    n0: int = 0
    t_start: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "initial_window", tuple(self.initial_window))
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.horizon <= self.n0 + self.k:
            raise ValueError("horizon must exceed n0 + k")
        if len(self.initial_window) != self.k + 1:
            raise ValueError(f"initial_window must have exactly {self.k + 1} entries")
        if self.n0 < self.t_start:
            raise ValueError("n0 must not precede t_start")


def compute_an(spec: ProblemSpec, n: int, tol: float = 1e-10) -> float:
    """a_n = r_{n+1} * exp(integral of a over [n, n+1])."""
    r = spec.impulse.factor(n + 1)
    expo = exponent(spec.a, n, n + 1, tol)
    value = r * _safe_exp(expo)
    if not math.isfinite(value):
        raise CoefficientError(n, f"a_n overflowed (exponent {expo!r})")
    return value


def compute_bn(spec: ProblemSpec, n: int, tol: float = 1e-10) -> float:
    """b_n = r_{n+1} * int_n^{n+1} exp(I(s, n+1)) b(s) ds (nested quadrature)."""
    r = spec.impulse.factor(n + 1)
    fa = compile_expr(spec.a)
    fb = compile_expr(spec.b)
    inner_tol = tol / 10.0

    def integrand(s: float) -> float:
        return _safe_exp(exponent(fa, s, n + 1, inner_tol)) * fb(s)

    value = r * integrate(integrand, n, n + 1, tol).value
    if not math.isfinite(value):
        raise CoefficientError(n, "b_n overflowed")
    return value


def compute_alpha(a_seq: Sequence[float], n0: int, n: int) -> float:
    """alpha_n = product over j in [n0, n) of 1/a_j; alpha_{n0} = 1."""
    if n < n0 or n - n0 > len(a_seq):
        raise IndexOutOfRange(n, f"alpha needs a_j for j in [{n0}, {n})")
    prod = 1.0
    for j in range(n0, n):
        aj = a_seq[j - n0]
        if aj == 0.0:
            raise ZeroCoefficient(j)
        prod /= aj
    return prod


@dataclass
class DiscreteSystem:
    """Computed coefficient sequences over [n0, horizon]."""

    n0: int
    direction: Direction
    k: int
    a_seq: List[float]       # a_n for n in [n0, horizon)
    b_seq: List[float]       # b_n for n in [n0, horizon)
    alpha_seq: List[float]   # alpha_n for n in [n0, horizon]
    q_seq: List[float]       # Q_n for n in [q_start, q_start + len)
    q_start: int

    @property
    def horizon(self) -> int:
        return self.n0 + len(self.a_seq)

    def a(self, n: int) -> float:
        return self.a_seq[self._at(n, len(self.a_seq), "a_n")]

    def b(self, n: int) -> float:
        return self.b_seq[self._at(n, len(self.b_seq), "b_n")]

    def alpha(self, n: int) -> float:
        return self.alpha_seq[self._at(n, len(self.alpha_seq), "alpha_n")]

    def q(self, n: int) -> float:
        i = n - self.q_start
        if not 0 <= i < len(self.q_seq):
            raise IndexOutOfRange(n, "Q_n not computed at this index")
        return self.q_seq[i]

    def q_indices(self) -> range:
        return range(self.q_start, self.q_start + len(self.q_seq))

    def _at(self, n: int, size: int, what: str) -> int:
        i = n - self.n0
        if not 0 <= i < size:
            raise IndexOutOfRange(n, f"{what} not computed at this index")
        return i


def compute_qn(ds: DiscreteSystem, n: int) -> float:
    """Q_n from the alpha-ratio definition; signed (Q*_n is just -Q_n)."""
    if ds.direction is Direction.DELAYED:
        other = n - ds.k
        if other < ds.n0:
            raise IndexOutOfRange(n, f"Q_n needs alpha_{other} before the start index")
    else:
        other = n + ds.k
    return ds.alpha(n + 1) * ds.b(n) / ds.alpha(other)


def compute_qn_direct(spec: ProblemSpec, n: int, tol: float = 1e-10) -> float:
    """Q_n by direct nested quadrature with the jump-factor product.

    Independent of the alpha route: the exponential weight targets the
    deviated node n -+ k directly and the jump factors enter as an explicit
    product over the nodes between n and the deviated node.
    """
    fa = compile_expr(spec.a)
    fb = compile_expr(spec.b)
    inner_tol = tol / 10.0
    if spec.direction is Direction.DELAYED:
        target = n - spec.k
        prod = 1.0
        for j in range(n - spec.k + 1, n + 1):
            prod /= spec.impulse.factor(j)
    else:
        target = n + spec.k
        prod = 1.0
        for j in range(n + 1, n + spec.k + 1):
            prod *= spec.impulse.factor(j)

    def integrand(s: float) -> float:
        return _safe_exp(exponent(fa, s, target, inner_tol)) * fb(s)

    return prod * integrate(integrand, n, n + 1, tol).value


# Near-zero Q values fall back to an absolute floor: a pure relative test is
# meaningless against quadrature noise when the weighted integral nearly
# cancels.  The floor scales with the alpha-ratio amplification, since the
# ratio route multiplies b_n's absolute quadrature error by that factor.
_Q_AUDIT_REL = 1e-8
_Q_AUDIT_ABS = 1e-12


def _q_routes_agree(q_ratio: float, q_direct: float, tol: float,
                    amplification: float) -> bool:
    diff = abs(q_ratio - q_direct)
    scale = max(abs(q_ratio), abs(q_direct))
    floor = max(_Q_AUDIT_ABS, 10.0 * tol * max(1.0, amplification))
    return diff <= _Q_AUDIT_REL * scale or diff <= floor


def build_discrete_system(spec: ProblemSpec, tol: float = 1e-10) -> DiscreteSystem:
    """Compute a_n, b_n, alpha_n, Q_n over [n0, horizon] with the dual audit."""
    n0, horizon, k = spec.n0, spec.horizon, spec.k
    a_seq: List[float] = []
    b_seq: List[float] = []
    for n in range(n0, horizon):
        a_seq.append(compute_an(spec, n, tol))
        b_seq.append(compute_bn(spec, n, tol))

    alpha_seq = [1.0]
    for j in range(n0, horizon):
        aj = a_seq[j - n0]
        if aj == 0.0:
            raise ZeroCoefficient(j)
        alpha_seq.append(alpha_seq[-1] / aj)

    ds = DiscreteSystem(
        n0=n0, direction=spec.direction, k=k,
        a_seq=a_seq, b_seq=b_seq, alpha_seq=alpha_seq,
        q_seq=[], q_start=n0 + k if spec.direction is Direction.DELAYED else n0,
    )
    if spec.direction is Direction.DELAYED:
        q_range = range(n0 + k, horizon)
    else:
        q_range = range(n0, horizon - k + 1)
    for n in q_range:
        q_ratio = compute_qn(ds, n)
        q_direct = compute_qn_direct(spec, n, tol)
        other = n - k if spec.direction is Direction.DELAYED else n + k
        amp = abs(ds.alpha(n + 1) / ds.alpha(other))
        if not _q_routes_agree(q_ratio, q_direct, tol, amp):
            raise DiagnosticMismatch(n, q_ratio, q_direct)
        ds.q_seq.append(q_ratio)
    return ds
