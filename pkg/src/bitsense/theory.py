"""Closed-form calculators for the convergence theory.

Everything here is pure 64-bit floating point arithmetic: sample-complexity
and error-decay formulas, the error recurrence and its doubly-exponential
closed-form envelope, fixed points, and the nested square-root recurrence
the envelope analysis rests on.

A note on precision: the error recurrence contracts geometrically (factor
about 0.48 per step near its limit), so float64 iterates reach an exactly
constant fixed point after roughly 50 steps.  Strict monotonicity therefore
holds until the iterate is within floating-point resolution of the limit,
and the sequence is non-increasing everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Smallest certified threshold for the b constant; the contraction condition
# below is checked against exactly this literal.
B_REFERENCE = 379.1038


def _c1_of(b: float) -> float:
    return math.sqrt(3.0 * math.pi / b) * (1.0 + 16.0 * math.sqrt(2.0) / 3.0)


def _c2_of(b: float) -> float:
    return (3.0 / b) * (
        1.0
        + 4.0 * math.pi / 3.0
        + 8.0 * math.sqrt(3.0 * math.pi) / 3.0
        + 8.0 * math.sqrt(6.0 * math.pi)
    )


@dataclass(frozen=True)
class UniversalConstants:
    """The fixed constants (a, b, c, c1, c2) used by every bound in this module."""

    a: float = 16.0
    b: float = B_REFERENCE
    c: float = 32.0
    c1: float = _c1_of(B_REFERENCE)
    c2: float = _c2_of(B_REFERENCE)


_CONSTANTS = UniversalConstants()


def constants() -> UniversalConstants:
    return _CONSTANTS


def derived_constants(b: float) -> tuple[float, float]:
    """(c1, c2) recomputed for an arbitrary b > 0."""
    if b <= 0:
        raise ValueError("b must be positive")
    return _c1_of(b), _c2_of(b)


def sample_complexity(epsilon: float, rho: float, k: int, n: int) -> int:
    """Measurement count sufficient for uniform recovery at error epsilon.

    Evaluates (4bck/eps) log(en/k) + (2bck/eps) log(12bc/eps)
    + (bc/eps) log(a/rho) and rounds up.  Monotone increasing in 1/epsilon,
    k, and 1/rho.
    """
    _check_unit_interval("epsilon", epsilon)
    _check_unit_interval("rho", rho)
    if not (0 < k < n):
        raise ValueError("need 0 < k < n")
    u = _CONSTANTS
    bc = u.b * u.c
    total = (
        (4.0 * bc * k / epsilon) * math.log(math.e * n / k)
        + (2.0 * bc * k / epsilon) * math.log(12.0 * bc / epsilon)
        + (bc / epsilon) * math.log(u.a / rho)
    )
    return int(math.ceil(total))


def epsilon_recurrence(epsilon: float, t: int) -> float:
    """t-th term of the error recurrence e(0)=2, e(t)=4c1 sqrt((eps/c) e(t-1)) + 4c2 eps/c."""
    _check_unit_interval("epsilon", epsilon)
    if t < 0:
        raise ValueError("t must be >= 0")
    u = _CONSTANTS
    e = 2.0
    scale = epsilon / u.c
    for _ in range(t):
        e = 4.0 * u.c1 * math.sqrt(scale * e) + 4.0 * u.c2 * scale
    return e


def closed_form_bound(epsilon: float, t: int) -> float:
    """The envelope 2^(2^-t) * epsilon^(1 - 2^-t) that dominates the recurrence."""
    _check_unit_interval("epsilon", epsilon)
    if t < 0:
        raise ValueError("t must be >= 0")
    p = 2.0 ** (-t)
    return (2.0**p) * epsilon ** (1.0 - p)


def recurrence_fixed_point(epsilon: float) -> float:
    """Limit of the error recurrence: u^2 v with v = 16 c1^2 eps / c.

    Here w = c2 / (4 c1^2), u = (1 + sqrt(1 + 4w)) / 2.  The limit is linear
    in epsilon and strictly below it (barely: the ratio is about 1 - 5e-8, so
    the reference b is the smallest value for which this holds).
    """
    _check_unit_interval("epsilon", epsilon)
    u = _CONSTANTS
    v = 16.0 * u.c1**2 * epsilon / u.c
    w = u.c2 / (4.0 * u.c1**2)
    root = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * w))
    return root * root * v


def contraction_condition_holds(epsilon: float, b: float) -> bool:
    """Whether u * sqrt(v) < sqrt(2) for the constants derived from b.

    This is the numerical condition under which the recurrence contracts
    from its starting value of 2; it holds for every epsilon in (0,1) at the
    reference b and fails for substantially smaller b.
    """
    _check_unit_interval("epsilon", epsilon)
    c1, c2 = derived_constants(b)
    v = 16.0 * c1 * c1 * epsilon / 32.0
    w = c2 / (4.0 * c1 * c1)
    u = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * w))
    return u * math.sqrt(v) < math.sqrt(2.0)


def nested_sqrt(w: float, w0: float, t: int) -> float:
    """t-th term of f(0) = w0, f(t) = sqrt(w + f(t-1)).

    Converges to u = (1 + sqrt(1 + 4w)) / 2; strictly decreasing when
    w0 > u, strictly increasing when w0 < u, constant when w0 == u.
    """
    if w <= 0 or w0 <= 0:
        raise ValueError("need w > 0 and w0 > 0")
    if t < 0:
        raise ValueError("t must be >= 0")
    f = w0
    for _ in range(t):
        f = math.sqrt(w + f)
    return f


def nested_sqrt_limit(w: float) -> float:
    """Fixed point of x -> sqrt(w + x): the positive root (1 + sqrt(1 + 4w)) / 2."""
    if w <= 0:
        raise ValueError("need w > 0")
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * w))


def _check_unit_interval(name: str, value: float) -> None:
    if not (0.0 < value < 1.0):
        raise ValueError(f"{name} must lie in the open interval (0, 1), got {value}")
