"""Exact feasibility of ``A x = b, x >= 0`` over the rationals.

Phase-one simplex on a dense Fraction tableau with Bland's rule, so it
always terminates.  When the system is infeasible the optimal phase-one
duals give a Farkas certificate ``y`` with ``A^T y <= 0`` and ``b . y > 0``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from numbers import Rational


@dataclass(frozen=True)
class LPFeasibility:
    feasible: bool
    x: tuple[Fraction, ...] | None = None
    farkas: tuple[Fraction, ...] | None = None


def solve_feasibility(A: Sequence[Sequence[Rational]], b: Sequence[Rational]) -> LPFeasibility:
    m = len(A)
    n = len(A[0]) if m else 0
    if len(b) != m:
        raise ValueError("A and b have incompatible shapes")
    sign = [1 if Fraction(bi) >= 0 else -1 for bi in b]
    # columns: n structural, m artificial, then the right-hand side
    T = []
    for i in range(m):
        row = [Fraction(v) * sign[i] for v in A[i]]
        row += [Fraction(int(i == k)) for k in range(m)]
        row.append(Fraction(b[i]) * sign[i])
        T.append(row)
    basis = [n + i for i in range(m)]
    cost = [Fraction(0)] * n + [Fraction(1)] * m

    while True:
        reduced = [
            cost[j] - sum((cost[basis[i]] * T[i][j] for i in range(m)), Fraction(0))
            for j in range(n + m)
        ]
        entering = next((j for j in range(n + m) if reduced[j] < 0), None)
        if entering is None:
            break
        best = None
        for i in range(m):
            a = T[i][entering]
            if a > 0:
                key = (T[i][-1] / a, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:  # unbounded below is impossible in phase one
            raise ArithmeticError("phase-one objective unbounded")
        _pivot(T, best[1], entering)
        basis[best[1]] = entering

    values = [Fraction(0)] * (n + m)
    for i, j in enumerate(basis):
        values[j] = T[i][-1]
    if all(v == 0 for v in values[n:]):
        return LPFeasibility(True, x=tuple(values[:n]))
    # reduced cost of artificial i equals 1 - y_i
    y = [sign[i] * (1 - reduced[n + i]) for i in range(m)]
    return LPFeasibility(False, farkas=_integral(y))


def _pivot(T: list[list[Fraction]], r: int, c: int) -> None:
    p = T[r][c]
    T[r] = [v / p for v in T[r]]
    for i, row in enumerate(T):
        if i != r and row[c] != 0:
            f = row[c]
            T[i] = [v - f * w for v, w in zip(row, T[r])]


def _integral(y: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Scale a certificate by a positive factor to small integers."""
    denom = lcm(*(v.denominator for v in y)) if y else 1
    ints = [int(v * denom) for v in y]
    g = 0
    for v in ints:
        g = gcd(g, v)
    g = g or 1
    return tuple(Fraction(v // g) for v in ints)


def verify_farkas(
    A: Sequence[Sequence[Rational]], b: Sequence[Rational], y: Sequence[Rational]
) -> bool:
    """Check ``A^T y <= 0`` and ``b . y > 0`` exactly."""
    m, n = len(A), len(A[0])
    for j in range(n):
        if sum(Fraction(A[i][j]) * y[i] for i in range(m)) > 0:
            return False
    return sum(Fraction(b[i]) * y[i] for i in range(m)) > 0
