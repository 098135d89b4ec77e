"""Phase-I simplex for feasibility problems ``A x = b, x >= 0``.

Exact mode pivots over rationals (gmpy2 ``mpq`` when available, otherwise
``fractions.Fraction``) and returns Fractions. Float mode runs the same
pivoting with an absolute tolerance and is advisory only.

Pricing: ``rule="bland"`` takes the lowest-index improving column;
``rule="dantzig"`` (default) takes the most negative reduced cost and drops
to Bland's rule after a run of degenerate pivots, which keeps the finite
termination guarantee. Leaving-row ties always go to the smallest basic
index, so results are reproducible run to run.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .scenario import EXACT, FLOAT, FLOAT_TOL

try:
    from gmpy2 import mpq as _rational
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _rational = Fraction


_DEGENERATE_LIMIT = 50


def _to_fraction(q) -> Fraction:
    if isinstance(q, Fraction):
        return q
    return Fraction(int(q.numerator), int(q.denominator))


@dataclass(frozen=True)
class LPResult:
    """Outcome of a feasibility solve.

    ``x`` is a basic feasible solution when ``feasible``. ``dual`` is the
    Phase-I dual vector ``y`` with ``A^T y <= 0`` and ``b.y = phase1_value``;
    when infeasible it is a Farkas witness (``b.y > 0``).
    """

    feasible: bool
    x: tuple | None
    dual: tuple
    phase1_value: object
    pivots: int
    basis: tuple


def solve_feasibility(
    A: Sequence[Sequence],
    b: Sequence,
    mode: str = EXACT,
    tol: float = FLOAT_TOL,
    max_pivots: int | None = None,
    rule: str = "dantzig",
) -> LPResult:
    m = len(A)
    n = len(A[0]) if m else 0
    if len(b) != m:
        raise ValueError("A and b have inconsistent row counts")
    if any(len(row) != n for row in A):
        raise ValueError("ragged constraint matrix")

    if mode == EXACT:
        conv = _rational
        eps = 0
        zero = _rational(0)
    elif mode == FLOAT:
        conv = float
        eps = tol
        zero = 0.0
    else:
        raise ValueError(f"unknown mode {mode!r}")

    width = n + m + 1  # originals, artificials, rhs
    signs = []
    rows = []
    for k in range(m):
        rhs = conv(b[k])
        sign = -1 if rhs < 0 else 1
        signs.append(sign)
        row = [conv(v) * sign for v in A[k]]
        row.extend(zero for _ in range(m))
        row[n + k] = conv(1)
        row.append(rhs * sign)
        rows.append(row)
    basis = [n + k for k in range(m)]

    # reduced costs of the Phase-I objective (sum of artificials); the last
    # slot holds minus the objective value
    cost = [zero] * width
    for row in rows:
        for c in range(n):
            if row[c]:
                cost[c] -= row[c]
        cost[-1] -= row[-1]

    pivots = 0
    degenerate_run = 0
    while True:
        if rule == "dantzig" and degenerate_run < _DEGENERATE_LIMIT:
            entering = min(range(n + m), key=cost.__getitem__)
            if not cost[entering] < -eps:
                entering = None
        else:
            entering = next((c for c in range(n + m) if cost[c] < -eps), None)
        if entering is None:
            break
        leaving = None
        best = None
        for r in range(m):
            a = rows[r][entering]
            if a > eps:
                ratio = rows[r][-1] / a
                if (
                    best is None
                    or ratio < best - eps
                    or (abs(ratio - best) <= eps and basis[r] < basis[leaving])
                ):
                    best, leaving = ratio, r
        if leaving is None:  # cannot happen: Phase-I objective is bounded below
            raise RuntimeError("unbounded Phase-I direction")
        degenerate_run = degenerate_run + 1 if best <= eps else 0
        _pivot(rows, cost, leaving, entering, eps, mode)
        basis[leaving] = entering
        pivots += 1
        if max_pivots is not None and pivots > max_pivots:
            raise RuntimeError(f"simplex exceeded {max_pivots} pivots")

    value = -cost[-1]
    if mode == FLOAT and abs(value) <= eps:
        value = 0.0
    feasible = value == 0 if mode == EXACT else value <= eps

    # y = c_B^T B^{-1}; B^{-1} sits in the artificial columns
    dual = []
    for k in range(m):
        y = zero
        for r in range(m):
            if basis[r] >= n:
                y += rows[r][n + k]
        dual.append(y * signs[k])

    out = _to_fraction if mode == EXACT else float
    x = None
    if feasible:
        values = [zero] * n
        for r, var in enumerate(basis):
            if var < n:
                values[var] = rows[r][-1]
        if mode == FLOAT:
            values = [v if v > 0 else 0.0 for v in values]
        x = tuple(out(v) for v in values)
    return LPResult(
        feasible=feasible,
        x=x,
        dual=tuple(out(y) for y in dual),
        phase1_value=out(value),
        pivots=pivots,
        basis=tuple(basis),
    )


def _pivot(rows, cost, r, c, eps, mode):
    pivot_row = rows[r]
    inv = 1 / pivot_row[c]
    pivot_row[:] = [v * inv for v in pivot_row]
    if mode == FLOAT:
        pivot_row[c] = 1.0
    support = [k for k, v in enumerate(pivot_row) if v]
    for other in (*rows, cost):
        if other is pivot_row:
            continue
        f = other[c]
        if not f:
            continue
        for k in support:
            other[k] -= f * pivot_row[k]
        if mode == FLOAT:
            other[c] = 0.0
            for k in support:
                if abs(other[k]) < 1e-15:
                    other[k] = 0.0
