"""Optimal linear assignment (Kuhn-Munkres) with lexicographic tie-breaking.

Augmenting-path formulation with row/column potentials, O(n^3).
Rectangular inputs are padded internally to square with cost 1.0, the
worst 1-IoU cost, so optimality semantics stay on the IoU scale.
"""

from __future__ import annotations

import math

_PAD_COST = 1.0
_INF = float("inf")


def _solve_square(a: list[list[float]]) -> tuple[list[int], list[float], list[float]]:
    """Minimum-cost perfect matching on a square matrix.

    Returns (col_of_row, row_potentials, col_potentials). 0-indexed.
    """
    n = len(a)
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)  # p[j] = row (1-based) matched to column j; column 0 is virtual
    way = [0] * (n + 1)

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [_INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = _INF
            j1 = -1
            row = a[i0 - 1]
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    col_of_row = [-1] * n
    for j in range(1, n + 1):
        col_of_row[p[j] - 1] = j - 1
    return col_of_row, u[1:], v[1:]


def _assignment_cost(a: list[list[float]], col_of_row: list[int]) -> float:
    return sum(a[r][col_of_row[r]] for r in range(len(a)))


def kuhn_munkres(cost) -> list[tuple[int, int]]:
    """Minimum-total-cost assignment of rows to columns.

    Accepts any rectangular matrix of finite floats; returns (row, col)
    pairs sorted by row, one per row/column of the smaller dimension.
    Among equal-cost optima the result is the lexicographically smallest
    (row, col) sequence. Raises on non-finite entries.
    """
    matrix = [[float(x) for x in row] for row in cost]
    n_rows = len(matrix)
    n_cols = len(matrix[0]) if n_rows else 0
    if n_rows == 0 or n_cols == 0:
        return []
    for r, row in enumerate(matrix):
        if len(row) != n_cols:
            raise ValueError(f"ragged cost matrix at row {r}")
        for c, x in enumerate(row):
            if not math.isfinite(x):
                raise ValueError(f"non-finite cost at ({r}, {c}): {x}")

    n = max(n_rows, n_cols)
    padded = [
        [matrix[r][c] if r < n_rows and c < n_cols else _PAD_COST for c in range(n)]
        for r in range(n)
    ]
    col_of_row, u, v = _solve_square(padded)
    best_total = _assignment_cost(padded, col_of_row)
    scale = max(1.0, max(abs(x) for row in padded for x in row))
    tol = 1e-9 * scale

    # Lexicographic refinement: a column can replace the chosen one only if
    # its edge is tight under the optimal potentials (complementary
    # slackness) and forcing it still completes to the optimal total.
    fixed_rows: list[int] = []
    fixed_cols: set[int] = set()
    fixed_cost = 0.0
    for r in range(n_rows):
        current = col_of_row[r]
        candidates = [
            c
            for c in range(min(current, n_cols))
            if c not in fixed_cols and padded[r][c] - u[r] - v[c] <= tol
        ]
        chosen = current
        for c in candidates:
            sub = [
                [padded[rr][cc] for cc in range(n) if cc not in fixed_cols and cc != c]
                for rr in range(n)
                if rr not in fixed_rows and rr != r
            ]
            sub_cols = [cc for cc in range(n) if cc not in fixed_cols and cc != c]
            sub_assign, _, _ = _solve_square(sub)
            total = fixed_cost + padded[r][c] + _assignment_cost(sub, sub_assign)
            if total <= best_total + tol:
                chosen = c
                # rebuild the remaining assignment consistently
                sub_rows = [rr for rr in range(n) if rr not in fixed_rows and rr != r]
                for sr, sc in zip(sub_rows, (sub_cols[j] for j in sub_assign)):
                    col_of_row[sr] = sc
                break
        col_of_row[r] = chosen
        fixed_rows.append(r)
        fixed_cols.add(chosen)
        fixed_cost += padded[r][chosen]

    return [
        (r, col_of_row[r])
        for r in range(n_rows)
        if col_of_row[r] < n_cols
    ]
