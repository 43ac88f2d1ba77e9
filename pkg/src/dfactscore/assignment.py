"""Injective assignment maximizing total value, via the classic
potentials-based Hungarian method. Costs stay integers throughout, so
results are exact."""

from __future__ import annotations

from typing import Optional, Sequence

_INF = float("inf")


def _min_cost_assignment(cost: list[list[int]]) -> list[int]:
    """Column index assigned to each row for an n x m cost matrix with
    n <= m, minimizing total cost. O(n^2 m)."""
    n = len(cost)
    m = len(cost[0])
    u = [0] * (n + 1)
    v = [0] * (m + 1)
    match = [0] * (m + 1)  # match[j] = 1-based row occupying column j; 0 = free
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv: list[float] = [_INF] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = _INF
            j1 = -1
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    row_to_col = [-1] * n
    for j in range(1, m + 1):
        if match[j]:
            row_to_col[match[j] - 1] = j - 1
    return row_to_col


def max_sum_assignment(matrix: Sequence[Sequence[int]]) -> list[Optional[int]]:
    """Assign each row a distinct column maximizing the total value.

    When there are more rows than columns the matrix is padded with
    zero-value columns; rows landing on padding come back as None.
    An empty column set yields all-None.
    """
    n_rows = len(matrix)
    if n_rows == 0:
        return []
    n_cols = len(matrix[0])
    if n_cols == 0:
        return [None] * n_rows
    width = max(n_rows, n_cols)
    cost = [
        [-(row[j] if j < n_cols else 0) for j in range(width)]
        for row in matrix
    ]
    assigned = _min_cost_assignment(cost)
    return [col if col < n_cols else None for col in assigned]
