"""Optimal linear assignment with gating and deterministic tie-breaking.

The solver is a shortest-augmenting-path Hungarian method that keeps its dual
potentials. Among all optimal assignments it returns the lexicographically
smallest one (row 0 gets the lowest feasible column, then row 1, ...): every
optimal assignment is a perfect matching on the zero-reduced-cost edges, so
ties are resolved by walking alternating cycles on that subgraph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Assignment:
    matches: list[tuple[int, int]] = field(default_factory=list)
    unmatched_rows: list[int] = field(default_factory=list)
    unmatched_cols: list[int] = field(default_factory=list)

    def total(self, cost) -> float:
        cost = np.asarray(cost, dtype=float)
        return float(sum(cost[i, j] for i, j in self.matches))


def _hungarian(c: np.ndarray):
    """Min-cost perfect matching on a square matrix. Returns (col_of_row, u, v)."""
    n = c.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=int)  # p[j]: 1-based row owning column j, 0 = free
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = c[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            masked = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col_of_row = np.empty(n, dtype=int)
    col_of_row[p[1:] - 1] = np.arange(n)
    return col_of_row, u[1:], v[1:]


def _lex_smallest(tight: np.ndarray, col_of_row: np.ndarray) -> np.ndarray:
    """Lexicographically smallest perfect matching within the ``tight`` edge set."""
    n = tight.shape[0]
    match = col_of_row.copy()
    owner = np.empty(n, dtype=int)
    owner[match] = np.arange(n)
    fixed = np.zeros(n, dtype=bool)
    for i in range(n):
        fixed[i] = True
        for j in np.flatnonzero(tight[i]):
            if j >= match[i]:
                break
            r = owner[j]
            if fixed[r]:
                continue
            # move i -> j; row r must reach the column i releases via unfixed rows
            target = match[i]
            parent = {}
            stack = [r]
            seen_cols = {j}
            found = None
            while stack and found is None:
                row = stack.pop()
                for c in np.flatnonzero(tight[row]):
                    if c in seen_cols:
                        continue
                    seen_cols.add(c)
                    parent[c] = row
                    if c == target:
                        found = c
                        break
                    nxt = owner[c]
                    if not fixed[nxt]:
                        stack.append(nxt)
            if found is None:
                continue
            c = found
            while True:
                row = parent[c]
                prev = match[row]
                match[row] = c
                owner[c] = row
                if row == r:
                    break
                c = prev
            match[i] = j
            owner[j] = i
            break
    return match


def _solve_square(c: np.ndarray) -> np.ndarray:
    col_of_row, u, v = _hungarian(c)
    reduced = c - u[:, None] - v[None, :]
    scale = max(1.0, float(np.max(np.abs(c))))
    tight = reduced <= 1e-9 * scale
    tight[np.arange(len(col_of_row)), col_of_row] = True
    return _lex_smallest(tight, col_of_row)


def solve_assignment(cost, gate: float | None = None, similarity=None) -> Assignment:
    """Minimum-total-cost one-to-one assignment.

    Without a gate this is the classic rectangular problem: ``min(n, m)``
    pairs at minimum total cost.

    With a gate, pairs whose similarity (default ``-cost``) is below it are
    inadmissible, and the result is a minimum-cost partial matching over the
    admissible pairs where leaving a row or column unmatched costs 0. Groups of
    admissible pairs that share no row or column are solved independently.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        cost = cost.reshape(0, 0) if cost.size == 0 else cost.reshape(1, -1)
    n, m = cost.shape
    if n == 0 or m == 0:
        return Assignment([], list(range(n)), list(range(m)))
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    if gate is None:
        size = max(n, m)
        square = np.zeros((size, size))
        square[:n, :m] = cost
        col_of_row = _solve_square(square)
        matches = [(i, int(col_of_row[i])) for i in range(n) if col_of_row[i] < m]
    else:
        sim = -cost if similarity is None else np.asarray(similarity, dtype=float)
        matches = _solve_gated(cost, sim >= gate)
    matches.sort()
    matched_rows = {i for i, _ in matches}
    matched_cols = {j for _, j in matches}
    return Assignment(
        matches,
        [i for i in range(n) if i not in matched_rows],
        [j for j in range(m) if j not in matched_cols],
    )


def _solve_gated(cost: np.ndarray, admissible: np.ndarray):
    matches = []
    for rows, cols in _components(admissible):
        sub = cost[np.ix_(rows, cols)]
        ok = admissible[np.ix_(rows, cols)]
        nr, nc = len(rows), len(cols)
        if nr == 1 or nc == 1:
            masked = np.where(ok, sub, np.inf)
            flat = int(np.argmin(masked))  # lowest index among ties
            if masked.flat[flat] <= 0.0:
                matches.append((rows[flat // nc], cols[flat % nc]))
            continue
        # partial matching: each row may take its own dummy column and each
        # column its own dummy row, both at cost 0
        big = float(np.abs(sub[ok]).sum()) + 1.0
        square = np.zeros((nr + nc, nr + nc))
        square[:nr, :nc] = np.where(ok, sub, big)
        square[:nr, nc:] = big
        square[np.arange(nr), nc + np.arange(nr)] = 0.0
        square[nr:, :nc] = big
        square[nr + np.arange(nc), np.arange(nc)] = 0.0
        col_of_row = _solve_square(square)
        for r in range(nr):
            c = int(col_of_row[r])
            if c < nc and ok[r, c]:
                matches.append((rows[r], cols[c]))
    return matches


def _components(admissible: np.ndarray):
    """Connected components (row list, col list) of the admissible bipartite graph."""
    n, m = admissible.shape
    if admissible.all():
        return [(list(range(n)), list(range(m)))]
    parent = list(range(n + m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in zip(*np.nonzero(admissible)):
        ra, rb = find(int(i)), find(n + int(j))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, tuple[list, list]] = {}
    for i in range(n):
        if admissible[i].any():
            groups.setdefault(find(i), ([], []))[0].append(i)
    for j in range(m):
        if admissible[:, j].any():
            groups.setdefault(find(n + j), ([], []))[1].append(j)
    return [groups[k] for k in sorted(groups)]
