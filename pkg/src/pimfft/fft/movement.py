"""Data movement built from column NOT and row NOT steps.

Column steps move data between columns of the same rows; row steps move data
between rows of the same columns. Every NOT inverts, so each move uses an even
number of steps. Movement programs may span partitions (the partition
transistors conduct); they always run serially.

Costs below use ``Wc`` for the columns of one complex element:

* :func:`vertical_exchange`  ``6 Wc`` per unit ``+ r`` row steps per batch;
* :func:`swap_regions`       ``4 Wc``;
* :func:`vertical_permute`   ``5 Wc + moved rows``;
* :func:`rotate_slots`       ``2 Wc`` per slot on a cycle.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..crossbar import Crossbar, Program
from ..kernels import OP_NOT

_PROGS: dict = {}


def _not_program(pairs: tuple) -> Program:
    prog = _PROGS.get(pairs)
    if prog is None:
        prog = Program([(OP_NOT, s, 0, d) for s, d in pairs], "move")
        _PROGS[pairs] = prog
    return prog


def col_not(xb: Crossbar, pairs: Sequence[tuple[int, int]], rows) -> None:
    """One NOT step per ``(src, dst)`` column pair over ``rows`` (program order)."""
    rows = np.arange(xb.rows, dtype=np.int64) if rows is None else np.asarray(rows, dtype=np.int64)
    if rows.size == 0 or not pairs:
        return
    xb.run_program(_not_program(tuple((int(s), int(d)) for s, d in pairs)), rows, bridge=True)


def _pairs(src, dst):
    return list(zip(src, dst))


def row_moves(xb: Crossbar, moves: Sequence[tuple[int, int, Sequence[int]]]) -> None:
    """Row NOT steps ``(src_row, dst_row, cols)`` in order."""
    if not moves:
        return
    gates = [(OP_NOT, s, 0, d) for s, d, _ in moves]
    xb.run_row_program(gates, [np.asarray(c, dtype=np.int64) for _, _, c in moves])


def swap_regions(xb: Crossbar, a: Sequence[int], b: Sequence[int], rows, scratch: Sequence[int]) -> None:
    """Exchange two equal-width column regions on ``rows`` through ``2|a|`` scratch columns."""
    w = len(a)
    t, v = scratch[:w], scratch[w : 2 * w]
    col_not(xb, _pairs(a, t) + _pairs(b, v) + _pairs(t, b) + _pairs(v, a), rows)


def vertical_exchange(
    xb: Crossbar,
    p_regions: Sequence[Sequence[int]],
    q_regions: Sequence[Sequence[int]],
    bit: int,
    scratch: Sequence[Sequence[int]],
) -> None:
    """Swap region ``P_j`` of rows with ``bit`` clear and region ``Q_j`` of their partner rows.

    Row ``R`` (bit clear) pairs with ``R + 2**bit``. ``scratch[j]`` provides
    ``3 Wc`` columns for pair ``j``; pairs whose scratch overlaps must be
    issued in separate calls.
    """
    rows = np.arange(xb.rows, dtype=np.int64)
    lo = rows[((rows >> bit) & 1) == 0]
    hi = lo + (1 << bit)
    ts, vs = [], []
    for P, Q, S in zip(p_regions, q_regions, scratch):
        w = len(P)
        T, V = S[:w], S[w : 2 * w]
        col_not(xb, _pairs(P, T), lo)
        col_not(xb, _pairs(Q, V), hi)
        ts.extend(T)
        vs.extend(V)
    moves = []
    for a, b in zip(lo, hi):
        moves.append((int(a), int(b), ts))
        moves.append((int(b), int(a), vs))
    row_moves(xb, moves)
    for P, Q, S in zip(p_regions, q_regions, scratch):
        w = len(P)
        T, V, U = S[:w], S[w : 2 * w], S[2 * w : 3 * w]
        col_not(xb, _pairs(T, U) + _pairs(U, Q), hi)
        col_not(xb, _pairs(V, U) + _pairs(U, P), lo)


def vertical_permute(xb: Crossbar, cols: Sequence[int], src: np.ndarray, dst: np.ndarray, scratch: Sequence[int]) -> None:
    """Move the contents of ``cols`` from row ``src[i]`` to row ``dst[i]``.

    ``(src, dst)`` must be a permutation of a row set. Each cycle
    ``a1 -> a2 -> ... -> ak -> a1`` is copied inverted into ``T`` (and its
    last row into ``T2``), shifted by row NOTs in an order that reads every
    row before overwriting it, then written back through ``U``.
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    keep = src != dst
    src, dst = src[keep], dst[keep]
    if src.size == 0:
        return
    w = len(cols)
    T, T2, U = scratch[:w], scratch[w : 2 * w], scratch[2 * w : 3 * w]
    nxt = dict(zip(src.tolist(), dst.tolist()))
    seen: set = set()
    cycles = []
    for a in src.tolist():
        if a in seen:
            continue
        cyc = [a]
        seen.add(a)
        b = nxt[a]
        while b != a:
            cyc.append(b)
            seen.add(b)
            b = nxt[b]
        cycles.append(cyc)
    starts = np.array([c[0] for c in cycles], dtype=np.int64)
    ends = np.array([c[-1] for c in cycles], dtype=np.int64)
    col_not(xb, _pairs(cols, T), src)
    col_not(xb, _pairs(cols, T2), ends)
    moves = []
    for cyc in cycles:
        moves.append((cyc[-1], cyc[0], T2))
        for i in range(len(cyc) - 2, -1, -1):
            moves.append((cyc[i], cyc[i + 1], T))
    row_moves(xb, moves)
    rest = np.setdiff1d(src, starts)
    col_not(xb, _pairs(T, U), rest)
    col_not(xb, _pairs(T2, U), starts)
    col_not(xb, _pairs(U, cols), src)


def rotate_slots(xb: Crossbar, slot_cols: Sequence[Sequence[int]], perm: Sequence[int], rows, scratch: Sequence[int]) -> None:
    """In every row of ``rows`` move slot ``s`` to slot ``perm[s]``."""
    w = len(slot_cols[0])
    T, U = scratch[:w], scratch[w : 2 * w]
    done = [False] * len(perm)
    for s0 in range(len(perm)):
        if done[s0] or perm[s0] == s0:
            done[s0] = True
            continue
        cyc = [s0]
        done[s0] = True
        s = perm[s0]
        while s != s0:
            cyc.append(s)
            done[s] = True
            s = perm[s]
        pairs = _pairs(slot_cols[cyc[-1]], T)
        for i in range(len(cyc) - 1, 0, -1):
            pairs += _pairs(slot_cols[cyc[i - 1]], U) + _pairs(U, slot_cols[cyc[i]])
        pairs += _pairs(T, slot_cols[cyc[0]])
        col_not(xb, pairs, rows)


# -- generic grid permutation -------------------------------------------------
def _euler_split(edges: np.ndarray, src: np.ndarray, dst: np.ndarray, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a regular bipartite multigraph of even degree into two halves of equal degree."""
    adj: dict = defaultdict(list)
    for e in edges.tolist():
        adj[("L", int(src[e]))].append(e)
        adj[("R", int(dst[e]))].append(e)
    used: set = set()
    ptr: dict = defaultdict(int)
    half_a, half_b = [], []
    for start in list(adj.keys()):
        while True:
            lst = adj[start]
            while ptr[start] < len(lst) and lst[ptr[start]] in used:
                ptr[start] += 1
            if ptr[start] == len(lst):
                break
            node, flip = start, 0
            while True:
                lst = adj[node]
                while ptr[node] < len(lst) and lst[ptr[node]] in used:
                    ptr[node] += 1
                if ptr[node] == len(lst):
                    break
                e = lst[ptr[node]]
                used.add(e)
                (half_a if flip == 0 else half_b).append(e)
                flip ^= 1
                node = ("R", int(dst[e])) if node[0] == "L" else ("L", int(src[e]))
    return np.array(half_a, dtype=np.int64), np.array(half_b, dtype=np.int64)


def edge_color(src_row: np.ndarray, dst_row: np.ndarray, degree: int) -> np.ndarray:
    """Color edges of a ``degree``-regular bipartite multigraph so each row sees every color once per side."""
    color = np.zeros(src_row.size, dtype=np.int64)
    groups = [np.arange(src_row.size)]
    d = degree
    while d > 1:
        nxt = []
        for g in groups:
            a, b = _euler_split(g, src_row, dst_row, 0)
            nxt += [a, b]
        groups = nxt
        d //= 2
    for c, g in enumerate(groups):
        color[g] = c
    return color


def permute_grid(
    xb: Crossbar,
    slot_cols: Sequence[Sequence[int]],
    src_row: np.ndarray,
    src_slot: np.ndarray,
    dst_row: np.ndarray,
    dst_slot: np.ndarray,
    scratch: Sequence[int],
) -> None:
    """Apply an arbitrary permutation of (row, slot) cells.

    Three phases: an in-row slot permutation to an intermediate color, a
    vertical permutation inside each color, and an in-row permutation to the
    final slot. Colors come from an edge coloring of the row-to-row multigraph;
    colors are matched to slots to minimize in-row moves.
    """
    S = len(slot_cols)
    src_row, src_slot = np.asarray(src_row), np.asarray(src_slot)
    dst_row, dst_slot = np.asarray(dst_row), np.asarray(dst_slot)
    if S == 1:
        vertical_permute(xb, slot_cols[0], src_row, dst_row, scratch)
        return
    raw = edge_color(src_row, dst_row, S)
    cost = np.zeros((S, S))
    for m in range(S):
        sel = raw == m
        for c in range(S):
            cost[m, c] = np.sum(src_slot[sel] != c) + np.sum(dst_slot[sel] != c)
    rows_m, cols_c = linear_sum_assignment(cost)
    cmap = np.empty(S, dtype=np.int64)
    cmap[rows_m] = cols_c
    color = cmap[raw]

    def in_row(rows, from_slot, to_slot):
        groups: dict = defaultdict(list)
        order = np.lexsort((from_slot, rows))
        r_sorted, f_sorted, t_sorted = rows[order], from_slot[order], to_slot[order]
        for i in range(0, r_sorted.size, S):
            perm = [0] * S
            for f, t in zip(f_sorted[i : i + S], t_sorted[i : i + S]):
                perm[int(f)] = int(t)
            groups[tuple(perm)].append(int(r_sorted[i]))
        for perm, rws in sorted(groups.items()):
            if any(p != s for s, p in enumerate(perm)):
                rotate_slots(xb, slot_cols, perm, np.array(rws), scratch)

    in_row(src_row, src_slot, color)
    for c in range(S):
        sel = color == c
        vertical_permute(xb, slot_cols[c], src_row[sel], dst_row[sel], scratch)
    in_row(dst_row, color, dst_slot)
