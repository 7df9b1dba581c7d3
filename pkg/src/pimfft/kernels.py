"""Bit-packed gate kernels.

Crossbar state is held column-major as ``uint64`` words: ``bits[col, w]``
stores rows ``64*w .. 64*w + 63`` of column ``col`` (row ``r`` is bit
``r & 63`` of word ``r >> 6``). Padding bits past the last row stay zero.
"""

import numba
import numpy as np

OP_NOR = 0
OP_NOT = 1

WORD = 64
ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


def n_words(rows: int) -> int:
    return (rows + WORD - 1) // WORD


def row_mask(rows: int, selected=None) -> np.ndarray:
    """Packed mask for a row subset (``None`` selects every row)."""
    nw = n_words(rows)
    if selected is None:
        sel = np.ones(rows, dtype=bool)
    else:
        sel = np.zeros(rows, dtype=bool)
        sel[np.asarray(selected)] = True
    return pack_bits(sel.astype(np.uint8)[None, :], nw)[0]


def pack_bits(mat: np.ndarray, nw: int) -> np.ndarray:
    """Pack a ``(k, rows)`` 0/1 matrix into ``(k, nw)`` uint64 words."""
    k, rows = mat.shape
    padded = np.zeros((k, nw * WORD), dtype=np.uint8)
    padded[:, :rows] = mat
    by = np.packbits(padded.reshape(k, nw, WORD), axis=2, bitorder="little")
    return by.view(np.uint64).reshape(k, nw).copy()


def unpack_bits(words: np.ndarray, rows: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`; returns ``(k, rows)`` uint8."""
    k, nw = words.shape
    by = np.ascontiguousarray(words).view(np.uint8).reshape(k, nw * 8)
    return np.unpackbits(by, axis=1, bitorder="little")[:, :rows]


@numba.njit(cache=True)
def run_column_program(bits, prog, mask, offsets):
    """Execute column gates ``prog[g] = (op, a, b, out)`` on the masked rows.

    Each gate is replayed once per entry of ``offsets`` (partition copies).
    """
    nw = bits.shape[1]
    full = True
    for w in range(nw - 1):
        if mask[w] != ALL_ONES:
            full = False
    for g in range(prog.shape[0]):
        op = prog[g, 0]
        for k in range(offsets.shape[0]):
            off = offsets[k]
            a = prog[g, 1] + off
            o = prog[g, 3] + off
            if op == OP_NOR:
                b = prog[g, 2] + off
                if full:
                    for w in range(nw):
                        bits[o, w] = (bits[o, w] & ~mask[w]) | (~(bits[a, w] | bits[b, w]) & mask[w])
                else:
                    for w in range(nw):
                        m = mask[w]
                        if m != 0:
                            bits[o, w] = (bits[o, w] & ~m) | (~(bits[a, w] | bits[b, w]) & m)
            else:
                for w in range(nw):
                    m = mask[w]
                    if m != 0:
                        bits[o, w] = (bits[o, w] & ~m) | (~bits[a, w] & m)


@numba.njit(cache=True)
def run_row_program(bits, prog, colptr, colidx):
    """Execute row gates ``prog[g] = (op, ra, rb, rout)`` over per-gate column lists."""
    one = np.uint64(1)
    for g in range(prog.shape[0]):
        op = prog[g, 0]
        ra = prog[g, 1]
        rb = prog[g, 2]
        ro = prog[g, 3]
        wa, sa = ra >> 6, np.uint64(ra & 63)
        wb, sb = rb >> 6, np.uint64(rb & 63)
        wo, so = ro >> 6, np.uint64(ro & 63)
        for j in range(colptr[g], colptr[g + 1]):
            c = colidx[j]
            x = (bits[c, wa] >> sa) & one
            if op == OP_NOR:
                x = x | ((bits[c, wb] >> sb) & one)
            x = x ^ one
            bits[c, wo] = (bits[c, wo] & ~(one << so)) | (x << so)


@numba.njit(cache=True)
def popcount_rows(mask):
    total = 0
    for w in range(mask.shape[0]):
        x = mask[w]
        while x:
            x &= x - np.uint64(1)
            total += 1
    return total
