"""Coefficient entropy coding: zigzag scan with (run, level) events.

Syntax per block: for each nonzero coefficient in zigzag order, a '1'
marker, the zero-run before it in unary, then the level in signed
exp-Golomb; a final '0' marker ends the block.  An all-zero block is
the single end-of-block bit.
"""

from functools import lru_cache

import numpy as np

from .bitio import BitReader, BitWriter, BitstreamError, se_length


@lru_cache(maxsize=None)
def zigzag_order(n: int) -> tuple[tuple[int, int], ...]:
    """Diagonal (row, col) visiting order for an n x n block."""
    order = []
    for s in range(2 * n - 1):
        diagonal = [(i, s - i) for i in range(max(0, s - n + 1), min(n, s + 1))]
        if s % 2 == 0:
            diagonal.reverse()
        order.extend(diagonal)
    return tuple(order)


def scan_events(coeffs: np.ndarray) -> list[tuple[int, int]]:
    """(zero-run, level) pairs for the nonzero coefficients in scan order."""
    n = coeffs.shape[0]
    events = []
    run = 0
    for r, c in zigzag_order(n):
        level = int(coeffs[r, c])
        if level == 0:
            run += 1
        else:
            events.append((run, level))
            run = 0
    return events


def coeff_bits(coeffs: np.ndarray) -> int:
    """Exact coded bit length of a coefficient block."""
    total = 1  # end-of-block marker
    for run, level in scan_events(coeffs):
        total += 1 + (run + 1) + se_length(level)
    return total


def write_coeffs(writer: BitWriter, coeffs: np.ndarray) -> None:
    for run, level in scan_events(coeffs):
        writer.write_bit(1)
        writer.write_unary(run)
        writer.write_se(level)
    writer.write_bit(0)


def read_coeffs(reader: BitReader, n: int) -> np.ndarray:
    """Decode one n x n coefficient block."""
    coeffs = np.zeros((n, n), dtype=np.int32)
    order = zigzag_order(n)
    pos = 0
    while reader.read_bit():
        run = reader.read_unary()
        pos += run
        if pos >= len(order):
            raise BitstreamError("coefficient run past end of block")
        level = reader.read_se()
        if level == 0:
            raise BitstreamError("zero level in coefficient event")
        r, c = order[pos]
        coeffs[r, c] = level
        pos += 1
    return coeffs
