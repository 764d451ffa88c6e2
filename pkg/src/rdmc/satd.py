"""Sum of absolute Hadamard-transformed differences, the texture-complexity
proxy used by the bit allocator.

Works on 8x8 tiles with the order-8 Sylvester Hadamard matrix; the DC
coefficient is excluded so flat blocks score zero, and the magnitude sum
is scaled by 1/8.  Larger regions are tiled; partial border tiles are
edge-replicated to 8x8 before transform.
"""

import numpy as np

from .frame import BlockRegion, Frame, extract_block

TILE = 8

# Sylvester construction: H2 = [[1, 1], [1, -1]], H8 = H2 (x) H2 (x) H2.
_H2 = np.array([[1, 1], [1, -1]], dtype=np.int64)
HADAMARD8 = np.kron(np.kron(_H2, _H2), _H2)


def hadamard8(block: np.ndarray) -> np.ndarray:
    """2-D order-8 Hadamard transform C = H X H^T, unscaled integer output."""
    x = np.asarray(block, dtype=np.int64)
    if x.shape != (TILE, TILE):
        raise ValueError(f"hadamard8 needs an 8x8 block, got {x.shape}")
    return HADAMARD8 @ x @ HADAMARD8


def block_satd(block: np.ndarray) -> float:
    """SATD of one 8x8 tile: (sum |C| minus the DC magnitude) / 8.

    Excluding DC makes the score invariant to constant brightness
    offsets; a flat tile scores exactly zero.
    """
    c = hadamard8(block)
    total = np.abs(c).sum() - abs(int(c[0, 0]))
    return float(total) / TILE


def _tile_satd_sum(samples: np.ndarray) -> float:
    """Sum of block_satd over the 8x8 tiling of a region, batched."""
    h, w = samples.shape
    th = -(-h // TILE) * TILE
    tw = -(-w // TILE) * TILE
    if (th, tw) != (h, w):
        samples = np.pad(samples, ((0, th - h), (0, tw - w)), mode="edge")
    x = samples.astype(np.int64)
    tiles = x.reshape(th // TILE, TILE, tw // TILE, TILE).transpose(0, 2, 1, 3)
    c = np.einsum("ij,rcjk,kl->rcil", HADAMARD8, tiles, HADAMARD8)
    totals = np.abs(c).sum(axis=(2, 3)) - np.abs(c[:, :, 0, 0])
    return float(totals.sum()) / TILE


def ctu_satd(frame: Frame, region: BlockRegion) -> float:
    """SATD of a frame region; partial border tiles padded by edge replication."""
    block = extract_block(frame, region)
    return _tile_satd_sum(block)


def frame_satd_map(frame: Frame, grid) -> np.ndarray:
    """Per-CTU SATD for every CTU of a grid, in index order."""
    return np.array([ctu_satd(frame, r) for _, r in grid.regions()], dtype=np.float64)
