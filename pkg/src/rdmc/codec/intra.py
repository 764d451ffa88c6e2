"""Intra prediction from reconstructed top/left neighbors.

References outside the frame read the mid-gray default 128; uncoded
areas inside the frame also read 128 because the working reconstruction
is initialized to that value, so encoder and decoder see identical
references without availability signaling.
"""

import numpy as np

from ..frame import BlockRegion

MODE_DC = 0
MODE_HORIZONTAL = 1
MODE_VERTICAL = 2
MODE_PLANAR = 3
MODES = (MODE_DC, MODE_HORIZONTAL, MODE_VERTICAL, MODE_PLANAR)
MODE_NAMES = {0: "DC", 1: "HORIZONTAL", 2: "VERTICAL", 3: "PLANAR"}

REF_DEFAULT = 128


def gather_references(recon: np.ndarray, region: BlockRegion):
    """Top row, left column and their one-past extensions for a region.

    Returns (top[w], left[h], top_right, bottom_left) as int arrays and
    ints.  Out-of-frame positions read 128; the diagonal extensions
    replicate the last in-frame reference when they fall outside.
    """
    fh, fw = recon.shape
    x, y, w, h = region.x, region.y, region.w, region.h
    if y > 0:
        top = recon[y - 1, x : x + w].astype(np.int64)
        top_right = int(recon[y - 1, x + w]) if x + w < fw else int(top[-1])
    else:
        top = np.full(w, REF_DEFAULT, dtype=np.int64)
        top_right = REF_DEFAULT
    if x > 0:
        left = recon[y : y + h, x - 1].astype(np.int64)
        bottom_left = int(recon[y + h, x - 1]) if y + h < fh else int(left[-1])
    else:
        left = np.full(h, REF_DEFAULT, dtype=np.int64)
        bottom_left = REF_DEFAULT
    return top, left, top_right, bottom_left


def predict_intra(recon: np.ndarray, region: BlockRegion, mode: int) -> np.ndarray:
    """Predicted block (uint8) for one of the four intra modes."""
    top, left, top_right, bottom_left = gather_references(recon, region)
    w, h = region.w, region.h
    if mode == MODE_DC:
        total = int(top.sum() + left.sum())
        count = w + h
        dc = (total + count // 2) // count
        pred = np.full((h, w), dc, dtype=np.int64)
    elif mode == MODE_HORIZONTAL:
        pred = np.repeat(left[:, np.newaxis], w, axis=1)
    elif mode == MODE_VERTICAL:
        pred = np.repeat(top[np.newaxis, :], h, axis=0)
    elif mode == MODE_PLANAR:
        # bilinear blend of the reference rim, weighted toward the near edges
        xs = np.arange(w, dtype=np.int64)
        ys = np.arange(h, dtype=np.int64)
        horiz = (w - 1 - xs)[np.newaxis, :] * left[:, np.newaxis] + (xs + 1)[
            np.newaxis, :
        ] * top_right
        vert = (h - 1 - ys)[:, np.newaxis] * top[np.newaxis, :] + (ys + 1)[
            :, np.newaxis
        ] * bottom_left
        pred = (horiz + vert + w) >> int(np.log2(w) + 1)
    else:
        raise ValueError(f"unknown intra mode {mode}")
    return np.clip(pred, 0, 255).astype(np.uint8)
