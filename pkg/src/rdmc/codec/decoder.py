"""Bitstream decoder mirroring the encoder's coding order and geometry."""

import numpy as np

from ..frame import BlockRegion, Frame
from .bitio import BitReader
from .entropy import read_coeffs
from .intra import REF_DEFAULT, predict_intra
from .stream import (
    CU_FORCED_SPLIT,
    CU_OUTSIDE,
    HEADER_SIZE,
    MIN_CU,
    child_origins,
    classify_cu,
    padded_dims,
    unpack_header,
)
from .transform import dequantize_inverse, reconstruct_block

MODE_BITS = 2


def _read_tree(
    reader: BitReader, recon: np.ndarray, x: int, y: int, size: int, qp: int
) -> None:
    ph, pw = recon.shape
    kind = classify_cu(x, y, size, pw, ph)
    if kind == CU_OUTSIDE:
        return
    if kind == CU_FORCED_SPLIT:
        for cx, cy in child_origins(x, y, size):
            _read_tree(reader, recon, cx, cy, size // 2, qp)
        return
    split = reader.read_bit() if size > MIN_CU else 0
    if split:
        for cx, cy in child_origins(x, y, size):
            _read_tree(reader, recon, cx, cy, size // 2, qp)
        return
    mode = reader.read_bits(MODE_BITS)
    levels = read_coeffs(reader, size)
    region = BlockRegion(x, y, size, size)
    pred = predict_intra(recon, region, mode)
    recon[y : y + size, x : x + size] = reconstruct_block(
        pred, dequantize_inverse(levels, qp)
    )


def decode_frame_details(data: bytes) -> tuple[Frame, np.ndarray]:
    """Decode a stream into the reconstructed frame and the per-CTU QP map."""
    header = unpack_header(data)
    pw, ph = padded_dims(header.width, header.height)
    recon = np.full((ph, pw), REF_DEFAULT, dtype=np.uint8)
    cols = -(-header.width // header.ctu_size)
    rows = -(-header.height // header.ctu_size)
    reader = BitReader(data, bit_offset=HEADER_SIZE * 8)
    qp_map = np.zeros(cols * rows, dtype=np.int64)
    prev_qp = header.base_qp
    for k in range(cols * rows):
        r, c = divmod(k, cols)
        qp = prev_qp + reader.read_se()
        prev_qp = qp
        qp_map[k] = qp
        _read_tree(
            reader, recon, c * header.ctu_size, r * header.ctu_size, header.ctu_size, qp
        )
    return Frame(recon[: header.height, : header.width]), qp_map


def decode_frame(data: bytes) -> Frame:
    """Reconstructed frame from an encoded stream."""
    frame, _ = decode_frame_details(data)
    return frame
