"""Bitstream container layout and coding-tree geometry shared by the
encoder and decoder.

Frames are padded to multiples of 4 by edge replication before coding.
Coding units that cross the padded frame edge are split implicitly (no
flag bit) and units entirely outside it are skipped entirely, so the
tree shape over boundary CTUs is a pure function of the header
dimensions and costs no signaling.
"""

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"RDMC"
VERSION = 1
HEADER_FMT = "<4sHIIHBB"  # magic, version, width, height, ctu_size, base_qp, flags
HEADER_SIZE = struct.calcsize(HEADER_FMT)

MIN_CU = 4
PAD_MULTIPLE = 4

CU_INSIDE = 0
CU_FORCED_SPLIT = 1
CU_OUTSIDE = 2


class CodecError(ValueError):
    """Raised for malformed bitstreams and invalid codec configuration."""


@dataclass(frozen=True)
class StreamHeader:
    width: int
    height: int
    ctu_size: int
    base_qp: int
    flags: int = 0


def pack_header(header: StreamHeader) -> bytes:
    return struct.pack(
        HEADER_FMT,
        MAGIC,
        VERSION,
        header.width,
        header.height,
        header.ctu_size,
        header.base_qp,
        header.flags,
    )


def unpack_header(data: bytes) -> StreamHeader:
    if len(data) < HEADER_SIZE:
        raise CodecError(f"stream too short for header: {len(data)} bytes")
    magic, version, width, height, ctu_size, base_qp, flags = struct.unpack_from(
        HEADER_FMT, data
    )
    if magic != MAGIC:
        raise CodecError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise CodecError(f"unsupported stream version {version}")
    if width <= 0 or height <= 0:
        raise CodecError(f"bad frame dimensions {width}x{height}")
    if base_qp > 51:
        raise CodecError(f"base QP {base_qp} out of range")
    return StreamHeader(width, height, ctu_size, base_qp, flags)


def padded_dims(width: int, height: int) -> tuple[int, int]:
    """Frame dimensions rounded up to the coding pad multiple."""
    pw = -(-width // PAD_MULTIPLE) * PAD_MULTIPLE
    ph = -(-height // PAD_MULTIPLE) * PAD_MULTIPLE
    return pw, ph


def pad_frame(samples: np.ndarray, pw: int, ph: int) -> np.ndarray:
    """Edge-replicate a raster out to the padded dimensions."""
    h, w = samples.shape
    return np.pad(samples, ((0, ph - h), (0, pw - w)), mode="edge")


def classify_cu(x: int, y: int, size: int, pw: int, ph: int) -> int:
    """Whether a CU square is coded whole, force-split, or skipped."""
    if x >= pw or y >= ph:
        return CU_OUTSIDE
    if x + size <= pw and y + size <= ph:
        return CU_INSIDE
    return CU_FORCED_SPLIT


def child_origins(x: int, y: int, size: int) -> tuple[tuple[int, int], ...]:
    """Quad-split child origins in coding order: TL, TR, BL, BR."""
    half = size // 2
    return ((x, y), (x + half, y), (x, y + half), (x + half, y + half))
