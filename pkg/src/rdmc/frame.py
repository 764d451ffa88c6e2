"""Image raster model: PGM I/O, CTU grid partitioning, block geometry.

A frame is a single-plane 8-bit luma raster.  All block and region
coordinates are in pixels with (0, 0) at the top-left corner; numpy
arrays are indexed [row, col] == [y, x].
"""

from dataclasses import dataclass

import numpy as np

VALID_CTU_SIZES = (16, 32, 64, 128)


class FrameFormatError(ValueError):
    """Raised for malformed or unsupported image files."""


class RegionError(ValueError):
    """Raised for invalid block-region requests."""


@dataclass(frozen=True)
class BlockRegion:
    """Axis-aligned pixel rectangle: top-left (x, y), extent w x h."""

    x: int
    y: int
    w: int
    h: int

    @property
    def area(self) -> int:
        return self.w * self.h

    def intersect(self, other: "BlockRegion") -> "BlockRegion | None":
        """Intersection rectangle, or None when disjoint (edge-touching counts as disjoint)."""
        x0 = max(self.x, other.x)
        y0 = max(self.y, other.y)
        x1 = min(self.x + self.w, other.x + other.w)
        y1 = min(self.y + self.h, other.y + other.h)
        if x1 <= x0 or y1 <= y0:
            return None
        return BlockRegion(x0, y0, x1 - x0, y1 - y0)


class Frame:
    """Immutable 8-bit single-plane raster.

    Samples are stored row-major as a (height, width) uint8 array.
    """

    __slots__ = ("_samples",)

    def __init__(self, samples: np.ndarray):
        arr = np.asarray(samples)
        if arr.ndim != 2:
            raise ValueError(f"frame samples must be 2-D, got shape {arr.shape}")
        if arr.size == 0:
            raise ValueError("frame must contain at least one sample")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255):
                raise ValueError("samples outside [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "_samples", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Frame is immutable")

    @property
    def samples(self) -> np.ndarray:
        return self._samples

    @property
    def width(self) -> int:
        return self._samples.shape[1]

    @property
    def height(self) -> int:
        return self._samples.shape[0]

    @property
    def region(self) -> BlockRegion:
        return BlockRegion(0, 0, self.width, self.height)

    def __eq__(self, other) -> bool:
        return isinstance(other, Frame) and np.array_equal(self._samples, other._samples)

    def __hash__(self):
        return hash((self.width, self.height, self._samples.tobytes()))

    def __repr__(self) -> str:
        return f"Frame({self.width}x{self.height})"


def _read_header_tokens(data: bytes, count: int, start: int) -> tuple[list[int], int]:
    """Read whitespace-separated integer tokens, tolerating '#' comment lines."""
    tokens: list[int] = []
    i = start
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i] == ord("#"):
            while i < n and data[i] != ord("\n"):
                i += 1
            continue
        j = i
        while j < n and not data[j : j + 1].isspace():
            j += 1
        if j == i:
            raise FrameFormatError("malformed header: missing field")
        tok = data[i:j]
        if not tok.isdigit():
            raise FrameFormatError(f"malformed header: non-numeric field {tok!r}")
        tokens.append(int(tok))
        i = j
    return tokens, i


def load_image(path) -> Frame:
    """Load a binary PGM (P5) file; P6 color input is converted to luma.

    P6 conversion uses BT.601 weights with round-to-nearest:
    Y = round(0.299 R + 0.587 G + 0.114 B).

    Raises:
        FrameFormatError: unsupported magic, malformed header, maxval != 255,
            or truncated payload; each condition carries a distinct message.
    """
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 2:
        raise FrameFormatError("malformed header: file too short")
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise FrameFormatError(f"unsupported format: magic {magic!r} (binary P5/P6 required)")
    try:
        (width, height, maxval), pos = _read_header_tokens(data, 3, 2)
    except FrameFormatError:
        raise
    if width <= 0 or height <= 0:
        raise FrameFormatError("malformed header: non-positive dimensions")
    if maxval != 255:
        raise FrameFormatError(f"unsupported maxval {maxval} (must be 255)")
    # exactly one whitespace byte separates the header from the payload
    pos += 1
    channels = 1 if magic == b"P5" else 3
    need = width * height * channels
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise FrameFormatError(
            f"truncated payload: expected {need} bytes, found {len(payload)}"
        )
    raster = np.frombuffer(payload, dtype=np.uint8, count=need)
    if channels == 1:
        samples = raster.reshape(height, width)
    else:
        rgb = raster.reshape(height, width, 3).astype(np.float64)
        luma = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
        samples = np.clip(np.round(luma), 0, 255).astype(np.uint8)
    return Frame(samples)


def store_image(frame: Frame, path) -> None:
    """Write a frame as a canonical binary PGM (P5, maxval 255)."""
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header)
        f.write(frame.samples.tobytes())


@dataclass(frozen=True)
class CtuGrid:
    """Raster-ordered CTU partition of a frame.

    CTU index k counts left-to-right, top-to-bottom; border CTUs are
    clipped to the frame bounds.
    """

    ctu_size: int
    cols: int
    rows: int
    frame_width: int
    frame_height: int

    def __len__(self) -> int:
        return self.cols * self.rows

    def region(self, k: int) -> BlockRegion:
        """Clipped rectangle of CTU k."""
        if not 0 <= k < len(self):
            raise IndexError(f"CTU index {k} out of range [0, {len(self)})")
        r, c = divmod(k, self.cols)
        x = c * self.ctu_size
        y = r * self.ctu_size
        return BlockRegion(
            x, y, min(self.ctu_size, self.frame_width - x), min(self.ctu_size, self.frame_height - y)
        )

    def regions(self):
        for k in range(len(self)):
            yield k, self.region(k)

    def neighbors4(self, k: int) -> list[int]:
        """4-adjacent CTU indices (left, right, top, bottom) that exist."""
        r, c = divmod(k, self.cols)
        out = []
        if c > 0:
            out.append(k - 1)
        if c < self.cols - 1:
            out.append(k + 1)
        if r > 0:
            out.append(k - self.cols)
        if r < self.rows - 1:
            out.append(k + self.cols)
        return out

    def adjacent_pairs(self) -> list[tuple[int, int]]:
        """All 4-adjacent index pairs (i, j) with i < j."""
        pairs = []
        for k in range(len(self)):
            r, c = divmod(k, self.cols)
            if c < self.cols - 1:
                pairs.append((k, k + 1))
            if r < self.rows - 1:
                pairs.append((k, k + self.cols))
        return pairs

    def are_adjacent(self, i: int, j: int) -> bool:
        return j in self.neighbors4(i)


def partition_ctus(frame: Frame, ctu_size: int = 64) -> CtuGrid:
    """Partition a frame into a raster-ordered grid of clipped CTUs.

    Raises:
        ValueError: ctu_size not one of 16/32/64/128, or larger than both
            frame dimensions.
    """
    if ctu_size not in VALID_CTU_SIZES:
        raise ValueError(f"ctu_size must be one of {VALID_CTU_SIZES}, got {ctu_size}")
    if ctu_size > frame.width and ctu_size > frame.height:
        raise ValueError(
            f"ctu_size {ctu_size} exceeds both frame dimensions {frame.width}x{frame.height}"
        )
    cols = -(-frame.width // ctu_size)
    rows = -(-frame.height // ctu_size)
    return CtuGrid(ctu_size, cols, rows, frame.width, frame.height)


def extract_block(source, region: BlockRegion, pad: bool = False) -> np.ndarray:
    """Copy a region out of a frame (or 2-D sample array) as a (h, w) uint8 block.

    With pad enabled, out-of-frame samples are filled by nearest-edge
    replication, making the operation total for any region near the frame.
    With pad disabled, the region must lie fully inside the frame.

    Raises:
        RegionError: zero-area region, or region not fully inside with pad off.
    """
    arr = source.samples if isinstance(source, Frame) else np.asarray(source)
    if region.w <= 0 or region.h <= 0:
        raise RegionError(f"zero-area region {region}")
    fh, fw = arr.shape
    if not pad:
        if region.x < 0 or region.y < 0 or region.x + region.w > fw or region.y + region.h > fh:
            raise RegionError(f"region {region} extends outside {fw}x{fh} frame (pad disabled)")
        return arr[region.y : region.y + region.h, region.x : region.x + region.w].copy()
    ys = np.clip(np.arange(region.y, region.y + region.h), 0, fh - 1)
    xs = np.clip(np.arange(region.x, region.x + region.w), 0, fw - 1)
    return arr[np.ix_(ys, xs)].copy()
