"""Region-of-interest map for machine vision tasks.

From a set of detector box proposals, computes per-CTU importance
(normalized box-coverage density, max CTU == 1) and per-adjacent-pair
connectivity (fraction of the shared CTU boundary covered by the box
union).  Importance sums coverage over boxes, so a pixel under n boxes
contributes n; connectivity counts each boundary pixel once no matter
how many boxes cover it.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .frame import BlockRegion, CtuGrid


class RoimValidationError(ValueError):
    """Raised when a ROIM or box document fails validation."""


def _iround(v) -> int:
    """Round half away from zero, for quantizing float box coordinates."""
    return int(np.floor(v + 0.5)) if v >= 0 else -int(np.floor(-v + 0.5))


@dataclass(frozen=True)
class Box:
    """Axis-aligned pixel rectangle (x, y, w, h)."""

    x: int
    y: int
    w: int
    h: int

    def as_region(self) -> BlockRegion:
        return BlockRegion(self.x, self.y, self.w, self.h)


class BoxSet:
    """Box proposals clipped to a frame; empty-after-clipping boxes are dropped."""

    def __init__(self, boxes, frame_width: int, frame_height: int):
        if frame_width <= 0 or frame_height <= 0:
            raise RoimValidationError("box set frame dimensions must be positive")
        self.frame_width = frame_width
        self.frame_height = frame_height
        clipped = []
        frame_rect = BlockRegion(0, 0, frame_width, frame_height)
        for b in boxes:
            inter = Box(b.x, b.y, b.w, b.h).as_region().intersect(frame_rect)
            if inter is not None:
                clipped.append(Box(inter.x, inter.y, inter.w, inter.h))
        self.boxes: list[Box] = clipped

    def __len__(self) -> int:
        return len(self.boxes)

    def __iter__(self):
        return iter(self.boxes)

    @classmethod
    def from_document(cls, doc: dict) -> "BoxSet":
        """Build from a parsed box-list document.

        Schema: {image_width, image_height, boxes: [{x, y, w, h, score?}, ...]}.
        Float coordinates are rounded to the integer pixel grid; scores are
        accepted and ignored (importance is unweighted).
        """
        try:
            width = int(doc["image_width"])
            height = int(doc["image_height"])
            raw = doc["boxes"]
        except (KeyError, TypeError) as exc:
            raise RoimValidationError(f"box document missing field: {exc}") from exc
        boxes = []
        for entry in raw:
            try:
                boxes.append(
                    Box(
                        _iround(entry["x"]),
                        _iround(entry["y"]),
                        _iround(entry["w"]),
                        _iround(entry["h"]),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise RoimValidationError(f"bad box entry {entry!r}") from exc
        return cls(boxes, width, height)

    @classmethod
    def load(cls, path) -> "BoxSet":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_document(json.load(f))


def overlap_pixels(a: BlockRegion, b) -> int:
    """Pixel count of the intersection of two rectangles; 0 when disjoint."""
    rb = b.as_region() if isinstance(b, Box) else b
    inter = a.intersect(rb)
    return 0 if inter is None else inter.area


def compute_importance(grid: CtuGrid, boxes: BoxSet) -> np.ndarray:
    """Per-CTU importance in [0, 1].

    Raw coverage of CTU k is the sum over boxes of the overlap pixel
    count; the map is the raw coverage divided by its maximum over the
    grid.  All zeros when no box overlaps any CTU.
    """
    raw = np.zeros(len(grid), dtype=np.int64)
    for k, region in grid.regions():
        raw[k] = sum(overlap_pixels(region, b) for b in boxes)
    peak = raw.max() if len(raw) else 0
    if peak == 0:
        return np.zeros(len(grid), dtype=np.float64)
    return raw / float(peak)


def _union_length(intervals: list[tuple[int, int]]) -> int:
    """Total length of the union of half-open integer intervals."""
    if not intervals:
        return 0
    intervals.sort()
    total = 0
    cur_lo, cur_hi = intervals[0]
    for lo, hi in intervals[1:]:
        if lo > cur_hi:
            total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    total += cur_hi - cur_lo
    return total


def _box_covers_line(box: Box, first: int, second: int, horizontal: bool) -> bool:
    """True when the box contains either of the two pixel lines flanking a boundary."""
    if horizontal:  # boundary between horizontally adjacent CTUs: two pixel columns
        return box.x <= first < box.x + box.w or box.x <= second < box.x + box.w
    return box.y <= first < box.y + box.h or box.y <= second < box.y + box.h


def boundary_coverage(
    grid: CtuGrid, i: int, j: int, boxes: BoxSet
) -> tuple[int, int]:
    """Covered length A and total length L of the boundary between CTUs i and j.

    For horizontally adjacent CTUs the boundary is the pair of pixel
    columns at the interface; a boundary row counts as covered when any
    box contains that row in either column (union semantics).  Vertical
    adjacency is the transpose.
    """
    if not grid.are_adjacent(i, j):
        raise ValueError(f"CTUs {i} and {j} are not 4-adjacent")
    lo, hi = min(i, j), max(i, j)
    ra = grid.region(lo)
    rb = grid.region(hi)
    # hi == lo + 1 alone is ambiguous on single-column grids; require same row
    same_row = hi == lo + 1 and hi // grid.cols == lo // grid.cols
    if same_row:  # horizontal neighbors: vertical boundary of length = row height
        col_left = rb.x - 1
        col_right = rb.x
        length = ra.h
        span0 = ra.y
        intervals = []
        for b in boxes:
            if _box_covers_line(b, col_left, col_right, horizontal=True):
                s = max(span0, b.y)
                e = min(span0 + length, b.y + b.h)
                if e > s:
                    intervals.append((s, e))
    else:  # vertical neighbors: horizontal boundary of length = column width
        row_top = rb.y - 1
        row_bottom = rb.y
        length = ra.w
        span0 = ra.x
        intervals = []
        for b in boxes:
            if _box_covers_line(b, row_top, row_bottom, horizontal=False):
                s = max(span0, b.x)
                e = min(span0 + length, b.x + b.w)
                if e > s:
                    intervals.append((s, e))
    return _union_length(intervals), length


def compute_connectivity(grid: CtuGrid, boxes: BoxSet) -> dict[tuple[int, int], float]:
    """Connectivity A/L for every 4-adjacent CTU pair, keyed (i, j) with i < j."""
    out = {}
    for i, j in grid.adjacent_pairs():
        covered, length = boundary_coverage(grid, i, j, boxes)
        out[(i, j)] = covered / length
    return out


@dataclass
class RoimMap:
    """Per-CTU importance plus adjacent-pair connectivity, with grid echo."""

    ctu_size: int
    cols: int
    rows: int
    importance: np.ndarray
    connectivity: dict[tuple[int, int], float]
    boxes: list[Box] = field(default_factory=list)

    def __post_init__(self):
        self.importance = np.asarray(self.importance, dtype=np.float64)
        if self.importance.shape != (self.cols * self.rows,):
            raise RoimValidationError(
                f"importance length {self.importance.size} != cols*rows {self.cols * self.rows}"
            )
        if np.any(self.importance < 0.0) or np.any(self.importance > 1.0):
            raise RoimValidationError("importance values outside [0, 1]")
        for (i, j), v in self.connectivity.items():
            if not 0.0 <= v <= 1.0:
                raise RoimValidationError(f"connectivity value {v} outside [0, 1] for pair {(i, j)}")
            if i >= j:
                raise RoimValidationError(f"connectivity pair {(i, j)} not canonical (need i < j)")

    def connectivity_between(self, i: int, j: int) -> float:
        """Symmetric connectivity lookup; raises for non-adjacent pairs."""
        key = (min(i, j), max(i, j))
        if key not in self.connectivity:
            raise ValueError(f"CTUs {i} and {j} are not an adjacent pair of this map")
        return self.connectivity[key]

    def matches_grid(self, grid: CtuGrid) -> bool:
        return (
            self.ctu_size == grid.ctu_size
            and self.cols == grid.cols
            and self.rows == grid.rows
        )


def build_roim(grid: CtuGrid, boxes: BoxSet) -> RoimMap:
    """Compute the full importance + connectivity map for a grid and box set."""
    if boxes.frame_width != grid.frame_width or boxes.frame_height != grid.frame_height:
        raise RoimValidationError(
            f"box set frame {boxes.frame_width}x{boxes.frame_height} does not match "
            f"grid frame {grid.frame_width}x{grid.frame_height}"
        )
    return RoimMap(
        ctu_size=grid.ctu_size,
        cols=grid.cols,
        rows=grid.rows,
        importance=compute_importance(grid, boxes),
        connectivity=compute_connectivity(grid, boxes),
        boxes=list(boxes.boxes),
    )


def roim_serialize(roim: RoimMap) -> str:
    """Serialize to a JSON document; float values round-trip losslessly."""
    doc = {
        "ctu_size": roim.ctu_size,
        "cols": roim.cols,
        "rows": roim.rows,
        "importance": [float(v) for v in roim.importance],
        "connectivity": [
            {"i": i, "j": j, "value": float(v)} for (i, j), v in sorted(roim.connectivity.items())
        ],
    }
    if roim.boxes:
        doc["boxes"] = [{"x": b.x, "y": b.y, "w": b.w, "h": b.h} for b in roim.boxes]
    return json.dumps(doc, indent=1)


def roim_parse(text: str) -> RoimMap:
    """Parse and validate a ROIM JSON document.

    Raises:
        RoimValidationError: missing fields, shape mismatch, or values
            outside [0, 1].
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RoimValidationError(f"not valid JSON: {exc}") from exc
    try:
        ctu_size = int(doc["ctu_size"])
        cols = int(doc["cols"])
        rows = int(doc["rows"])
        importance = np.asarray(doc["importance"], dtype=np.float64)
        conn_entries = doc["connectivity"]
    except (KeyError, TypeError, ValueError) as exc:
        raise RoimValidationError(f"bad ROIM document: {exc}") from exc
    connectivity = {}
    for entry in conn_entries:
        try:
            i, j, v = int(entry["i"]), int(entry["j"]), float(entry["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise RoimValidationError(f"bad connectivity entry {entry!r}") from exc
        if i >= j:
            raise RoimValidationError(f"connectivity pair ({i}, {j}) not canonical")
        if i < 0 or j >= cols * rows:
            raise RoimValidationError(f"connectivity pair ({i}, {j}) outside the grid")
        if (j - i != 1 or j // cols != i // cols) and j - i != cols:
            raise RoimValidationError(f"connectivity pair ({i}, {j}) is not 4-adjacent")
        connectivity[(i, j)] = v
    boxes = [
        Box(int(b["x"]), int(b["y"]), int(b["w"]), int(b["h"])) for b in doc.get("boxes", [])
    ]
    return RoimMap(
        ctu_size=ctu_size,
        cols=cols,
        rows=rows,
        importance=importance,
        connectivity=connectivity,
        boxes=boxes,
    )


def load_roim(path) -> RoimMap:
    with open(path, "r", encoding="utf-8") as f:
        return roim_parse(f.read())


def save_roim(roim: RoimMap, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(roim_serialize(roim))
