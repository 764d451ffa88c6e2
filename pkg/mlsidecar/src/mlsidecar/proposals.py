"""Offline box-proposal documents from classical saliency.

The consumer ingests JSON documents of axis-aligned boxes in pixel
units and does not care how they were produced.  This module generates
them without any learned detector: a gradient-magnitude saliency map is
thresholded, connected components become boxes, and each box carries a
peak-normalized score so a score floor has a stable meaning across
images.
"""

import json

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

# Components smaller than this many salient pixels are noise, not
# objects worth steering bits toward.
MIN_AREA = 16
# Boxes grow by this margin so block-grid overlap does not clip the
# object boundary the gradient sits on.
PAD = 2
GENERATOR_NAME = "gradient-saliency-v1"


class ProposalError(ValueError):
    """Raised when an input image cannot be read as a grayscale frame."""


def load_image_gray(path) -> np.ndarray:
    """Read any PIL-supported image as 8-bit grayscale."""
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("L"), dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise ProposalError(f"unsupported image format: {path}") from exc
    except OSError as exc:
        raise ProposalError(f"cannot read image: {path}") from exc


def saliency_map(image: np.ndarray) -> np.ndarray:
    """Smoothed gradient magnitude of a lightly denoised image."""
    x = np.asarray(image, dtype=np.float64)
    x = ndimage.gaussian_filter(x, 1.0)
    gy, gx = np.gradient(x)
    return ndimage.gaussian_filter(np.hypot(gx, gy), 2.0)


def component_boxes(image: np.ndarray) -> list[dict]:
    """Scored boxes around connected salient regions.

    The saliency map is thresholded at mean + 0.5 std, components below
    MIN_AREA pixels are dropped, and each surviving component becomes a
    box padded by PAD and clipped to the frame.  Scores are each
    component's mean saliency divided by the best component's, so the
    strongest box always scores 1.0.  Boxes are ordered by descending
    score, then by (y, x) for determinism.
    """
    image = np.asarray(image)
    h, w = image.shape
    sal = saliency_map(image)
    mask = sal > sal.mean() + 0.5 * sal.std()
    labels, count = ndimage.label(mask)
    if count == 0:
        return []
    raw = []
    for index, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        area = int(np.count_nonzero(labels[sl] == index))
        if area < MIN_AREA:
            continue
        strength = float(sal[sl][labels[sl] == index].mean())
        ys, xs = sl
        x0 = max(0, xs.start - PAD)
        y0 = max(0, ys.start - PAD)
        x1 = min(w, xs.stop + PAD)
        y1 = min(h, ys.stop + PAD)
        raw.append((strength, y0, x0, {"x": x0, "y": y0, "w": x1 - x0, "h": y1 - y0}))
    if not raw:
        return []
    peak = max(item[0] for item in raw)
    boxes = []
    for strength, _, _, box in raw:
        box = dict(box)
        box["score"] = strength / peak if peak > 0 else 0.0
        boxes.append(box)
    boxes.sort(key=lambda b: (-b["score"], b["y"], b["x"]))
    return boxes


def export_proposals(
    image: np.ndarray,
    score_floor: float = 0.0,
    max_boxes: int = 32,
    image_id: str | None = None,
) -> dict:
    """Consumer-ready proposal document for one grayscale image.

    Boxes scoring below score_floor are dropped, then the max_boxes
    best survivors are kept.  An empty box list is still a valid
    document; the consumer treats it as a frame with no regions of
    interest.
    """
    image = np.asarray(image)
    h, w = image.shape
    boxes = [b for b in component_boxes(image) if b["score"] >= score_floor]
    boxes = boxes[:max_boxes]
    doc = {
        "image_width": int(w),
        "image_height": int(h),
        "boxes": boxes,
        "generator": {
            "model": GENERATOR_NAME,
            "score_floor": float(score_floor),
            "max_boxes": int(max_boxes),
        },
    }
    if image_id is not None:
        doc["image_id"] = str(image_id)
    return doc


def write_proposals(path, doc: dict) -> None:
    """Serialize one proposal document as pretty-printed JSON."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
