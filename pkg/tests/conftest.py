"""Shared fixtures.

The encode fixtures are session scoped: a full encode costs seconds to
minutes, and the acceptance checks slice the same thirty-plus encodes
from several angles (budget conservation, QP band legality, round
trips, ROI behaviour).  Everything is deterministic, so session scope
does not leak state between tests.
"""

import time
from dataclasses import dataclass

import numpy as np
import pytest

import corpus
import rdmc.codec.encoder as encoder_mod
from rdmc import (
    BoxSet,
    CodecConfig,
    EncodeResult,
    Frame,
    build_roim,
    decode_frame,
    partition_ctus,
)
from rdmc.codec.encoder import encode_frame


@dataclass(frozen=True)
class AllocationStep:
    """Snapshot taken right after one per-CTU allocation pass."""

    remaining: int
    uncoded: int
    target_sum: int


@dataclass
class BudgetEncode:
    image_index: int
    target_bpp: float
    frame: Frame
    result: EncodeResult
    steps: list[AllocationStep]


@dataclass
class RoiEncodePair:
    frame: Frame
    doc: dict
    box_region: tuple[int, int, int, int]
    with_alpha: EncodeResult
    without_alpha: EncodeResult


class _AllocationRecorder:
    """Wraps the encoder's allocation call and logs budget state."""

    def __init__(self):
        self.steps: list[AllocationStep] = []
        self._real = encoder_mod.allocate_ctu_target

    def __enter__(self):
        def wrapper(state, costs):
            target = self._real(state, costs)
            self.steps.append(
                AllocationStep(
                    remaining=state.remaining,
                    uncoded=len(state.uncoded),
                    target_sum=sum(state.targets.values()),
                )
            )
            return target

        encoder_mod.allocate_ctu_target = wrapper
        return self

    def __exit__(self, *exc):
        encoder_mod.allocate_ctu_target = self._real
        return False


def budget_box_doc(index: int, size: int = 128) -> dict:
    rng = np.random.default_rng(1000 + index)
    boxes = []
    for _ in range(int(rng.integers(1, 3))):
        w = int(rng.integers(24, 72))
        h = int(rng.integers(24, 72))
        boxes.append(
            {
                "x": int(rng.integers(0, size - w)),
                "y": int(rng.integers(0, size - h)),
                "w": w,
                "h": h,
            }
        )
    return {"image_width": size, "image_height": size, "boxes": boxes}


# Rates chosen on-curve for the corpus: low enough that allocation has
# to ration, high enough that the model seed lands near the achievable
# range and adaptation can close the gap.
BUDGET_RATES = (0.12, 0.22, 0.4)
FIXED_QPS = (28, 34, 40, 46)
ROI_TARGET_BPP = 0.8

# The importance nudge competes with satd / 3 inside the allocation
# cost, so its useful magnitude scales with CTU area.  10000 suits
# 64-px CTUs; the 16-px budget encodes get an area-equivalent 30.
BUDGET_ALPHA = 30.0
ROI_MODEL_A = 100.0


@pytest.fixture(scope="session")
def budget_frames():
    return corpus.budget_corpus()


@pytest.fixture(scope="session")
def budget_encodes(budget_frames):
    """10 images x 3 target rates, ROI-steered, with allocation traces.

    16-px CTUs give 64 allocation steps per picture, enough for the
    running QP mean and the model adaptation to actually track the
    budget instead of riding the opening guess.
    """
    encodes = []
    for i, frame in enumerate(budget_frames):
        grid = partition_ctus(frame, 16)
        boxes = BoxSet.from_document(budget_box_doc(i))
        roim = build_roim(grid, boxes)
        for rate in BUDGET_RATES:
            cfg = CodecConfig(ctu_size=16, target_bpp=rate, alpha=BUDGET_ALPHA)
            with _AllocationRecorder() as rec:
                result = encode_frame(frame, roim, cfg)
            encodes.append(BudgetEncode(i, rate, frame, result, rec.steps))
    return encodes


@pytest.fixture(scope="session")
def fixed_encodes(budget_frames):
    """10 images x 4 fixed QPs; keys are (image_index, qp)."""
    out = {}
    for i, frame in enumerate(budget_frames):
        for qp in FIXED_QPS:
            cfg = CodecConfig(ctu_size=32, base_qp=qp)
            out[(i, qp)] = encode_frame(frame, None, cfg)
    return out


@pytest.fixture(scope="session")
def roi_encodes():
    """5 boxed-object images encoded with and without importance weighting.

    Both arms share a content-calibrated model seed so the comparison is
    at matched total rate; only the importance term differs.
    """
    pairs = []
    for frame, doc in corpus.roi_corpus():
        grid = partition_ctus(frame, 64)
        boxes = BoxSet.from_document(doc)
        roim = build_roim(grid, boxes)
        with_alpha = encode_frame(
            frame,
            roim,
            CodecConfig(
                ctu_size=64,
                target_bpp=ROI_TARGET_BPP,
                alpha=10000.0,
                model_a=ROI_MODEL_A,
            ),
        )
        without_alpha = encode_frame(
            frame,
            roim,
            CodecConfig(
                ctu_size=64,
                target_bpp=ROI_TARGET_BPP,
                alpha=0.0,
                model_a=ROI_MODEL_A,
            ),
        )
        b = doc["boxes"][0]
        pairs.append(
            RoiEncodePair(
                frame, doc, (b["x"], b["y"], b["w"], b["h"]), with_alpha, without_alpha
            )
        )
    return pairs


@pytest.fixture(scope="session")
def benchmark_encode():
    """Timed 512x512 encode at QP 34 plus its decode."""
    frame = corpus.benchmark_frame(512)
    cfg = CodecConfig(ctu_size=64, base_qp=34)
    start = time.perf_counter()
    result = encode_frame(frame, None, cfg)
    elapsed = time.perf_counter() - start
    decoded = decode_frame(result.data)
    return frame, result, decoded, elapsed
