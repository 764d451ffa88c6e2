"""Multi-scale feature distortion and the combined RD distortion.

A candidate CU is scored by extracting features over a ladder of windows:
the CU itself, then the CU grown by delta_d, 2*delta_d, ... pixels on the
top and left edges only (those neighbors are already reconstructed in
raster intra order, so the grown windows add real coded context).  Each
window contributes its feature distance between original and candidate
reconstruction, and MSFD is the weighted FD sum scaled by the CU pixel
count.  CUs smaller than the feature extractor's minimum take the
maximum cosine distance 2 in every window instead.

The scalar distortion handed to RDO is D = MSFD + beta * MSE.
"""

from dataclasses import dataclass

import numpy as np

from .features import FeatureProvider, extract_features, feature_distance
from .frame import BlockRegion, Frame, extract_block

DEFAULT_DELTA_D = 8
DEFAULT_WEIGHTS = (4.0, 2.0, 1.0)
DEFAULT_BETA = 0.02
SMALL_BLOCK_THRESHOLD = 16
SMALL_BLOCK_FD = 2.0  # maximum cosine distance


@dataclass(frozen=True)
class MultiScaleConfig:
    """Window ladder and mixing parameters for the distortion."""

    delta_d: int = DEFAULT_DELTA_D
    num_windows: int = 3
    weights: tuple[float, ...] = DEFAULT_WEIGHTS
    beta: float = DEFAULT_BETA
    small_block_threshold: int = SMALL_BLOCK_THRESHOLD

    def __post_init__(self):
        if len(self.weights) != self.num_windows:
            raise ValueError(
                f"{self.num_windows} windows but {len(self.weights)} weights"
            )
        if self.delta_d < 0:
            raise ValueError("delta_d must be >= 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if any(w <= 0 for w in self.weights):
            raise ValueError("window weights must be positive")


@dataclass(frozen=True)
class RdDistortion:
    """MSFD, MSE and their combination for one candidate CU."""

    msfd: float
    mse: float
    combined: float
    window_fd: tuple[float, ...]


def build_windows(cu: BlockRegion, cfg: MultiScaleConfig) -> list[BlockRegion]:
    """Window s is the CU expanded s*delta_d pixels on the top and left.

    Origins may go negative; sampling replicates edge pixels there.
    """
    return [
        BlockRegion(
            cu.x - s * cfg.delta_d,
            cu.y - s * cfg.delta_d,
            cu.w + s * cfg.delta_d,
            cu.h + s * cfg.delta_d,
        )
        for s in range(cfg.num_windows)
    ]


def window_distances(
    orig: Frame,
    recon: Frame,
    cu: BlockRegion,
    cfg: MultiScaleConfig,
    provider: FeatureProvider,
) -> tuple[float, ...]:
    """Per-window feature distances, native window first.

    Byte-identical original and reconstructed windows short-circuit to
    FD 0 without running the extractor.
    """
    if cu.w < cfg.small_block_threshold or cu.h < cfg.small_block_threshold:
        return (SMALL_BLOCK_FD,) * cfg.num_windows
    fds = []
    for win in build_windows(cu, cfg):
        ow = extract_block(orig, win, pad=True)
        rw = extract_block(recon, win, pad=True)
        if np.array_equal(ow, rw):
            fds.append(0.0)
            continue
        fo = provider.features(ow)
        fr = provider.features(rw)
        fds.append(feature_distance(fr, fo))
    return tuple(fds)


def msfd(
    orig: Frame,
    recon: Frame,
    cu: BlockRegion,
    cfg: MultiScaleConfig,
    provider: FeatureProvider,
) -> tuple[float, tuple[float, ...]]:
    """MSFD of a candidate CU and the per-window distances behind it.

    MSFD = sum_i w_i * FD_i * W * H with W, H the CU dimensions.
    """
    fds = window_distances(orig, recon, cu, cfg, provider)
    area = float(cu.w * cu.h)
    value = sum(w * fd for w, fd in zip(cfg.weights, fds)) * area
    return value, fds


def mse(orig_block: np.ndarray, recon_block: np.ndarray) -> float:
    """Mean squared sample error between two equal-shape blocks."""
    a = np.asarray(orig_block, dtype=np.float64)
    b = np.asarray(recon_block, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((b - a) ** 2))


def combined_distortion(msfd_value: float, mse_value: float, beta: float) -> float:
    """D = MSFD + beta * MSE."""
    return msfd_value + beta * mse_value


def evaluate_distortion(
    orig: Frame,
    recon: Frame,
    cu: BlockRegion,
    cfg: MultiScaleConfig,
    provider: FeatureProvider,
) -> RdDistortion:
    """Full distortion record for a candidate CU against the original."""
    msfd_value, fds = msfd(orig, recon, cu, cfg, provider)
    mse_value = mse(extract_block(orig, cu), extract_block(recon, cu))
    return RdDistortion(
        msfd=msfd_value,
        mse=mse_value,
        combined=combined_distortion(msfd_value, mse_value, cfg.beta),
        window_fd=fds,
    )
