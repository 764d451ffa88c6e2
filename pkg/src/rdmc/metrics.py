"""Quality metrics and rate-curve comparison.

PSNR is the usual 10 log10(255^2 / MSE) with an infinity sentinel for
identical frames.  bd_rate implements the Bjontegaard average rate
difference: cubic fits of log-rate against a monotone quality score
(PSNR, accuracy, mAP, ...) integrated over the overlapping quality
range.
"""

import math
from dataclasses import dataclass

import numpy as np

from .frame import Frame
from .msfd import mse

PEAK = 255.0


class BdRateError(ValueError):
    """Raised for degenerate rate curves (too few points, no overlap)."""


def psnr(orig: Frame, recon: Frame) -> float:
    """Peak signal-to-noise ratio in dB; math.inf for identical frames."""
    if (orig.width, orig.height) != (recon.width, recon.height):
        raise ValueError(
            f"dimension mismatch: {orig.width}x{orig.height} vs {recon.width}x{recon.height}"
        )
    err = mse(orig.samples, recon.samples)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / err)


def format_db(value: float) -> str:
    """PSNR formatted for reports; infinity renders as "inf"."""
    return "inf" if math.isinf(value) else f"{value:.4f}"


@dataclass(frozen=True)
class RdPoint:
    """One operating point of a rate-distortion sweep."""

    bpp: float
    quality: float


def _fit_log_rate(points: list[RdPoint]) -> np.ndarray:
    quality = np.array([p.quality for p in points], dtype=np.float64)
    rates = np.array([p.bpp for p in points], dtype=np.float64)
    if np.any(rates <= 0):
        raise BdRateError("rates must be positive")
    return np.polyfit(quality, np.log(rates), 3)


def bd_rate(curve_a: list[RdPoint], curve_b: list[RdPoint]) -> float:
    """Average rate difference of curve_b over curve_a, in percent.

    Positive means curve_b spends more bits for the same quality.

    Raises:
        BdRateError: fewer than 4 points on either curve, non-positive
            rates, or disjoint quality ranges.
    """
    for name, curve in (("curve_a", curve_a), ("curve_b", curve_b)):
        if len(curve) < 4:
            raise BdRateError(f"{name} has {len(curve)} points, need at least 4")
    poly_a = _fit_log_rate(curve_a)
    poly_b = _fit_log_rate(curve_b)
    lo = max(min(p.quality for p in curve_a), min(p.quality for p in curve_b))
    hi = min(max(p.quality for p in curve_a), max(p.quality for p in curve_b))
    if not hi > lo:
        raise BdRateError(f"quality ranges do not overlap: [{lo}, {hi}]")
    int_a = np.polyint(poly_a)
    int_b = np.polyint(poly_b)
    avg_log_diff = (
        (np.polyval(int_b, hi) - np.polyval(int_b, lo))
        - (np.polyval(int_a, hi) - np.polyval(int_a, lo))
    ) / (hi - lo)
    return float((math.exp(avg_log_diff) - 1.0) * 100.0)
