"""Orthonormal 2-D DCT-II transform and uniform scalar quantization.

The quantizer step follows the familiar exponential QP ladder,
Qstep = 2^((qp - 4) / 6), doubling every six QP steps, with
round-half-away-from-zero so the reconstruction bound |err| <= Qstep/2
holds per coefficient.
"""

import numpy as np
from scipy import fft as _fft

BLOCK_SIZES = (4, 8, 16, 32, 64)


def qstep(qp: int) -> float:
    """Quantizer step size for a QP in [0, 51]."""
    return float(2.0 ** ((qp - 4) / 6.0))


def forward_dct(block: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D DCT-II of a square residual block."""
    return _fft.dctn(np.asarray(block, dtype=np.float64), type=2, norm="ortho")


def inverse_dct(coeffs: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D inverse DCT (DCT-III)."""
    return _fft.idctn(np.asarray(coeffs, dtype=np.float64), type=2, norm="ortho")


def transform_quantize(residual: np.ndarray, qp: int) -> np.ndarray:
    """Quantized transform levels of a residual block, as int32.

    Rounding is half away from zero: level = sign(c) floor(|c|/step + 1/2).
    """
    residual = np.asarray(residual)
    n = residual.shape[0]
    if residual.shape != (n, n) or n not in BLOCK_SIZES:
        raise ValueError(f"residual must be square with size in {BLOCK_SIZES}, got {residual.shape}")
    coeffs = forward_dct(residual)
    step = qstep(qp)
    return (np.sign(coeffs) * np.floor(np.abs(coeffs) / step + 0.5)).astype(np.int32)


def dequantize_inverse(levels: np.ndarray, qp: int) -> np.ndarray:
    """Reconstructed residual (float) from quantized levels."""
    return inverse_dct(np.asarray(levels, dtype=np.float64) * qstep(qp))


def reconstruct_block(pred: np.ndarray, residual: np.ndarray) -> np.ndarray:
    """Prediction plus decoded residual, rounded and clipped to uint8.

    Shared by encoder and decoder so reconstructions match bit-exactly.
    """
    merged = np.floor(pred.astype(np.float64) + residual + 0.5)
    return np.clip(merged, 0, 255).astype(np.uint8)
