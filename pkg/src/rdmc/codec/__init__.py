"""Decodable block-transform intra codec with feature-aware RDO."""

from .decoder import decode_frame, decode_frame_details
from .encoder import (
    DEFAULT_RDO_LAMBDA_SCALE,
    CodecConfig,
    CtuStats,
    CuNode,
    EncodeResult,
    encode_frame,
    rdo_lambda,
    rdo_select,
)
from .intra import (
    MODE_DC,
    MODE_HORIZONTAL,
    MODE_NAMES,
    MODE_PLANAR,
    MODE_VERTICAL,
    MODES,
    predict_intra,
)
from .stream import CodecError, StreamHeader, pack_header, padded_dims, unpack_header
from .transform import dequantize_inverse, qstep, transform_quantize

__all__ = [
    "CodecConfig",
    "CodecError",
    "CtuStats",
    "CuNode",
    "DEFAULT_RDO_LAMBDA_SCALE",
    "EncodeResult",
    "MODES",
    "MODE_DC",
    "MODE_HORIZONTAL",
    "MODE_NAMES",
    "MODE_PLANAR",
    "MODE_VERTICAL",
    "StreamHeader",
    "decode_frame",
    "decode_frame_details",
    "dequantize_inverse",
    "encode_frame",
    "pack_header",
    "padded_dims",
    "predict_intra",
    "qstep",
    "rdo_lambda",
    "rdo_select",
    "transform_quantize",
    "unpack_header",
]
