"""Machine-vision-aware rate-distortion toolkit.

A small decodable intra codec whose bit allocation follows a
region-of-interest importance map, whose QP decisions are clamped by
cross-CTU boundary connectivity, and whose RDO distortion mixes a
multi-scale convolutional feature distance with MSE.
"""

from .codec import (
    CodecConfig,
    CodecError,
    EncodeResult,
    decode_frame,
    encode_frame,
    rdo_select,
)
from .features import (
    FeatureExtractionError,
    FeatureProviderConfig,
    FeatureTensor,
    TensorFileError,
    extract_features,
    feature_distance,
    load_tensor_file,
    save_tensor_file,
)
from .frame import (
    BlockRegion,
    CtuGrid,
    Frame,
    FrameFormatError,
    RegionError,
    extract_block,
    load_image,
    partition_ctus,
    store_image,
)
from .metrics import BdRateError, RdPoint, bd_rate, psnr
from .msfd import MultiScaleConfig, RdDistortion, combined_distortion, mse, msfd
from .ratecontrol import (
    BudgetState,
    RateControlError,
    allocate_ctu_target,
    constrain_qp,
    ctu_cost,
    derive_qp,
    select_anchor_neighbor,
    update_after_ctu,
)
from .roim import (
    Box,
    BoxSet,
    RoimMap,
    RoimValidationError,
    build_roim,
    compute_connectivity,
    compute_importance,
    load_roim,
    roim_parse,
    roim_serialize,
    save_roim,
)
from .satd import block_satd, ctu_satd, hadamard8

__version__ = "0.1.0"

__all__ = [
    "BdRateError",
    "BlockRegion",
    "Box",
    "BoxSet",
    "BudgetState",
    "CodecConfig",
    "CodecError",
    "CtuGrid",
    "EncodeResult",
    "FeatureExtractionError",
    "FeatureProviderConfig",
    "FeatureTensor",
    "Frame",
    "FrameFormatError",
    "MultiScaleConfig",
    "RateControlError",
    "RdDistortion",
    "RdPoint",
    "RegionError",
    "RoimMap",
    "RoimValidationError",
    "TensorFileError",
    "allocate_ctu_target",
    "bd_rate",
    "block_satd",
    "build_roim",
    "combined_distortion",
    "compute_connectivity",
    "compute_importance",
    "constrain_qp",
    "ctu_cost",
    "ctu_satd",
    "decode_frame",
    "derive_qp",
    "encode_frame",
    "extract_block",
    "extract_features",
    "feature_distance",
    "hadamard8",
    "load_image",
    "load_roim",
    "load_tensor_file",
    "mse",
    "msfd",
    "partition_ctus",
    "psnr",
    "rdo_select",
    "roim_parse",
    "roim_serialize",
    "save_roim",
    "save_tensor_file",
    "select_anchor_neighbor",
    "store_image",
    "update_after_ctu",
]
