"""Convolutional feature extraction and the cosine feature distance.

The extractor runs a fixed truncated VGG-11 topology: eight 3x3 conv
stages (stride 1, pad 1, ReLU) with output channels (64, 128, 256, 256,
512, 512, 512, 512) and a 2x2 max pool after stages 1, 2, 4 and 6.  The
final pool and the fully connected head are absent, so a patch of
HxW >= 16x16 maps to a 512 x floor(H/16) x floor(W/16) tensor.

Two weight providers share the topology: a deterministic seeded-Gaussian
builtin (no external files needed) and a tensor-file loader for
externally exported pretrained weights.  Convolution is im2col over
float32 so the matrix products hit BLAS.
"""

import hashlib
import logging
import struct
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

STAGE_CHANNELS = (64, 128, 256, 256, 512, 512, 512, 512)
POOL_AFTER_STAGE = (1, 2, 4, 6)  # 1-based stage numbers followed by a 2x2 pool
MIN_PATCH = 16  # four 2x2 pools halve each dimension four times
INPUT_MEAN = 0.449
INPUT_STD = 0.226

FTEN_MAGIC = b"FTEN"
FTEN_VERSION = 1

_MEMO_CAP = 512


class FeatureExtractionError(ValueError):
    """Raised for patches too small for the fixed topology."""


class TensorFileError(ValueError):
    """Raised when a tensor file fails to parse or validate."""


@dataclass(frozen=True)
class FeatureTensor:
    """Channel-major feature volume with finite float values."""

    channels: int
    height: int
    width: int
    data: np.ndarray

    def __post_init__(self):
        expected = (self.channels, self.height, self.width)
        if self.data.shape != expected:
            raise ValueError(f"feature data shape {self.data.shape} != {expected}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("feature tensor contains non-finite values")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.channels, self.height, self.width)


@dataclass(frozen=True)
class FeatureProviderConfig:
    """Selects the weight source; the topology itself is fixed.

    kind "builtin" draws seeded Gaussian weights, kind "weight-file"
    loads conv{i}.weight / conv{i}.bias tensors from an FTEN file.
    """

    kind: str = "builtin"
    seed: int = 0
    weight_path: str | None = None

    def __post_init__(self):
        if self.kind not in ("builtin", "weight-file"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.kind == "weight-file" and not self.weight_path:
            raise ValueError("weight-file provider needs weight_path")


def conv3x3_relu(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """One conv stage: 3x3, stride 1, zero pad 1, ReLU.

    x is (Cin, H, W) float32, weight (Cout, Cin, 3, 3), bias (Cout,).
    im2col layout so the inner product runs as a single sgemm.
    """
    cin, h, w = x.shape
    cout = weight.shape[0]
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    windows = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(1, 2))
    cols = windows.transpose(1, 2, 0, 3, 4).reshape(h * w, cin * 9)
    out = cols @ weight.reshape(cout, -1).T
    out += bias
    np.maximum(out, 0.0, out=out)
    return out.T.reshape(cout, h, w)


def maxpool2(x: np.ndarray) -> np.ndarray:
    """2x2 max pool, stride 2, floor semantics (odd trailing row/col dropped)."""
    c, h, w = x.shape
    x = x[:, : h - h % 2, : w - w % 2]
    return x.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))


def builtin_weights(seed: int) -> dict[str, np.ndarray]:
    """Deterministic Gaussian conv weights, std sqrt(2 / (9 Cin)), zero biases."""
    rng = np.random.default_rng(seed)
    tensors = {}
    cin = 1
    for i, cout in enumerate(STAGE_CHANNELS, start=1):
        scale = np.sqrt(2.0 / (9.0 * cin))
        tensors[f"conv{i}.weight"] = (
            rng.standard_normal((cout, cin, 3, 3)) * scale
        ).astype(np.float32)
        tensors[f"conv{i}.bias"] = np.zeros(cout, dtype=np.float32)
        cin = cout
    return tensors


def _validate_weights(tensors: dict[str, np.ndarray], source: str) -> None:
    cin = 1
    for i, cout in enumerate(STAGE_CHANNELS, start=1):
        for name, shape in (
            (f"conv{i}.weight", (cout, cin, 3, 3)),
            (f"conv{i}.bias", (cout,)),
        ):
            if name not in tensors:
                raise TensorFileError(f"{source}: missing tensor '{name}'")
            if tensors[name].shape != shape:
                raise TensorFileError(
                    f"{source}: tensor '{name}' has shape {tensors[name].shape}, expected {shape}"
                )
        cin = cout


class FeatureProvider:
    """Holds one weight set and memoizes extraction by patch content."""

    def __init__(self, cfg: FeatureProviderConfig):
        self.cfg = cfg
        if cfg.kind == "builtin":
            tensors = builtin_weights(cfg.seed)
        else:
            tensors = load_tensor_file(cfg.weight_path)
        _validate_weights(tensors, cfg.kind)
        self._stages = [
            (
                np.ascontiguousarray(tensors[f"conv{i}.weight"], dtype=np.float32),
                np.ascontiguousarray(tensors[f"conv{i}.bias"], dtype=np.float32),
            )
            for i in range(1, len(STAGE_CHANNELS) + 1)
        ]
        self._memo: OrderedDict[bytes, FeatureTensor] = OrderedDict()

    def _forward(self, patch: np.ndarray) -> np.ndarray:
        x = (patch.astype(np.float32) / 255.0 - INPUT_MEAN) / INPUT_STD
        x = x[np.newaxis]
        for stage, (weight, bias) in enumerate(self._stages, start=1):
            x = conv3x3_relu(x, weight, bias)
            if stage in POOL_AFTER_STAGE:
                x = maxpool2(x)
        return x

    def features(self, patch: np.ndarray) -> FeatureTensor:
        patch = np.asarray(patch)
        if patch.ndim != 2:
            raise FeatureExtractionError(f"patch must be 2-D, got shape {patch.shape}")
        h, w = patch.shape
        if h < MIN_PATCH or w < MIN_PATCH:
            raise FeatureExtractionError(
                f"patch {w}x{h} below minimum {MIN_PATCH}x{MIN_PATCH}"
            )
        key = struct.pack("<II", h, w) + hashlib.blake2b(
            np.ascontiguousarray(patch).tobytes(), digest_size=16
        ).digest()
        hit = self._memo.get(key)
        if hit is not None:
            self._memo.move_to_end(key)
            return hit
        data = self._forward(patch)
        tensor = FeatureTensor(data.shape[0], data.shape[1], data.shape[2], data)
        self._memo[key] = tensor
        if len(self._memo) > _MEMO_CAP:
            self._memo.popitem(last=False)
        return tensor


_providers: dict[FeatureProviderConfig, FeatureProvider] = {}


def get_provider(cfg: FeatureProviderConfig) -> FeatureProvider:
    """Provider for a config, cached so repeated calls share one weight set."""
    provider = _providers.get(cfg)
    if provider is None:
        provider = FeatureProvider(cfg)
        _providers[cfg] = provider
    return provider


def extract_features(patch: np.ndarray, cfg: FeatureProviderConfig) -> FeatureTensor:
    """Feature tensor of a sample patch under the configured provider."""
    return get_provider(cfg).features(patch)


def feature_distance(a: FeatureTensor, b: FeatureTensor) -> float:
    """FD = 1 - cosine similarity of the flattened tensors, in [0, 2].

    Conventions for degenerate inputs: both all-zero -> 0 (identical
    content), exactly one all-zero -> 1 (orthogonal).  Byte-identical
    tensors short-circuit to exactly 0.0 and exact sign-flips to 2.0.
    """
    if a.shape != b.shape:
        raise ValueError(f"feature shapes differ: {a.shape} vs {b.shape}")
    if np.array_equal(a.data, b.data):
        return 0.0
    af = a.data.ravel().astype(np.float64)
    bf = b.data.ravel().astype(np.float64)
    na = float(np.linalg.norm(af))
    nb = float(np.linalg.norm(bf))
    if na == 0.0 and nb == 0.0:
        log.debug("feature_distance: both tensors all-zero, FD := 0")
        return 0.0
    if na == 0.0 or nb == 0.0:
        log.debug("feature_distance: one tensor all-zero, FD := 1")
        return 1.0
    if np.array_equal(af, -bf):
        return 2.0
    value = 1.0 - float(np.dot(af, bf)) / (na * nb)
    return min(2.0, max(0.0, value))


def save_tensor_file(path, tensors: dict[str, np.ndarray]) -> None:
    """Write named tensors as an FTEN file (float32 little-endian payloads)."""
    with open(path, "wb") as f:
        f.write(FTEN_MAGIC)
        f.write(struct.pack("<HI", FTEN_VERSION, len(tensors)))
        for name, arr in tensors.items():
            arr = np.ascontiguousarray(arr, dtype="<f4")
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes())


def load_tensor_file(path) -> dict[str, np.ndarray]:
    """Parse an FTEN file into named float32 arrays.

    Raises:
        TensorFileError: bad magic or version, truncated data, or
            non-finite payload values.
    """
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != FTEN_MAGIC:
        raise TensorFileError(f"bad magic {blob[:4]!r}, expected {FTEN_MAGIC!r}")
    if len(blob) < 10:
        raise TensorFileError("truncated header")
    version, count = struct.unpack_from("<HI", blob, 4)
    if version != FTEN_VERSION:
        raise TensorFileError(f"unsupported version {version}")
    pos = 10
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        try:
            (name_len,) = struct.unpack_from("<H", blob, pos)
            pos += 2
            name = blob[pos : pos + name_len].decode("utf-8")
            pos += name_len
            (ndim,) = struct.unpack_from("<B", blob, pos)
            pos += 1
            dims = struct.unpack_from(f"<{ndim}I", blob, pos)
            pos += 4 * ndim
        except (struct.error, UnicodeDecodeError) as exc:
            raise TensorFileError(f"corrupt tensor header at offset {pos}") from exc
        size = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        nbytes = 4 * size
        if pos + nbytes > len(blob):
            raise TensorFileError(
                f"truncated payload for tensor '{name}': need {nbytes} bytes, "
                f"have {len(blob) - pos}"
            )
        arr = np.frombuffer(blob[pos : pos + nbytes], dtype="<f4").reshape(dims)
        pos += nbytes
        if not np.all(np.isfinite(arr)):
            raise TensorFileError(f"non-finite values in tensor '{name}'")
        tensors[name] = arr.astype(np.float32)
    return tensors
