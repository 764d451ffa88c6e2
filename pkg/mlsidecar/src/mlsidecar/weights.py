"""Truncated VGG-11 weight export in the FTEN interchange format.

The consumer runs a fixed eight-stage topology: 3x3 convolutions with
output channels (64, 128, 256, 256, 512, 512, 512, 512), ReLU after
each, and a 2x2 max pool after stages 1, 2, 4 and 6.  That is
torchvision's vgg11 feature stack with the final pool and the
classifier head removed.  The consumer feeds single-channel luma, so
the first conv's RGB kernels are averaged into one input channel
before export.

Weight provenance is best effort: pretrained ImageNet weights when the
model zoo is reachable, otherwise a deterministic seeded initialization
of the same architecture.  The returned metadata always records which
one was written.
"""

import struct

import numpy as np

STAGE_CHANNELS = (64, 128, 256, 256, 512, 512, 512, 512)
POOL_AFTER_STAGE = (1, 2, 4, 6)
INPUT_MEAN = 0.449
INPUT_STD = 0.226

FTEN_MAGIC = b"FTEN"
FTEN_VERSION = 1


class ExportError(ValueError):
    """Raised when tensors do not fit the consumer topology or a dump
    file fails to parse."""


def save_ften(path, tensors: dict[str, np.ndarray]) -> None:
    """Write named float32 tensors in the FTEN layout.

    Layout: magic "FTEN", <HI> version and tensor count, then per
    tensor a <H>-counted UTF-8 name, <B> rank, <I> dims, and the
    little-endian float32 payload.
    """
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


def load_ften(path) -> dict[str, np.ndarray]:
    """Read an FTEN file back into named float32 arrays."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != FTEN_MAGIC:
        raise ExportError(f"bad magic {blob[:4]!r}, expected {FTEN_MAGIC!r}")
    if len(blob) < 10:
        raise ExportError("truncated header")
    version, count = struct.unpack_from("<HI", blob, 4)
    if version != FTEN_VERSION:
        raise ExportError(f"unsupported version {version}")
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
            raise ExportError(f"corrupt tensor header at offset {pos}") from exc
        nbytes = 4 * (int(np.prod(dims, dtype=np.int64)) if ndim else 1)
        if pos + nbytes > len(blob):
            raise ExportError(f"truncated payload for tensor '{name}'")
        tensors[name] = np.frombuffer(blob[pos : pos + nbytes], dtype="<f4").reshape(dims)
        pos += nbytes
    return tensors


def validate_topology(tensors: dict[str, np.ndarray]) -> None:
    """Refuse tensor sets that do not match the consumer topology."""
    cin = 1
    for i, cout in enumerate(STAGE_CHANNELS, start=1):
        for name, shape in (
            (f"conv{i}.weight", (cout, cin, 3, 3)),
            (f"conv{i}.bias", (cout,)),
        ):
            if name not in tensors:
                raise ExportError(f"missing tensor '{name}'")
            if tuple(tensors[name].shape) != shape:
                raise ExportError(
                    f"tensor '{name}' has shape {tuple(tensors[name].shape)}, "
                    f"expected {shape}"
                )
        cin = cout


def collect_vgg11_tensors(
    pretrained: bool = True, fallback_seed: int = 0
) -> tuple[dict[str, np.ndarray], str]:
    """Conv weights and biases of torchvision's vgg11 feature stack.

    Returns (tensors, provenance).  Layers are renamed conv1..conv8 in
    stack order and conv1 is averaged over its RGB input channels.
    When the pretrained download fails (offline host), a seeded random
    initialization of the same architecture is exported instead and the
    provenance string says so.
    """
    import torch
    from torchvision.models import VGG11_Weights, vgg11

    model = None
    provenance = ""
    if pretrained:
        try:
            model = vgg11(weights=VGG11_Weights.IMAGENET1K_V1)
            provenance = "torchvision vgg11 IMAGENET1K_V1"
        except Exception:
            model = None
    if model is None:
        torch.manual_seed(fallback_seed)
        model = vgg11(weights=None)
        provenance = (
            f"torchvision vgg11 architecture, seeded init "
            f"(torch.manual_seed({fallback_seed}))"
        )
    convs = [m for m in model.features if isinstance(m, torch.nn.Conv2d)]
    if len(convs) != len(STAGE_CHANNELS):
        raise ExportError(
            f"expected {len(STAGE_CHANNELS)} conv layers, found {len(convs)}"
        )
    tensors: dict[str, np.ndarray] = {}
    for i, conv in enumerate(convs, start=1):
        weight = conv.weight.detach().cpu().numpy().astype(np.float32)
        bias = conv.bias.detach().cpu().numpy().astype(np.float32)
        if i == 1:
            weight = weight.mean(axis=1, keepdims=True)
        tensors[f"conv{i}.weight"] = weight
        tensors[f"conv{i}.bias"] = bias
    validate_topology(tensors)
    return tensors, provenance


def export_vgg11_weights(
    output_path, pretrained: bool = True, fallback_seed: int = 0
) -> dict:
    """Write the consumer-ready FTEN weight file and return its metadata.

    The tensor set is validated against the declared topology before any
    bytes are written; a mismatch refuses the export.
    """
    tensors, provenance = collect_vgg11_tensors(pretrained, fallback_seed)
    validate_topology(tensors)
    save_ften(output_path, tensors)
    return {
        "path": str(output_path),
        "provenance": provenance,
        "tensors": {name: list(arr.shape) for name, arr in tensors.items()},
    }


def reference_activations(patch: np.ndarray, tensors: dict[str, np.ndarray]) -> np.ndarray:
    """Torch forward of the truncated stack on one single-channel patch.

    Mirrors the consumer's preprocessing, x = (p / 255 - mean) / std,
    and serves as the cross-implementation oracle for the consumer's
    extractor.  Returns a (512, H/16, W/16) float32 array.
    """
    import torch
    import torch.nn.functional as F  # noqa: N812

    patch = np.asarray(patch)
    if patch.ndim != 2:
        raise ExportError(f"patch must be 2-D, got shape {patch.shape}")
    validate_topology(tensors)
    x = (patch.astype(np.float32) / 255.0 - INPUT_MEAN) / INPUT_STD
    t = torch.from_numpy(x)[None, None]
    with torch.no_grad():
        for i in range(1, len(STAGE_CHANNELS) + 1):
            # Copies: FTEN arrays view a read-only buffer, which torch
            # refuses to wrap quietly.
            w = torch.from_numpy(np.array(tensors[f"conv{i}.weight"], dtype=np.float32))
            b = torch.from_numpy(np.array(tensors[f"conv{i}.bias"], dtype=np.float32))
            t = F.relu(F.conv2d(t, w, b, padding=1))
            if i in POOL_AFTER_STAGE:
                t = F.max_pool2d(t, 2)
    return t[0].numpy()


def export_reference_activations(weight_path, patch: np.ndarray, output_path) -> dict:
    """FTEN dump {patch, activations} for cross-checking a weight file.

    The patch is stored as float32 (exact for 8-bit samples) so a
    consumer can re-extract from the identical input and compare.
    """
    tensors = load_ften(weight_path)
    activations = reference_activations(patch, tensors)
    save_ften(
        output_path,
        {
            "patch": np.asarray(patch, dtype=np.float32),
            "activations": activations,
        },
    )
    return {
        "path": str(output_path),
        "weights": str(weight_path),
        "patch_shape": list(np.asarray(patch).shape),
        "activations_shape": list(activations.shape),
    }
