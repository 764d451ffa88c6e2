"""Command-line entry points for the exporter.

Exit codes: 0 success, 1 any error (bad input, unreadable file,
topology refusal).  Errors go to stderr as a single line."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .proposals import ProposalError, export_proposals, load_image_gray, write_proposals
from .weights import (
    ExportError,
    export_reference_activations,
    export_vgg11_weights,
    load_ften,
)


def cmd_weights(args) -> int:
    meta = export_vgg11_weights(
        args.output, pretrained=not args.no_pretrained, fallback_seed=args.seed
    )
    print(f"wrote {meta['path']}: {len(meta['tensors'])} tensors "
          f"({meta['provenance']})")
    return 0


def cmd_proposals(args) -> int:
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    for image_path in args.images:
        image_path = Path(image_path)
        image = load_image_gray(image_path)
        doc = export_proposals(
            image,
            score_floor=args.score_floor,
            max_boxes=args.max_boxes,
            image_id=image_path.stem,
        )
        out_path = out_dir / f"{image_path.stem}.boxes.json"
        write_proposals(out_path, doc)
        print(f"wrote {out_path}: {len(doc['boxes'])} boxes")
    return 0


def cmd_reference(args) -> int:
    if args.image is not None:
        patch = load_image_gray(args.image)
    else:
        rng = np.random.default_rng(args.seed)
        patch = rng.integers(0, 256, size=(args.size, args.size), dtype=np.uint8)
    meta = export_reference_activations(args.weights, patch, args.output)
    print(f"wrote {meta['path']}: patch {meta['patch_shape']} -> "
          f"activations {meta['activations_shape']}")
    return 0


def cmd_inspect(args) -> int:
    tensors = load_ften(args.path)
    listing = {name: list(arr.shape) for name, arr in tensors.items()}
    print(json.dumps(listing, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlsidecar",
        description="Export feature-extractor weights and box-proposal "
        "documents for the rdmc toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="export truncated VGG-11 weights as FTEN")
    p.add_argument("output", help="destination .ften path")
    p.add_argument(
        "--no-pretrained",
        action="store_true",
        help="skip the model zoo and use a seeded initialization",
    )
    p.add_argument("--seed", type=int, default=0, help="fallback init seed")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("proposals", help="export box-proposal JSON documents")
    p.add_argument("images", nargs="+", help="input image paths")
    p.add_argument("-o", "--output", default=".", help="output directory")
    p.add_argument(
        "--score-floor", type=float, default=0.0,
        help="drop boxes scoring below this value",
    )
    p.add_argument(
        "--max-boxes", type=int, default=32,
        help="keep at most this many highest-scoring boxes",
    )
    p.set_defaults(func=cmd_proposals)

    p = sub.add_parser(
        "reference",
        help="dump a patch and its activations for cross-checking a weight file",
    )
    p.add_argument("weights", help="FTEN weight file to run")
    p.add_argument("output", help="destination .ften path")
    p.add_argument("--image", default=None, help="patch source image (grayscale)")
    p.add_argument("--size", type=int, default=32, help="random patch side length")
    p.add_argument("--seed", type=int, default=0, help="random patch seed")
    p.set_defaults(func=cmd_reference)

    p = sub.add_parser("inspect", help="list tensor names and shapes in an FTEN file")
    p.add_argument("path", help="FTEN file to read")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ExportError, ProposalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
