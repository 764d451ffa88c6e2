"""Command-line front end.

Subcommands: roim-build, encode, decode, metrics, sweep, bd-rate,
calibrate-beta, satd-dump.  Exit codes: 0 success, 1 usage error,
2 I/O error, 3 validation error.
"""

import argparse
import csv
import statistics
import sys

import numpy as np

from .codec import (
    DEFAULT_RDO_LAMBDA_SCALE,
    CodecConfig,
    decode_frame,
    encode_frame,
)
from .features import FeatureProviderConfig
from .frame import Frame, load_image, partition_ctus, store_image
from .metrics import RdPoint, bd_rate, format_db, psnr
from .msfd import DEFAULT_BETA, MultiScaleConfig, mse
from .ratecontrol import DEFAULT_ALPHA
from .roim import BoxSet, build_roim, load_roim, save_roim
from .satd import frame_satd_map

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VALIDATION = 3

STATS_COLUMNS = (
    "index",
    "satd",
    "m_i",
    "cost",
    "target_bits",
    "actual_bits",
    "qp_est",
    "qp_final",
    "anchor_index",
    "m_c",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems via exception,
    keeping the exit-code contract in one place."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _feature_config(args) -> FeatureProviderConfig:
    if getattr(args, "weights", None):
        return FeatureProviderConfig(kind="weight-file", weight_path=args.weights)
    return FeatureProviderConfig(kind="builtin", seed=args.seed)


def _codec_config(args, target_bpp, base_qp) -> CodecConfig:
    return CodecConfig(
        ctu_size=args.ctu,
        target_bpp=target_bpp,
        base_qp=base_qp,
        alpha=args.alpha,
        rdo_lambda_scale=args.kappa,
        msfd=MultiScaleConfig(beta=args.beta),
        features=_feature_config(args),
    )


def _write_stats_csv(path, stats) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(STATS_COLUMNS)
        for s in stats:
            writer.writerow(
                [
                    s.index,
                    s.satd,
                    s.m_i,
                    s.cost,
                    s.target_bits,
                    s.actual_bits,
                    s.qp_est,
                    s.qp_final,
                    s.anchor_index,
                    s.m_c,
                ]
            )


def _load_curve(path) -> list:
    """RD points from a CSV whose first two columns are rate, quality."""
    points = []
    with open(path, "r", newline="", encoding="utf-8") as f:
        for row in csv.reader(f):
            if len(row) < 2:
                continue
            try:
                rate, quality = float(row[0]), float(row[1])
            except ValueError:
                continue  # header or comment row
            points.append(RdPoint(bpp=rate, quality=quality))
    return points


def _parse_rates(text: str) -> list[float]:
    try:
        rates = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --target-bpp list {text!r}") from exc
    if not rates or any(r <= 0 for r in rates):
        raise UsageError(f"--target-bpp needs positive rates, got {text!r}")
    return rates


def cmd_roim_build(args) -> int:
    frame = load_image(args.image)
    boxes = BoxSet.load(args.boxes)
    grid = partition_ctus(frame, args.ctu)
    roim = build_roim(grid, boxes)
    save_roim(roim, args.output)
    print(f"wrote {args.output}: {grid.cols}x{grid.rows} CTUs, {len(boxes)} boxes")
    return EXIT_OK


def cmd_encode(args) -> int:
    frame = load_image(args.image)
    roim = load_roim(args.roim) if args.roim else None
    if args.target_bpp is not None:
        cfg = _codec_config(args, args.target_bpp, 32)
    else:
        cfg = _codec_config(args, None, args.qp)
    result = encode_frame(frame, roim, cfg)
    with open(args.output, "wb") as f:
        f.write(result.data)
    if args.stats:
        _write_stats_csv(args.stats, result.stats)
    if args.qp_map:
        grid = partition_ctus(frame, args.ctu)
        qp_img = result.qp_map.reshape(grid.rows, grid.cols).astype(np.uint8)
        store_image(Frame(qp_img), args.qp_map)
    bpp = result.total_bits / (frame.width * frame.height)
    quality = psnr(frame, result.recon)
    if result.overrun:
        print("warning: bit budget overrun, floor targets in effect", file=sys.stderr)
    print(
        f"encoded {args.image} -> {args.output}: {result.total_bits} bits "
        f"({bpp:.4f} bpp), psnr {format_db(quality)} dB"
    )
    return EXIT_OK


def cmd_decode(args) -> int:
    with open(args.input, "rb") as f:
        data = f.read()
    frame = decode_frame(data)
    store_image(frame, args.output)
    print(f"decoded {args.input} -> {args.output}: {frame.width}x{frame.height}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    orig = load_image(args.orig)
    recon = load_image(args.recon)
    quality = psnr(orig, recon)
    err = mse(orig.samples, recon.samples)
    print(f"psnr={format_db(quality)}")
    print(f"mse={err:.6f}")
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["psnr_db", "mse"])
            writer.writerow([format_db(quality), f"{err:.6f}"])
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .plotting import plot_rd_curve

    frame = load_image(args.image)
    roim = load_roim(args.roim) if args.roim else None
    rates = _parse_rates(args.target_bpp)
    rows = []
    points = []
    for rate in rates:
        cfg = _codec_config(args, rate, 32)
        result = encode_frame(frame, roim, cfg)
        bpp = result.total_bits / (frame.width * frame.height)
        quality = psnr(frame, result.recon)
        rows.append((bpp, quality, rate, result.total_bits))
        points.append(RdPoint(bpp=bpp, quality=quality))
        print(f"target {rate:.4f} bpp -> {bpp:.4f} bpp, psnr {format_db(quality)} dB")
    with open(args.output, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["bpp", "psnr_db", "target_bpp", "bits"])
        for bpp, quality, rate, bits in rows:
            writer.writerow([f"{bpp:.6f}", format_db(quality), rate, bits])
    plot_path = args.plot or _default_plot_path(args.output)
    plot_rd_curve(points, plot_path, title=f"RD sweep: {args.image}")
    print(f"wrote {args.output} and {plot_path}")
    return EXIT_OK


def _default_plot_path(csv_path: str) -> str:
    stem = csv_path[:-4] if csv_path.lower().endswith(".csv") else csv_path
    return stem + ".png"


def cmd_bd_rate(args) -> int:
    curve_a = _load_curve(args.curve_a)
    curve_b = _load_curve(args.curve_b)
    value = bd_rate(curve_a, curve_b)
    print(f"bd_rate_percent={value:+.2f}")
    return EXIT_OK


def cmd_calibrate_beta(args) -> int:
    msfd_samples = []
    mse_samples = []
    rows = []
    for image_path in args.images:
        frame = load_image(image_path)
        cfg = _codec_config(args, None, args.qp)
        result = encode_frame(frame, None, cfg)
        for tree in result.trees:
            for leaf in tree.leaves():
                if leaf.rd is None:
                    continue
                msfd_samples.append(leaf.rd.msfd)
                mse_samples.append(leaf.rd.mse)
                rows.append(
                    (
                        image_path,
                        leaf.region.x,
                        leaf.region.y,
                        leaf.region.w,
                        leaf.rd.msfd,
                        leaf.rd.mse,
                    )
                )
    if not msfd_samples:
        raise UsageError("no coded leaves found; check the image list")
    med_msfd = statistics.median(msfd_samples)
    med_mse = statistics.median(mse_samples)
    if med_mse == 0:
        print("median mse is 0 (lossless operating point); beta unconstrained")
        return EXIT_OK
    suggested = med_msfd / med_mse
    print(f"leaves={len(msfd_samples)} median_msfd={med_msfd:.6g} median_mse={med_mse:.6g}")
    print(f"beta={suggested:.6g}")
    if args.output:
        with open(args.output, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["image", "x", "y", "size", "msfd", "mse"])
            writer.writerows(rows)
    return EXIT_OK


def cmd_satd_dump(args) -> int:
    frame = load_image(args.image)
    grid = partition_ctus(frame, args.ctu)
    satd_map = frame_satd_map(frame, grid)
    with open(args.output, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["index", "satd"])
        for k, value in enumerate(satd_map):
            writer.writerow([k, value])
    print(f"wrote {args.output}: {len(satd_map)} CTUs")
    return EXIT_OK


def _add_feature_flags(parser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="builtin feature-weight seed")
    parser.add_argument("--weights", help="FTEN weight file (overrides --seed)")


def _add_encode_flags(parser) -> None:
    parser.add_argument("--ctu", type=int, default=64, help="CTU size in pixels")
    parser.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="importance weight in the allocation cost")
    parser.add_argument("--beta", type=float, default=DEFAULT_BETA, help="MSE weight in the RD distortion")
    parser.add_argument(
        "--kappa",
        type=float,
        default=DEFAULT_RDO_LAMBDA_SCALE,
        help="distortion-units scale inside the RD lambda",
    )
    _add_feature_flags(parser)


def build_parser() -> _Parser:
    parser = _Parser(prog="rdmc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("roim-build", help="build a ROI map from box proposals")
    p.add_argument("--image", required=True)
    p.add_argument("--boxes", required=True, help="box-proposal JSON document")
    p.add_argument("--ctu", type=int, default=64)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_roim_build)

    p = sub.add_parser("encode", help="encode an image to a bitstream")
    p.add_argument("--image", required=True)
    p.add_argument("--roim", help="ROI map JSON (from roim-build)")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--target-bpp", type=float, help="rate-controlled encode at this bpp")
    group.add_argument("--qp", type=int, help="fixed-QP encode (bypasses rate control)")
    _add_encode_flags(p)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--stats", help="write per-CTU statistics CSV")
    p.add_argument("--qp-map", help="write the per-CTU QP map as a PGM image")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode a bitstream to a PGM image")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("metrics", help="PSNR/MSE between two images")
    p.add_argument("--orig", required=True)
    p.add_argument("--recon", required=True)
    p.add_argument("--csv", help="also write the metrics as CSV")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep", help="encode at several rates, emit CSV + plot")
    p.add_argument("--image", required=True)
    p.add_argument("--roim")
    p.add_argument("--target-bpp", required=True, help="comma-separated bpp list")
    _add_encode_flags(p)
    p.add_argument("-o", "--output", required=True, help="CSV output path")
    p.add_argument("--plot", help="PNG path (default: CSV path with .png)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bd-rate", help="average rate difference between two RD curves")
    p.add_argument("--curve-a", required=True, help="reference curve CSV (rate, quality)")
    p.add_argument("--curve-b", required=True, help="test curve CSV (rate, quality)")
    p.set_defaults(func=cmd_bd_rate)

    p = sub.add_parser(
        "calibrate-beta", help="suggest beta balancing MSFD and MSE magnitudes"
    )
    p.add_argument("images", nargs="+", help="calibration images (PGM)")
    p.add_argument("--qp", type=int, default=40, help="fixed QP for the calibration encodes")
    _add_encode_flags(p)
    p.add_argument("-o", "--output", help="per-leaf sample CSV")
    p.set_defaults(func=cmd_calibrate_beta)

    p = sub.add_parser("satd-dump", help="per-CTU SATD as CSV")
    p.add_argument("--image", required=True)
    p.add_argument("--ctu", type=int, default=64)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_satd_dump)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
