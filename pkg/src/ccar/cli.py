"""Command-line surface: train | encode | decode | eval | curve | ablate | sample | progressive.

Exit codes: 0 success, 2 usage, 3 missing file, 4 config-hash mismatch,
5 malformed bitstream/checkpoint, 1 anything else.
"""

import argparse
import csv
import os
import sys

import numpy as np

from . import imageio
from .ablate import LAMBDA_GRID, evaluate_model, run_ablation
from .bd import RdCurve, bd_rate
from .checkpoint import load_checkpoint
from .errors import CodecError, ConfigHashMismatch, MalformedBitstream
from .metrics import bits_per_pixel, psnr
from .model import (
    Bitstream,
    CodecModel,
    ModelConfig,
    decode_image,
    encode_image,
    hyper_latent_of,
    progressive_decode,
    sample_image,
)
from .parallel import parallel_map
from .plotting import rd_curves_svg
from .training import DataPipeline, parse_config_file, synthetic_textures, train
from .training.data import load_image_dir

EXIT_MISSING_FILE = 3
EXIT_HASH_MISMATCH = 4
EXIT_MALFORMED = 5


def _load_model(checkpoint, config_path=None):
    cfg_path = config_path or checkpoint + ".cfg"
    if not os.path.exists(cfg_path):
        raise FileNotFoundError(f"no config file at {cfg_path} (pass --config)")
    model_config, _ = parse_config_file(cfg_path)
    model = CodecModel(model_config)
    load_checkpoint(checkpoint, model)
    return model


def _cmd_train(args):
    model_config, train_config = parse_config_file(args.config)
    if args.data == "synthetic":
        images = synthetic_textures(train_config.seed)
    else:
        images = load_image_dir(args.data)
    model = CodecModel(model_config, seed=train_config.seed)
    pipeline = DataPipeline(images, train_config.patch_size, train_config.batch_size,
                            train_config.seed)
    train(model, train_config, pipeline, args.out, quiet=args.quiet)
    print(f"wrote {os.path.join(args.out, 'ckpt_final.ckpt')}")
    return 0


def _cmd_encode(args):
    model = _load_model(args.checkpoint, args.config)
    img = imageio.read_image(args.input)
    bs, _, stats = encode_image(model, img)
    data = bs.to_bytes()
    with open(args.output, "wb") as f:
        f.write(data)
    bpp = bits_per_pixel(len(data), bs.width, bs.height)
    print(f"{args.input}: {len(data)} bytes, {bpp:.4f} bpp "
          f"(analytic {stats.total_bits / 8:.1f} B, {stats.escapes} escapes)")
    return 0


def _cmd_decode(args):
    model = _load_model(args.checkpoint, args.config)
    with open(args.input, "rb") as f:
        bs = Bitstream.from_bytes(f.read())
    imageio.write_image(args.output, decode_image(model, bs))
    print(f"wrote {args.output}")
    return 0


def _cmd_eval(args):
    model = _load_model(args.checkpoint, args.config)
    paths = sorted(os.path.join(args.images, p) for p in os.listdir(args.images)
                   if p.lower().endswith((".png", ".ppm")))
    if not paths:
        raise FileNotFoundError(f"no images in {args.images}")

    def one(path):
        img = imageio.read_image(path)
        bs, _, _ = encode_image(model, img)
        recon = decode_image(model, bs)
        nbytes = len(bs.to_bytes())
        return (os.path.basename(path), img.shape[2], img.shape[1], nbytes,
                bits_per_pixel(nbytes, img.shape[2], img.shape[1]), psnr(img, recon))

    rows = parallel_map(one, paths)
    with open(args.output, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["image", "width", "height", "bytes", "bpp", "psnr"])
        for r in sorted(rows):
            w.writerow([r[0], r[1], r[2], r[3], f"{r[4]:.6f}", f"{r[5]:.4f}"])
    print(f"wrote {args.output} ({len(rows)} images)")
    return 0


def _cmd_curve(args):
    # Each input CSV contributes one RD point: the mean bpp/PSNR over its rows.
    points = []
    for path in args.inputs:
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        points.append((float(np.mean([float(r["bpp"]) for r in rows])),
                       float(np.mean([float(r["psnr"]) for r in rows]))))
    curve = RdCurve(points, label=args.label, validate=False)
    with open(args.output_json, "w") as f:
        f.write(curve.to_json())
    if args.output_svg:
        with open(args.output_svg, "w") as f:
            f.write(rd_curves_svg([curve], title=args.label or "rate-distortion"))
    print(f"wrote {args.output_json}")
    return 0


def _cmd_ablate(args):
    curves = run_ablation(args.axis, args.out, steps=args.steps,
                          lambdas=tuple(args.lambdas) if args.lambdas else LAMBDA_GRID)
    svg = rd_curves_svg(curves, title=f"ablation: {args.axis}")
    with open(os.path.join(args.out, f"curves_{args.axis}.svg"), "w") as f:
        f.write(svg)
    ref = curves[0]
    for c in curves[1:]:
        print(f"bd_rate({c.label}, {ref.label}) = {bd_rate(c, ref):+.3f}%")
    return 0


def _cmd_sample(args):
    model = _load_model(args.checkpoint, args.config)
    z = None
    if args.hyper_from:
        z = hyper_latent_of(model, imageio.read_image(args.hyper_from))
        args.width = z.shape[3] * 64
        args.height = z.shape[2] * 64
    img = sample_image(model, args.height, args.width, args.seed,
                       z_hat=z, mode_latents=args.mode == "mode")
    imageio.write_image(args.output, img)
    print(f"wrote {args.output}")
    return 0


def _cmd_progressive(args):
    model = _load_model(args.checkpoint, args.config)
    with open(args.input, "rb") as f:
        bs = Bitstream.from_bytes(f.read())
    ref = imageio.read_image(args.reference) if args.reference else None
    ks = range(0, bs.num_slices + 1) if args.k is None else [args.k]
    for k in ks:
        img = progressive_decode(model, bs, k)
        path = f"{args.out_prefix}_k{k}.png"
        imageio.write_image(path, img)
        note = f" psnr {psnr(ref, img):.2f} dB" if ref is not None else ""
        print(f"wrote {path}{note}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="ccar", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model from a config file")
    t.add_argument("--config", required=True)
    t.add_argument("--data", default="synthetic", help="image directory or 'synthetic'")
    t.add_argument("--out", required=True)
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(fn=_cmd_train)

    e = sub.add_parser("encode", help="compress an image")
    e.add_argument("--input", required=True)
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--output", required=True)
    e.add_argument("--config", default=None)
    e.set_defaults(fn=_cmd_encode)

    d = sub.add_parser("decode", help="decompress a bitstream")
    d.add_argument("--input", required=True)
    d.add_argument("--checkpoint", required=True)
    d.add_argument("--output", required=True)
    d.add_argument("--config", default=None)
    d.set_defaults(fn=_cmd_decode)

    ev = sub.add_parser("eval", help="encode+decode a directory, emit bpp/PSNR CSV")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--images", required=True)
    ev.add_argument("--output", required=True)
    ev.add_argument("--config", default=None)
    ev.set_defaults(fn=_cmd_eval)

    c = sub.add_parser("curve", help="aggregate eval CSVs (one RD point each) into JSON + SVG")
    c.add_argument("--inputs", nargs="+", required=True)
    c.add_argument("--output-json", required=True)
    c.add_argument("--output-svg", default=None)
    c.add_argument("--label", default="")
    c.set_defaults(fn=_cmd_curve)

    a = sub.add_parser("ablate", help="sweep an architecture axis over the lambda grid")
    a.add_argument("--axis", required=True,
                   choices=["num_slices", "lrp", "train_quantization", "slice_support", "hyper_out_depth"])
    a.add_argument("--out", required=True)
    a.add_argument("--steps", type=int, default=1200)
    a.add_argument("--lambdas", type=float, nargs="*", default=None)
    a.set_defaults(fn=_cmd_ablate)

    s = sub.add_parser("sample", help="sample an image from the model")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--width", type=int, default=256)
    s.add_argument("--height", type=int, default=256)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", required=True)
    s.add_argument("--mode", choices=["random", "mode"], default="random")
    s.add_argument("--hyper-from", default=None, help="condition on this image's hyper-latent")
    s.add_argument("--config", default=None)
    s.set_defaults(fn=_cmd_sample)

    g = sub.add_parser("progressive", help="decode the first k slices, mode-fill the rest")
    g.add_argument("--input", required=True)
    g.add_argument("--checkpoint", required=True)
    g.add_argument("--out-prefix", required=True)
    g.add_argument("-k", type=int, default=None)
    g.add_argument("--reference", default=None)
    g.add_argument("--config", default=None)
    g.set_defaults(fn=_cmd_progressive)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except ConfigHashMismatch as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_HASH_MISMATCH
    except MalformedBitstream as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MALFORMED
    except CodecError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
