"""Command-line entry points.

    vigil run --config <file>            stream a source, print the report
    vigil serve --config <file> [...]    start the HTTP service
    vigil eval --manifest <file>         benchmark against a corpus manifest
    vigil plate read <image.ppm>         read one plate (optionally dump debug)
    vigil plate templates --out <dir>    export the glyph templates as PGM
    vigil color <image.ppm>              dominant-color report
    vigil vmmr arch|classify             architecture table / classification
    vigil gen-corpus                     render a synthetic corpus + manifest
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__


def _data_dir(explicit: str | None) -> str:
    return explicit or os.environ.get("VIGIL_DATA_DIR", "vigil-data")


def cmd_run(args) -> int:
    from .pipeline import PipelineConfig, run
    from .registry import SightingStore, Watchlist

    config = PipelineConfig.from_file(args.config)
    if args.source:
        config.source = args.source
    data_dir = _data_dir(config.data_dir or None)
    store = SightingStore(data_dir)
    watchlist = Watchlist(data_dir)
    report = run(config, store=store, watchlist=watchlist)
    print(report.render())
    store.close()
    watchlist.close()
    return 0


def cmd_serve(args) -> int:
    from .api import ApiConfig, serve
    from .pipeline import PipelineConfig

    pipeline_cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    config = ApiConfig(
        host=args.host,
        port=args.port,
        data_dir=_data_dir(args.data_dir),
        camera_registry=args.camera_registry or "",
        auth_token=args.token or "",
        pipeline=pipeline_cfg,
    )
    server = serve(config)
    print(f"vigil {__version__} serving on {server.base_url} (data: {config.data_dir})")
    try:
        import time

        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def cmd_eval(args) -> int:
    from .metrics import render_report, report_to_json, run_benchmark

    report = run_benchmark(args.manifest)
    print(render_report(report))
    if "per_char_accuracy" in report.extras:
        print(f"per-character accuracy: {report.extras['per_char_accuracy']:.4f}")
    if args.json:
        Path(args.json).write_text(report_to_json(report), encoding="utf-8")
        print(f"wrote {args.json}")
    return 0


def cmd_plate_read(args) -> int:
    from .imaging import decode_ppm, encode_pgm
    from .plate import LocateDebug, NoGlyphs, NoPlateFound, read_plate

    frame = decode_ppm(Path(args.image).read_bytes())
    debug = LocateDebug() if args.debug_dir else None
    try:
        readout = read_plate(frame, debug=debug)
    except (NoPlateFound, NoGlyphs) as e:
        print(f"no plate: {e}", file=sys.stderr)
        return 1
    finally:
        if debug is not None and debug.mask is not None:
            out = Path(args.debug_dir)
            out.mkdir(parents=True, exist_ok=True)
            from .imaging import GrayFrame

            mask_img = GrayFrame((debug.mask.bits * 255).astype(np.uint8))
            (out / "threshold_mask.pgm").write_bytes(encode_pgm(mask_img))
            (out / "candidates.json").write_text(
                json.dumps([c.tolist() for c in debug.candidates], indent=2)
            )
    print(f"text: {readout.text}")
    print(f"type: {readout.plate_type}")
    print(f"confidence: {readout.confidence:.3f}")
    print(f"corners: {readout.quad.corners.tolist()}")
    return 0


def cmd_plate_templates(args) -> int:
    from .imaging import GrayFrame, encode_pgm
    from .plate import TEMPLATES

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for char, bitmap in TEMPLATES.items():
        img = GrayFrame(np.where(bitmap, 0, 255).astype(np.uint8))
        (out / f"{char}.pgm").write_bytes(encode_pgm(img))
    print(f"wrote {len(TEMPLATES)} templates to {out}")
    return 0


def cmd_color(args) -> int:
    from .color import center_window_pixels, kmeans, sort_by_dominance, swatch_report
    from .imaging import decode_ppm

    frame = decode_ppm(Path(args.image).read_bytes())
    pts = center_window_pixels(frame)
    model = sort_by_dominance(kmeans(pts, min(args.k, len(pts)), seed=args.seed))
    for name, hexcode, share in swatch_report(model, len(pts)):
        print(f"{hexcode}  {share * 100:5.1f}%  {name}")
    top = swatch_report(model, len(pts))[0]
    print(f"dominant: {top[0]}")
    return 0


def cmd_vmmr_arch(args) -> int:
    from .vmmr import build_architecture, count_mult_adds, count_params
    from .vmmr.arch import render_arch_table

    spec = build_architecture(args.alpha, args.res, args.classes)
    print(render_arch_table(spec))
    if args.counts:
        print(f"parameters: {count_params(spec):,}")
        print(f"mult-adds:  {count_mult_adds(spec):,}")
    return 0


def cmd_vmmr_classify(args) -> int:
    from .imaging import decode_ppm, resize_bilinear
    from .vmmr import forward, top_k
    from .vmmr.sanity import make_sanity_model
    from .vmmr.weights import load_model

    if args.weights == "sanity":
        spec, bundle = make_sanity_model()
    else:
        spec, bundle = load_model(args.weights)
    frame = decode_ppm(Path(args.image).read_bytes())
    resized = resize_bilinear(frame, spec.input_resolution, spec.input_resolution)
    pred = forward(spec, bundle, resized)
    for rank, cls in enumerate(top_k(pred, min(args.topk, pred.num_classes)), 1):
        label = bundle.labels[cls] if bundle.labels and cls < len(bundle.labels) else str(cls)
        print(f"{rank}. {label}  p={pred.probabilities[rank - 1]:.4f}")
    return 0


def cmd_gen_corpus(args) -> int:
    from .corpus import generate_corpus

    manifest = generate_corpus(
        args.out,
        scenes=args.scenes,
        seed=args.seed,
        noisy_fraction=args.noisy_fraction,
        occluded_fraction=args.occluded_fraction,
    )
    print(f"wrote {manifest}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vigil", description=__doc__)
    parser.add_argument("--version", action="version", version=f"vigil {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the pipeline over a frame source")
    p.add_argument("--config", required=True)
    p.add_argument("--source", help="override the configured source")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--config", help="pipeline config for ingestion")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--data-dir")
    p.add_argument("--camera-registry")
    p.add_argument("--token")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("eval", help="benchmark against a corpus manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--json", help="also write machine-readable rows here")
    p.set_defaults(fn=cmd_eval)

    plate = sub.add_parser("plate", help="plate tools").add_subparsers(
        dest="plate_command", required=True
    )
    p = plate.add_parser("read", help="read a plate from an image")
    p.add_argument("image")
    p.add_argument("--debug-dir", help="dump intermediate masks/candidates here")
    p.set_defaults(fn=cmd_plate_read)
    p = plate.add_parser("templates", help="export glyph templates as PGM")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_plate_templates)

    p = sub.add_parser("color", help="dominant-color report for an image")
    p.add_argument("image")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_color)

    vmmr = sub.add_parser("vmmr", help="make/model tools").add_subparsers(
        dest="vmmr_command", required=True
    )
    p = vmmr.add_parser("arch", help="print the layer stack")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--res", type=int, default=224)
    p.add_argument("--classes", type=int, default=431)
    p.add_argument("--counts", action="store_true")
    p.set_defaults(fn=cmd_vmmr_arch)
    p = vmmr.add_parser("classify", help="classify an image")
    p.add_argument("image")
    p.add_argument("--weights", required=True, help="weight file, or 'sanity'")
    p.add_argument("--topk", type=int, default=5)
    p.set_defaults(fn=cmd_vmmr_classify)

    p = sub.add_parser("gen-corpus", help="render a synthetic corpus")
    p.add_argument("--scenes", type=int, default=200)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--noisy-fraction", type=float, default=0.15)
    p.add_argument("--occluded-fraction", type=float, default=0.05)
    p.set_defaults(fn=cmd_gen_corpus)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
