"""Command-line toolchain around the library.

One executable, subcommand per task, JSON as the only structured output.
Exit codes: 0 success, 2 input failure, 3 config failure, 4 numeric
failure; runtime failures print a one-line JSON object to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .colorize import flow_to_color
from .errors import ConfigError, InputError, NumericError
from .flowio import load_image, read_flo, save_image, write_flo
from .geom import RotationSpec
from .losses import (
    neg_cosine,
    neg_cosine_grad,
    symmetrized_sim_loss,
    symmetrized_sim_loss_grad,
)
from .metrics import RANGE_PRESETS, DistortionMap, binned_report, build_distortion_map
from .pipeline import (
    DEFAULT_FOV,
    TRANSPORT_MODES,
    CommandBackend,
    PipelineConfig,
    estimate_pano_flow,
)
from .remap import rotate_flow, rotate_frame
from .stats import build_stats_report
from .synth import TEXTURES, SyntheticScene, render_pair, rotation_flow_gt
from .tangent import TangentPatch, TangentSpec, patch_to_equirect, sample_patches

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_NUMERIC = 4

PATCH_META = "patches.json"


def _formatter(prog):
    # fixed width keeps --help output independent of the terminal
    return argparse.HelpFormatter(prog, width=78)


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("SPHEREFLOW_THREADS", "1")))
    except ValueError:
        return 1


def _rotation(args) -> RotationSpec:
    return RotationSpec(pitch=args.pitch, roll=args.roll, yaw=args.yaw)


def _emit(doc) -> None:
    print(json.dumps(doc, indent=2))


def cmd_rotate(args) -> int:
    r = _rotation(args)
    if args.infile.endswith(".flo"):
        flow = read_flo(args.infile)
        write_flo(args.out, rotate_flow(flow, r))
    else:
        img = load_image(args.infile)
        save_image(args.out, rotate_frame(img, r).data)
    _emit({"out": args.out, "pitch": r.pitch, "roll": r.roll, "yaw": r.yaw})
    return EXIT_OK


def cmd_project(args) -> int:
    if args.mode == "sample":
        if args.infile is None or args.out_dir is None:
            raise ConfigError("sample mode needs --in and --out-dir")
        img = load_image(args.infile)
        patches = sample_patches(img, fov=args.fov, patch_size=args.patch_size)
        os.makedirs(args.out_dir, exist_ok=True)
        names = []
        for i, patch in enumerate(patches):
            name = f"patch_{i}.png"
            save_image(os.path.join(args.out_dir, name), patch.raster)
            names.append(name)
        meta = {
            "fov": args.fov,
            "patch_size": patches[0].spec.patch_h,
            "height": img.shape[0],
            "width": img.shape[1],
            "patches": names,
        }
        with open(os.path.join(args.out_dir, PATCH_META), "w") as fh:
            json.dump(meta, fh, indent=2)
        _emit({"out_dir": args.out_dir, "patches": names})
        return EXIT_OK

    if args.in_dir is None or args.out is None:
        raise ConfigError("splat mode needs --in-dir and --out")
    meta_path = os.path.join(args.in_dir, PATCH_META)
    if not os.path.exists(meta_path):
        raise InputError(f"{meta_path} not found; run project sample first")
    with open(meta_path) as fh:
        meta = json.load(fh)
    h, w = meta["height"], meta["width"]
    size = meta["patch_size"]
    centers = [
        (0.0, 0.0), (math.pi / 2, 0.0), (math.pi, 0.0), (-math.pi / 2, 0.0),
        (0.0, math.pi / 2), (0.0, -math.pi / 2),
    ]
    num = None
    den = np.zeros((h, w))
    for name, (lam0, psi0) in zip(meta["patches"], centers):
        raster = load_image(os.path.join(args.in_dir, name))
        spec = TangentSpec(lam0, psi0, meta["fov"], size, size)
        pasted, weight = patch_to_equirect(TangentPatch(spec, raster), h, w)
        if num is None:
            num = np.zeros_like(pasted.data)
        num += pasted.data * (weight if pasted.data.ndim == 2
                              else weight[..., None])
        den += weight
    if np.any(den <= 0):
        raise NumericError("patch set does not cover the sphere")
    recon = num / (den if num.ndim == 2 else den[..., None])
    save_image(args.out, recon)
    _emit({"out": args.out, "height": h, "width": w})
    return EXIT_OK


def cmd_eval(args) -> int:
    pred = read_flo(args.pred)
    gt = read_flo(args.gt)
    if args.density == "none":
        dmap = DistortionMap(np.zeros((gt.h, gt.w)), 0.0, 1.0)
    else:
        dmap = build_distortion_map(gt.h, gt.w, drange=args.density)
    report = binned_report(pred, gt, dmap)
    text = report.to_json(indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_stats(args) -> int:
    frames = [load_image(p) for p in args.frames]
    flows = [read_flo(p) for p in args.flows] if args.flows else None
    report = build_stats_report(frames, flows=flows, crop=args.crop)
    text = report.to_json(indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    if args.plot_dir:
        _write_stats_plots(report, args.plot_dir)
    return EXIT_OK


def _write_stats_plots(report, plot_dir) -> None:
    os.makedirs(plot_dir, exist_ok=True)
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 3.0))
    ax.bar(np.arange(256), report.luminance_hist, width=1.0, color="0.4")
    ax.set_xlabel("luminance")
    ax.set_ylabel("pixels")
    fig.tight_layout()
    fig.savefig(os.path.join(plot_dir, "luminance.png"), dpi=110)
    plt.close(fig)

    prof = report.spectrum_profile
    freq = np.asarray(prof["freq"])
    power = np.asarray(prof["power"])
    pos = (freq > 0) & (power > 0)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.loglog(freq[pos], power[pos], lw=1.0, label="ring average")
    lo, hi = prof["fit_band"]
    band = pos & (freq >= lo) & (freq <= hi)
    if band.any():
        f0 = freq[band][0]
        p0 = power[band][0]
        ax.loglog(freq[band], p0 * (freq[band] / f0) ** report.spectrum_slope,
                  "--", lw=1.0,
                  label=f"slope {report.spectrum_slope:.2f}")
    ax.set_xlabel("cycles/pixel")
    ax.set_ylabel("power")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(plot_dir, "spectrum.png"), dpi=110)
    plt.close(fig)

    if report.flow_hists:
        names = list(report.flow_hists)
        fig, axes = plt.subplots(2, 3, figsize=(10.0, 5.5))
        for ax, name in zip(axes.ravel(), names):
            hist = report.flow_hists[name]
            edges = np.asarray(hist["edges"])
            counts = np.asarray(hist["counts"])
            ax.step(edges[:-1], counts, where="post", lw=0.8)
            ax.set_title(name)
        for ax in axes.ravel()[len(names):]:
            ax.axis("off")
        fig.tight_layout()
        fig.savefig(os.path.join(plot_dir, "flow_hists.png"), dpi=110)
        plt.close(fig)


def cmd_estimate(args) -> int:
    f1 = load_image(args.in1)
    f2 = load_image(args.in2)
    if args.backend == "external-cmd":
        if not args.cmd:
            raise ConfigError("external-cmd backend needs --cmd")
        backend = CommandBackend(args.cmd)
        params = {}
    else:
        backend = "builtin"
        params = {"alpha": args.alpha, "iters": args.iters,
                  "pyramid_levels": args.pyramid_levels, "warps": args.warps}
    cfg = PipelineConfig(
        fov=args.fov,
        patch_size=args.patch_size,
        input_size=tuple(args.input_size) if args.input_size else None,
        backend=backend,
        backend_params=params,
        transport=args.transport,
        threads=args.threads if args.threads else _default_threads(),
    )
    flow = estimate_pano_flow(f1, f2, cfg)
    write_flo(args.out, flow)
    _emit({"out": args.out, "height": flow.h, "width": flow.w})
    return EXIT_OK


def cmd_synth(args) -> int:
    scene = SyntheticScene(texture=args.texture, seed=args.seed, h=args.height)
    r = _rotation(args)
    frame1, frame2 = render_pair(scene, r)
    gt = rotation_flow_gt(scene.h, scene.w, r)
    os.makedirs(args.out_dir, exist_ok=True)
    p1 = os.path.join(args.out_dir, "frame1.png")
    p2 = os.path.join(args.out_dir, "frame2.png")
    pg = os.path.join(args.out_dir, "gt.flo")
    save_image(p1, frame1.data)
    save_image(p2, frame2.data)
    write_flo(pg, gt)
    _emit({"frame1": p1, "frame2": p2, "gt": pg,
           "height": scene.h, "width": scene.w})
    return EXIT_OK


def cmd_loss_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    step = 1e-6
    worst = 0.0
    for _ in range(args.n):
        d = int(rng.integers(3, 64))
        p = rng.normal(size=d)
        z = rng.normal(size=d)
        grad = neg_cosine_grad(p, z)
        worst = max(worst, _fd_gap(lambda q: neg_cosine(q, z), p, grad, step))
        pl, zr = rng.normal(size=d), rng.normal(size=d)
        pr, zl = rng.normal(size=d), rng.normal(size=d)
        gl, gr = symmetrized_sim_loss_grad(pl, zr, pr, zl)
        worst = max(worst, _fd_gap(
            lambda q: symmetrized_sim_loss(q, zr, pr, zl), pl, gl, step))
        worst = max(worst, _fd_gap(
            lambda q: symmetrized_sim_loss(pl, zr, q, zl), pr, gr, step))
    passed = worst <= args.tol
    _emit({"n": args.n, "max_rel_err": worst, "tol": args.tol,
           "pass": bool(passed)})
    if not passed:
        raise NumericError(
            f"gradient check failed: max relative error {worst:.3e}")
    return EXIT_OK


def _fd_gap(fn, x, grad, step) -> float:
    num = np.empty_like(x)
    for i in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[i] += step
        lo[i] -= step
        num[i] = (fn(hi) - fn(lo)) / (2.0 * step)
    scale = max(1.0, float(np.linalg.norm(num)))
    return float(np.linalg.norm(num - grad) / scale)


def cmd_viz(args) -> int:
    flow = read_flo(args.infile)
    rgb = flow_to_color(flow, clip=args.clip)
    save_image(args.out, rgb)
    _emit({"out": args.out, "height": flow.h, "width": flow.w})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sphereflow",
        description="360-degree optical flow toolchain.",
        formatter_class=_formatter,
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="parallelism cap (default: SPHEREFLOW_THREADS or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text, formatter_class=_formatter)
        p.set_defaults(func=fn)
        return p

    def add_rotation_flags(p):
        p.add_argument("--pitch", type=float, default=0.0,
                       help="rotation about x, radians")
        p.add_argument("--roll", type=float, default=0.0,
                       help="rotation about y, radians")
        p.add_argument("--yaw", type=float, default=0.0,
                       help="rotation about z, radians")

    p = add("rotate", cmd_rotate, "rotate an equirect frame or .flo flow")
    p.add_argument("--in", dest="infile", required=True, help="input .png/.ppm/.flo")
    p.add_argument("--out", required=True, help="output path (same kind)")
    add_rotation_flags(p)

    p = add("project", cmd_project, "tangent-patch sample or splat")
    p.add_argument("mode", choices=("sample", "splat"))
    p.add_argument("--in", dest="infile", help="equirect frame (sample mode)")
    p.add_argument("--out-dir", help="patch directory (sample mode)")
    p.add_argument("--in-dir", help="patch directory (splat mode)")
    p.add_argument("--out", help="reconstructed frame (splat mode)")
    p.add_argument("--fov", type=float, default=DEFAULT_FOV,
                   help="patch field of view, radians")
    p.add_argument("--patch-size", type=int, default=None,
                   help="patch side in pixels (default: frame height)")

    p = add("eval", cmd_eval, "flow metrics report (JSON)")
    p.add_argument("--pred", required=True, help="predicted .flo")
    p.add_argument("--gt", required=True, help="ground-truth .flo")
    p.add_argument("--density", default="upper-half",
                   choices=tuple(RANGE_PRESETS) + ("none",),
                   help="distortion density preset for epe_d/ae_d")
    p.add_argument("--out", help="also write the JSON report here")

    p = add("stats", cmd_stats, "dataset statistics report (JSON + plots)")
    p.add_argument("--frames", nargs="+", required=True, help="frame images")
    p.add_argument("--flows", nargs="*", default=None, help=".flo fields")
    p.add_argument("--crop", type=int, default=512,
                   help="center crop for the power spectrum")
    p.add_argument("--out", help="also write the JSON report here")
    p.add_argument("--plot-dir", help="write PNG plots into this directory")

    p = add("estimate", cmd_estimate, "six-patch 360-degree flow estimation")
    p.add_argument("--in1", required=True, help="first frame image")
    p.add_argument("--in2", required=True, help="second frame image")
    p.add_argument("--out", required=True, help="output .flo")
    p.add_argument("--backend", default="builtin",
                   choices=("builtin", "external-cmd"))
    p.add_argument("--cmd", nargs="+",
                   help="external command template with {in1} {in2} {out}")
    p.add_argument("--fov", type=float, default=DEFAULT_FOV)
    p.add_argument("--patch-size", type=int, default=None)
    p.add_argument("--input-size", type=int, nargs=2, metavar=("H", "W"),
                   help="resize patches to this backend resolution")
    p.add_argument("--transport", default="jacobian", choices=TRANSPORT_MODES)
    p.add_argument("--alpha", type=float, default=10.0)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--pyramid-levels", type=int, default=4)
    p.add_argument("--warps", type=int, default=3)

    p = add("synth", cmd_synth, "synthetic rotation pair with exact ground truth")
    p.add_argument("--texture", default="bandnoise", choices=TEXTURES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--height", type=int, default=128)
    add_rotation_flags(p)
    p.add_argument("--out-dir", required=True)

    p = add("loss-check", cmd_loss_check,
            "finite-difference audit of the loss gradients")
    p.add_argument("--n", type=int, default=50, help="random instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-5)

    p = add("viz", cmd_viz, "flow field to color image")
    p.add_argument("--in", dest="infile", required=True, help="input .flo")
    p.add_argument("--out", required=True, help="output image")
    p.add_argument("--clip", type=float, default=None,
                   help="saturate magnitudes above this value")

    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = args.threads
    if threads is not None and threads < 1:
        return _fail(ConfigError("threads must be at least 1"), EXIT_CONFIG)
    try:
        return args.func(args)
    except InputError as exc:
        return _fail(exc, EXIT_INPUT)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except NumericError as exc:
        return _fail(exc, EXIT_NUMERIC)
    except OSError as exc:
        return _fail(exc, EXIT_INPUT)


def _fail(exc, code) -> int:
    doc = {"error": type(exc).__name__, "message": str(exc), "code": code}
    print(json.dumps(doc), file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
