"""Command line entry point."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .mesh import build_box_mesh, export_mesh

log = logging.getLogger("mixdim")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixdim", description="Coupled 3D-1D elliptic solver.")
    p.add_argument("-v", "--verbose", action="store_true", help="log pipeline stages")
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run the pipeline described by a config file")
    r.add_argument("config")
    r.add_argument("--tol", type=float)
    r.add_argument("--max-iter", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out-dir")

    g = sub.add_parser("gen-segments", help="write a seeded random segment file")
    g.add_argument("spec", help="config file with a [generator] section")
    g.add_argument("out")
    g.add_argument("--seed", type=int)

    m = sub.add_parser("make-mesh", help="write a structured box mesh")
    m.add_argument("box", help="'x0,y0,z0,x1,y1,z1' or a single edge length L for [-L/2, L/2]^3")
    m.add_argument("h", type=float)
    m.add_argument("out")
    return p


def _box(text):
    vals = [float(v) for v in text.replace(",", " ").split()]
    if len(vals) == 1:
        half = vals[0] / 2.0
        return (-half,) * 3, (half,) * 3
    if len(vals) != 6:
        raise ValueError(f"box needs 1 or 6 numbers, got {text!r}")
    return tuple(vals[:3]), tuple(vals[3:])


def _cmd_run(args) -> int:
    from .app import run

    cfg = load_config(args.config).with_overrides(
        tol=args.tol, max_iter=args.max_iter, seed=args.seed, out_dir=args.out_dir
    )
    report = run(cfg)
    row = report.summary
    print(f"tol={report.tol:g} cg_iters={row['cg_iters']} iter_ratio={row['iter_ratio']:.4g} "
          f"total_mismatch={row['total_mismatch']:.4g}" + ("" if row["Keq"] is None else f" Keq={row['Keq']:.6g}"))
    print(f"summary: {report.paths['summary']}")
    return 0


def _cmd_gen(args) -> int:
    from .app import generate_segments, write_segments

    cfg = load_config(args.spec).with_overrides(seed=args.seed)
    if cfg.generator is None:
        raise ConfigError(f"{args.spec} has no [generator] section")
    segs = generate_segments(cfg.generator)
    write_segments(args.out, segs)
    print(f"wrote {len(segs)} segments to {args.out}")
    return 0


def _cmd_mesh(args) -> int:
    mesh = build_box_mesh(_box(args.box), args.h)
    export_mesh(mesh, args.out)
    print(f"wrote {mesh.n_nodes} nodes, {mesh.n_tets} tets (h={mesh.h:.4g}) to {args.out}")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    handler = {"run": _cmd_run, "gen-segments": _cmd_gen, "make-mesh": _cmd_mesh}[args.cmd]
    try:
        return handler(args)
    except Exception as exc:  # noqa: BLE001 - report and exit nonzero
        stage = getattr(exc, "stage", None) or ("config" if isinstance(exc, ConfigError) else args.cmd)
        msg = str(exc)
        if not msg.startswith("["):
            msg = f"[{stage}] {msg}"
        print(f"mixdim: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
