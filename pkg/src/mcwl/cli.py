"""Command-line pipeline driver.

Subcommands:
    phantom      write a synthetic deformable volume plus ground-truth sidecar
    decompose    run one temporal Haar level per requested method, verify
                 bit-exact reconstruction, write subbands/MVFs and metrics.csv
    reconstruct  rebuild the original volume from a method's output directory
    compare      merge metrics reports into a side-by-side summary with a
                 delta row (graph minus mesh)

Configuration comes from an optional key=value file plus flags (flags win).
Exit codes: 0 ok, 1 reconstruction failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import graph, metrics
from .lifting import (METHODS, LiftingParams, compose_pair, compose_volume,
                      decompose_volume, rebuild_pair)
from .motion import decode_mvf
from .volume import PhantomSpec, Volume, generate_phantom, load_volume, save_volume

CONFIG_KEYS = ("input", "output_dir", "methods", "grid_size", "block_size",
               "search_range", "knn", "update_variant", "distances", "seed")
_INT_KEYS = ("grid_size", "block_size", "search_range", "knn", "seed")

CSV_COLUMNS = "method,pair_index,psnr_lp_db,hp_mean_energy,lp_entropy_bytes,hp_entropy_bytes,mvf_bytes"


class UsageError(Exception):
    pass


class ReconstructionError(Exception):
    pass


def _parse_config_file(path: str) -> dict:
    cfg = {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    for lineno, line in enumerate(p.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        cfg[key] = int(value) if key in _INT_KEYS else value
    return cfg


def _merge_config(args) -> dict:
    cfg = {"methods": "none,block,mesh,graph", "grid_size": 8, "block_size": 8,
           "search_range": 8, "knn": 25, "update_variant": "transpose",
           "distances": "subpixel", "seed": 0, "input": None, "output_dir": None}
    if args.config:
        cfg.update(_parse_config_file(args.config))
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    return cfg


def _parse_methods(spec: str) -> list[str]:
    methods = [m.strip() for m in spec.split(",") if m.strip()]
    if not methods:
        raise UsageError("no methods requested")
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r} (choose from {', '.join(METHODS)})")
    return methods


def _fmt(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.6f}"


def cmd_phantom(args) -> int:
    spec = PhantomSpec(width=args.width, height=args.height, frame_count=args.frames,
                       blob_count=args.blobs, contraction_amplitude=args.amplitude,
                       noise_sigma=args.noise, rng_seed=args.seed)
    vol, truth = generate_phantom(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    nbytes = save_volume(vol, out)
    np.save(str(out) + ".gt.npy", truth)
    print(f"wrote {out} ({nbytes} bytes) and {out}.gt.npy")
    return 0


def _pair_rows(result, original: Volume) -> list[str]:
    per_pair, avg = metrics.lp_quality(result.lp, original)
    blobs = result.encoded_mvfs()
    rows = []
    total_mvf = 0
    for t in range(result.lp.frame_count):
        nbytes = len(blobs[t]) if blobs else 0
        total_mvf += nbytes
        _, lp_bytes = metrics.entropy_bits(result.lp.frame(t))
        _, hp_bytes = metrics.entropy_bits(result.hp.frame(t))
        rows.append(",".join([result.method, str(t), _fmt(per_pair[t]),
                              _fmt(metrics.mean_energy(result.hp.frame(t))),
                              _fmt(lp_bytes), _fmt(hp_bytes), str(nbytes)]))
    _, lp_total = metrics.entropy_bits(result.lp)
    _, hp_total = metrics.entropy_bits(result.hp)
    rows.append(",".join([result.method, "mean", _fmt(avg),
                          _fmt(metrics.mean_energy(result.hp)),
                          _fmt(lp_total), _fmt(hp_total), str(total_mvf)]))
    return rows


def cmd_decompose(args) -> int:
    cfg = _merge_config(args)
    if not cfg["input"]:
        raise UsageError("no input volume given (config key 'input' or --input)")
    if not Path(cfg["input"]).is_file():
        raise UsageError(f"input volume not found: {cfg['input']}")
    if not cfg["output_dir"]:
        raise UsageError("no output_dir given")
    methods = _parse_methods(cfg["methods"])
    params = LiftingParams(grid_size=cfg["grid_size"], block_size=cfg["block_size"],
                           search_range=cfg["search_range"], knn=cfg["knn"],
                           update_variant=cfg["update_variant"],
                           distances=cfg["distances"])
    original = load_volume(cfg["input"])
    out_root = Path(cfg["output_dir"])
    out_root.mkdir(parents=True, exist_ok=True)

    results = []
    for method in methods:
        result = decompose_volume(original, method, params)
        rebuilt = compose_volume(result, bit_depth=original.bit_depth)
        if not np.array_equal(rebuilt.data, original.data):
            raise ReconstructionError(f"method {method}: reconstruction mismatch")
        results.append(result)

    # losslessness held for every method; only now write artifacts + report
    rows = []
    for result in results:
        mdir = out_root / result.method
        mdir.mkdir(parents=True, exist_ok=True)
        save_volume(result.lp, mdir / "lp.mcwl")
        save_volume(result.hp, mdir / "hp.mcwl")
        for t, blob in enumerate(result.encoded_mvfs()):
            (mdir / f"mvf_{t:04d}.mvf").write_bytes(blob)
        if args.dump_jp and result.method == "graph":
            for t, pair in enumerate(result.pairs):
                graph.dump_triplets(pair.jp, mdir / f"jp_{t:04d}.txt")
        manifest = {
            "method": result.method,
            "width": original.width,
            "height": original.height,
            "frame_count": original.frame_count,
            "bit_depth": original.bit_depth,
            "grid_size": params.grid_size,
            "block_size": params.block_size,
            "search_range": params.search_range,
            "knn": params.knn,
            "update_variant": params.update_variant,
            "distances": params.distances,
        }
        (mdir / "manifest.json").write_text(json.dumps(manifest, indent=2,
                                                       sort_keys=True) + "\n")
        rows.extend(_pair_rows(result, original))

    config_echo = " ".join(f"{k}={cfg[k]}" for k in CONFIG_KEYS if cfg[k] is not None)
    report = out_root / "metrics.csv"
    with open(report, "w", newline="\n") as f:
        f.write("# mcwl metrics v1\n")
        f.write("# psnr_lp reference: original odd frame (first of each pair)\n")
        f.write("# mean row: psnr averaged in dB over pairs, entropy over the whole"
                " subband volume, mvf_bytes summed\n")
        f.write(f"# config: {config_echo}\n")
        f.write(CSV_COLUMNS + "\n")
        for row in rows:
            f.write(row + "\n")
    print(f"verified lossless reconstruction for {len(methods)} method(s); "
          f"wrote {report}")
    return 0


def cmd_reconstruct(args) -> int:
    mdir = Path(args.dir)
    manifest_path = mdir / "manifest.json"
    if not manifest_path.is_file():
        raise UsageError(f"no manifest.json in {mdir}")
    manifest = json.loads(manifest_path.read_text())
    method = manifest["method"]
    params = LiftingParams(grid_size=manifest["grid_size"],
                           block_size=manifest["block_size"],
                           search_range=manifest["search_range"],
                           knn=manifest["knn"],
                           update_variant=manifest["update_variant"],
                           distances=manifest["distances"])
    lp = load_volume(mdir / "lp.mcwl")
    hp = load_volume(mdir / "hp.mcwl")
    frames = []
    for t in range(lp.frame_count):
        mvf = None
        if method != "none":
            mvf_path = mdir / f"mvf_{t:04d}.mvf"
            if not mvf_path.is_file():
                raise UsageError(f"missing MVF file {mvf_path}")
            mvf = decode_mvf(mvf_path.read_bytes())
        pair = rebuild_pair(lp.frame(t), hp.frame(t), method, params, mvf)
        f_odd, f_even = compose_pair(pair)
        frames.extend([f_odd, f_even])
    vol = Volume(data=np.stack(frames), bit_depth=manifest["bit_depth"])
    nbytes = save_volume(vol, args.out)
    print(f"wrote {args.out} ({nbytes} bytes)")
    return 0


def _read_report(path: str):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"report not found: {path}")
    entries = []   # (method, summary dict) in file order
    pair_sets = {}
    header_seen = False
    for line in p.read_text().splitlines():
        if line.startswith("#") or not line.strip():
            continue
        if not header_seen:
            if line != CSV_COLUMNS:
                raise UsageError(f"{path}: unexpected CSV header")
            header_seen = True
            continue
        parts = line.split(",")
        method, pair_index = parts[0], parts[1]
        if pair_index == "mean":
            values = [float(v) for v in parts[2:6]]
            entries.append((method, {"psnr_lp_db": values[0],
                                     "hp_mean_energy": values[1],
                                     "lp_entropy_bytes": values[2],
                                     "hp_entropy_bytes": values[3],
                                     "mvf_bytes": float(parts[6])}))
        else:
            pair_sets.setdefault(method, set()).add(int(pair_index))
    if not header_seen or not entries:
        raise UsageError(f"{path}: no summary rows found")
    return entries, pair_sets


def _delta(a: float, b: float) -> float:
    return 0.0 if a == b else a - b


def cmd_compare(args) -> int:
    all_entries = []
    sets = []
    for path in args.reports:
        entries, pair_sets = _read_report(path)
        all_entries.extend(entries)
        sets.extend(pair_sets.values())
    if len(all_entries) < 2:
        raise UsageError("need at least two method summaries to compare")
    if any(s != sets[0] for s in sets[1:]):
        raise UsageError("reports cover mismatched pair sets")

    columns = ("psnr_lp_db", "hp_mean_energy", "lp_entropy_bytes",
               "hp_entropy_bytes", "mvf_bytes")
    methods = [m for m, _ in all_entries]
    if "graph" in methods and "mesh" in methods:
        hi = all_entries[methods.index("graph")][1]
        lo = all_entries[methods.index("mesh")][1]
        delta_label = "delta(graph-mesh)"
    else:
        hi = all_entries[-1][1]
        lo = all_entries[0][1]
        delta_label = f"delta({methods[-1]}-{methods[0]})"
    delta_row = {c: _delta(hi[c], lo[c]) for c in columns}

    def _cell(col, value):
        return str(int(value)) if col == "mvf_bytes" else _fmt(value)

    lines = ["method," + ",".join(columns)]
    for m, vals in all_entries:
        lines.append(m + "," + ",".join(_cell(c, vals[c]) for c in columns))
    lines.append(delta_label + "," + ",".join(_cell(c, delta_row[c]) for c in columns))

    width = max(len(line.split(",")[0]) for line in lines) + 2
    print(f"{'':>0}")
    for line in lines:
        parts = line.split(",")
        print(parts[0].ljust(width) + "  ".join(f"{v:>18}" for v in parts[1:]))
    if args.out:
        with open(args.out, "w", newline="\n") as f:
            for line in lines:
                f.write(line + "\n")
        print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcwl",
                                     description="Motion-compensated integer wavelet lifting")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a synthetic deformable volume")
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--frames", type=int, default=4)
    p.add_argument("--blobs", type=int, default=16)
    p.add_argument("--amplitude", type=float, default=3.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("decompose", help="decompose a volume with each method")
    p.add_argument("--config")
    p.add_argument("--input")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--methods")
    p.add_argument("--grid-size", dest="grid_size", type=int)
    p.add_argument("--block-size", dest="block_size", type=int)
    p.add_argument("--search-range", dest="search_range", type=int)
    p.add_argument("--knn", type=int)
    p.add_argument("--update-variant", dest="update_variant",
                   choices=("transpose", "eq5"))
    p.add_argument("--distances", choices=("subpixel", "rounded"))
    p.add_argument("--seed", type=int)
    p.add_argument("--dump-jp", action="store_true",
                   help="dump prediction matrices as text triplets")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("reconstruct", help="rebuild the original volume from artifacts")
    p.add_argument("--dir", required=True, help="a method output directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("compare", help="summarize metrics reports side by side")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ReconstructionError as exc:
        print(f"reconstruction failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
