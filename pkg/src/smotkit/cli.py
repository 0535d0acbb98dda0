"""Command-line entry point: ``smotkit {track,slice,eval,analyze,simulate}``.

Exit status: 0 success, 1 invalid input or configuration, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields
from pathlib import Path

from . import io as mot
from .analysis import (
    METHODS,
    displacement_size_ratios,
    iou_method_percentiles,
    velocity_table,
)
from .association import run_sequence
from .config import RunConfig, build_config, read_kv_file, thread_count
from .evaluation import aggregate, compute_s_norm, evaluate
from .sim import ScenarioSpec, generate
from .slicing import slice_dataset
from .trackset import TrackSet

log = logging.getLogger("smotkit")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2
_CONFIG_KEYS = {f.name for f in fields(RunConfig)}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise UsageError(message)


def _flag(p, key: str, kind, help: str):
    name = "--" + key.replace("_", "-")
    if kind is bool:
        p.add_argument(name, dest=key, action=argparse.BooleanOptionalAction, default=argparse.SUPPRESS, help=help)
    else:
        p.add_argument(name, dest=key, type=kind, default=argparse.SUPPRESS, help=help)


def _tracker_flags(p):
    g = p.add_argument_group("tracker")
    _flag(g, "match_threshold", float, "first-stage similarity gate (default 0.25)")
    _flag(g, "stage_decrement", float, "gate decrease per later stage (default 0.08)")
    _flag(g, "min_hits", int, "updates needed to confirm a track (default 3)")
    _flag(g, "max_age", int, "frames a lost track is kept (default 30)")
    _flag(g, "threshold_high", float, "high-confidence band lower bound (default 0.25)")
    _flag(g, "threshold_low", float, "low-confidence band lower bound (default 0.1)")
    _flag(g, "ema_alpha", float, "EMA smoothing factor for velocity (default 0.8)")
    _flag(g, "direction_cost_weight", float, "weight of the direction cost (default 0.2)")
    _flag(g, "use_ema", bool, "EMA velocity for direction cost (default on)")
    _flag(g, "delta_t", int, "observation gap for momentum when EMA is off (default 3)")
    _similarity_flags(g)


def _similarity_flags(g):
    _flag(g, "expansion_scale", float, "box expansion factor (default 2.0)")
    _flag(g, "use_expansion", bool, "expanded IoU (default on)")
    _flag(g, "use_distance_penalty", bool, "normalized-distance penalty (default on)")


def build_parser() -> argparse.ArgumentParser:
    root = _Parser(prog="smotkit", description="Tiny-object multi-object tracking toolkit.")
    root.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = root.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def cmd(name, help):
        p = sub.add_parser(name, help=help, description=help)
        p.add_argument("--config", help="flat key = value config file (flags override it)")
        return p

    p = cmd("track", "run the tracker on MOT detection files")
    _flag(p, "dets", str, "det file, or a directory of sequences (<seq>/det/det.txt or <seq>.txt)")
    _flag(p, "out", str, "output track file (or directory when --dets is a directory)")
    _tracker_flags(p)

    p = cmd("slice", "tile a COCO image dataset into overlapping crops")
    _flag(p, "images", str, "directory holding the images referenced by --ann")
    _flag(p, "ann", str, "COCO annotation JSON")
    _flag(p, "out", str, "output directory (images/ and annotations.json)")
    _flag(p, "tile", int, "tile side in pixels (default 1280)")
    _flag(p, "overlap", float, "overlap ratio between neighbouring tiles (default 0.2)")
    _flag(p, "min_visibility", float, "minimum kept fraction of a clipped box (default 0.5)")

    p = cmd("eval", "SO-HOTA of predicted tracks against ground truth")
    _flag(p, "gt", str, "ground truth file or directory (<seq>/gt/gt.txt or <seq>.txt)")
    _flag(p, "pred", str, "prediction file or directory of <seq>.txt")
    _flag(p, "s_norm", float, "DotD size constant (default: mean sqrt(w*h) over all GT boxes)")
    _flag(p, "out", str, "write the score CSV here")

    p = cmd("analyze", "ground-truth motion statistics as CSV")
    p.add_argument("kind", choices=("velocity", "displacement", "iou-methods"))
    _flag(p, "gt", str, "ground truth file or directory")
    _flag(p, "out", str, "CSV output path (default stdout)")
    p.add_argument("--window", default="1..5", help="reference window N or range A..B (velocity)")
    p.add_argument("--filter", default="keep-low", choices=("keep-low", "drop-low"), help="displacement filter (iou-methods)")
    p.add_argument("--histogram", action="store_true", help="emit histogram rows instead of the summary")
    g = p.add_argument_group("similarity")
    _similarity_flags(g)

    p = cmd("simulate", "write a synthetic sequence in MOT layout")
    p.add_argument("--spec", help="key = value scenario file")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--name", help="override the scenario name")
    _flag(p, "out", str, "output root; files go to <out>/<name>/{gt/gt.txt,det/det.txt}")
    return root


def _resolve_config(ns) -> RunConfig:
    file_values = read_kv_file(ns.config) if ns.config else {}
    flags = {k: v for k, v in vars(ns).items() if k in _CONFIG_KEYS}
    return build_config(file_values, flags)


def _need(cfg, *keys):
    missing = [k for k in keys if getattr(cfg, k) is None]
    if missing:
        raise ValueError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _write_csv(rows, header, dest):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if dest:
        Path(dest).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


# -- subcommands ----------------------------------------------------------------


def _track_file(src: Path, dst: Path, cfg: RunConfig):
    dets = mot.parse_mot_dets(src)
    recs = run_sequence(dets, cfg.association())
    mot.write_mot_tracks(recs, dst)
    return len(recs)


def cmd_track(ns, cfg: RunConfig) -> int:
    _need(cfg, "dets", "out")
    cfg.association()
    src = Path(cfg.dets)
    if src.is_file():
        n = _track_file(src, Path(cfg.out), cfg)
        log.info("%s: %d track rows", src, n)
        return EXIT_OK
    seqs = mot.find_sequences(src, "det")
    if not seqs:
        raise FileNotFoundError(f"no detection files under {src}")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    # sequences are independent, so the thread cap cannot change any output byte
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        futs = {name: pool.submit(_track_file, path, out / f"{name}.txt", cfg) for name, path in seqs.items()}
        for name, fut in futs.items():
            log.info("%s: %d track rows", name, fut.result())
    return EXIT_OK


def cmd_slice(ns, cfg: RunConfig) -> int:
    _need(cfg, "images", "ann", "out")
    coco = mot.load_coco(cfg.ann)
    res = slice_dataset(cfg.images, coco, cfg.out, cfg.tile, cfg.overlap, cfg.min_visibility)
    for err in res.errors:
        print(f"warning: {err}", file=sys.stderr)
    print(f"{res.tiles_written} tiles, {len(res.coco['annotations'])} annotations -> {cfg.out}")
    if res.errors and res.tiles_written == 0:
        return EXIT_IO
    return EXIT_OK


def _load_split(root, kind, gt: bool) -> dict[str, TrackSet]:
    return {name: mot.parse_mot_tracks(path, gt=gt) for name, path in mot.find_sequences(root, kind).items()}


def cmd_eval(ns, cfg: RunConfig) -> int:
    _need(cfg, "gt", "pred")
    gts = _load_split(cfg.gt, "gt", gt=True)
    if not gts:
        raise FileNotFoundError(f"no ground-truth files under {cfg.gt}")
    preds = _load_split(cfg.pred, "pred", gt=False)
    if Path(cfg.gt).is_file() and Path(cfg.pred).is_file():
        preds = {next(iter(gts)): next(iter(preds.values()))}
    s_norm = cfg.s_norm
    if s_norm is None:
        merged = {}
        for i, gt in enumerate(gts.values()):
            for f, items in gt.items():
                merged[(i, f)] = items
        s_norm = compute_s_norm(merged)
    results = []
    for name, gt in gts.items():
        if name not in preds:
            log.warning("no prediction for sequence %s; scoring it as empty", name)
        results.append(evaluate(gt, preds.get(name, {}), s_norm=s_norm, name=name))
    combined = aggregate(results)
    rows = [(r.name, f"{r.so_hota:.3f}", f"{r.so_deta:.3f}", f"{r.so_assa:.3f}") for r in results]
    rows.append(("COMBINED", f"{combined.so_hota:.3f}", f"{combined.so_deta:.3f}", f"{combined.so_assa:.3f}"))
    width = max(len(r[0]) for r in rows)
    print(f"{'sequence':<{width}}  {'SO-HOTA':>8}  {'SO-DetA':>8}  {'SO-AssA':>8}")
    for r in rows:
        print(f"{r[0]:<{width}}  {r[1]:>8}  {r[2]:>8}  {r[3]:>8}")
    print(f"s_norm = {s_norm:.4f}")
    if cfg.out:
        _write_csv(rows, ("sequence", "so_hota", "so_deta", "so_assa"), cfg.out)
    return EXIT_OK


def _windows(text: str):
    try:
        if ".." in text:
            a, b = (int(t) for t in text.split("..", 1))
            return list(range(a, b + 1))
        return [int(text)]
    except ValueError:
        raise ValueError(f"--window must be N or A..B, got {text!r}") from None


def cmd_analyze(ns, cfg: RunConfig) -> int:
    _need(cfg, "gt")
    gts = list(_load_split(cfg.gt, "gt", gt=True).values())
    if not gts:
        raise FileNotFoundError(f"no ground-truth files under {cfg.gt}")
    if ns.kind == "velocity":
        wins = _windows(ns.window)
        if not wins or min(wins) < 1:
            raise ValueError(f"window must be >= 1, got {ns.window!r}")
        reports, nonincreasing = velocity_table(gts, wins)
        if ns.histogram:
            rows = []
            for r in reports:
                counts, edges = r.histogram()
                rows += [(r.window, f"{lo:.2f}", f"{hi:.2f}", c) for lo, hi, c in zip(edges, edges[1:], counts)]
            _write_csv(rows, ("window", "bin_lo", "bin_hi", "count"), cfg.out)
        else:
            rows = [(r.window, r.n_samples, r.excluded, f"{r.fraction_in_band:.6f}") for r in reports]
            _write_csv(rows, ("window", "samples", "excluded", "fraction_in_band"), cfg.out)
        if len(reports) > 1:
            note = "non-increasing" if nonincreasing else "NOT non-increasing"
            print(f"note: in-band fraction is {note} in window", file=sys.stderr)
    elif ns.kind == "displacement":
        rep = displacement_size_ratios(gts)
        (cx, edges), (cy, _) = rep.histograms()
        rows = [(f"{lo:.2f}", f"{hi:.2f}", a, b) for lo, hi, a, b in zip(edges, edges[1:], cx, cy)]
        _write_csv(rows, ("bin_lo", "bin_hi", "x_count", "y_count"), cfg.out)
        print(f"note: {rep.n_pairs} pairs, {rep.n_still} relatively still (excluded from histograms)", file=sys.stderr)
    else:
        rep = iou_method_percentiles(gts, cfg.similarity(), ns.filter)
        rows = [(m, *(f"{v:.6f}" for v in rep.values[m])) for m in METHODS]
        _write_csv(rows, ("method", *(f"p{p}" for p in rep.percentiles)), cfg.out)
        print(f"note: {rep.n_samples} box pairs ({rep.displacement_filter})", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(ns, cfg: RunConfig) -> int:
    _need(cfg, "out")
    types = {f.name: f.type for f in fields(ScenarioSpec)}
    values = read_kv_file(ns.spec, types) if ns.spec else {}
    if ns.seed is not None:
        values["seed"] = ns.seed
    if ns.name is not None:
        values["name"] = ns.name
    spec = ScenarioSpec(**values)
    gt, dets = generate(spec)
    root = Path(cfg.out) / spec.name
    (root / "gt").mkdir(parents=True, exist_ok=True)
    (root / "det").mkdir(parents=True, exist_ok=True)
    mot.write_trackset(gt, root / "gt" / "gt.txt")
    mot.write_mot_dets(dets, root / "det" / "det.txt")
    print(f"wrote {root}")
    return EXIT_OK


COMMANDS = {
    "track": cmd_track,
    "slice": cmd_slice,
    "eval": cmd_eval,
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except UsageError:
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = _resolve_config(ns)
        return COMMANDS[ns.command](ns, cfg)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
