"""Command line entry point: ``cornercert <command> [options]``.

Every command writes its artifacts plus a ``manifest.json`` (parameters and
sha256 of each artifact) into ``--out``. Exit codes: 0 ok, 2 invalid input,
3 training failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .certifier import (
    ROBUST,
    Grid,
    certified_frontier,
    certify_global,
    certify_local,
    certify_region,
    corner_oracle,
    decision_boundary,
    extract_level_set,
    frontier_gap,
    net_oracle,
    region_masks,
    robust_frontier,
    robust_oracle,
    vra,
)
from .certifier.export import SvgFigure, mask_csv, polylines_csv
from .construction import build, certify_distance_field, verify_pairwise_lipschitz
from .datagen import generate, load_dataset, read_points_csv, save_dataset
from .geometry import CornerSpec, corner_diagonal, corner_ratio
from .lipschitz import pair_bounds
from .network import load_network, make_minimal_corner_net, save_network
from .trainer import TrainConfig, TrainingError, train

log = logging.getLogger("cornercert")

EXIT_OK, EXIT_INVALID, EXIT_TRAIN, EXIT_IO = 0, 2, 3, 4


class Run:
    """Collects artifacts written by one command and emits the manifest."""

    def __init__(self, command: str, out: Path, params: dict):
        self.command = command
        self.out = out
        self.params = params
        self.artifacts: list[Path] = []
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.artifacts.append(p)
        return p

    def finish(self, extra: dict | None = None) -> None:
        files = {}
        for p in self.artifacts:
            if p.exists():
                files[str(p.relative_to(self.out))] = hashlib.sha256(p.read_bytes()).hexdigest()
            side = p.with_suffix(".json")
            if p.suffix == ".csv" and side.exists() and side not in self.artifacts:
                files[str(side.relative_to(self.out))] = hashlib.sha256(side.read_bytes()).hexdigest()
        doc = {"command": self.command, "version": __version__, "parameters": self.params,
               "artifacts": dict(sorted(files.items()))}
        if extra:
            doc["results"] = extra
        (self.out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _box(values) -> tuple[float, float, float, float]:
    box = tuple(float(v) for v in values)
    if len(box) != 4 or not (box[1] > box[0] and box[3] > box[2]):
        raise ValueError(f"box must be XMIN XMAX YMIN YMAX with min < max, got {list(values)}")
    return box


def _load_net(spec: str):
    return make_minimal_corner_net() if spec == "minimal" else load_network(spec)


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


# -- commands ----------------------------------------------------------------

def cmd_gen_data(args) -> dict:
    run = Run("gen-data", args.out, {"eps": args.eps, "n_per_class": args.n_per_class,
                                     "box_halfwidth": args.box_halfwidth, "seed": args.seed})
    ds = generate(args.eps, args.n_per_class, args.seed, args.box_halfwidth)
    save_dataset(ds, run.path("dataset.csv"))
    run.path("dataset.json")
    run.finish()
    return {"points": len(ds)}


def _train_config(args, hidden: int, seed: int) -> TrainConfig:
    return TrainConfig(hidden_units=hidden, epochs=args.epochs, batch_size=args.batch_size,
                       lam=args.lam, eps_final=args.eps, lr_initial=args.lr, seed=seed,
                       optimizer=args.optimizer)


def cmd_train(args) -> dict:
    cfg = _train_config(args, args.hidden, args.seed)
    run = Run("train", args.out, {**cfg.__dict__, "data": str(args.data or "")})
    if args.data:
        ds = load_dataset(args.data)
    else:
        ds = generate(args.eps, args.n_per_class, args.seed, args.box_halfwidth)
        save_dataset(ds, run.path("dataset.csv"))
        run.path("dataset.json")
    net, report = train(ds, cfg)
    save_network(net, run.path("network.json"))
    report.save_csv(run.path("train_report.csv"))
    report.save_config(run.path("train_config.json"))
    final = report.rows[-1]
    run.finish({"accuracy": final["accuracy"], "vra": final["vra"]})
    return final


def cmd_certify(args) -> dict:
    net = _load_net(args.network)
    pts, _ = read_points_csv(args.points)
    run = Run("certify", args.out, {"network": args.network, "points": str(args.points),
                                    "eps": args.eps, "method": args.method, "budget": args.budget})
    bound = pair_bounds(net)
    rows = []
    for p in pts:
        if args.method == "global":
            r = certify_global(net, bound, p, args.eps)
        elif args.method == "local":
            r = certify_local(net, p, args.eps, args.budget, bound=bound, seed=args.seed)
        else:
            r = certify_region(net, p, args.eps)
        rows.append([float(p[0]), float(p[1]), int(r.certified), r.max_radius, r.margin,
                     r.constant_used, r.method, r.predicted, int(r.sound)])
    _write_rows(run.path("certify.csv"),
                ["x1", "x2", "certified", "max_radius", "margin", "constant", "method",
                 "predicted", "sound"], rows)
    run.finish()
    return {"certified": sum(r[2] for r in rows), "points": len(rows)}


def _oracle_for(net, kind: str, box, resolution: int, eps: float):
    if kind == "corner":
        return corner_oracle()
    return net_oracle(net, box, resolution, pad=eps + 0.25)


def cmd_frontier(args) -> dict:
    net = _load_net(args.network)
    run = Run("frontier", args.out, {"network": args.network, "eps": args.eps,
                                     "box": args.box, "resolution": args.resolution,
                                     "oracle": args.oracle})
    bound = pair_bounds(net)
    boundary = decision_boundary(net, args.box, args.resolution)
    cert = certified_frontier(net, bound, args.eps, args.box, args.resolution)
    oracle = _oracle_for(net, args.oracle, args.box, args.resolution, args.eps)
    rob = robust_frontier(oracle, args.eps, args.box, args.resolution)
    polylines_csv(boundary, run.path("boundary.csv"))
    polylines_csv(cert, run.path("certified_frontier.csv"))
    polylines_csv(rob, run.path("robust_frontier.csv"))
    fig = SvgFigure(args.box, title=f"frontiers at eps={args.eps}")
    fig.add_polylines(boundary, "boundary", 2.0)
    fig.add_polylines(rob, "robust-frontier")
    fig.add_polylines(cert, "certified-frontier", dashed=True)
    fig.save(run.path("frontier.svg"))
    results = {}
    try:
        results["diagonal_gap"] = frontier_gap(cert, rob)
    except ValueError:
        pass
    run.finish(results)
    return results


def cmd_mask(args) -> dict:
    net = _load_net(args.network)
    run = Run("mask", args.out, {"network": args.network, "eps": args.eps, "box": args.box,
                                 "resolution": args.resolution, "oracle": args.oracle})
    bound = pair_bounds(net)
    oracle = _oracle_for(net, args.oracle, args.box, args.resolution, args.eps)
    mask = region_masks(net, bound, oracle, args.eps, args.box, args.resolution)
    mask_csv(mask, run.path("mask.csv"))
    fig = SvgFigure(args.box, title=f"regions at eps={args.eps}")
    fig.add_mask(mask)
    fig.save(run.path("mask.svg"))
    results = {
        "robust_but_uncertified_area": mask.area(ROBUST),
        "certified_not_robust_cells": mask.unsound_cells(),
        "cell_area": mask.grid.cell_area,
    }
    run.finish(results)
    return results


def corner_table_rows(d_max: int):
    if d_max < 1:
        raise ValueError("d_max must be >= 1")
    return [(d, corner_ratio(d), corner_diagonal(CornerSpec(d, 1.0))) for d in range(1, d_max + 1)]


def cmd_corner_table(args) -> dict:
    run = Run("corner-table", args.out, {"d_max": args.d_max})
    _write_rows(run.path("corner_table.csv"), ["d", "ratio", "diagonal"],
                corner_table_rows(args.d_max))
    run.finish()
    return {"rows": args.d_max}


def cmd_construction_check(args) -> dict:
    run = Run("construction-check", args.out, {"eps": args.eps, "n_pairs": args.n_pairs,
                                               "box": args.box, "resolution": args.resolution,
                                               "seed": args.seed})
    oracle = corner_oracle()
    fc = build(oracle, 2)
    ratio = verify_pairwise_lipschitz(fc, args.n_pairs, args.seed, args.box)
    grid = Grid(args.box, args.resolution)
    pts = grid.centers().reshape(-1, 2)
    cert = certify_distance_field(fc, pts, args.eps)
    robust, dist = robust_oracle("corner", pts, args.eps)
    band = np.abs(dist - args.eps) <= grid.cell_diagonal
    disagree = int(((cert != robust) & ~band).sum())
    bound = pair_bounds(make_minimal_corner_net())
    net_cert = np.array([certify_global(make_minimal_corner_net(), bound, p, args.eps).certified
                         for p in pts[::97]])
    results = {
        "max_pairwise_ratio": ratio,
        "grid_disagreements": disagree,
        "band_cells": int(band.sum()),
        "distance_field_certified_fraction": float(cert.mean()),
        "robust_fraction": float(robust.mean()),
        "minimal_net_certified_fraction_subsample": float(net_cert.mean()),
    }
    Path(run.path("construction.json")).write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")
    run.finish(results)
    return results


def _panel(box, title, ds=None, mask=None, boundary=(), cert=(), rob=(), levels=()):
    fig = SvgFigure(box, title=title)
    if mask is not None:
        fig.add_mask(mask)
    if levels:
        fig.add_polylines(levels, "level", 0.6)
    if ds is not None:
        fig.add_points(ds.points, ds.labels)
    fig.add_polylines(rob, "robust-frontier")
    fig.add_polylines(cert, "certified-frontier", dashed=True)
    fig.add_polylines(boundary, "boundary", 2.0)
    return fig


def _model_artifacts(run, tag, net, ds, eps, box, res, oracle_kind):
    bound = pair_bounds(net)
    oracle = _oracle_for(net, oracle_kind, box, res, eps)
    boundary = decision_boundary(net, box, res)
    cert = certified_frontier(net, bound, eps, box, res)
    rob = robust_frontier(oracle, eps, box, res)
    mask = region_masks(net, bound, oracle, eps, box, res)
    polylines_csv(boundary, run.path(f"{tag}/boundary.csv"))
    polylines_csv(cert, run.path(f"{tag}/certified_frontier.csv"))
    polylines_csv(rob, run.path(f"{tag}/robust_frontier.csv"))
    mask_csv(mask, run.path(f"{tag}/mask.csv"))
    stats = vra(net, bound, ds, eps, oracle=corner_oracle() if oracle_kind == "corner" else None)
    stats["K10"] = bound.K(1, 0)
    return stats, (boundary, cert, rob, mask)


def cmd_figure1(args) -> dict:
    params = {"eps": args.eps, "n_per_class": args.n_per_class, "box_halfwidth": args.box_halfwidth,
              "seed": args.seed, "seeds": args.seeds, "resolution": args.resolution,
              "hidden": args.hidden, "epochs": args.epochs, "batch_size": args.batch_size,
              "lam": args.lam, "lr": args.lr, "optimizer": args.optimizer}
    run = Run("figure1", args.out, params)
    h = args.box_halfwidth
    box = (-h, h, -h, h)
    eps = args.eps
    seeds = [args.seed + k for k in range(args.seeds)]
    data = {s: generate(eps, args.n_per_class, s, h) for s in seeds}
    for s in seeds:
        save_dataset(data[s], run.path(f"data/dataset_seed{s}.csv"))
        run.path(f"data/dataset_seed{s}.json")
    ds0 = data[seeds[0]]
    _panel(box, "(a) corner dataset", ds=ds0).save(run.path("fig1a_data.svg"))

    minimal = make_minimal_corner_net()
    save_network(minimal, run.path("minimal/network.json"))
    stats, (bd, cert, rob, mask) = _model_artifacts(run, "minimal", minimal, ds0, eps, box,
                                                    args.resolution, "corner")
    levels = [p for lv in (-1.5, -1.0, -0.25, 0.25, 1.0, 1.5)
              for p in extract_level_set(minimal, lv, box, args.resolution)]
    _panel(box, "(b) minimal MinMax net", mask=mask, boundary=bd, cert=cert, rob=rob,
           levels=levels).save(run.path("fig1b_minimal.svg"))
    summary = [["minimal", 2, 1, stats["accuracy"], stats["certified_fraction"], stats["vra"],
                stats["robust_fraction"], stats["robust_but_uncertified_fraction"], stats["K10"]]]
    per_run = [["minimal", 2, seeds[0], *[stats[k] for k in
                ("accuracy", "certified_fraction", "vra", "robust_fraction",
                 "robust_but_uncertified_fraction", "K10")]]]

    panel_names = {0: "fig1c", 1: "fig1d", 2: "fig1e"}
    for n, hidden in enumerate(args.hidden):
        rows = []
        for s in seeds:
            tag = f"trained{hidden}/seed{s}"
            cfg = _train_config(args, hidden, s)
            try:
                net, report = train(data[s], cfg)
            except TrainingError:
                run.finish({"failed": tag})
                raise
            save_network(net, run.path(f"{tag}/network.json"))
            report.save_csv(run.path(f"{tag}/train_report.csv"))
            st, (bd, cert, rob, mask) = _model_artifacts(run, tag, net, data[s], eps, box,
                                                         args.resolution, "net")
            row = [st[k] for k in ("accuracy", "certified_fraction", "vra", "robust_fraction",
                                   "robust_but_uncertified_fraction", "K10")]
            rows.append(row)
            per_run.append([f"trained{hidden}", hidden, s, *row])
            log.info("trained %d units seed %d: acc %.4f vra %.4f", hidden, s, row[0], row[2])
            if s == seeds[0]:
                name = panel_names.get(n, f"fig1_{hidden}")
                _panel(box, f"trained {hidden} units", mask=mask, boundary=bd, cert=cert,
                       rob=rob).save(run.path(f"{name}_trained{hidden}.svg"))
        mean = np.mean(np.array(rows), axis=0).tolist()
        summary.append([f"trained{hidden}", hidden, len(seeds), *mean])

    cols = ["accuracy", "certified_fraction", "vra", "robust_fraction",
            "robust_but_uncertified_fraction", "K10"]
    _write_rows(run.path("summary.csv"), ["model", "hidden_units", "seeds", *cols], summary)
    _write_rows(run.path("runs.csv"), ["model", "hidden_units", "seed", *cols], per_run)
    results = {row[0]: {"vra": row[5], "accuracy": row[3]} for row in summary}
    run.finish(results)
    return results


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=Path("out"))
    common.add_argument("--config", type=Path, help="JSON file of option defaults")

    data_opts = argparse.ArgumentParser(add_help=False)
    data_opts.add_argument("--eps", type=float, default=0.5)
    data_opts.add_argument("--n-per-class", type=int, default=1000)
    data_opts.add_argument("--box-halfwidth", type=float, default=2.0)

    train_opts = argparse.ArgumentParser(add_help=False)
    train_opts.add_argument("--epochs", type=int, default=64)
    train_opts.add_argument("--batch-size", type=int, default=128)
    train_opts.add_argument("--lam", type=float, default=1.2)
    train_opts.add_argument("--lr", type=float, default=1e-3)
    train_opts.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")

    p = argparse.ArgumentParser(prog="cornercert", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-data", parents=[common, data_opts], help="write the corner dataset")
    s.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("train", parents=[common, data_opts, train_opts], help="certified training")
    s.add_argument("--hidden", type=int, default=200)
    s.add_argument("--data", type=Path, help="dataset CSV (generated when omitted)")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("certify", parents=[common], help="certify points from a CSV")
    s.add_argument("--network", default="minimal", help='network JSON, or "minimal"')
    s.add_argument("--points", type=Path, required=True)
    s.add_argument("--eps", type=float, default=0.5)
    s.add_argument("--method", choices=["global", "local", "region"], default="global")
    s.add_argument("--budget", type=int, default=256)
    s.set_defaults(func=cmd_certify)

    for name, func, hlp in (("frontier", cmd_frontier, "boundary and frontiers"),
                            ("mask", cmd_mask, "certified/robust region mask")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("--network", default="minimal")
        s.add_argument("--eps", type=float, default=0.5)
        s.add_argument("--box", type=float, nargs=4, metavar=("XMIN", "XMAX", "YMIN", "YMAX"),
                       default=[-2.0, 2.0, -2.0, 2.0])
        s.add_argument("--resolution", type=int, default=512)
        s.add_argument("--oracle", choices=["corner", "net"], default="corner",
                       help="exact corner boundary, or the network's extracted boundary")
        s.set_defaults(func=func)

    s = sub.add_parser("corner-table", parents=[common], help="corner ratio table")
    s.add_argument("--d-max", type=int, default=20)
    s.set_defaults(func=cmd_corner_table)

    s = sub.add_parser("figure1", parents=[common, data_opts, train_opts],
                       help="capacity experiment bundle")
    s.add_argument("--seeds", type=int, default=3)
    s.add_argument("--hidden", type=int, nargs="+", default=[2, 20, 200])
    s.add_argument("--resolution", type=int, default=256)
    s.set_defaults(func=cmd_figure1, n_per_class=5000)

    s = sub.add_parser("construction-check", parents=[common], help="distance-field classifier checks")
    s.add_argument("--eps", type=float, default=0.5)
    s.add_argument("--n-pairs", type=int, default=100_000)
    s.add_argument("--box", type=float, nargs=4, metavar=("XMIN", "XMAX", "YMIN", "YMAX"),
                   default=[-2.0, 2.0, -2.0, 2.0])
    s.add_argument("--resolution", type=int, default=512)
    s.set_defaults(func=cmd_construction_check)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    doc = json.loads(Path(args.config).read_text())
    if not isinstance(doc, dict):
        raise ValueError(f"{args.config}: config must be a JSON object")
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = sub.choices[args.command]
    known = {a.dest for a in sp._actions}
    unknown = set(k.replace("-", "_") for k in doc) - known
    if unknown:
        raise ValueError(f"{args.config}: unknown options {sorted(unknown)}")
    sp.set_defaults(**{k.replace("-", "_"): v for k, v in doc.items()})
    # command-line values still win over the config file
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        if hasattr(args, "box"):
            args.box = _box(args.box)
        result = args.func(args)
    except TrainingError as exc:
        print(f"error: training failed: {exc}", file=sys.stderr)
        return EXIT_TRAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps(result, indent=2, sort_keys=True, default=float))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
