"""Command-line harness: ftl collect | train | eval | drive | bench | serve."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .collect import collect_scenario
from .data import McnDataset, RnSegmentDataset
from .datalog import read_log, split_frames, split_laps
from .drive import plot_trace, run_drive, write_trace
from .evaluate import eval_mcn, eval_rn
from .models import build_mcn, build_rn_trainer, load_model, model_meta
from .scenario import load_scenario
from .train import TrainConfig, save_checkpoint, train

DEFAULT_LR = {"mcn": 0.01, "rn": 0.001}
DEFAULT_BATCH = {"mcn": 8, "rn": 1}
DEFAULT_EPOCHS = {"mcn": 100, "rn": 500}


def _log_paths(data: str) -> list[Path]:
    p = Path(data)
    if p.is_dir():
        paths = sorted(p.glob("*.ftl"))
    else:
        paths = sorted(Path().glob(data)) or ([p] if p.exists() else [])
    if not paths:
        sys.exit(f"no log files found under {data!r}")
    return paths


def cmd_collect(args) -> None:
    scn = load_scenario(args.scenario)
    if args.seed is not None:
        scn.seed = args.seed
    paths = collect_scenario(scn, args.out)
    print(f"wrote {len(paths)} log file(s) to {args.out}")
    for p in paths:
        print(f"  {p}")


def _load_mcn_records(paths):
    records = []
    for p in paths:
        _, recs = read_log(p)
        records.extend(recs)
    return records


def cmd_train(args) -> None:
    paths = _log_paths(args.data)
    lr = args.lr if args.lr is not None else DEFAULT_LR[args.model]
    batch = args.batch if args.batch is not None else DEFAULT_BATCH[args.model]
    epochs = args.epochs if args.epochs is not None else DEFAULT_EPOCHS[args.model]
    if args.model == "mcn":
        records = _load_mcn_records(paths)
        train_recs, _ = split_frames(records, args.test_fraction, args.split_seed)
        dataset = McnDataset(train_recs)
        net = build_mcn(seed=args.seed, variant=args.variant)
        config = TrainConfig(learning_rate=lr, epochs=epochs, batch_size=batch,
                             seed=args.seed, loss_kind="cross_entropy",
                             log_every=args.log_every)
    else:
        laps = [read_log(p)[1] for p in paths]
        train_laps, _ = split_laps(laps, args.test_fraction, args.split_seed)
        net = build_rn_trainer(seed=args.seed, variant=args.variant)
        # --batch counts windows per contiguous segment; the trunk runs once
        # per unique frame and the gradients are exactly the batched ones
        dataset = RnSegmentDataset(train_laps, t=net.config.sequence_length,
                                   windows_per_segment=batch)
        config = TrainConfig(learning_rate=lr, epochs=epochs, batch_size=1,
                             seed=args.seed, loss_kind="additive_l2",
                             clip_norm=5.0, log_every=args.log_every)
    print(f"training {args.model} ({args.variant}) on {len(dataset)} samples, "
          f"{epochs} epochs, lr {lr}, batch {batch}")
    history = train(net, dataset, config)
    out = Path(args.out)
    save_checkpoint(out, net, model_meta(net, seed=args.seed, epoch=epochs,
                                         extra={"loss_history": history}))
    hist_path = out.with_suffix(out.suffix + ".history.json")
    hist_path.write_text(json.dumps(history))
    print(f"final loss {history[-1]:.6f}; checkpoint -> {out}")


def cmd_eval(args) -> None:
    net = load_model(args.checkpoint)
    paths = _log_paths(args.data)
    if net.name == "mcn":
        records = _load_mcn_records(paths)
        report = eval_mcn(net, records, args.test_fraction, args.split_seed,
                          checkpoint=str(args.checkpoint))
    else:
        laps = [read_log(p)[1] for p in paths]
        _, test_laps = split_laps(laps, args.test_fraction, args.split_seed)
        names = [p.name for p in paths]
        _, test_names = split_laps(names, args.test_fraction, args.split_seed)
        report = eval_rn(net, test_laps, lap_names=test_names,
                         checkpoint=str(args.checkpoint))
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text)
    print(text)


def cmd_drive(args) -> None:
    scn = load_scenario(args.scenario)
    mcn_net = load_model(args.mcn)
    rn_net = load_model(args.rn)
    trace = run_drive(scn, mcn_net, rn_net, max_seconds=args.max_seconds)
    write_trace(args.out, trace)
    last = trace[-1]
    print(f"{len(trace)} ticks; final mode {last['mode']}, "
          f"distance {last['distance']:.2f} m; trace -> {args.out}")
    if args.plot:
        plot_trace(args.plot, trace)
        print(f"plot -> {args.plot}")


def cmd_bench(args) -> None:
    from .bench import bench_grouped_layer, bench_model

    if args.layer:
        result = bench_grouped_layer(trials=args.passes)
        print(json.dumps(result, indent=2))
        return
    reports = []
    for variant in (("grouped", "standard") if args.variant == "both"
                    else (args.variant,)):
        batch = args.batch if args.batch is not None else DEFAULT_BATCH[args.model]
        reports.append(bench_model(args.model, variant, batch, args.passes))
    for r in reports:
        print(r.to_json())
    if len(reports) == 2:
        ratio = reports[0].images_per_sec / reports[1].images_per_sec
        print(f"grouped/standard throughput ratio: {ratio:.2f}")


def cmd_serve(args) -> None:
    from .serve import create_app, run_server

    scn = load_scenario(args.scenario) if args.scenario else None
    app = create_app(scn, mcn_path=args.mcn, rn_path=args.rn)
    print(f"serving on ws://127.0.0.1:{args.port}/ws")
    run_server(app, port=args.port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ftl",
                                     description="follow-the-leader harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collect", help="run a scenario and write log files")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("train", help="train a model from log files")
    p.add_argument("--model", choices=("mcn", "rn"), required=True)
    p.add_argument("--data", required=True, help="log dir or glob")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--variant", choices=("grouped", "standard"), default="grouped")
    p.add_argument("--test-fraction", type=float, default=0.20)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--log-every", type=int, default=10)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on held-out data")
    p.add_argument("--model", choices=("mcn", "rn"), default=None)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--test-fraction", type=float, default=0.20)
    p.add_argument("--split-seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("drive", help="closed-loop drive against a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--mcn", required=True, help="mcn checkpoint")
    p.add_argument("--rn", required=True, help="rn checkpoint")
    p.add_argument("--out", required=True, help="trace jsonl path")
    p.add_argument("--plot", default=None, help="optional png path")
    p.add_argument("--max-seconds", type=float, default=120.0)
    p.set_defaults(func=cmd_drive)

    p = sub.add_parser("bench", help="local training-throughput benchmark")
    p.add_argument("--model", choices=("mcn", "rn"), default="mcn")
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--variant", choices=("grouped", "standard", "both"),
                   default="both")
    p.add_argument("--passes", type=int, default=10)
    p.add_argument("--layer", action="store_true",
                   help="time the 256-channel conv layer in isolation")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="live sim endpoint for the browser UI")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--scenario", default=None)
    p.add_argument("--mcn", default=None)
    p.add_argument("--rn", default=None)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> None:
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
