"""Command-line entry points.

    redlight run   --config cams.json --list frames.list --store run.jsonl
    redlight gen   --out data/ --n 500 --mix 0.4,0.3,0.3 --seed 7
    redlight eval  --store run.jsonl --labels data/labels.txt
    redlight serve --config cams.json --store run.jsonl --port 8000

Exit codes: 0 success, 1 I/O or data failure, 2 usage or configuration
error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .config import ConfigError, load_config
from .evaluate import LabelFormatError, UnmatchedPathsError, evaluate, format_table, load_labels
from .pipeline import Pipeline, ingest_list
from .records import Violation
from .store import RecordStore


class DataError(RuntimeError):
    """Invalid input data or I/O failure (exit code 1)."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="redlight", description="Stop-line violation detection")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="process a frame list through the detector")
    run.add_argument("--config", required=True, help="camera configuration JSON")
    run.add_argument("--list", dest="list_file", required=True, help="frame list file")
    run.add_argument("--store", required=True, help="record store to append to (created if missing)")
    run.add_argument("--checkpoints", help="directory for background checkpoints")
    run.add_argument(
        "--no-seed-frames",
        action="store_true",
        help="fail frames for unseeded streams instead of consuming the first five as seeds",
    )
    run.add_argument("--watch", action="store_true", help="keep polling the list file for appended lines")
    run.add_argument(
        "--idle-exit",
        type=float,
        default=None,
        metavar="SECONDS",
        help="with --watch, exit once the list has been quiet this long",
    )
    run.add_argument("--quiet", action="store_true", help="suppress per-violation lines")

    gen = sub.add_parser("gen", help="generate a labeled synthetic dataset")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--n", type=int, required=True, help="number of frames")
    gen.add_argument("--mix", default="0.4,0.3,0.3", help="vehicle,pedestrian,empty fractions (default 0.4,0.3,0.3)")
    gen.add_argument("--noise", type=float, default=0.0, help="Gaussian noise sigma (default 0)")
    gen.add_argument("--illum", type=int, default=0, help="max per-frame illumination offset (default 0)")
    gen.add_argument("--seed", type=int, default=0, help="generation seed (default 0)")

    evp = sub.add_parser("eval", help="score a record store against a label file")
    evp.add_argument("--store", required=True, help="record store to score")
    evp.add_argument("--labels", required=True, help="ground-truth label file")
    evp.add_argument("--format", choices=("table", "records"), default="table", help="output format")

    serve = sub.add_parser("serve", help="run the review service")
    serve.add_argument("--config", required=True, help="camera configuration JSON")
    serve.add_argument("--store", required=True, help="record store backing the service")
    serve.add_argument("--frames-root", default=".", help="directory frame paths resolve against")
    serve.add_argument("--checkpoints", help="checkpoint directory for redetection")
    serve.add_argument("--token", help="operator token required on mutating endpoints")
    serve.add_argument("--console", help="directory of static console files to serve at /")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _parse_mix(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"--mix needs three comma-separated fractions, got {text!r}")
    try:
        mix = tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--mix fractions must be numbers, got {text!r}") from None
    return mix  # type: ignore[return-value]


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        cameras = load_config(args.config)
    except FileNotFoundError as exc:
        raise DataError(f"config file not found: {exc.filename}") from exc

    list_path = Path(args.list_file)
    if not list_path.exists():
        raise DataError(f"list file not found: {list_path}")

    store = RecordStore(args.store)
    pipeline = Pipeline(
        cameras,
        store=store,
        base_dir=list_path.parent,
        seed_from_stream=not args.no_seed_frames,
        checkpoint_dir=args.checkpoints,
    )
    processed = 0

    def drain() -> int:
        nonlocal processed
        result = ingest_list(list_path)
        for warning in result.warnings:
            print(f"warning: list line {warning.line_no}: {warning.reason}", file=sys.stderr)
        new = result.records[processed:]
        for frame in new:
            event = pipeline.process_frame(frame)
            if isinstance(event, Violation) and not args.quiet:
                rec = event.record
                print(f"violation {rec.violation_id} at {rec.frame.captured_at} ({rec.frame.path})")
        processed += len(new)
        return len(new)

    with store:
        drain()
        if args.watch:
            idle_for = 0.0
            poll_s = 0.2
            while args.idle_exit is None or idle_for < args.idle_exit:
                time.sleep(poll_s)
                if drain() > 0:
                    idle_for = 0.0
                else:
                    idle_for += poll_s
        stats = pipeline.stats
        stats.check_invariants()
        print(
            f"frames {stats.frames_seen}  backgrounds {stats.backgrounds_accepted}  "
            f"foregrounds {stats.foregrounds}  violations {stats.violations}  errors {stats.errors}"
        )
    return 0 if stats.errors == 0 else 1


def _cmd_gen(args: argparse.Namespace) -> int:
    mix = _parse_mix(args.mix)
    from .synthgen import gen_dataset

    try:
        paths = gen_dataset(
            args.out,
            n=args.n,
            mix=mix,
            noise_sigma=args.noise,
            illumination=args.illum,
            rng_seed=args.seed,
        )
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    counts = " ".join(f"{kind}={count}" for kind, count in paths.counts.items())
    print(f"wrote {args.n} frames to {paths.out_dir} ({counts})")
    print(f"list   {paths.list_file}")
    print(f"labels {paths.label_file}")
    print(f"config {paths.config_file}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    store_path = Path(args.store)
    if not store_path.exists():
        raise DataError(f"store not found: {store_path}")
    try:
        labels = load_labels(args.labels)
    except FileNotFoundError as exc:
        raise DataError(f"label file not found: {exc.filename}") from exc
    except LabelFormatError as exc:
        raise DataError(str(exc)) from exc

    with RecordStore(store_path, create=False) as store:
        try:
            report = evaluate(store, labels)
        except UnmatchedPathsError as exc:
            print("error: store references paths missing from the label file:", file=sys.stderr)
            for path in exc.paths:
                print(f"  {path}", file=sys.stderr)
            return 1

    if args.format == "records":
        print(json.dumps(report.to_dict(), sort_keys=True))
    else:
        print(format_table(report))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import Deployment, create_app

    try:
        cameras = load_config(args.config)
    except FileNotFoundError as exc:
        raise DataError(f"config file not found: {exc.filename}") from exc

    deployment = Deployment(
        cameras=cameras,
        store=RecordStore(args.store),
        frames_root=Path(args.frames_root),
        config_path=Path(args.config),
        checkpoint_dir=Path(args.checkpoints) if args.checkpoints else None,
        operator_token=args.token,
    )
    app = create_app(deployment, console_dir=Path(args.console) if args.console else None)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "gen": _cmd_gen, "eval": _cmd_eval, "serve": _cmd_serve}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except argparse.ArgumentTypeError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
