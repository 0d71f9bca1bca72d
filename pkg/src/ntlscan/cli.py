"""Command-line front end.

Six subcommands, each a thin wrapper over one operation: validate-grid,
synth, run, heatmap, candidates, serve.  Success exits 0; failures print
one ``error: ...`` line to stderr and exit 1 (argparse handles usage
errors with its synopsis and exit 2).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import date
from pathlib import Path

from .grid_model import GridModelError, load_network, validate
from .heatmap import export_heatmap, heatmap_to_document, render_svg
from .ingest import IngestError
from .pipeline import (
    PipelineConfig,
    PipelineError,
    load_config,
    load_store,
    rerank,
    run_pipeline,
    save_mutable,
)
from .ranking import ExclusionWindow, export_candidates
from .synth import DatasetSpec, NoiseModel, SamplingModel, make_dataset

DEFAULT_BIND = "127.0.0.1:8000"
BIND_ENV_VAR = "NTLSCAN_BIND"


def _parse_exclusions(values: list[str] | None) -> tuple[ExclusionWindow, ...]:
    return tuple(ExclusionWindow.parse(v) for v in values or [])


def _cmd_validate_grid(args: argparse.Namespace) -> int:
    network = load_network(Path(args.network).read_text(encoding="utf-8"))
    report = validate(network)
    if not report.ok:
        first = report.failures[0]
        print(f"error: validation: {first.message()}", file=sys.stderr)
        return 1
    print(
        f"ok: {len(network.buses)} buses, {len(network.branches)} branches, "
        f"{len(network.meters)} meters"
    )
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = DatasetSpec(
        n_feeders=args.feeders,
        buses_per_feeder=args.buses_per_feeder,
        meter_fraction=args.meter_fraction,
        n_days=args.days,
        seed=args.seed,
        start_day=date.fromisoformat(args.start_day),
        sampling=SamplingModel(
            dropout_probability=args.dropout, jitter=not args.no_jitter
        ),
        noise=NoiseModel(
            intra_hour_load_cv=args.load_cv,
            meter_voltage_noise_sd=args.voltage_noise,
        ),
        sub_intervals_per_hour=args.sub_intervals,
        n_frauds=args.frauds,
    )
    manifest = make_dataset(spec, args.out)
    print(
        f"{args.out}: {manifest['network']['meters']} meters, "
        f"{manifest['days']} days, {len(manifest['frauds'])} frauds"
    )
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    if args.config:
        config = load_config(args.config)
    else:
        missing = [k for k in ("network", "energy", "voltage") if not getattr(args, k)]
        if missing:
            print(
                f"error: config: --config or --network/--energy/--voltage required "
                f"(missing {', '.join('--' + m for m in missing)})",
                file=sys.stderr,
            )
            return 1
        config = PipelineConfig(
            network=args.network, energy=args.energy, voltage=args.voltage
        )
    if args.out:
        config.out_dir = args.out
    if args.top:
        config.top_k = args.top
    if args.exclude:
        config.exclusions = _parse_exclusions(args.exclude)
    store = run_pipeline(config)
    print(store.run_id)
    return 0


def _cmd_heatmap(args: argparse.Namespace) -> int:
    store = load_store(args.store, args.run)
    exclusions = _parse_exclusions(args.exclude) if args.exclude else None
    doc = export_heatmap(store, args.indicator, args.top, exclusions)
    out = Path(args.out)
    if out.suffix == ".svg":
        out.write_text(render_svg(doc), encoding="utf-8")
    else:
        out.write_text(
            json.dumps(heatmap_to_document(doc), indent=1) + "\n", encoding="utf-8"
        )
    print(str(out))
    return 0


def _cmd_candidates(args: argparse.Namespace) -> int:
    store = load_store(args.store, args.run)
    if args.exclude is not None:
        store.exclusions = list(_parse_exclusions(args.exclude))
    if args.top:
        store.config.top_k = args.top
    rerank(store)  # in memory only; nothing is persisted here
    records = []
    for rec in store.candidates:
        note = store.annotations.get(rec.meter_id)
        if note:
            rec.triage, rec.comment = note.status, note.comment
        records.append(rec)
    text = export_candidates(records)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(args.out)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    bind = args.bind or os.environ.get(BIND_ENV_VAR, DEFAULT_BIND)
    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        print(f"error: config: bad bind address {bind!r} (want host:port)", file=sys.stderr)
        return 1
    uvicorn.run(create_app(args.store), host=host, port=int(port))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ntlscan",
        description="Voltage-deviation screening for non-technical losses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-grid", help="check a network file")
    p.add_argument("network")
    p.set_defaults(func=_cmd_validate_grid)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--feeders", type=int, default=12)
    p.add_argument("--buses-per-feeder", type=float, default=57.4)
    p.add_argument("--meter-fraction", type=float, default=0.39)
    p.add_argument("--days", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start-day", default="2021-01-01")
    p.add_argument("--frauds", type=int, default=0)
    p.add_argument("--dropout", type=float, default=0.3)
    p.add_argument("--load-cv", type=float, default=0.15)
    p.add_argument("--voltage-noise", type=float, default=0.002)
    p.add_argument("--sub-intervals", type=int, default=4)
    p.add_argument("--no-jitter", action="store_true")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("run", help="run the analysis pipeline")
    p.add_argument("--config")
    p.add_argument("--network")
    p.add_argument("--energy")
    p.add_argument("--voltage")
    p.add_argument("--out")
    p.add_argument("--top", type=int)
    p.add_argument("--exclude", action="append", metavar="START..END")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("heatmap", help="export a heatmap document")
    p.add_argument("--store", default="runs")
    p.add_argument("--run", required=True)
    p.add_argument("--indicator", default="dv_min")
    p.add_argument("--top", type=int)
    p.add_argument("--exclude", action="append", metavar="START..END")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_heatmap)

    p = sub.add_parser("candidates", help="export the ranked candidate list")
    p.add_argument("--store", default="runs")
    p.add_argument("--run", required=True)
    p.add_argument("--top", type=int)
    p.add_argument("--exclude", action="append", metavar="START..END")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_candidates)

    p = sub.add_parser("serve", help="serve stored runs over HTTP")
    p.add_argument("--store", default="runs")
    p.add_argument("--bind", help=f"host:port (default ${BIND_ENV_VAR} or {DEFAULT_BIND})")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (
        GridModelError,
        IngestError,
        PipelineError,
        FileNotFoundError,
        ValueError,
        RuntimeError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
