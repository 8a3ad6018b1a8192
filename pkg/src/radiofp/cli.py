"""Command-line entry point: ``radiofp synth|extract|train|eval|stream|profile``.

Exit codes: 0 success, 1 usage, 2 data/config error, 3 internal error.  On
failure a single JSON line ``{"error": ..., "reason": ...}`` goes to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Sequence


from . import __version__
from .channel import (
    MacSchedule,
    NoiseModel,
    ShadowingModel,
    TraceFormatError,
    class_attenuation_spread,
    iter_trace_rows,
    read_sidecar,
    read_trace_file,
    write_sidecar,
    write_trace_file,
)
from .features import DetectorConfig, FeatureError
from .formats import (
    DataFormatError,
    read_dataset,
    read_jsonl,
    read_link_datasets,
    write_features,
    write_jsonl,
    write_link_features,
    write_raw,
)
from .gateway import Gateway, StreamOrderError
from .learn import Family, ModelSpec, cross_validate, load_model, per_link_eval, save_model, train
from .pipeline import ChannelSetup, extract_fleet, synth_fleet
from .profiling import profile_models
from .scenario import config_from_mapping, load_config, sample_fleet

log = logging.getLogger("radiofp")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
RUN_FILE = "run.json"
REPORT_HEADER = "# radiofp-eval v1"
SPREAD_HEIGHTS = (0.5, 1.0, 1.5, 2.0)


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------- config


def _resolve(config_path, overrides: dict | None = None):
    """Deployment, fleet, channel setup and detector config from YAML (or defaults)."""
    if config_path:
        deployment, fleet, rest = load_config(config_path)
    else:
        deployment, fleet, rest = config_from_mapping(overrides or {})
    channel = dict(rest.pop("channel", None) or {})
    detector = DetectorConfig(**(rest.pop("detector", None) or {}))
    if rest:
        raise DataError(f"unknown config section(s): {sorted(rest)}")
    schedule = None
    if "slot_duration" in channel or "token_order" in channel:
        schedule = MacSchedule(
            tuple(channel.pop("token_order", (1, 2, 3))), float(channel.pop("slot_duration", deployment.round_duration / 3))
        )
    noise = NoiseModel(float(channel.pop("sigma", 1.0)), int(channel.pop("quantization_step", 1)))
    shadowing = ShadowingModel(float(channel.pop("a_max", 30.0)), float(channel.pop("decay", 0.5)))
    if channel:
        raise DataError(f"unknown channel key(s): {sorted(channel)}")
    setup = ChannelSetup(deployment, schedule, noise, shadowing)
    setup.mac.check(deployment)
    return deployment, fleet, setup, detector


def _run_document(setup: ChannelSetup, detector: DetectorConfig, seed: int) -> dict:
    return {
        "version": 1,
        "seed": seed,
        "deployment": asdict(setup.config),
        "channel": {
            "sigma": setup.noise.sigma,
            "quantization_step": setup.noise.quantization_step,
            "slot_duration": setup.mac.slot_duration,
            "token_order": list(setup.mac.token_order),
            "a_max": setup.shadowing.a_max,
            "decay": setup.shadowing.decay,
        },
        "detector": {
            "drop_threshold": detector.drop_threshold,
            "min_consecutive": detector.min_consecutive,
            "idle_window": detector.idle_window,
        },
    }


def _setup_for_input(args, input_dir: Path | None):
    if args.config:
        _, _, setup, detector = _resolve(args.config)
        return setup, detector
    if input_dir is not None and (input_dir / RUN_FILE).exists():
        doc = json.loads((input_dir / RUN_FILE).read_text())
        _, _, setup, detector = _resolve(
            None, {"deployment": doc["deployment"], "channel": doc["channel"], "detector": doc["detector"]}
        )
        return setup, detector
    _, _, setup, detector = _resolve(None)
    return setup, detector


def _out_dir(args) -> Path:
    if not args.out:
        raise UsageError("--out is required")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc.strerror}") from None
    return out


# --------------------------------------------------------------------------- subcommands


def cmd_synth(args) -> int:
    deployment, fleet_spec, setup, detector = _resolve(args.config)
    seed = args.seed
    fleet_spec = replace(fleet_spec, rng_seed=seed)
    if args.n < 1:
        raise UsageError("-n must be at least 1")
    out = _out_dir(args)
    fleet = sample_fleet(fleet_spec, args.n, deployment)
    traces = synth_fleet(fleet, setup, seed, workers=args.workers)
    trace_dir = out / "traces"
    trace_dir.mkdir(exist_ok=True)
    manifest = []
    for v, tr in zip(fleet, traces):
        name = f"pass_{v.vehicle_id:06d}.csv"
        write_trace_file(trace_dir / name, tr)
        write_sidecar(trace_dir / f"pass_{v.vehicle_id:06d}.json", v, tr, name)
        rec = {k: v.to_record()[k] for k in ("vehicle_id", "class", "length", "velocity", "acceleration", "direction")}
        rec["trace_file"] = f"traces/{name}"
        manifest.append(rec)
    write_jsonl(out / "manifest.jsonl", manifest)
    (out / RUN_FILE).write_text(json.dumps(_run_document(setup, detector, seed), indent=1, sort_keys=True) + "\n")
    rows = class_attenuation_spread(fleet, SPREAD_HEIGHTS, setup.shadowing)
    classes = sorted({c for r in rows for c in r["class_means"]})
    lines = ["antenna_height," + ",".join(f"mean_peak_db.{c}" for c in classes) + ",spread_db"]
    for r in rows:
        vals = ",".join(f"{r['class_means'].get(c, float('nan')):.6f}" for c in classes)
        lines.append(f"{r['antenna_height']},{vals},{r['spread']:.6f}")
    (out / "attenuation_spread.csv").write_text("\n".join(lines) + "\n")
    log.info("synthesized %d passes into %s", len(fleet), out)
    return EXIT_OK


def _collect_trace_inputs(paths: Sequence[str]):
    """(trace file, sidecar or None) pairs plus the directory holding run.json, if any."""
    items, base = [], None
    for p in map(Path, paths):
        if p.is_dir():
            base = p
            manifest = p / "manifest.jsonl"
            if manifest.exists():
                for rec in read_jsonl(manifest):
                    tf = p / rec["trace_file"]
                    items.append((tf, tf.with_suffix(".json")))
            else:
                for tf in sorted(p.glob("**/*.csv")):
                    items.append((tf, tf.with_suffix(".json")))
        elif p.exists():
            items.append((p, p.with_suffix(".json")))
            if (p.parent / RUN_FILE).exists():
                base = p.parent
            elif (p.parent.parent / RUN_FILE).exists():
                base = p.parent.parent
        else:
            raise DataError(f"input not found: {p}")
    return items, base


def cmd_extract(args) -> int:
    items, base = _collect_trace_inputs(args.inputs)
    setup, detector = _setup_for_input(args, base)
    out = _out_dir(args)
    traces, ids, labels = [], [], []
    for i, (tf, sidecar) in enumerate(items):
        traces.append(read_trace_file(tf))
        if sidecar.exists():
            veh = read_sidecar(sidecar)["vehicle"]
            ids.append(int(veh["vehicle_id"]))
            labels.append(veh["class"])
        else:
            ids.append(i)
            labels.append("unknown")
    links = setup.links
    res = extract_fleet(traces, ids, labels, links, detector)
    write_features(out / "features.csv", zip([p.features for p in res.passes], res.labels))
    write_raw(out / "raw.csv", zip([p.raw for p in res.passes], res.labels))
    link_rows = []
    for lid in range(1, 10):
        for p, lab in zip(res.passes, res.labels):
            fv = p.link_features(lid, links)
            if fv is not None:
                link_rows.append((lid, fv, lab))
    write_link_features(out / "link_features.csv", link_rows)
    with open(out / "rejects.log", "w") as fh:
        for vid, reason in res.rejects:
            fh.write(f"{vid}\t{reason}\n")
    log.info("extracted %d passes, %d rejected", len(res.passes), len(res.rejects))
    return EXIT_OK


def _families(text: str | None) -> list[Family]:
    if not text:
        return [Family.DECISION_TREE, Family.KNN, Family.SVM, Family.ANN]
    try:
        return [Family(f.strip()) for f in text.split(",") if f.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _datasets(args):
    inp = Path(args.inputs[0])
    if inp.is_dir():
        files = [inp / "features.csv", inp / "raw.csv"]
        files = [f for f in files if f.exists()]
        if not files:
            raise DataError(f"{inp} holds neither features.csv nor raw.csv")
    else:
        files = [Path(p) for p in args.inputs]
    return [read_dataset(f) for f in files]


def cmd_eval(args) -> int:
    families = _families(args.families)
    datasets = _datasets(args)
    out = _out_dir(args)
    lines = [REPORT_HEADER, f"folds = {args.folds}", f"seed = {args.seed}"]
    grid = []
    for ds in datasets:
        if len(ds) < args.folds:
            raise DataError(f"{len(ds)} samples cannot fill {args.folds} folds")
        for fam in families:
            rep = cross_validate(ModelSpec(fam, rng_seed=args.seed), ds, args.folds, args.seed, timing=args.timing)
            lines.append(f"[{fam.value} {ds.representation.value}]")
            lines.append(rep.to_text(timing=args.timing).rstrip("\n"))
            grid.append((ds.representation.value, fam.value, rep.csr))
    lines.append("[grid csr]")
    reps = list(dict.fromkeys(r for r, _, _ in grid))
    lines.append("representation " + " ".join(f.value for f in families))
    table = ["representation," + ",".join(f.value for f in families)]
    for r in reps:
        cells = [c for rr, _, c in grid if rr == r]
        lines.append(f"{r} " + " ".join(f"{c:.6f}" for c in cells))
        table.append(f"{r}," + ",".join(f"{c:.6f}" for c in cells))
    (out / "table2.csv").write_text("\n".join(table) + "\n")

    if args.per_link:
        inp = Path(args.inputs[0])
        link_file = inp / "link_features.csv" if inp.is_dir() else Path(args.per_link_file or "")
        if not link_file.exists():
            raise DataError("per-link evaluation needs link_features.csv")
        fam = Family(args.per_link_family)
        csrs = per_link_eval(ModelSpec(fam, rng_seed=args.seed), read_link_datasets(link_file), args.folds, args.seed)
        lines.append(f"[per-link {fam.value}]")
        fig7 = ["link_id,direct,csr"]
        for lid, csr in csrs:
            lines.append(f"link{lid} = {csr:.6f}")
            fig7.append(f"{lid},{int(lid in (1, 5, 9))},{csr:.6f}")
        (out / "fig7.csv").write_text("\n".join(fig7) + "\n")
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_train(args) -> int:
    (fam,) = _families(args.family) if args.family else [Family.KNN]
    out = _out_dir(args)
    for ds in _datasets(args):
        model = train(ModelSpec(fam, rng_seed=args.seed), ds)
        save_model(model, out / f"model_{fam.value}_{ds.representation.value}.json")
    return EXIT_OK


def cmd_stream(args) -> int:
    if not args.model:
        raise UsageError("stream needs --model")
    model = load_model(args.model)
    base = None
    if args.inputs and args.inputs != ["-"]:
        _, base = _collect_trace_inputs(args.inputs)
    setup, detector = _setup_for_input(args, base)
    gw = Gateway(setup.links, model, detector, setup.mac.round_duration)

    def samples():
        if not args.inputs or args.inputs == ["-"]:
            yield from iter_trace_rows(sys.stdin, "<stdin>")
            return
        items, _ = _collect_trace_inputs(args.inputs)
        for tf, _ in items:
            with open(tf) as fh:
                yield from iter_trace_rows(fh, tf)

    sink = open(Path(_out_dir(args)) / "records.jsonl", "w") if args.out else sys.stdout
    try:
        for s in samples():
            for rec in gw.push_sample(s):
                sink.write(rec.to_json() + "\n")
                sink.flush()
        diags = gw.flush()
    finally:
        if sink is not sys.stdout:
            sink.close()
    if args.out:
        write_jsonl(Path(args.out) / "diagnostics.jsonl", [json.loads(d.to_json()) for d in diags])
    else:
        for d in diags:
            print(d.to_json(), file=sys.stderr)
    return EXIT_OK


def cmd_profile(args) -> int:
    families = _families(args.families)
    datasets = _datasets(args)
    out = _out_dir(args)
    cells = [(ModelSpec(f, rng_seed=args.seed), ds) for ds in datasets for f in families]
    report = profile_models(cells, args.inferences)
    (out / "profile.txt").write_text(report.to_text())
    (out / "fig8.csv").write_text(report.to_csv())
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "train": cmd_train,
    "eval": cmd_eval,
    "stream": cmd_stream,
    "profile": cmd_profile,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="radiofp", description="Radio-fingerprint vehicle classification toolkit")
    parser.add_argument("--version", action="version", version=f"radiofp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="synthesize passes and ground truth")
    p.add_argument("-n", type=int, default=100, help="number of passes")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("extract", parents=[common], help="detect events and write feature files")
    p.add_argument("inputs", nargs="+", help="synth directory or trace files")

    p = sub.add_parser("train", parents=[common], help="train one model family")
    p.add_argument("inputs", nargs="+", help="extract directory or feature/raw files")
    p.add_argument("--family", help="knn | decision_tree | svm | ann")

    p = sub.add_parser("eval", parents=[common], help="k-fold cross-validation report")
    p.add_argument("inputs", nargs="+", help="extract directory or feature/raw files")
    p.add_argument("--families", help="comma-separated families (default: all four)")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--per-link", action="store_true", help="also evaluate each of the nine links")
    p.add_argument("--per-link-family", default="knn")
    p.add_argument("--per-link-file")
    p.add_argument("--timing", action="store_true", help="include wall-clock inference times")

    p = sub.add_parser("stream", parents=[common], help="online classification of a sample stream")
    p.add_argument("inputs", nargs="*", help="trace files or directory; '-' or nothing reads stdin")
    p.add_argument("--model", help="model file from 'train'")

    p = sub.add_parser("profile", parents=[common], help="training and inference runtimes")
    p.add_argument("inputs", nargs="+", help="extract directory or feature/raw files")
    p.add_argument("--families", help="comma-separated families (default: all four)")
    p.add_argument("--inferences", type=int, default=1000)
    return parser


def _fail(kind: str, code: int, reason: str) -> int:
    print(json.dumps({"error": kind, "reason": " ".join(str(reason).split())}), file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail("usage", EXIT_USAGE, str(exc))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("usage", EXIT_USAGE, str(exc))
    except (DataError, DataFormatError, TraceFormatError, FeatureError, StreamOrderError, ValueError, KeyError) as exc:
        return _fail("data", EXIT_DATA, str(exc))
    except OSError as exc:
        return _fail("data", EXIT_DATA, f"{exc.filename or ''}: {exc.strerror or exc}")
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        return _fail("internal", EXIT_INTERNAL, f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
