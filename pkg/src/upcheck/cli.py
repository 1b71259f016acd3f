"""Command-line entry point: ``upcheck <command> [options]``.

Exit status: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import __version__
from .attrib import METHODS, explain_pair, resolve_method
from .pairfile import read_pair_file, record_from_pair, write_pair_file
from .probe import ProbeConfig, amp_freq_response, grid_from_json, grid_to_csv, grid_to_json
from .spectral import ablate_bins
from .synthgen import GROUPS, ConfigError, DatasetFormatError, SynthConfig, generate_dataset, read_dataset, write_dataset
from .tinymodel import (ModelHandle, ParamsFormatError, TrainConfig, TrainingError, load_params,
                        save_params, train)
from .updetect import LAYOUTS, MODES, batch_detect

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad arguments or configuration (exit status 2)."""


class RuntimeFailure(Exception):
    """I/O or computation failure (exit status 1)."""


def _dumps(obj):
    return json.dumps(obj, sort_keys=True)


def _load_json(path, what="config"):
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"{what} file not found: {path}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} file {path} is not valid JSON: {exc}")


def _file_id(path):
    """Basename and content hash; stable across directories."""
    p = Path(path)
    return {"name": p.name, "sha256": hashlib.sha256(p.read_bytes()).hexdigest()}


def _dataclass_from(cls, d, label):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise UsageError(f"{label}: unknown field {unknown[0]!r}")
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{label}: {exc}")


def _read_dataset(path):
    try:
        return read_dataset(path)
    except FileNotFoundError:
        raise RuntimeFailure(f"dataset file not found: {path}")
    except DatasetFormatError as exc:
        raise RuntimeFailure(str(exc))


def _load_model(path):
    try:
        return ModelHandle(load_params(path))
    except FileNotFoundError:
        raise RuntimeFailure(f"model file not found: {path}")
    except ParamsFormatError as exc:
        raise RuntimeFailure(str(exc))


def _method_list(spec):
    names = [m.strip() for m in spec.split(",") if m.strip()]
    if not names:
        raise UsageError("no method given")
    for name in names:
        try:
            resolve_method(name)
        except KeyError:
            raise UsageError(
                f"unknown method {name!r}; supported: {', '.join(sorted(METHODS))} (and lime-aggN). "
                "Attributions from other methods (e.g. DeepLIFT, GradientSHAP) can be written to a "
                "pair file and checked with 'upcheck check --pairs FILE'")
    return names


def _resolve(name, method_cfg):
    base = name.split("-agg")[0] if name.startswith("lime") else name
    tag, fn, _ = resolve_method(name)
    options = method_cfg.get(tag, method_cfg.get(base, method_cfg.get(name, {})))
    try:
        tag, fn, cfg = resolve_method(name, options)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"method config for {name!r}: {exc}")
    return tag, fn, cfg


# -- commands ---------------------------------------------------------------


def cmd_synth(args):
    d = _load_json(args.config)
    if args.seed is not None:
        d["seed"] = args.seed
    try:
        cfg = SynthConfig.from_dict(d).validate()
    except ConfigError as exc:
        raise UsageError(f"invalid synth config field {exc}")
    ds = generate_dataset(cfg)
    write_dataset(ds, args.out)
    print(f"train {len(ds.train)}, both {len(ds.val_both)}, time-only {len(ds.val_time)}, "
          f"freq-only {len(ds.val_freq)} -> {args.out}")
    return EXIT_OK


def cmd_train(args):
    d = _load_json(args.config)
    hidden = d.pop("hidden", [256, 128, 64])
    if args.seed is not None:
        d["seed"] = args.seed
    if args.task is not None:
        d["task"] = args.task
    cfg = _dataclass_from(TrainConfig, d, "train config")
    try:
        cfg.validate()
    except ValueError as exc:
        raise UsageError(f"train config: {exc}")
    ds = _read_dataset(args.dataset)
    if cfg.task == "regression":
        raise UsageError("task 'regression' requested, but synthetic datasets carry class labels")
    try:
        params, metrics = train(ds, cfg, hidden=tuple(hidden))
    except TrainingError as exc:
        raise RuntimeFailure(f"training diverged at {exc}")
    save_params(params, args.out)
    metrics["dataset"] = _file_id(args.dataset)
    metrics_path = Path(args.metrics) if args.metrics else Path(str(args.out) + ".metrics.json")
    metrics_path.write_text(_dumps(metrics) + "\n")
    for name, m in metrics["validation"].items():
        print(f"{name}: accuracy {m['accuracy']:.3f}, target logit {m['mean_target_logit']:.2f} "
              f"+/- {m['std_target_logit']:.2f}")
    return EXIT_OK


def _explain_records(h, samples, tag, fn, cfg, extra_meta):
    records = []
    for s in samples:
        pair = explain_pair(h, s.values, s.label, fn, cfg, sample_id=s.sample_id)
        meta = dict(extra_meta, method=tag, group=s.group, label=int(s.label), target=int(s.label))
        records.append(record_from_pair(pair, meta))
    return records


def _groups(arg):
    names = [g.strip() for g in arg.split(",")] if arg else list(GROUPS)
    for g in names:
        if g not in GROUPS + ("train",):
            raise UsageError(f"unknown group {g!r}; choose from {', '.join(GROUPS)}")
    return names


def cmd_explain(args):
    methods = _method_list(args.method)
    method_cfg = _load_json(args.config)
    groups = _groups(args.groups)
    h = _load_model(args.model)
    ds = _read_dataset(args.dataset)
    if ds.config.length != h.params.n_inputs:
        raise UsageError(f"model expects length {h.params.n_inputs}, dataset has {ds.config.length}")
    records, echo = [], {}
    for name in methods:
        tag, fn, cfg = _resolve(name, method_cfg)
        echo[tag] = asdict(cfg) if cfg is not None else {}
        for g in groups:
            samples = ds.group(g)[: args.limit] if args.limit else ds.group(g)
            records += _explain_records(h, samples, tag, fn, cfg, {})
    header = {"command": "explain", "model": _file_id(args.model), "dataset": _file_id(args.dataset),
              "methods": echo, "groups": groups, "limit": args.limit}
    write_pair_file(args.out, records, header)
    print(f"{len(records)} records -> {args.out}")
    return EXIT_OK


def _check(records, mode, layout):
    """Detect over parsed records; returns (report dicts, summary)."""
    valid = [r for r in records if r.error is None]
    results = {}
    if valid:
        reports, _ = batch_detect([r.to_pair() for r in valid], mode, layout)
        results = {id(r): rep for r, rep in zip(valid, reports)}
    out = []
    for r in records:
        rep = results.get(id(r))
        if rep is None:
            out.append({"id": r.sample_id, "line": r.line, "violated": False, "witness": None,
                        "error": r.error, "meta": r.meta})
        else:
            d = rep.to_dict()
            out.append({"id": r.sample_id, "line": r.line, "violated": d["violated"],
                        "witness": d["witness"], "error": d["error"], "meta": r.meta})
    errored = sum(o["error"] is not None for o in out)
    violated = sum(o["violated"] for o in out)
    processed = len(out) - errored
    summary = {"total": len(out), "processed": processed, "errored": errored, "violated": violated,
               "violation_percentage": (100.0 * violated / processed) if processed else None}
    return out, summary


def _summary_line(s):
    pct = s["violation_percentage"]
    pct_s = f"{pct:.2f}%" if pct is not None else "n/a"
    return f"violated {s['violated']}/{s['processed']} ({pct_s}), errored {s['errored']}"


def cmd_check(args):
    try:
        header, records, parse_errors = read_pair_file(args.pairs)
    except FileNotFoundError:
        raise RuntimeFailure(f"pair file not found: {args.pairs}")
    if not records:
        raise UsageError(f"{args.pairs}: no records")
    reports, summary = _check(records, args.mode, args.spectrum_layout)
    malformed = parse_errors + sum(1 for r in records if r.error and not r.error.startswith("degenerate"))
    doc = {"config": {"command": "check", "pairs": _file_id(args.pairs), "mode": args.mode,
                      "spectrum_layout": args.spectrum_layout, "pair_header": header},
           "summary": dict(summary, malformed=malformed), "reports": reports}
    if args.out:
        Path(args.out).write_text(_dumps(doc) + "\n")
    print(_summary_line(summary))
    return EXIT_RUNTIME if malformed else EXIT_OK


def cmd_batch(args):
    methods = _method_list(args.method)
    method_cfg = _load_json(args.config)
    groups = _groups(args.groups)
    h = _load_model(args.model)
    ds = _read_dataset(args.dataset)
    if ds.config.length != h.params.n_inputs:
        raise UsageError(f"model expects length {h.params.n_inputs}, dataset has {ds.config.length}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    base = {"model": _file_id(args.model), "dataset": _file_id(args.dataset),
            "mode": args.mode, "spectrum_layout": args.spectrum_layout, "limit": args.limit}
    rows = []
    for name in methods:
        tag, fn, cfg = _resolve(name, method_cfg)
        echo = dict(base, command="batch", method=tag, method_config=asdict(cfg) if cfg else {})
        records = []
        for g in groups:
            samples = ds.group(g)[: args.limit] if args.limit else ds.group(g)
            X = np.array([s.values for s in samples])
            y = np.array([s.label for s in samples])
            logits = h(X)
            target_logit = logits[np.arange(len(y)), y]
            accuracy = float(np.mean(np.argmax(logits, axis=1) == y))
            try:
                recs = _explain_records(h, samples, tag, fn, cfg, {})
                parsed = [_reparse(r, i) for i, r in enumerate(recs)]
                _, summ = _check(parsed, args.mode, args.spectrum_layout)
                cell_error = None
            except Exception as exc:  # per-cell failure: record it, keep the table
                recs, cell_error = [], f"{type(exc).__name__}: {exc}"
                summ = {"total": len(samples), "processed": 0, "errored": len(samples),
                        "violated": 0, "violation_percentage": None}
            records += recs
            rows.append({"group": g, "method": tag, "n_samples": len(samples),
                         "n_processed": summ["processed"], "n_errors": summ["errored"],
                         "n_violated": summ["violated"],
                         "violation_percentage": summ["violation_percentage"],
                         "accuracy": accuracy, "mean_target_logit": float(np.mean(target_logit)),
                         "std_target_logit": float(np.std(target_logit)), "error": cell_error})
        safe = tag.replace("/", "_")
        write_pair_file(out_dir / f"pairs-{safe}.jsonl", records, echo)
        _, recs_parsed, _ = read_pair_file(out_dir / f"pairs-{safe}.jsonl")
        reports, summ = _check(recs_parsed, args.mode, args.spectrum_layout)
        (out_dir / f"report-{safe}.json").write_text(
            _dumps({"config": echo, "summary": summ, "reports": reports}) + "\n")
    _write_table(out_dir, rows, dict(base, command="batch", methods=methods, groups=groups,
                                     method_config=method_cfg))
    for r in rows:
        pct = r["violation_percentage"]
        pct_s = f"{pct:6.2f}%" if pct is not None else "   n/a"
        print(f"{r['group']:<10} {r['method']:<22} {pct_s}  acc {r['accuracy']:.3f}  "
              f"logit {r['mean_target_logit']:.2f} +/- {r['std_target_logit']:.2f}")
    return EXIT_OK


def _reparse(rec, i):
    from .pairfile import parse_record
    return parse_record(json.loads(_dumps(rec)), i + 1)


_TABLE_COLUMNS = ["group", "method", "n_samples", "n_processed", "n_errors", "n_violated",
                  "violation_percentage", "accuracy", "mean_target_logit", "std_target_logit", "error"]


def _write_table(out_dir, rows, echo):
    with (out_dir / "summary.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_TABLE_COLUMNS)
        for r in rows:
            w.writerow(["" if r[c] is None else (repr(r[c]) if isinstance(r[c], float) else r[c])
                        for c in _TABLE_COLUMNS])
    (out_dir / "summary.json").write_text(_dumps({"config": echo, "rows": rows}) + "\n")


def cmd_probe(args):
    d = _load_json(args.config)
    if args.seed is not None:
        d["seed"] = args.seed
    if args.bins:
        d["freq_bins"] = [int(b) for b in args.bins.split(",")]
    if args.amplitudes:
        d["amplitudes"] = [float(a) for a in args.amplitudes.split(",")]
    if args.target is not None:
        d["target"] = args.target
    cfg = _dataclass_from(ProbeConfig, d, "probe config")
    h = _load_model(args.model)
    try:
        grid = amp_freq_response(h, cfg)
    except ValueError as exc:
        raise UsageError(f"probe config: {exc}")
    out = Path(args.out)
    stem = out.with_suffix("") if out.suffix in (".csv", ".json") else out
    Path(str(stem) + ".csv").write_text(grid_to_csv(grid))
    Path(str(stem) + ".json").write_text(grid_to_json(grid) + "\n")
    print(f"{grid.mean.shape[0]}x{grid.mean.shape[1]} grid -> {stem}.csv, {stem}.json")
    return EXIT_OK


def _read_series(path):
    text = Path(path).read_text()
    stripped = text.strip()
    if not stripped:
        raise UsageError(f"{path}: empty series file")
    if stripped.startswith("["):
        return [("series-0", np.array(json.loads(stripped), dtype=float))]
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RuntimeFailure(f"{path}:{lineno}: {exc}")
        if "config" in obj and "values" not in obj:
            continue
        if "values" not in obj:
            raise RuntimeFailure(f"{path}:{lineno}: missing field 'values'")
        out.append((str(obj.get("id", f"series-{len(out)}")), np.array(obj["values"], dtype=float)))
    return out


def cmd_ablate(args):
    try:
        bins = [int(b) for b in args.bins.split(",") if b.strip()] if args.bins else []
    except ValueError:
        raise UsageError(f"bins must be comma-separated integers, got {args.bins!r}")
    try:
        series = _read_series(args.series)
    except FileNotFoundError:
        raise RuntimeFailure(f"series file not found: {args.series}")
    h = _load_model(args.model) if args.model else None
    records = []
    for sid, x in series:
        try:
            y = ablate_bins(x, bins)
        except ValueError as exc:
            raise UsageError(str(exc))
        rec = {"id": sid, "bins": bins, "values": [float(v) for v in y]}
        if h is not None:
            before, after = h(x), h(y)
            rec["logits_before"] = [float(v) for v in before]
            rec["logits_after"] = [float(v) for v in after]
            print(f"{sid}: logits before {np.round(before, 4).tolist()} after {np.round(after, 4).tolist()}")
        records.append(rec)
    header = {"command": "ablate", "bins": bins, "series": _file_id(args.series),
              "model": _file_id(args.model) if args.model else None}
    with Path(args.out).open("w") as fh:
        fh.write(_dumps({"config": header}) + "\n")
        for rec in records:
            fh.write(_dumps(rec) + "\n")
    print(f"{len(records)} series -> {args.out}")
    return EXIT_OK


def cmd_plot(args):
    from .plotting import plot_grid, plot_pair

    try:
        text = Path(args.input).read_text()
    except FileNotFoundError:
        raise RuntimeFailure(f"input file not found: {args.input}")
    if not text.strip():
        raise UsageError(f"{args.input}: empty file, nothing to plot")
    out = Path(args.out)
    csv_path = out.with_suffix(".csv")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict) and doc.get("kind") == "response-grid":
        grid = grid_from_json(text)
        plot_grid(out, grid.mean, grid.config.amplitudes, grid.config.freq_bins, grid.config.target)
        csv_path.write_text(grid_to_csv(grid))
        print(f"heatmap -> {out}")
        return EXIT_OK
    _, records, _ = read_pair_file(args.input)
    records = [r for r in records if r.error is None]
    if args.id:
        records = [r for r in records if r.sample_id == args.id]
    if not records:
        raise UsageError(f"{args.input}: not a response grid and no usable pair records")
    rec = records[0]
    series = None
    if args.dataset:
        ds = _read_dataset(args.dataset)
        match = [s for s in ds if s.sample_id == rec.sample_id]
        series = match[0].values if match else None
    plot_pair(out, rec.time, rec.freq, series=series, title=f"{rec.sample_id} {rec.meta.get('method', '')}")
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["domain", "index", "score"])
        for i, v in enumerate(rec.time):
            w.writerow(["time", i, repr(float(v))])
        for i, v in enumerate(rec.freq):
            w.writerow(["frequency", i, repr(float(v))])
    print(f"pair plot of {rec.sample_id} -> {out}")
    return EXIT_OK


# -- argument parsing -------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="upcheck", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"upcheck {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate the synthetic dataset")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", help="train the fully-connected model")
    s.add_argument("--dataset", required=True)
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--task", choices=["classification", "regression"])
    s.add_argument("--metrics")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    for name, func, help_ in (("explain", cmd_explain, "write time/frequency attribution pairs"),
                              ("batch", cmd_batch, "explain + check every (group, method) cell")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--model", required=True)
        s.add_argument("--dataset", required=True)
        s.add_argument("--method", required=True, help="NAME[,NAME...]")
        s.add_argument("--config", help="JSON: {method: {option: value}}")
        s.add_argument("--groups", help="comma-separated validation groups (default: all)")
        s.add_argument("--limit", type=int, help="samples per group")
        s.add_argument("--out", required=True)
        if name == "batch":
            s.add_argument("--mode", choices=MODES, default="first-found")
            s.add_argument("--spectrum-layout", choices=LAYOUTS, default="half")
        s.set_defaults(func=func)

    s = sub.add_parser("check", help="detect uncertainty-principle violations in a pair file")
    s.add_argument("--pairs", required=True)
    s.add_argument("--mode", choices=MODES, default="first-found")
    s.add_argument("--spectrum-layout", choices=LAYOUTS, default="half")
    s.add_argument("--out")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("probe", help="frequency/amplitude response grid")
    s.add_argument("--model", required=True)
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--bins")
    s.add_argument("--amplitudes")
    s.add_argument("--target", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_probe)

    s = sub.add_parser("ablate", help="remove frequency bins and resynthesise")
    s.add_argument("--series", required=True)
    s.add_argument("--bins", default="")
    s.add_argument("--model")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ablate)

    s = sub.add_parser("plot", help="render a pair record or a response grid as SVG")
    s.add_argument("--input", required=True)
    s.add_argument("--id")
    s.add_argument("--dataset")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_plot)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"upcheck {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeFailure, OSError) as exc:
        print(f"upcheck {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
