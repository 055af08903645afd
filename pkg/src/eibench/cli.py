"""Command-line front end.

Exit codes: 0 success; 1 semantic failures (validation violations,
degenerate inputs, pairing mismatches, bad configs); 2 container or
filesystem problems (bad magic, truncation, missing files); 3 usage
errors. Output goes to stdout as JSON (default) or CSV where the result
is a table; diagnostics go to stderr. Identical arguments (seed
included) always produce byte-identical stdout.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    accuracy_predictor,
    dataset_centric_study,
    entry_from_pair,
    load_records,
    model_centric_study,
    rank_models,
    save_records,
    ModelRecord,
)
from .errors import (
    ConfigError,
    DegenerateInputError,
    FormatError,
    PairingMismatchError,
    ValidationFailure,
)
from .metrics import MEASURE_KINDS, rotation_ei, measure as run_measure
from .predstore import (
    FORMAT_VERSION,
    ROTATION_TAGS,
    TRANSFORM_TAGS,
    pair,
    read_predictions_file,
    validate,
)
from .imgxform import transform_dataset
from .synth import PopulationConfig, generate_population


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit_json(payload):
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")


def _emit_csv(rows):
    if not rows:
        return
    writer = csv.DictWriter(sys.stdout, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    writer.writerows(rows)


def _emit(args, payload, rows=None):
    if args.format == "csv":
        if rows is None:
            raise UsageError(f"{args.command}: csv output is not defined for this subcommand")
        _emit_csv(rows)
    else:
        _emit_json(payload)


def _cmd_transform(args):
    count = transform_dataset(
        args.input, args.tag, args.output,
        fail_fast=not args.skip_bad, threads=args.threads,
    )
    payload = {"tag": args.tag, "input": str(args.input), "output": str(args.output), "count": count}
    _emit(args, payload, rows=[payload])
    return 0


def _cmd_validate(args):
    reports = []
    any_bad = False
    for path in args.files:
        try:
            pset = read_predictions_file(path)
        except ValidationFailure as exc:
            any_bad = True
            reports.append({
                "file": str(path),
                "ok": False,
                "violations": exc.report.to_dict()["violations"],
            })
            continue
        report = validate(pset)
        reports.append({
            "file": str(path),
            "ok": report.ok,
            "violations": report.to_dict()["violations"],
            "model_id": pset.header.model_id,
            "dataset_id": pset.header.dataset_id,
            "transform": pset.header.transform,
            "num_samples": pset.header.num_samples,
            "num_classes": pset.header.num_classes,
            "has_labels": pset.header.has_labels,
        })
        any_bad = any_bad or not report.ok
    rows = [
        {"file": r["file"], "ok": r["ok"], "violations": len(r["violations"])}
        for r in reports
    ]
    _emit(args, {"files": reports}, rows=rows)
    return 1 if any_bad else 0


def _cmd_measure(args):
    original = read_predictions_file(args.orig)
    kinds = list(MEASURE_KINDS) if args.kind == "all" else [args.kind]
    results = []
    sets_by_tag = {}
    for tpath in str(args.trans).split(","):
        transformed = read_predictions_file(tpath)
        pp = pair(original, transformed)
        sets_by_tag[transformed.header.transform] = transformed
        for kind in kinds:
            if kind == "acc_diff" and not (
                original.header.has_labels and transformed.header.has_labels
            ):
                continue
            rec = run_measure(
                pp, kind,
                arithmetic=args.arithmetic_mean,
                confidence_source=args.confidence_source,
            )
            results.append(rec.to_dict())
    if "ei" in kinds and set(sets_by_tag) >= set(ROTATION_TAGS):
        rec = rotation_ei(
            original,
            *(sets_by_tag[t] for t in ROTATION_TAGS),
            arithmetic=args.arithmetic_mean,
        )
        results.append(rec.to_dict())
    if len(results) == 1:
        payload = results[0]
    else:
        payload = {
            "model_id": original.header.model_id,
            "dataset_id": original.header.dataset_id,
            "results": results,
        }
    _emit(args, payload, rows=results)
    return 0


def _points_csv_rows(report_dict):
    rows = []
    for p in report_dict["points"]:
        row = {"id": p["id"], "invariance": p["invariance"], "accuracy": p["accuracy"]}
        if "group_tag" in p:
            row["group_tag"] = p["group_tag"]
        rows.append(row)
    return rows


def _cmd_correlate(args):
    records = load_records(args.records)
    if args.group_by:
        records = [r for r in records if r.group_tag == args.group_by]
    if args.axis == "dataset":
        if not args.model:
            raise UsageError("correlate: --axis dataset requires --model")
        rec = next((r for r in records if r.model_id == args.model), None)
        if rec is None:
            raise DegenerateInputError(f"no record for model {args.model!r}")
        report = dataset_centric_study(
            rec, args.measure,
            resamples=args.resamples, level=args.level, seed=args.seed,
        )
    else:
        if not args.dataset:
            raise UsageError("correlate: --axis model requires --dataset")
        report = model_centric_study(
            records, args.dataset, args.measure,
            resamples=args.resamples, level=args.level, seed=args.seed,
        )
    payload = report.to_dict()
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        rows = _points_csv_rows(payload)
        with open(out.with_suffix(".points.csv"), "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    _emit(args, payload, rows=_points_csv_rows(payload))
    return 0


def _pick_record(records, model_id):
    if model_id is not None:
        rec = next((r for r in records if r.model_id == model_id), None)
        if rec is None:
            raise DegenerateInputError(f"no record for model {model_id!r}")
        return rec
    if len(records) != 1:
        raise UsageError(
            f"predict: {len(records)} records in the directory, pick one with --model"
        )
    return records[0]


def _cmd_predict(args):
    records = load_records(args.records)
    rec = _pick_record(records, args.model)
    train_ids = [t for t in str(args.train).split(",") if t]
    predictor = accuracy_predictor(
        rec, args.measure, train_ids,
        resamples=args.resamples, level=args.level, seed=args.seed,
    )
    entry = rec.entry_for(args.target)
    if entry is None or args.measure not in entry.scores:
        raise DegenerateInputError(
            f"record {rec.model_id!r} has no {args.measure!r} score on {args.target!r}"
        )
    pred = predictor.predict(entry.scores[args.measure], dataset_id=args.target)
    payload = {
        "prediction": pred.to_dict(),
        "predictor": {
            "measure": predictor.measure,
            "model_id": predictor.model_id,
            "train_ids": predictor.train_ids,
            "fit": predictor.fit.to_dict(),
            "residual_scale": predictor.residual_scale,
            "level": predictor.level,
        },
    }
    _emit(args, payload)
    return 0


def _cmd_rank(args):
    records = load_records(args.records)
    result = rank_models(records, args.dataset, args.measure, descending=not args.ascending)
    _emit(args, result, rows=result["ranking"])
    return 0


def _cmd_synth(args):
    cfg = PopulationConfig.from_json_file(args.config)
    if args.seed is not None:
        d = cfg.to_dict()
        d["seed"] = args.seed
        cfg = PopulationConfig.from_dict(d)
    pop = generate_population(cfg)
    count = pop.write_to_dir(args.out)
    records_dir = None
    if args.records:
        records = []
        for m in pop.models:
            entry = entry_from_pair(pair(m.original, m.transformed))
            records.append(ModelRecord(model_id=m.model_id, group_tag=m.group_tag, entries=[entry]))
        save_records(records, args.records)
        records_dir = str(args.records)
    payload = {
        "models": cfg.num_models,
        "num_samples": cfg.num_samples,
        "num_classes": cfg.num_classes,
        "seed": cfg.seed,
        "out": str(args.out),
        "files": count,
        "records": records_dir,
    }
    truth_rows = [m.truth for m in pop.models]
    _emit(args, payload, rows=truth_rows)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="eibench", description=__doc__)
    parser.add_argument(
        "--version", action="version",
        version=f"eibench {__version__} (prediction format v{FORMAT_VERSION})",
    )
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    # SUPPRESS keeps a post-subcommand --format from clobbering a pre-subcommand one
    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", parents=[fmt],
                       help="apply an image transform to a directory tree")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--tag", required=True, choices=TRANSFORM_TAGS)
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--skip-bad", action="store_true",
                   help="skip undecodable files instead of failing")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("validate", parents=[fmt], help="check prediction dumps and print a report")
    p.add_argument("files", nargs="+", type=Path)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("measure", parents=[fmt], help="score an original dump against transformed dumps")
    p.add_argument("--orig", required=True, type=Path)
    p.add_argument("--trans", required=True,
                   help="transformed dump path, or several comma-separated")
    p.add_argument("--kind", default="all", choices=("all",) + MEASURE_KINDS)
    p.add_argument("--arithmetic-mean", action="store_true",
                   help="arithmetic-mean confidence variant of the invariance score")
    p.add_argument("--confidence-source", default="transformed",
                   choices=("original", "transformed"))
    p.set_defaults(func=_cmd_measure)

    p = sub.add_parser("correlate", parents=[fmt], help="correlate a measure with accuracy across records")
    p.add_argument("--records", required=True, type=Path)
    p.add_argument("--measure", required=True, choices=MEASURE_KINDS)
    p.add_argument("--axis", default="model", choices=("model", "dataset"))
    p.add_argument("--dataset", help="dataset id (model axis)")
    p.add_argument("--model", help="model id (dataset axis)")
    p.add_argument("--group-by", help="restrict to records with this group tag")
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path,
                   help="also write the JSON report here plus a .points.csv beside it")
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("predict", parents=[fmt], help="predict held-out accuracy from an invariance score")
    p.add_argument("--records", required=True, type=Path)
    p.add_argument("--measure", required=True, choices=MEASURE_KINDS)
    p.add_argument("--train", required=True, help="comma-separated training dataset ids")
    p.add_argument("--target", required=True, help="dataset id to predict")
    p.add_argument("--model", help="record to use when the directory has several")
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("rank", parents=[fmt], help="rank models by a measure, no labels needed")
    p.add_argument("--records", required=True, type=Path)
    p.add_argument("--measure", required=True, choices=MEASURE_KINDS)
    p.add_argument("--dataset", required=True)
    p.add_argument("--ascending", action="store_true")
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("synth", parents=[fmt], help="generate a synthetic population of dump pairs")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--records", type=Path, help="also write score records here")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    except ValidationFailure as exc:
        print(f"validation failed:\n{exc.report}", file=sys.stderr)
        return 1
    except (PairingMismatchError, DegenerateInputError, ConfigError,
            ValueError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
