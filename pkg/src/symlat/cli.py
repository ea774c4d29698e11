"""Batch command-line front end.

Subcommands wire the library into reproducible on-disk runs:

    gen        write a synthetic dataset directory (optionally split)
    train      fit a model on train/valid splits and save it
    attribute  export per-time-point attributions for a dataset
    eval       auprc | occlusion | negmask reports
    ablate     pooling | gate | raw_z comparison tables

Every run writes a JSON snapshot of its resolved configuration next to
its outputs, and the sha256-derived hash of that configuration is
embedded in every artifact. Exit codes: 0 success, 1 usage error,
2 data error, 3 numeric failure. Logs go to stderr; machine-readable
output goes to files or stdout only.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
import types

import numpy as np

from . import attribution, datasets, evaluation, model

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    """Bad invocation: unknown flags, invalid values, missing arguments."""


class DataError(Exception):
    """Unreadable, inconsistent or already-existing on-disk artifacts."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the contract here
    # reserves 2 for data errors, so route them through UsageError.
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# run configuration plumbing


def canonical_json(doc):
    """Serialize with sorted keys and no whitespace so equal docs hash equal."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def config_hash(doc):
    """First 16 hex chars of the sha256 of the canonical JSON form."""
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()[:16]


def write_run_snapshot(doc, out_path, paths=None):
    """Drop run_config.json beside the outputs of a run.

    Directory outputs get the file inside; file outputs get a sibling
    named <stem>.run.json. Only the semantic configuration in doc is
    hashed; input/output locations go in the unhashed "paths" section so
    artifacts stay bit-identical when a run is repeated elsewhere.
    """
    if os.path.isdir(out_path):
        target = os.path.join(out_path, "run_config.json")
    else:
        target = os.path.splitext(out_path)[0] + ".run.json"
    body = dict(doc)
    if paths:
        body["paths"] = dict(paths)
    body["config_hash"] = config_hash(doc)
    with open(target, "w") as f:
        json.dump(body, f, indent=1, sort_keys=True)
        f.write("\n")
    return target


def _refuse_overwrite(path, force):
    if force:
        return
    if os.path.isdir(path) and os.listdir(path):
        raise DataError(f"{path} exists and is not empty; pass --force to overwrite")
    if os.path.isfile(path):
        raise DataError(f"{path} exists; pass --force to overwrite")


# ---------------------------------------------------------------------------
# model configuration resolution

PRESETS = {
    "freqsum": {
        "bins": 15,
        "latent_dim": 36,
        "segment_sizes": [7],
        "positional_encoding": False,
    },
    "seqcomb_uv": {
        "bins": 20,
        "latent_dim": 36,
        "segment_sizes": [4, 7],
        "positional_encoding": True,
    },
    "seqcomb_mv": {
        "bins": 10,
        "latent_dim": 36,
        "segment_sizes": [4, 7],
        "positional_encoding": True,
    },
    "lowvar": {
        "bins": 20,
        "latent_dim": 36,
        "segment_sizes": [4],
        "positional_encoding": False,
    },
    "farfield": {
        "bins": 8,
        "latent_dim": 64,
        "segment_sizes": [100],
        "positional_encoding": False,
    },
}

_MODEL_FIELD_NAMES = tuple(f.name for f in dataclasses.fields(model.ModelConfig))


def _add_model_flags(p):
    g = p.add_argument_group("model configuration")
    g.add_argument("--preset", choices=sorted(PRESETS))
    g.add_argument("--config", metavar="FILE", help="JSON file of model settings")
    g.add_argument("--bins", type=int)
    g.add_argument("--latent-dim", type=int)
    g.add_argument("--segment-sizes", type=_int_list, metavar="M[,M...]")
    g.add_argument("--positional-encoding", action=argparse.BooleanOptionalAction,
                   default=None)
    g.add_argument("--pooling", choices=model.POOLINGS)
    g.add_argument("--pool-window", type=int)
    g.add_argument("--bin-strategy", choices=("quantile", "uniform"))
    g.add_argument("--z-mode", choices=model.Z_MODES)
    g.add_argument("--learning-rate", type=float)
    g.add_argument("--batch-size", type=int)
    g.add_argument("--max-epochs", type=int)
    g.add_argument("--patience", type=int)
    g.add_argument("--seed", type=int)


def resolve_model_config(args):
    """defaults < preset < config file < explicit flags."""
    doc = {}
    if args.preset:
        doc.update(PRESETS[args.preset])
    if args.config:
        try:
            with open(args.config) as f:
                loaded = json.load(f)
        except OSError as e:
            raise UsageError(f"cannot read config file: {e}")
        except json.JSONDecodeError as e:
            raise UsageError(f"config file is not valid JSON: {e}")
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        doc.update(loaded)
    for name in _MODEL_FIELD_NAMES:
        value = getattr(args, name, None)
        if value is not None:
            doc[name] = value
    unknown = set(doc) - set(_MODEL_FIELD_NAMES)
    if unknown:
        raise UsageError(f"unknown model settings: {sorted(unknown)}")
    try:
        return model.ModelConfig(**doc)
    except (TypeError, ValueError) as e:
        raise UsageError(str(e))


def _int_list(text):
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _load_dataset(path):
    if not os.path.isdir(path):
        raise DataError(f"{path} is not a dataset directory")
    return datasets.load_dataset(path)


def _load_model(path):
    loaded = model.load_model(path)
    return loaded


def _check_shapes(params, dataset, what):
    if dataset.length != params.length or dataset.n_variates != params.n_variates:
        raise DataError(
            f"{what}: model expects L={params.length}, v={params.n_variates} "
            f"but dataset has L={dataset.length}, v={dataset.n_variates}"
        )


# ---------------------------------------------------------------------------
# gen

_GEN_PARAM_FLAGS = {
    "freqsum": {"length": "length", "variates": "n_variates", "window": "signal_window"},
    "seqcomb_uv": {"length": "length", "window": "window", "noise": "noise_sigma"},
    "seqcomb_mv": {"length": "length", "variates": "n_variates", "window": "window",
                   "noise": "noise_sigma"},
    "lowvar": {"length": "length", "window": "window"},
    "farfield": {"length": "length", "noise": "noise_scale"},
}


def cmd_gen(args):
    mapping = _GEN_PARAM_FLAGS[args.generator]
    params = {}
    for flag, kwarg in mapping.items():
        value = getattr(args, flag)
        if value is not None:
            params[kwarg] = value
    for flag in ("length", "variates", "window", "noise"):
        if getattr(args, flag) is not None and flag not in mapping:
            raise UsageError(f"generator {args.generator!r} does not accept --{flag}")

    if args.split is not None:
        if args.n is not None:
            raise UsageError("--n and --split are mutually exclusive")
        counts = args.split
        if len(counts) != 3 or any(c < 1 for c in counts):
            raise UsageError("--split needs three positive counts: train,valid,test")
        total = sum(counts)
    else:
        if args.n is None:
            raise UsageError("pass --n or --split")
        if args.n < 1:
            raise UsageError("--n must be positive")
        total = args.n

    doc = {
        "command": "gen",
        "generator": args.generator,
        "n_samples": total,
        "seed": args.seed,
        "params": params,
        "split": list(args.split) if args.split is not None else None,
    }
    run_hash = config_hash(doc)

    _refuse_overwrite(args.out, args.force)
    try:
        ds = datasets.generate(args.generator, total, args.seed, **params)
    except ValueError as e:
        raise UsageError(str(e))

    os.makedirs(args.out, exist_ok=True)
    if args.split is None:
        datasets.save_dataset(ds, args.out, extra_meta={"config_hash": run_hash})
        logger.info("wrote %d samples to %s", total, args.out)
    else:
        start = 0
        for name, count in zip(("train", "valid", "test"), counts):
            part = _slice_dataset(ds, start, start + count, name)
            datasets.save_dataset(
                part, os.path.join(args.out, name),
                extra_meta={"config_hash": run_hash},
            )
            logger.info("wrote %d samples to %s", count, os.path.join(args.out, name))
            start += count
    write_run_snapshot(doc, args.out)
    return EXIT_OK


def _slice_dataset(ds, a, b, split_name):
    provenance = dict(ds.provenance)
    provenance["split"] = split_name
    provenance["index_range"] = [a, b]
    return datasets.TimeSeriesDataset(
        x=ds.x[a:b],
        y=ds.y[a:b],
        mask=None if ds.mask is None else ds.mask[a:b],
        provenance=provenance,
    )


# ---------------------------------------------------------------------------
# train


def _resolve_split_dirs(args):
    train_dir = args.train or (os.path.join(args.data, "train") if args.data else None)
    valid_dir = args.valid or (os.path.join(args.data, "valid") if args.data else None)
    if not train_dir or not valid_dir:
        raise UsageError("pass --data DIR (with train/ and valid/) or --train and --valid")
    return train_dir, valid_dir


def cmd_train(args):
    train_dir, valid_dir = _resolve_split_dirs(args)
    config = resolve_model_config(args)
    train_ds = _load_dataset(train_dir)
    valid_ds = _load_dataset(valid_dir)
    if train_ds.n_variates != valid_ds.n_variates or train_ds.length != valid_ds.length:
        raise DataError("train and valid splits disagree on L or v")

    doc = {
        "command": "train",
        "config": dataclasses.asdict(config),
    }
    doc["config"]["segment_sizes"] = list(config.segment_sizes)
    run_hash = config_hash(doc)

    _refuse_overwrite(args.out, args.force)
    try:
        params, history = model.train(
            train_ds.x, train_ds.y, valid_ds.x, valid_ds.y, config
        )
    except ValueError as e:
        raise DataError(str(e))
    model.save_model(
        params, args.out,
        extra_meta={"config_hash": run_hash},
        history=history,
    )
    write_run_snapshot(doc, args.out, paths={"train": train_dir, "valid": valid_dir})
    best = max(row["best_val_accuracy"] for row in history)
    logger.info("saved model to %s (best validation accuracy %.4f)", args.out, best)
    return EXIT_OK


# ---------------------------------------------------------------------------
# attribute


def _resolve_attr_config(args):
    try:
        return attribution.AttributionConfig(
            gate=args.gate,
            max_scaling=args.max_scaling,
            reduction=args.reduction,
            target=args.target,
        )
    except ValueError as e:
        raise UsageError(str(e))


def _stored_model_hash(model_dir):
    try:
        with open(os.path.join(model_dir, "model.json")) as f:
            return json.load(f).get("config_hash")
    except (OSError, json.JSONDecodeError):
        return None


def cmd_attribute(args):
    params = _load_model(args.model)
    model_hash = _stored_model_hash(args.model)
    ds = _load_dataset(args.data)
    _check_shapes(params, ds, "attribute")
    attr_config = _resolve_attr_config(args)

    doc = {
        "command": "attribute",
        "model_config_hash": model_hash,
        "gate": attr_config.gate,
        "max_scaling": attr_config.max_scaling,
        "reduction": attr_config.reduction,
        "target": attr_config.target,
    }
    run_hash = config_hash(doc)

    _refuse_overwrite(args.out, args.force)
    results = attribution.attribute_dataset(ds.x, params, attr_config, jobs=args.jobs)
    attribution.write_attributions(
        results, args.out,
        header_meta={
            "config_hash": run_hash,
            "n_samples": ds.n_samples,
            "length": ds.length,
            "gate": attr_config.gate,
            "max_scaling": attr_config.max_scaling,
            "reduction": attr_config.reduction,
        },
    )
    write_run_snapshot(doc, args.out, paths={"model": args.model, "data": args.data})
    logger.info("wrote attributions for %d samples to %s", ds.n_samples, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval


def _read_attr_file(path, dataset, what):
    if not os.path.isfile(path):
        raise DataError(f"{what}: {path} is not a file")
    try:
        table = attribution.read_attributions(path)
    except ValueError as e:
        raise DataError(f"{what}: {e}")
    if table["phi_pos"].shape != (dataset.n_samples, dataset.length):
        raise DataError(
            f"{what}: attribution table shape {table['phi_pos'].shape} does not "
            f"match dataset ({dataset.n_samples}, {dataset.length})"
        )
    return table


def cmd_eval_auprc(args):
    ds = _load_dataset(args.data)
    if ds.mask is None:
        raise DataError(f"{args.data} carries no ground-truth saliency mask")
    if args.scores == "random":
        scores = evaluation.random_scores(args.scores_seed, ds.n_samples, ds.length)
    else:
        table = _read_attr_file(args.attributions, ds, "eval auprc")
        scores = table[args.scores]
    mean, per_sample, n_skipped = evaluation.auprc_dataset(scores, ds.mask)

    doc = {
        "command": "eval_auprc",
        "scores": args.scores,
        "scores_seed": args.scores_seed,
    }
    print(f"mean_auprc={mean:.6f}")
    print(f"n_skipped={n_skipped}")
    if args.out:
        _refuse_overwrite(args.out, args.force)
        with open(args.out, "w") as f:
            json.dump({
                "config_hash": config_hash(doc),
                "mean_auprc": mean,
                "n_skipped": n_skipped,
                "n_samples": ds.n_samples,
                "per_sample": [None if np.isnan(v) else float(v) for v in per_sample],
            }, f, indent=1)
            f.write("\n")
        write_run_snapshot(doc, args.out,
                           paths={"data": args.data, "attributions": args.attributions})
    return EXIT_OK


def cmd_eval_occlusion(args):
    if not args.data:
        raise UsageError("eval occlusion needs --data DIR with train/valid/test")
    splits = {}
    for name in ("train", "valid", "test"):
        splits[name] = _load_dataset(os.path.join(args.data, name))

    config = resolve_model_config(args)
    if args.scores == "random":
        scores = {
            name: evaluation.random_scores(args.scores_seed, ds.n_samples, ds.length)
            for name, ds in splits.items()
        }
        attr_paths = None
    else:
        attr_paths = {
            "train": args.attr_train, "valid": args.attr_valid, "test": args.attr_test,
        }
        if not all(attr_paths.values()):
            raise UsageError(
                "eval occlusion needs --attr-train/--attr-valid/--attr-test "
                "(or --scores random)"
            )
        scores = {
            name: _read_attr_file(attr_paths[name], splits[name],
                                  f"eval occlusion {name}")["phi_pos"]
            for name in splits
        }

    u_grid = tuple(args.u) if args.u else evaluation.DEFAULT_U_GRID
    doc = {
        "command": "eval_occlusion",
        "scores": args.scores,
        "scores_seed": args.scores_seed,
        "config": dataclasses.asdict(config),
        "u_grid": list(u_grid),
        "trials": args.trials,
    }
    doc["config"]["segment_sizes"] = list(config.segment_sizes)
    run_hash = config_hash(doc)

    _refuse_overwrite(args.out_csv, args.force)
    _refuse_overwrite(args.out_summary, args.force)
    report = evaluation.occlusion_curve(
        splits["train"], splits["valid"], splits["test"], scores, config,
        u_grid=u_grid, trials=args.trials, jobs=args.jobs,
    )
    evaluation.write_occlusion_report(
        report, args.out_csv, args.out_summary,
        extra_meta={"config_hash": run_hash},
    )
    write_run_snapshot(doc, args.out_csv,
                       paths={"data": args.data, "attributions": attr_paths})
    if any(u <= 20 for u in u_grid):
        print(f"integral_20={report.integral(20):.6f}")
    print(f"integral_full={report.integral(max(u_grid)):.6f}")
    return EXIT_OK


def cmd_eval_negmask(args):
    params = _load_model(args.model)
    ds = _load_dataset(args.data)
    _check_shapes(params, ds, "eval negmask")
    table = _read_attr_file(args.attributions, ds, "eval negmask")
    rows = [
        types.SimpleNamespace(phi_pos=table["phi_pos"][i], phi_neg=table["phi_neg"][i])
        for i in range(ds.n_samples)
    ]
    u_list = tuple(args.u) if args.u else (2, 5)
    report = evaluation.delta_logit_neg(params, ds, rows, u_list=u_list)

    doc = {
        "command": "eval_negmask",
        "model_config_hash": _stored_model_hash(args.model),
        "u": list(u_list),
    }
    summary = report.summary()
    for u in u_list:
        stats = summary[str(u)]
        print(f"delta_logit_u{u}_mean={stats['mean']:.6f}")
        print(f"delta_logit_u{u}_std={stats['std']:.6f}")
    print(f"n_fallback={report.n_fallback}")
    if args.out:
        _refuse_overwrite(args.out, args.force)
        with open(args.out, "w") as f:
            json.dump({
                "config_hash": config_hash(doc),
                "deltas": summary,
                "n_fallback": report.n_fallback,
            }, f, indent=1)
            f.write("\n")
        write_run_snapshot(doc, args.out, paths={
            "model": args.model, "data": args.data,
            "attributions": args.attributions,
        })
    return EXIT_OK


# ---------------------------------------------------------------------------
# ablate

_GATE_VARIANTS = (
    ("relu_max_scaling", {"gate": "relu", "max_scaling": True}),
    ("relu_no_max_scaling", {"gate": "relu", "max_scaling": False}),
    ("sigmoid", {"gate": "sigmoid", "max_scaling": True}),
    ("tanh", {"gate": "tanh", "max_scaling": True}),
    ("identity", {"gate": "identity", "max_scaling": True}),
)


def _train_and_score(config, splits, attr_config, jobs=1):
    """Train on train/valid, return (test accuracy, mean AUPRC or nan)."""
    params, _ = model.train(
        splits["train"].x, splits["train"].y,
        splits["valid"].x, splits["valid"].y, config,
    )
    return params, _score_model(params, splits["test"], attr_config, jobs=jobs)


def _score_model(params, test_ds, attr_config, jobs=1):
    acc = model.accuracy(test_ds.x, test_ds.y, params)
    if test_ds.mask is None:
        return acc, float("nan"), 0
    results = attribution.attribute_dataset(test_ds.x, params, attr_config, jobs=jobs)
    phi_pos = np.stack([r.phi_pos for r in results])
    mean, _, n_skipped = evaluation.auprc_dataset(phi_pos, test_ds.mask)
    return acc, mean, n_skipped


def _write_ablation_table(path, study, run_hash, rows):
    with open(path, "w") as f:
        f.write(f"# config_hash={run_hash}\n")
        f.write(f"# study={study}\n")
        f.write("variant,test_accuracy,mean_auprc,n_skipped\n")
        for name, acc, auprc_mean, n_skipped in rows:
            f.write(f"{name},{acc:.6f},{auprc_mean:.6f},{n_skipped}\n")


def cmd_ablate(args):
    if not args.data:
        raise UsageError("ablate needs --data DIR with train/valid/test")
    splits = {
        name: _load_dataset(os.path.join(args.data, name))
        for name in ("train", "valid", "test")
    }
    base_config = resolve_model_config(args)
    default_attr = attribution.AttributionConfig()

    doc = {
        "command": "ablate",
        "study": args.study,
        "config": dataclasses.asdict(base_config),
    }
    doc["config"]["segment_sizes"] = list(base_config.segment_sizes)
    run_hash = config_hash(doc)
    _refuse_overwrite(args.out, args.force)

    rows = []
    if args.study == "pooling":
        for variant in ("avg", "max", "none"):
            config = dataclasses.replace(base_config, pooling=variant)
            logger.info("ablate pooling: training variant %r", variant)
            _, scored = _train_and_score(config, splits, default_attr, jobs=args.jobs)
            rows.append((variant, *scored))
    elif args.study == "gate":
        if args.model:
            params = _load_model(args.model)
            _check_shapes(params, splits["test"], "ablate gate")
        else:
            logger.info("ablate gate: training shared model")
            params, _ = model.train(
                splits["train"].x, splits["train"].y,
                splits["valid"].x, splits["valid"].y, base_config,
            )
        for name, overrides in _GATE_VARIANTS:
            attr_config = attribution.AttributionConfig(**overrides)
            logger.info("ablate gate: scoring variant %r", name)
            rows.append((name, *_score_model(params, splits["test"], attr_config,
                                             jobs=args.jobs)))
    else:  # raw_z
        for variant, z_mode in (("symbolic", "symbolic"), ("raw", "raw_projection")):
            config = dataclasses.replace(base_config, z_mode=z_mode)
            logger.info("ablate raw_z: training variant %r", variant)
            _, scored = _train_and_score(config, splits, default_attr, jobs=args.jobs)
            rows.append((variant, *scored))

    _write_ablation_table(args.out, args.study, run_hash, rows)
    write_run_snapshot(doc, args.out, paths={"data": args.data, "model": args.model})
    for name, acc, auprc_mean, _ in rows:
        print(f"{name}\taccuracy={acc:.4f}\tauprc={auprc_mean:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser():
    parser = _Parser(prog="symlat",
                     description="Symbolic-latent time-series classification "
                                 "with per-time-point attribution.")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="debug-level logs on stderr")
    parser.add_argument("-q", "--quiet", action="store_true",
                        help="warnings and errors only")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("generator", choices=sorted(datasets.GENERATORS))
    p.add_argument("--n", type=int, help="total sample count (flat directory)")
    p.add_argument("--split", type=_int_list, metavar="TRAIN,VALID,TEST",
                   help="write train/valid/test subdirectories instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--length", type=int)
    p.add_argument("--variates", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a model on train/valid splits")
    p.add_argument("--data", help="directory holding train/ and valid/")
    p.add_argument("--train", help="explicit train split directory")
    p.add_argument("--valid", help="explicit valid split directory")
    p.add_argument("--out", required=True, help="model directory to write")
    p.add_argument("--force", action="store_true")
    _add_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attribute", help="export attributions for a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="CSV file to write")
    p.add_argument("--gate", choices=attribution.GATES, default="relu")
    p.add_argument("--max-scaling", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--reduction", choices=attribution.REDUCTIONS, default="mean")
    p.add_argument("--target", type=int, default=None,
                   help="fixed target class (default: per-sample prediction)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("eval", help="evaluation reports")
    esub = p.add_subparsers(dest="mode", required=True)

    e = esub.add_parser("auprc", help="attribution AUPRC against the saliency mask")
    e.add_argument("--data", required=True)
    e.add_argument("--attributions", help="attribution CSV (for phi scores)")
    e.add_argument("--scores", choices=("phi_pos", "phi_neg", "random"),
                   default="phi_pos")
    e.add_argument("--scores-seed", type=int, default=0)
    e.add_argument("--out", help="optional JSON report")
    e.add_argument("--force", action="store_true")
    e.set_defaults(func=_require_attr_unless_random(cmd_eval_auprc))

    e = esub.add_parser("occlusion", help="retraining occlusion curve e(u) and I(U)")
    e.add_argument("--data", required=True, help="directory with train/valid/test")
    e.add_argument("--attr-train")
    e.add_argument("--attr-valid")
    e.add_argument("--attr-test")
    e.add_argument("--scores", choices=("phi_pos", "random"), default="phi_pos")
    e.add_argument("--scores-seed", type=int, default=0)
    e.add_argument("--u", type=_int_list, metavar="U[,U...]")
    e.add_argument("--trials", type=int, default=1)
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--out-csv", required=True)
    e.add_argument("--out-summary", required=True)
    e.add_argument("--force", action="store_true")
    _add_model_flags(e)
    e.set_defaults(func=cmd_eval_occlusion)

    e = esub.add_parser("negmask", help="logit change after masking opposing points")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--attributions", required=True)
    e.add_argument("--u", type=_int_list, metavar="U[,U...]")
    e.add_argument("--out", help="optional JSON report")
    e.add_argument("--force", action="store_true")
    e.set_defaults(func=cmd_eval_negmask)

    p = sub.add_parser("ablate", help="train and compare configuration variants")
    p.add_argument("study", choices=("pooling", "gate", "raw_z"))
    p.add_argument("--data", required=True, help="directory with train/valid/test")
    p.add_argument("--model", help="gate study only: reuse a trained model")
    p.add_argument("--out", required=True, help="comparison CSV to write")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--force", action="store_true")
    _add_model_flags(p)
    p.set_defaults(func=cmd_ablate)

    return parser


def _require_attr_unless_random(func):
    def wrapped(args):
        if args.scores != "random" and not args.attributions:
            raise UsageError("pass --attributions (or --scores random)")
        return func(args)
    return wrapped


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        level = logging.INFO
        if args.verbose:
            level = logging.DEBUG
        elif args.quiet:
            level = logging.WARNING
        logging.basicConfig(stream=sys.stderr, level=level,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, datasets.DatasetFormatError, model.ModelFormatError,
            FileNotFoundError, NotADirectoryError, PermissionError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (model.TrainingDiverged, FloatingPointError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
