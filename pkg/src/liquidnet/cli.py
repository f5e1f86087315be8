"""Command-line entry point: train, eval, count-params, check, parse-descriptor, gen-data.

Exit codes: 0 success, 1 runtime failure (divergence, missing data, a
verification suite that fails), 2 configuration errors (bad descriptor,
unknown suite, invalid sizes). Flags beat values from ``--config file.json``,
which beat built-in defaults; the fully resolved configuration is echoed
into every artifact a command writes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from .analysis import matching_neural_size, run_suite
from .data import (
    SYNTHETIC_TASKS,
    Split,
    Standardizer,
    gen_synthetic,
    load_rollouts,
    make_windows,
    save_rollout_csv,
    split,
)
from .descriptor import parse as parse_descriptor
from .descriptor import render, to_model_spec
from .models import ModelSpec, count_params, load_checkpoint, save_checkpoint
from .training import evaluate, train

__all__ = ["main"]

_TASK_ALIASES = {
    "synthetic-oscillator": "damped-oscillator",
    "synthetic-pendulum": "driven-pendulum",
}

_TRAIN_DEFAULTS: Dict = {
    "descriptor": None,
    "neurons": 8,
    "outputs": None,  # inferred from the targets unless pinned
    "dt": 0.1,
    "unfolds": 10,
    "task": "synthetic-oscillator",
    "data": None,
    "objective": "predict",
    "rollouts": 12,
    "length": 80,
    "noise": 0.01,
    "window": 10,
    "standardize": True,
    "test_fraction": 0.15,
    "val_fraction": 0.10,
    "epochs": 10,
    "lr": 1e-3,
    "batch_size": 32,
    "seed": 0,
    "out": "liquidnet-run",
}


class _ConfigError(Exception):
    """Invalid flags, descriptors, or sizes; maps to exit code 2."""


class _RunError(Exception):
    """Failures while doing the work; maps to exit code 1."""


def _resolve(args: argparse.Namespace, defaults: Dict) -> Dict:
    """flags > --config file > defaults, for every known option."""
    from_file: Dict = {}
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            from_file = json.loads(Path(config_path).read_text())
        except FileNotFoundError:
            raise _RunError(f"config file not found: {config_path}")
        except json.JSONDecodeError as err:
            raise _ConfigError(f"config file {config_path} is not valid JSON: {err}")
        unknown = set(from_file) - set(defaults)
        if unknown:
            raise _ConfigError(f"config file has unknown keys: {sorted(unknown)}")
    resolved = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in from_file:
            resolved[key] = from_file[key]
        else:
            resolved[key] = default
    return resolved


def _load_windows(cfg: Dict):
    """Rollouts -> windows -> rollout-granularity splits, per the config."""
    task = cfg["task"]
    objective = {"predict": "predict-next-observation", "clone": "behavioural-cloning"}.get(
        cfg["objective"]
    )
    if objective is None:
        raise _ConfigError(f"unknown objective {cfg['objective']!r}, expected predict or clone")
    if cfg["data"]:
        rollouts = load_rollouts(cfg["data"])
    elif task in _TASK_ALIASES or task in SYNTHETIC_TASKS:
        rollouts = gen_synthetic(
            _TASK_ALIASES.get(task, task),
            n_rollouts=cfg["rollouts"],
            length=cfg["length"],
            seed=cfg["seed"],
            noise=cfg["noise"],
        )
    else:
        raise _ConfigError(
            f"unknown task {task!r}: use one of {sorted(_TASK_ALIASES)} or pass --data DIR"
        )
    windows = make_windows(rollouts, window=cfg["window"], task=objective)
    parts = split(
        windows,
        test_fraction=cfg["test_fraction"],
        val_fraction=cfg["val_fraction"],
        seed=cfg["seed"],
    )
    # Zero-mean unit-variance scaling, fitted on the train split only.
    # Refitting is deterministic for a fixed config, so eval reproduces
    # the exact transform of the training run without extra state.
    scaler = None
    if cfg["standardize"] and not parts.train.classification:
        scaler = Standardizer.fit(parts.train)
        parts = Split(
            train=scaler.apply(parts.train),
            val=scaler.apply(parts.val),
            test=scaler.apply(parts.test),
            manifest=parts.manifest,
        )
    return parts, scaler


def _build_spec(cfg: Dict, n_inputs: int, n_outputs: int):
    if not cfg["descriptor"]:
        raise _ConfigError("a --descriptor is required (e.g. ctrnn_vsigm+s_synaptic)")
    try:
        d = parse_descriptor(cfg["descriptor"])
        return d, to_model_spec(
            d,
            n_neurons=cfg["neurons"],
            n_inputs=n_inputs,
            n_outputs=n_outputs,
            dt=cfg["dt"],
            unfolds=cfg["unfolds"],
        )
    except ValueError as err:
        raise _ConfigError(str(err))


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = _resolve(args, _TRAIN_DEFAULTS)
    parts, scaler = _load_windows(cfg)
    n_inputs = parts.train.inputs.shape[2]
    n_outputs = cfg["outputs"] or parts.train.targets.shape[1]
    descriptor, spec = _build_spec(cfg, n_inputs, n_outputs)

    result = train(
        spec,
        parts.train,
        parts.val,
        parts.test,
        epochs=cfg["epochs"],
        seed=cfg["seed"],
        lr=cfg["lr"],
        batch_size=cfg["batch_size"],
        descriptor=render(descriptor),
    )
    report = result.report

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.json").write_text(json.dumps(cfg, indent=2))
    (out / "report.json").write_text(
        json.dumps({"config": cfg, **report.to_dict()}, indent=2)
    )
    report.save_losses_csv(out / "losses.csv")
    save_checkpoint(result.params, out / "checkpoint.json")
    (out / "split_manifest.json").write_text(
        json.dumps({"config": cfg, **parts.manifest}, indent=2)
    )
    if scaler is not None:
        (out / "standardizer.json").write_text(json.dumps(scaler.to_dict(), indent=2))

    if report.diverged_at_epoch is not None:
        print(f"diverged at epoch {report.diverged_at_epoch}; artifacts in {out}", file=sys.stderr)
        return 1
    last = report.train_loss[-1] if report.train_loss else float("nan")
    val = next((v for v in reversed(report.val_loss) if v is not None), None)
    extra = f" val {val:.6g}" if val is not None else ""
    print(f"trained {report.epochs_run} epochs: train {last:.6g}{extra}; artifacts in {out}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    # A checkpoint written by `train` sits next to resolved_config.json;
    # use that as the base layer so a bare `eval run/checkpoint.json`
    # regenerates the exact data the run trained on. Flags and --config
    # still override it.
    base = dict(_TRAIN_DEFAULTS)
    sibling = Path(args.checkpoint).parent / "resolved_config.json"
    if sibling.exists():
        try:
            stored = json.loads(sibling.read_text())
        except json.JSONDecodeError as err:
            raise _ConfigError(f"{sibling} is not valid JSON: {err}")
        base.update({k: v for k, v in stored.items() if k in _TRAIN_DEFAULTS})
    cfg = _resolve(args, base)
    try:
        params = load_checkpoint(args.checkpoint)
    except FileNotFoundError:
        raise _RunError(f"checkpoint not found: {args.checkpoint}")
    except ValueError as err:
        raise _ConfigError(str(err))
    parts, _ = _load_windows(cfg)
    batch = {"train": parts.train, "val": parts.val, "test": parts.test}[args.split]
    if batch.size == 0:
        raise _RunError(f"the {args.split} split is empty for this configuration")
    metrics = evaluate(params.spec, params, batch)
    print(json.dumps({"config": cfg, "split": args.split, "metrics": metrics}, indent=2))
    return 0


def _cmd_count_params(args: argparse.Namespace) -> int:
    cfg = _resolve(
        args,
        {
            "descriptor": None,
            "family": None,
            "wiring": "synaptic",
            "activation": None,
            "input_mode": None,
            "neurons": 8,
            "inputs": None,
            "outputs": 1,
        },
    )
    try:
        if cfg["descriptor"]:
            d = parse_descriptor(cfg["descriptor"])
            n_inputs = 1 if cfg["inputs"] is None else cfg["inputs"]
            spec = to_model_spec(
                d, n_neurons=cfg["neurons"], n_inputs=n_inputs, n_outputs=cfg["outputs"]
            )
            label = render(d)
        elif cfg["family"]:
            n_inputs = 0 if cfg["inputs"] is None else cfg["inputs"]
            spec = ModelSpec(
                family=cfg["family"],
                wiring=cfg["wiring"],
                activation=cfg["activation"] or ("sigmoid" if cfg["family"] == "ltc" else "tanh"),
                n_neurons=cfg["neurons"],
                input_mode=cfg["input_mode"] or ("none" if n_inputs == 0 else "synaptic"),
                n_inputs=n_inputs,
                n_outputs=cfg["outputs"],
            )
            label = f"{spec.family}/{spec.wiring}/{spec.input_mode}"
        else:
            raise _ConfigError("pass --descriptor or --family")
    except ValueError as err:
        raise _ConfigError(str(err))
    count = count_params(spec)
    line = f"{label} neurons={spec.n_neurons} inputs={spec.n_inputs}: {count} parameters"
    if args.compare_na:
        twin = matching_neural_size(spec.family, spec.input_mode, count)
        line += f" (per-neuron twin reaching it: n={twin})"
    print(line)
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    result = run_suite(args.suite)
    print(json.dumps(result, indent=2))
    return 0 if result["passed"] else 1


def _cmd_parse_descriptor(args: argparse.Namespace) -> int:
    try:
        d = parse_descriptor(args.descriptor)
    except ValueError as err:
        raise _ConfigError(str(err))
    doc = {
        "descriptor": args.descriptor,
        "canonical": render(d),
        "w_mode": d.w_mode,
        "activation": d.act,
        "factor": d.factor,
        "recurrence": d.rec_type,
        "input_mode": d.in_mode,
        "learnable_rest": d.lis,
        "family": "ltc" if d.factor == "plus" else "ct-rnn",
    }
    if args.neurons:
        try:
            spec = to_model_spec(d, n_neurons=args.neurons, n_inputs=args.inputs)
        except ValueError as err:
            raise _ConfigError(str(err))
        doc["parameters"] = count_params(spec)
    print(json.dumps(doc, indent=2))
    return 0


def _cmd_gen_data(args: argparse.Namespace) -> int:
    defaults = {
        "task": "synthetic-oscillator",
        "rollouts": 10,
        "length": 100,
        "seed": 0,
        "noise": 0.01,
        "out": "rollouts",
    }
    cfg = _resolve(args, defaults)
    task = _TASK_ALIASES.get(cfg["task"], cfg["task"])
    if task not in SYNTHETIC_TASKS:
        raise _ConfigError(
            f"unknown task {cfg['task']!r}, expected one of {sorted(_TASK_ALIASES)}"
        )
    rollouts = gen_synthetic(
        task,
        n_rollouts=cfg["rollouts"],
        length=cfg["length"],
        seed=cfg["seed"],
        noise=cfg["noise"],
    )
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    for i, ro in enumerate(rollouts):
        save_rollout_csv(ro, out / f"rollout_{i:03d}.csv")
    (out / "gen_config.json").write_text(json.dumps(cfg, indent=2))
    print(f"wrote {len(rollouts)} rollouts of length {cfg['length']} to {out}")
    return 0


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with defaults for any flag")
    p.add_argument("--descriptor", help="model descriptor, e.g. ctrnn_vsigm+s_synaptic")
    p.add_argument("--neurons", type=int)
    p.add_argument("--outputs", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--unfolds", type=int)
    p.add_argument("--task", help="synthetic-oscillator, synthetic-pendulum, or with --data a window objective")
    p.add_argument("--data", help="directory of rollout CSV files instead of a synthetic task")
    p.add_argument("--objective", choices=("predict", "clone"))
    p.add_argument("--rollouts", type=int)
    p.add_argument("--length", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--window", type=int)
    p.add_argument(
        "--standardize",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="zero-mean unit-variance scaling fitted on the train split (regression only; on by default)",
    )
    p.add_argument("--test-fraction", dest="test_fraction", type=float)
    p.add_argument("--val-fraction", dest="val_fraction", type=float)
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liquidnet",
        description="continuous-time recurrent networks: train, verify, inspect",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model and write run artifacts")
    _add_train_flags(p_train)
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--lr", type=float)
    p_train.add_argument("--batch-size", dest="batch_size", type=int)
    p_train.add_argument("--out", help="artifact directory")
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser(
        "eval",
        help="evaluate a checkpoint on a data split "
        "(data defaults come from the run's resolved_config.json when present)",
    )
    p_eval.add_argument("checkpoint")
    p_eval.add_argument("--split", choices=("train", "val", "test"), default="test")
    _add_train_flags(p_eval)
    p_eval.set_defaults(func=_cmd_eval)

    p_count = sub.add_parser("count-params", help="parameter count for a model variant")
    p_count.add_argument("--config", help="JSON file with defaults for any flag")
    p_count.add_argument("--descriptor")
    p_count.add_argument("--family", choices=("neural-ode", "anode", "act-rnn", "ct-rnn", "ltc"))
    p_count.add_argument("--wiring", choices=("synaptic", "neural"))
    p_count.add_argument("--activation", choices=("sigmoid", "tanh"))
    p_count.add_argument("--input-mode", dest="input_mode", choices=("none", "linear", "synaptic"))
    p_count.add_argument("--neurons", type=int)
    p_count.add_argument("--inputs", type=int)
    p_count.add_argument("--outputs", type=int)
    p_count.add_argument("--compare-na", action="store_true",
                         help="also print the smallest per-neuron twin reaching the count")
    p_count.set_defaults(func=_cmd_count_params)

    p_check = sub.add_parser("check", help="run a verification suite")
    p_check.add_argument("suite", choices=("packing", "theorems", "gradients", "descriptor", "all"))
    p_check.set_defaults(func=_cmd_check)

    p_parse = sub.add_parser("parse-descriptor", help="explain a descriptor string")
    p_parse.add_argument("descriptor")
    p_parse.add_argument("--neurons", type=int, default=0)
    p_parse.add_argument("--inputs", type=int, default=1)
    p_parse.set_defaults(func=_cmd_parse_descriptor)

    p_gen = sub.add_parser("gen-data", help="write synthetic rollout CSV files")
    p_gen.add_argument("--config", help="JSON file with defaults for any flag")
    p_gen.add_argument("--task")
    p_gen.add_argument("--rollouts", type=int)
    p_gen.add_argument("--length", type=int)
    p_gen.add_argument("--seed", type=int)
    p_gen.add_argument("--noise", type=float)
    p_gen.add_argument("--out")
    p_gen.set_defaults(func=_cmd_gen_data)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except _RunError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
