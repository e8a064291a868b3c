"""Command-line pipeline: simulate, inject, extract, train, eval, detect.

Exit codes: 0 ok/clean, 2 usage or input error, 3 contract violation
(non-normal training rows), 4 anomaly detected. Every command is
deterministic given its config and seed. A flat ``key = value`` config file
can supply any flag; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import canlog, features, simulate
from .evaluate import evaluate, write_report_table
from .models import KernelSpec, fit_model, load_model, save_model, score_samples
from .models.persist import model_tag

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONTRACT = 3
EXIT_ANOMALY = 4


class ContractViolation(Exception):
    pass


def load_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno} is not 'key = value': {raw.rstrip()}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _config_defaults(subparser: argparse.ArgumentParser, path: str) -> dict:
    """Convert a config file into typed defaults for one subcommand."""
    actions = {}
    for action in subparser._actions:
        actions[action.dest] = action
        for opt in action.option_strings:
            actions[opt.lstrip("-")] = action
    typed: dict = {}
    for key, text in load_config(path).items():
        action = actions.get(key) or actions.get(key.replace("-", "_"))
        if action is None:
            raise ValueError(f"unknown config key '{key}'")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            value: object = text.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            value = action.type(text)
        else:
            value = text
        if action.choices is not None and value not in action.choices:
            raise ValueError(f"config key '{key}': {value!r} not in {action.choices}")
        typed[action.dest] = value
    return typed


def _parse_bus(args: argparse.Namespace) -> simulate.BusSpec:
    if args.bus_ids or args.bus_periods:
        if not (args.bus_ids and args.bus_periods):
            raise ValueError("--bus-ids and --bus-periods must be given together")
        ids = [int(tok, 16) if tok.lower().startswith("0x") else int(tok)
               for tok in args.bus_ids.split(",")]
        periods = [float(tok) for tok in args.bus_periods.split(",")]
        if len(ids) != len(periods):
            raise ValueError("--bus-ids and --bus-periods lengths differ")
        ecus = tuple(simulate.EcuSpec(i, p, args.bus_jitter) for i, p in zip(ids, periods))
        return simulate.BusSpec(ecus, args.duration, args.seed)
    spec = simulate.default_bus(args.duration, args.seed)
    if args.bus_jitter != simulate.DEFAULT_JITTER:
        ecus = tuple(simulate.EcuSpec(e.can_id, e.period, args.bus_jitter,
                                      e.payload_length) for e in spec.ids)
        spec = simulate.BusSpec(ecus, args.duration, args.seed)
    return spec


def _labels_path(args: argparse.Namespace) -> str:
    return args.labels_out if args.labels_out else args.out + ".labels.csv"


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = _parse_bus(args)
    log = simulate.generate_normal(spec)
    labeled = simulate.LabeledLog(log, (features.LABEL_NORMAL,) * len(log.frames))
    simulate.save_labeled(labeled, args.out, _labels_path(args))
    print(f"wrote {len(log.frames)} frames over {args.duration:g} s "
          f"({len(spec.ids)} ids) to {args.out}")
    return EXIT_OK


def cmd_inject(args: argparse.Namespace) -> int:
    if args.labels:
        labeled: simulate.LabeledLog | canlog.CanLog = simulate.load_labeled(
            args.input, args.labels)
    else:
        labeled = canlog.load_log(args.input)
    scenario = simulate.AttackScenario(
        kind=args.kind,
        rate=args.rate,
        window=(args.start, args.end),
        replay_segment=(tuple(float(t) for t in args.segment.split(":"))
                        if args.segment else None),
        repeat=args.repeat,
        seed=args.seed,
        payload_length=args.payload_len,
    )
    result = simulate.inject(labeled, scenario)
    simulate.save_labeled(result, args.out, _labels_path(args))
    injected = len(result.log.frames) - (len(labeled.log.frames)
                                         if isinstance(labeled, simulate.LabeledLog)
                                         else len(labeled.frames))
    print(f"injected {injected} {args.kind} frames; wrote "
          f"{len(result.log.frames)} frames to {args.out}")
    return EXIT_OK


def _extraction_meta(args: argparse.Namespace) -> dict:
    return {"window": args.window, "stride": args.stride or args.window,
            "stdev_mode": args.stdev_mode}


def cmd_extract(args: argparse.Namespace) -> int:
    log = canlog.load_log(args.input)
    if not log.frames:
        raise ValueError(f"input log {args.input} is empty")
    if args.vocab:
        vocab, meta = features.load_vocabulary(args.vocab)
        args.window = float(meta.get("window", args.window))
        args.stride = float(meta.get("stride", args.stride or args.window))
        args.stdev_mode = meta.get("stdev_mode", args.stdev_mode)
    else:
        vocab = features.build_vocabulary(log, include_other_bucket=not args.no_other_bucket)
    windows = features.segment_windows(log, args.window, args.stride)
    if args.labels:
        with open(args.labels, "r", encoding="utf-8") as f:
            frame_labels = simulate.read_labels(f)
        labeled = simulate.LabeledLog(log, tuple(frame_labels))
        window_labels = simulate.label_windows(labeled, windows)
    else:
        window_labels = [features.LABEL_NORMAL] * len(windows)
    X, labels = features.extract_matrix(windows, vocab, args.stdev_mode,
                                        window_labels)
    with open(args.out, "w", encoding="utf-8", newline="") as f:
        features.write_feature_csv(f, X, labels, vocab)
    if args.save_vocab:
        features.save_vocabulary(vocab, args.save_vocab, _extraction_meta(args))
    print(f"wrote {X.shape[0]} feature rows x {X.shape[1]} columns to {args.out}")
    return EXIT_OK


def _kernel_from_args(args: argparse.Namespace) -> KernelSpec:
    return KernelSpec(args.kernel, args.sigma)


def _hyperparams(args: argparse.Namespace) -> dict:
    params: dict = {}
    if args.family in ("svdd", "ssvdd", "esvdd", "gesvdd"):
        params["C"] = args.c
    if args.family in ("ocsvm", "geocsvm"):
        params["nu"] = args.nu
    if args.family in ("esvdd", "gesvdd", "geocsvm"):
        params["epsilon"] = args.epsilon
    if args.family in ("gesvdd", "geocsvm"):
        params["k_neighbors"] = args.k_neighbors
    if args.family == "ssvdd":
        params.update(beta=args.beta, psi=args.psi, eta=args.eta,
                      iterations=args.iterations)
        if args.d is not None:
            params["d"] = args.d
    return params


def cmd_train(args: argparse.Namespace) -> int:
    with open(args.features, "r", encoding="utf-8") as f:
        X, labels, vocab = features.read_feature_csv(f)
    normal = np.array([lab == features.LABEL_NORMAL for lab in labels])
    if not normal.all():
        if not args.filter_normal:
            raise ContractViolation("training data must be target-class only "
                                    f"({int((~normal).sum())} non-normal rows; "
                                    "pass --filter-normal to drop them)")
        X = X[normal]
    if X.shape[0] < 2:
        raise ValueError("need at least 2 normal training rows")
    scaler = features.fit_scaler(X)
    model = fit_model(args.family, features.apply_scaler(scaler, X),
                      kernel=_kernel_from_args(args), scaler=scaler,
                      **_hyperparams(args))
    if args.extraction_config:
        _, meta = features.load_vocabulary(args.extraction_config)
        extraction = dict(meta)
    else:
        extraction = _extraction_meta(args)
    extraction["ids"] = [f"0x{i:X}" for i in vocab.ids]
    extraction["include_other_bucket"] = vocab.include_other_bucket
    save_model(model, args.out, extraction=extraction)
    print(f"trained {model_tag(model)} on {X.shape[0]} rows; wrote {args.out}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    model, _ = load_model(args.model)
    with open(args.features, "r", encoding="utf-8") as f:
        X, labels, _ = features.read_feature_csv(f)
    report = evaluate(model, X, labels)
    if args.out_table:
        with open(args.out_table, "w", encoding="utf-8", newline="") as f:
            write_report_table(f, [report])
    if args.out_summary:
        with open(args.out_summary, "w", encoding="utf-8") as f:
            json.dump(report.to_dict(), f, sort_keys=True, indent=2)
            f.write("\n")
    print(f"gmean={report.gmean:.4f} tpr={report.tpr:.4f} tnr={report.tnr:.4f}")
    for kind in sorted(report.per_attack):
        print(f"gmean[{kind}]={report.per_attack[kind]:.4f}")
    return EXIT_OK


def cmd_detect(args: argparse.Namespace) -> int:
    model, extraction = load_model(args.model)
    if "ids" not in extraction:
        raise ValueError("model file carries no vocabulary; re-train with this toolkit")
    vocab = features.IdVocabulary(
        tuple(int(i, 16) for i in extraction["ids"]),
        bool(extraction.get("include_other_bucket", True)))
    if model.scaler is not None and vocab.dimension != model.scaler.mean.shape[0]:
        raise ValueError(f"vocabulary dimension {vocab.dimension} does not match "
                         f"model dimension {model.scaler.mean.shape[0]}")
    window = float(extraction.get("window", 1.0))
    stride = float(extraction.get("stride", window))
    stdev_mode = extraction.get("stdev_mode", "gaps")
    log = canlog.load_log(args.input)
    windows = features.segment_windows(log, window, stride)
    anomalies = 0
    for w in windows:
        vec = features.extract_features(w, vocab, stdev_mode)
        score = float(score_samples(model, vec.values[None, :])[0])
        verdict = "anomaly" if score > 0 else "normal"
        anomalies += verdict == "anomaly"
        print(f"{w.start:.6f},{score:.9g},{verdict}")
    return EXIT_ANOMALY if anomalies else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="canoc",
        description="CAN-bus one-class intrusion detection toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, default=0, help="deterministic RNG seed")
        p.set_defaults(_subparser=p)

    p = sub.add_parser("simulate", help="generate synthetic normal traffic")
    common(p)
    p.add_argument("--out", required=True, help="output CSV log path")
    p.add_argument("--labels-out", help="sidecar label file (default <out>.labels.csv)")
    p.add_argument("--duration", type=float, default=120.0, help="seconds of traffic")
    p.add_argument("--bus-ids", help="comma-separated ids (hex 0x.. or decimal)")
    p.add_argument("--bus-periods", help="comma-separated nominal periods in seconds")
    p.add_argument("--bus-jitter", type=float, default=simulate.DEFAULT_JITTER,
                   help="uniform jitter fraction of the period")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("inject", help="apply an injection attack to a log")
    common(p)
    p.add_argument("--in", dest="input", required=True, help="base log (CSV or candump)")
    p.add_argument("--labels", help="sidecar labels of the base log")
    p.add_argument("--out", required=True)
    p.add_argument("--labels-out")
    p.add_argument("--kind", required=True, choices=simulate.ATTACK_KINDS)
    p.add_argument("--rate", type=float, help="injected frames per second (floods)")
    p.add_argument("--start", type=float, default=0.0, help="attack window start")
    p.add_argument("--end", type=float, default=1.0, help="attack window end")
    p.add_argument("--segment", help="replay source interval as start:end seconds")
    p.add_argument("--repeat", type=int, default=1, help="replay repetitions")
    p.add_argument("--payload-len", type=int, help="override injected payload length")
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("extract", help="compute windowed timing features")
    common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--labels", help="sidecar frame labels for ground truth")
    p.add_argument("--out", required=True, help="output feature CSV")
    p.add_argument("--vocab", help="existing vocabulary JSON (fixes the layout)")
    p.add_argument("--save-vocab", help="write vocabulary + extraction settings")
    p.add_argument("--window", type=float, default=1.0, help="window length (s)")
    p.add_argument("--stride", type=float, help="window stride (default: window)")
    p.add_argument("--stdev-mode", choices=features.STDEV_MODES, default="gaps")
    p.add_argument("--no-other-bucket", action="store_true",
                   help="disable the pooled foreign-id bucket")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit a one-class model on normal features")
    common(p)
    p.add_argument("--features", required=True, help="feature CSV (normal rows)")
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--family", default="svdd",
                   choices=("svdd", "ssvdd", "esvdd", "gesvdd", "ocsvm", "geocsvm"))
    p.add_argument("--kernel", choices=("linear", "rbf"), default="linear")
    p.add_argument("--sigma", type=float, help="rbf bandwidth (default: median heuristic)")
    p.add_argument("--c", type=float, default=1.0, help="SVDD trade-off C")
    p.add_argument("--nu", type=float, default=0.1, help="OC-SVM fraction parameter")
    p.add_argument("--d", type=int, help="subspace dimension (default min(10, D))")
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--psi", choices=("psi0", "psi1", "psi2", "psi3"), default="psi1")
    p.add_argument("--eta", type=float, default=0.1, help="subspace learning rate")
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--k-neighbors", type=int, default=5)
    p.add_argument("--epsilon", type=float, default=1e-3, help="ridge regularizer")
    p.add_argument("--filter-normal", action="store_true",
                   help="silently drop non-normal rows instead of failing")
    p.add_argument("--extraction-config", help="vocabulary JSON from extract --save-vocab")
    p.add_argument("--window", type=float, default=1.0,
                   help="window length to embed when no extraction config is given")
    p.add_argument("--stride", type=float)
    p.add_argument("--stdev-mode", choices=features.STDEV_MODES, default="gaps")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on labeled features")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True, help="labeled test feature CSV")
    p.add_argument("--out-table", help="per-attack Gmean table CSV")
    p.add_argument("--out-summary", help="JSON summary with confusion counts")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("detect", help="score an unlabeled log window by window")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_detect)

    return parser


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            # config supplies defaults; a second parse lets explicit flags win
            args._subparser.set_defaults(**_config_defaults(args._subparser,
                                                            args.config))
            args = parser.parse_args(argv)
        return args.func(args)
    except ContractViolation as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONTRACT
    except (ValueError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
