"""Command line entry point: train, evaluate, infer, generate synthetic
corpora, tune lambda, run experiment bundles, serve the human-eval session
API, and convert native SAIL files. All commands are deterministic given the
same seed and configuration."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from ..listener import ListenerModel
from ..pragmatics import PragmaticsConfig, rational_listener
from ..scone_synth import synth_generate
from ..speaker import RouteSegmenter, SpeakerModel
from ..world import load_instances, save_instances, split_instances
from .configs import TrainConfig, version_string
from .evaluation import (
    eval_listener, eval_speaker_bleu, generate_descriptions, proxy_speaker_eval,
    tune_listener_lambda, tune_speaker_lambda,
)
from .experiment import ExperimentSpec, bundle_to_json, format_table, run_experiment
from .training import train as train_fn


def _load_json_arg(text: str | None) -> dict:
    if not text:
        return {}
    if text.lstrip().startswith("{"):
        return json.loads(text)
    with open(text, encoding="utf-8") as f:
        return json.load(f)


def _load_models(paths: str | None, kind):
    if not paths:
        return []
    return [kind.load(p) for p in paths.split(",")]


def _pcfg(args) -> PragmaticsConfig:
    kwargs = {"mode": args.mode, "lam": args.lam}
    if getattr(args, "beam", None):
        kwargs["n_listener"] = args.beam
        kwargs["n_speaker"] = args.beam
    return PragmaticsConfig(**kwargs)


def _add_common(p):
    p.add_argument("--domain", default=None)
    p.add_argument("--role", default="listener", choices=["listener", "speaker", "segmenter"])
    p.add_argument("--config", default=None, help="json string or path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", default="base", choices=["base", "rational", "combined"])
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--beam", type=int, default=None)
    p.add_argument("--out", default=None)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pragma",
                                     description="instruction following and generation "
                                                 "with pragmatic reranking")
    parser.add_argument("--version", action="version", version=version_string())
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one model, write a checkpoint")
    _add_common(p_train)
    p_train.add_argument("--train", dest="train_path", required=True)
    p_train.add_argument("--dev", dest="dev_path", default=None)

    p_eval = sub.add_parser("eval", help="evaluate a system, write a report")
    _add_common(p_eval)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--listener-ckpts", default=None)
    p_eval.add_argument("--speaker-ckpts", default=None)
    p_eval.add_argument("--proxy-ckpts", default=None,
                        help="proxy listener checkpoints for speaker accuracy")
    p_eval.add_argument("--segmenter-ckpt", default=None)
    p_eval.add_argument("--metric", default=None, choices=[None, "accuracy", "bleu", "proxy"])

    p_infer = sub.add_parser("infer", help="decode a dataset, write predictions")
    _add_common(p_infer)
    p_infer.add_argument("--data", required=True)
    p_infer.add_argument("--listener-ckpts", default=None)
    p_infer.add_argument("--speaker-ckpts", default=None)
    p_infer.add_argument("--segmenter-ckpt", default=None)

    p_synth = sub.add_parser("synth", help="generate a synthetic corpus")
    _add_common(p_synth)
    p_synth.add_argument("-n", type=int, required=True)
    p_synth.add_argument("--steps", type=int, default=5)
    p_synth.add_argument("--ambiguity", type=float, default=0.0)
    p_synth.add_argument("--split", action="store_true",
                         help="assign 80/10/10 splits by id hash")

    p_tune = sub.add_parser("tune-lambda", help="argmax of the dev metric over a grid")
    _add_common(p_tune)
    p_tune.add_argument("--data", required=True)
    p_tune.add_argument("--listener-ckpts", required=True)
    p_tune.add_argument("--speaker-ckpts", required=True)
    p_tune.add_argument("--proxy-ckpts", default=None)
    p_tune.add_argument("--grid", default=None, help="comma separated lambda values")
    p_tune.add_argument("--metric", default=None, choices=[None, "accuracy", "bleu", "proxy"])

    p_exp = sub.add_parser("experiment", help="run a comparison bundle")
    p_exp.add_argument("--config", required=True)
    p_exp.add_argument("--out", default=None)

    p_serve = sub.add_parser("serve", help="run the human-eval session service")
    p_serve.add_argument("--port", type=int, default=8800)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--data", required=True)
    p_serve.add_argument("--directions", action="append", default=[],
                         help="system=path pairs of generated-direction jsonl files")
    p_serve.add_argument("--results", default=None)
    p_serve.add_argument("--ui", default=None,
                         help="serve the browser client from this directory")

    p_conv = sub.add_parser("sail-convert", help="convert a native SAIL file to jsonl")
    p_conv.add_argument("input")
    p_conv.add_argument("--orientation", default="abs", choices=["abs", "rel"])
    p_conv.add_argument("--counterclockwise", action="store_true")
    p_conv.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    return COMMANDS[args.command](args)


def cmd_train(args) -> int:
    overrides = _load_json_arg(args.config)
    fields = {"domain": args.domain or overrides.get("domain", "alchemy"),
              "role": args.role, "seed": args.seed}
    allowed = set(TrainConfig.__dataclass_fields__) - set(fields)
    fields.update({k: v for k, v in overrides.items() if k in allowed})
    cfg = TrainConfig(**fields)
    train_insts = load_instances(args.train_path)
    dev_insts = load_instances(args.dev_path) if args.dev_path else None
    result = train_fn(cfg, train_insts, dev_insts)
    out = args.out or f"{args.role}.ck"
    result.model.save(out)
    print(f"saved {args.role} checkpoint to {out} "
          f"(best dev metric {result.best_metric:.2f} @ epoch {result.best_epoch})")
    return 0


def cmd_eval(args) -> int:
    data = load_instances(args.data)
    listeners = _load_models(args.listener_ckpts, ListenerModel)
    speakers = _load_models(args.speaker_ckpts, SpeakerModel)
    segmenter = RouteSegmenter.load(args.segmenter_ckpt) if args.segmenter_ckpt else None
    pcfg = _pcfg(args)
    metric = args.metric or ("accuracy" if args.role == "listener" else "bleu")
    if args.role == "listener":
        report = eval_listener(listeners, speakers or None, data, pcfg)
    elif metric == "bleu":
        report = eval_speaker_bleu(speakers, listeners or None, data, pcfg, segmenter)
    else:
        proxies = _load_models(args.proxy_ckpts, ListenerModel)
        report = proxy_speaker_eval(speakers, listeners or None, proxies, data, pcfg,
                                    segmenter=segmenter)
    payload = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(payload + "\n")
    print(f"{report.kind}: accuracy={report.accuracy} bleu={report.bleu} "
          f"({report.wall_clock_s:.1f}s)", file=sys.stderr)
    if not args.out:
        print(payload)
    return 0


def cmd_infer(args) -> int:
    data = load_instances(args.data)
    listeners = _load_models(args.listener_ckpts, ListenerModel)
    speakers = _load_models(args.speaker_ckpts, SpeakerModel)
    segmenter = RouteSegmenter.load(args.segmenter_ckpt) if args.segmenter_ckpt else None
    pcfg = _pcfg(args)
    rows = []
    if args.role == "listener":
        domain = listeners[0].domain
        for inst in data:
            try:
                pred = rational_listener(listeners, speakers or None, inst.sentences,
                                         inst.initial_state, pcfg)
                rows.append({"id": inst.id,
                             "actions": [domain.action_to_json(a) for a in pred.actions]})
            except Exception as e:  # EmptyBeam included: record the failure
                rows.append({"id": inst.id, "actions": None, "error": str(e)})
    else:
        for inst in data:
            pred = generate_descriptions(speakers, listeners or None, inst, pcfg, segmenter)
            rows.append({"id": inst.id, "sentences": [list(s) for s in pred.sentences]})
    payload = "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n"
                      for r in rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


def cmd_synth(args) -> int:
    insts = synth_generate(args.domain or "alchemy", args.n, args.steps,
                           args.ambiguity, args.seed)
    if args.split:
        insts = split_instances(insts)
    save_instances(insts, args.out or "corpus.jsonl")
    print(f"wrote {len(insts)} instances to {args.out or 'corpus.jsonl'}")
    return 0


def cmd_tune(args) -> int:
    data = load_instances(args.data)
    listeners = _load_models(args.listener_ckpts, ListenerModel)
    speakers = _load_models(args.speaker_ckpts, SpeakerModel)
    grid = [float(x) for x in args.grid.split(",")] if args.grid else None
    pcfg = _pcfg(args)
    if args.role == "listener":
        lam, curve = tune_listener_lambda(listeners, speakers, data, pcfg, grid)
    else:
        proxies = _load_models(args.proxy_ckpts, ListenerModel)
        metric = args.metric or ("proxy" if proxies else "bleu")
        lam, curve = tune_speaker_lambda(speakers, listeners, proxies or None, data,
                                         pcfg, grid, metric=metric)
    payload = json.dumps({"lambda": lam, "curve": {str(k): v for k, v in curve.items()}},
                         sort_keys=True, separators=(",", ":"))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(payload + "\n")
    print(payload)
    return 0


def cmd_experiment(args) -> int:
    spec = ExperimentSpec.from_json(_load_json_arg(args.config))
    bundle = run_experiment(spec)
    sys.stdout.write(format_table(bundle))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(bundle_to_json(bundle) + "\n")
    return 0


def cmd_serve(args) -> int:
    from .service import serve_eval

    data = load_instances(args.data)
    directions = {}
    for pair in args.directions:
        system, path = pair.split("=", 1)
        table = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                row = json.loads(line)
                table[row["id"]] = [tuple(s) for s in row["sentences"]]
        directions[system] = table
    serve_eval(args.port, data, directions, args.results, host=args.host, ui_dir=args.ui)
    return 0


def cmd_convert(args) -> int:
    insts = load_instances(args.input, format="sail_native",
                           orientation_mode=args.orientation,
                           clockwise=not args.counterclockwise)
    save_instances(insts, args.out)
    print(f"wrote {len(insts)} sail instances to {args.out}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "infer": cmd_infer,
    "synth": cmd_synth,
    "tune-lambda": cmd_tune,
    "experiment": cmd_experiment,
    "serve": cmd_serve,
    "sail-convert": cmd_convert,
}


if __name__ == "__main__":
    sys.exit(main())
