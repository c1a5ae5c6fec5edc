"""End-to-end experiment runner: build or load a corpus, train every model a
spec needs, evaluate the named systems under identical data and seeds, and
emit a deterministic comparison table."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from ..pragmatics import PragmaticsConfig
from ..scone_synth import synth_generate
from ..world import load_instances, split_instances
from .configs import TrainConfig, version_string
from .evaluation import (
    EvalReport, compare_outcomes, eval_listener, proxy_speaker_eval,
    tune_listener_lambda, tune_speaker_lambda,
)
from .training import train


@dataclass
class ExperimentSpec:
    """JSON-friendly description of one comparison run."""

    name: str
    domain: str = "alchemy"
    # corpus: synthetic parameters or explicit jsonl paths
    synth: dict | None = None          # {"n", "steps", "ambiguity", "seed"}
    data_paths: dict | None = None     # {"train", "dev", "test"}
    seeds: list[int] = field(default_factory=lambda: [0])
    listener_members: int = 1
    speaker_members: int = 0
    train_overrides: dict = field(default_factory=dict)
    systems: list[dict] = field(default_factory=list)
    lambda_grid: list[float] = field(default_factory=lambda: [round(0.1 * i, 1)
                                                              for i in range(11)])
    beam_listener: int = 10
    beam_speaker: int = 10

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentSpec":
        return cls(**obj)

    def to_json(self) -> dict:
        return dict(self.__dict__)


def load_corpus(spec: ExperimentSpec):
    if spec.synth:
        insts = synth_generate(spec.domain, spec.synth["n"], spec.synth.get("steps", 5),
                               spec.synth.get("ambiguity", 0.5), spec.synth.get("seed", 7))
        insts = split_instances(insts)
    elif spec.data_paths:
        insts = []
        for split, path in spec.data_paths.items():
            insts.extend(i.with_split(split) for i in load_instances(path))
    else:
        raise ValueError("experiment needs either synth parameters or data paths")
    by = {s: [i for i in insts if i.split == s] for s in ("train", "dev", "test")}
    return by["train"], by["dev"], by["test"]


def train_pool(spec: ExperimentSpec, seed: int, train_insts, dev_insts):
    """Listener and speaker members for one experiment seed; member seeds are
    spaced so listener and speaker pools never collide."""
    overrides = dict(spec.train_overrides)
    listeners = []
    for m in range(spec.listener_members):
        cfg = TrainConfig(domain=spec.domain, role="listener",
                          seed=1000 + seed * 100 + m, **overrides)
        listeners.append(train(cfg, train_insts, dev_insts).model)
    speakers = []
    for m in range(spec.speaker_members):
        cfg = TrainConfig(domain=spec.domain, role="speaker",
                          seed=5000 + seed * 100 + m, **overrides)
        speakers.append(train(cfg, train_insts, dev_insts).model)
    return listeners, speakers


def _evaluate_system(system: dict, listeners, speakers, dev, test, spec: ExperimentSpec):
    kind = system["kind"]
    l_members = [listeners[i] for i in system.get("listener_members", range(len(listeners)))]
    s_members = [speakers[i] for i in system.get("speaker_members", range(len(speakers)))]
    if kind == "base_listener":
        pcfg = PragmaticsConfig(mode="base", n_listener=spec.beam_listener)
        report = eval_listener(l_members, None, test, pcfg,
                               {"system": system["name"], "members": len(l_members)})
        return report, {}
    if kind == "rational_listener":
        lam_spec = system.get("lambda", "tuned")
        base_pcfg = PragmaticsConfig(mode="combined", lam=0.5,
                                     n_listener=spec.beam_listener,
                                     n_speaker=spec.beam_speaker)
        if lam_spec == "tuned":
            lam, curve = tune_listener_lambda(l_members, s_members, dev, base_pcfg,
                                              spec.lambda_grid)
        else:
            lam, curve = float(lam_spec), {}
        pcfg = PragmaticsConfig(mode="combined", lam=lam, n_listener=spec.beam_listener,
                                n_speaker=spec.beam_speaker)
        report = eval_listener(l_members, s_members, test, pcfg,
                               {"system": system["name"], "members": len(l_members)
                               + len(s_members), "lambda": lam})
        return report, {"lambda": lam, "dev_curve": curve}
    raise ValueError(f"unknown system kind {kind!r}")


def run_experiment(spec: ExperimentSpec) -> dict:
    """Deterministic report bundle: one table row per (system, seed), plus a
    paired directional comparison between the first two systems."""
    t0 = time.monotonic()
    train_insts, dev, test = load_corpus(spec)
    rows = []
    reports: dict[tuple, EvalReport] = {}
    for seed in spec.seeds:
        listeners, speakers = train_pool(spec, seed, train_insts, dev)
        for system in spec.systems:
            report, extra = _evaluate_system(system, listeners, speakers, dev, test, spec)
            reports[(system["name"], seed)] = report
            rows.append({"system": system["name"], "seed": seed,
                         "accuracy": report.accuracy, **extra})
    bundle = {
        "name": spec.name,
        "spec": spec.to_json(),
        "version": version_string(),
        "rows": rows,
        "comparisons": [],
    }
    if len(spec.systems) >= 2:
        a, b = spec.systems[0]["name"], spec.systems[1]["name"]
        per_seed = []
        for seed in spec.seeds:
            ra, rb = reports[(a, seed)], reports[(b, seed)]
            per_seed.append({
                "seed": seed,
                f"{a}_accuracy": ra.accuracy,
                f"{b}_accuracy": rb.accuracy,
                "first_geq_second": bool(ra.accuracy >= rb.accuracy),
                **compare_outcomes(ra, rb),
            })
        bundle["comparisons"] = per_seed
        bundle["first_geq_second_seeds"] = sum(r["first_geq_second"] for r in per_seed)
    bundle["wall_clock_s"] = time.monotonic() - t0
    return bundle


def format_table(bundle: dict) -> str:
    lines = [f"experiment: {bundle['name']} ({bundle['version']})"]
    header = f"{'system':<28} {'seed':>4} {'accuracy':>9} {'lambda':>7}"
    lines.append(header)
    lines.append("-" * len(header))
    for row in bundle["rows"]:
        lam = row.get("lambda")
        lines.append(f"{row['system']:<28} {row['seed']:>4} {row['accuracy']:>9.2f} "
                     f"{lam if lam is not None else '-':>7}")
    for cmp_row in bundle.get("comparisons", []):
        lines.append(json.dumps(cmp_row, sort_keys=True))
    return "\n".join(lines) + "\n"


def bundle_to_json(bundle: dict, deterministic: bool = True) -> str:
    obj = dict(bundle)
    if deterministic:
        obj.pop("wall_clock_s", None)
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
