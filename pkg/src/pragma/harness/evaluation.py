"""System evaluation: end-state accuracy for listeners (exact world-state
match), corpus BLEU and proxy-listener following accuracy for speakers, and
lambda tuning on the dev split."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyBeam
from ..pragmatics import (
    PragmaticsConfig, SegmentChoice, _select, _strip_shift,
    listener_segment_candidates, rational_listener, rational_speaker,
)
from ..scone_synth import is_ambiguous_instance
from ..world import Instance, Segment
from .configs import version_string
from .metrics import speaker_corpus_bleu


@dataclass
class EvalReport:
    kind: str
    accuracy: float | None = None
    bleu: float | None = None
    outcomes: list[dict] = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    version: str = ""
    wall_clock_s: float | None = None

    def to_json_obj(self, deterministic: bool = True) -> dict:
        obj = {"kind": self.kind, "accuracy": self.accuracy, "bleu": self.bleu,
               "outcomes": self.outcomes, "extras": self.extras,
               "config": self.config, "version": self.version}
        if not deterministic:
            obj["wall_clock_s"] = self.wall_clock_s
        return obj

    def to_json(self, deterministic: bool = True) -> str:
        return json.dumps(self.to_json_obj(deterministic), sort_keys=True,
                          separators=(",", ":"))


def _echo(pcfg: PragmaticsConfig, extra: dict | None) -> dict:
    obj = {"lambda": pcfg.lam, "n_speaker": pcfg.n_speaker, "n_listener": pcfg.n_listener,
           "mode": pcfg.mode, "listener_whole_sequence": pcfg.listener_whole_sequence}
    if extra:
        obj.update(extra)
    return obj


def eval_listener(listeners, speakers, instances, pcfg: PragmaticsConfig,
                  config_echo: dict | None = None) -> EvalReport:
    """Accuracy at reaching the recorded final world state after all
    sentences (exact structural equality). Rel/Abs handling for SAIL happens
    when the corpus is loaded, so evaluation is orientation-agnostic."""
    t0 = time.monotonic()
    outcomes = []
    for inst in instances:
        try:
            pred = rational_listener(listeners, speakers, inst.sentences,
                                     inst.initial_state, pcfg)
            correct = pred.final_state == inst.final_state
            actions = [str(a) for a in pred.actions]
        except EmptyBeam:
            correct = False
            actions = None
        outcomes.append({
            "id": inst.id,
            "correct": bool(correct),
            "ambiguous": bool(inst.domain != "sail" and is_ambiguous_instance(inst)),
            "predicted_actions": actions,
        })
    acc = 100.0 * np.mean([o["correct"] for o in outcomes]) if outcomes else 0.0
    extras = _subset_accuracies(outcomes)
    return EvalReport("listener", accuracy=float(acc), outcomes=outcomes, extras=extras,
                      config=_echo(pcfg, config_echo), version=version_string(),
                      wall_clock_s=time.monotonic() - t0)


def _subset_accuracies(outcomes) -> dict:
    amb = [o["correct"] for o in outcomes if o["ambiguous"]]
    unamb = [o["correct"] for o in outcomes if not o["ambiguous"]]
    return {
        "ambiguous_count": len(amb),
        "ambiguous_accuracy": 100.0 * float(np.mean(amb)) if amb else None,
        "unambiguous_count": len(unamb),
        "unambiguous_accuracy": 100.0 * float(np.mean(unamb)) if unamb else None,
    }


def resegment_instance(inst: Instance, segmenter) -> Instance:
    """Replace gold segmentation with the segmenter's predicted split (SAIL
    generation at test time; sentences are placeholders)."""
    spans = segmenter.segment_route(inst.initial_state, inst.actions)
    actions = inst.actions
    states = [s for seg in inst.segments for s in seg.states_after]
    segments = []
    for a, b in spans:
        segments.append(Segment(("segment",), tuple(actions[a:b]), tuple(states[a:b])))
    return Instance(inst.id, inst.domain, inst.initial_state, tuple(segments), inst.split)


def generate_descriptions(speakers, listeners, inst: Instance, pcfg: PragmaticsConfig,
                          segmenter=None):
    """Sentences for one trajectory; SAIL routes are segmented by the route
    segmenter when one is supplied."""
    target = inst
    if segmenter is not None and inst.domain == "sail":
        target = resegment_instance(inst, segmenter)
    return rational_speaker(speakers, listeners, target, pcfg)


def eval_speaker_bleu(speakers, listeners, instances, pcfg: PragmaticsConfig,
                      segmenter=None, config_echo: dict | None = None) -> EvalReport:
    """Corpus-level 4-gram BLEU of generated descriptions against the
    references, sentences joined with end-of-sentence separators."""
    t0 = time.monotonic()
    preds = []
    outcomes = []
    for inst in instances:
        sentences = generate_descriptions(speakers, listeners, inst, pcfg, segmenter).sentences
        preds.append(sentences)
        outcomes.append({"id": inst.id, "sentences": [" ".join(s) for s in sentences]})
    bleu = speaker_corpus_bleu(preds, [inst.sentences for inst in instances])
    return EvalReport("speaker_bleu", bleu=float(bleu), outcomes=outcomes,
                      config=_echo(pcfg, config_echo), version=version_string(),
                      wall_clock_s=time.monotonic() - t0)


def follow_with_listener(proxy_listeners, sentences, inst: Instance,
                         n_listener: int) -> bool:
    pcfg = PragmaticsConfig(mode="base", n_listener=n_listener)
    try:
        pred = rational_listener(proxy_listeners, None, sentences, inst.initial_state, pcfg)
    except EmptyBeam:
        return False
    return pred.final_state == inst.final_state


def proxy_speaker_eval(speakers, rescoring_listeners, proxy_listeners, instances,
                       pcfg: PragmaticsConfig, proxy_beam: int = 10,
                       segmenter=None, config_echo: dict | None = None) -> EvalReport:
    """Generated directions are followed by a held-out proxy listener (its
    seeds disjoint from any listener inside the speaker system); reports
    end-state accuracy. `speakers=None` evaluates the gold human directions."""
    t0 = time.monotonic()
    outcomes = []
    for inst in instances:
        if speakers is None:
            sentences = inst.sentences
        else:
            sentences = generate_descriptions(speakers, rescoring_listeners, inst,
                                              pcfg, segmenter).sentences
        success = follow_with_listener(proxy_listeners, sentences, inst, proxy_beam)
        outcomes.append({"id": inst.id, "correct": bool(success),
                         "ambiguous": bool(inst.domain != "sail" and is_ambiguous_instance(inst)),
                         "sentences": [" ".join(s) for s in sentences]})
    acc = 100.0 * np.mean([o["correct"] for o in outcomes]) if outcomes else 0.0
    return EvalReport("proxy_speaker", accuracy=float(acc), outcomes=outcomes,
                      extras=_subset_accuracies(outcomes),
                      config=_echo(pcfg, config_echo), version=version_string(),
                      wall_clock_s=time.monotonic() - t0)


def compare_outcomes(a: EvalReport, b: EvalReport) -> dict:
    """Paired per-instance comparison with a two-sided sign test."""
    from .metrics import paired_sign_test
    by_id = {o["id"]: o["correct"] for o in b.outcomes}
    wins = losses = ties = 0
    for o in a.outcomes:
        other = by_id[o["id"]]
        if o["correct"] and not other:
            wins += 1
        elif other and not o["correct"]:
            losses += 1
        else:
            ties += 1
    return {"wins": wins, "losses": losses, "ties": ties,
            "sign_test_p": paired_sign_test(wins, losses)}


# ---------------------------------------------------------------------------
# lambda tuning


def argmax_lambda(curve: dict[float, float]) -> float:
    """Grid point maximizing the dev metric; ties resolved to the smaller
    lambda."""
    best = None
    for lam in sorted(curve):
        if best is None or curve[lam] > curve[best] + 1e-12:
            best = lam
    return best


def listener_lambda_curve(listeners, speakers, instances, pcfg: PragmaticsConfig,
                          grid) -> dict[float, float]:
    """Dev accuracy per lambda. Candidate sets are memoized on (instance,
    segment, committed prefix), so sweeping the grid costs little more than a
    single decode."""
    memo: dict = {}
    curve: dict[float, float] = {}
    for lam in grid:
        hits = 0
        for inst in instances:
            state = inst.initial_state
            committed_s: list[tuple] = []
            committed_a: list[tuple] = []
            failed = False
            for k in range(len(inst.segments)):
                key = (inst.id, k, tuple(committed_a))
                cands = memo.get(key)
                if cands is None:
                    try:
                        cands = listener_segment_candidates(
                            listeners, speakers, inst.sentences, k, state,
                            inst.initial_state, committed_s, committed_a,
                            pcfg.n_listener, rescore=True)
                    except EmptyBeam:
                        cands = []
                    memo[key] = cands
                if not cands:
                    failed = True
                    break
                output, _, _, _ = _select(cands, lam)
                actions = _strip_shift(output)
                committed_s.append(tuple(inst.sentences[k]))
                committed_a.append(actions)
                for a in actions:
                    state = listeners[0].domain.transition(state, a)
            if not failed and state == inst.final_state:
                hits += 1
        curve[float(lam)] = 100.0 * hits / len(instances) if instances else 0.0
    return curve


def tune_listener_lambda(listeners, speakers, dev_instances, pcfg: PragmaticsConfig,
                         grid=None) -> tuple[float, dict[float, float]]:
    grid = list(grid) if grid is not None else [round(0.1 * i, 1) for i in range(11)]
    curve = listener_lambda_curve(listeners, speakers, dev_instances, pcfg, grid)
    return argmax_lambda(curve), curve


def speaker_candidate_cache(speakers, listeners, instances, pcfg: PragmaticsConfig,
                            segmenter=None) -> list[list[SegmentChoice]]:
    """Per-instance per-segment candidate lists (lambda-independent)."""
    probe = PragmaticsConfig(lam=1.0, n_speaker=pcfg.n_speaker,
                             n_listener=pcfg.n_listener, mode="combined")
    return [generate_descriptions(speakers, listeners, inst, probe, segmenter).choices
            for inst in instances]


def speaker_sentences_at(choices: list[SegmentChoice], lam: float) -> list[tuple[str, ...]]:
    return [_select(c.candidates, lam)[0] for c in choices]


def speaker_lambda_curve(speakers, listeners, proxy_listeners, instances,
                         pcfg: PragmaticsConfig, grid, metric: str = "proxy",
                         proxy_beam: int = 10, segmenter=None,
                         cache=None) -> dict[float, float]:
    """Dev metric per lambda for the combined speaker: proxy-listener
    following accuracy (default) or corpus BLEU."""
    cache = cache if cache is not None else speaker_candidate_cache(
        speakers, listeners, instances, pcfg, segmenter)
    curve: dict[float, float] = {}
    for lam in grid:
        preds = [speaker_sentences_at(choices, lam) for choices in cache]
        if metric == "bleu":
            curve[float(lam)] = speaker_corpus_bleu(
                preds, [inst.sentences for inst in instances])
        else:
            hits = sum(follow_with_listener(proxy_listeners, sents, inst, proxy_beam)
                       for sents, inst in zip(preds, instances))
            curve[float(lam)] = 100.0 * hits / len(instances) if instances else 0.0
    return curve


def tune_speaker_lambda(speakers, listeners, proxy_listeners, dev_instances,
                        pcfg: PragmaticsConfig, grid=None, metric: str = "proxy",
                        proxy_beam: int = 10, segmenter=None):
    grid = list(grid) if grid is not None else [round(0.1 * i, 1) for i in range(11)]
    curve = speaker_lambda_curve(speakers, listeners, proxy_listeners, dev_instances,
                                 pcfg, grid, metric, proxy_beam, segmenter)
    return argmax_lambda(curve), curve
