"""Training loops: per-instance Adam updates with gradient clipping, early
stopping on the task metric over the dev split, ensembles from separate
random initializations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import neural as nn
from ..listener import build_listener
from ..pragmatics import PragmaticsConfig, rational_listener, rational_speaker
from ..speaker import RouteSegmenter, build_speaker
from .configs import TrainConfig
from .metrics import speaker_corpus_bleu
from ..errors import EmptyBeam


@dataclass
class TrainResult:
    model: object
    best_metric: float
    best_epoch: int
    history: list[dict]

    @property
    def config_echo(self) -> dict:
        return {"best_metric": self.best_metric, "best_epoch": self.best_epoch}


def _build_model(config: TrainConfig, train_insts):
    if config.role == "listener":
        return build_listener(config.domain, train_insts, config.listener_config(),
                              seed=config.seed)
    if config.role == "speaker":
        return build_speaker(config.domain, train_insts, config.speaker_config(),
                             seed=config.seed)
    return RouteSegmenter(config.segmenter_config(), np.random.default_rng(config.seed))


def dev_metric(model, config: TrainConfig, dev_insts) -> float:
    """Early-stopping metric: end-state accuracy for listeners, corpus BLEU
    for speakers, boundary F1 for segmenters (greedy decoding)."""
    if not dev_insts:
        return 0.0
    if config.role == "listener":
        pcfg = PragmaticsConfig(mode="base", n_listener=config.eval_beam,
                                n_speaker=config.eval_beam)
        hits = 0
        for inst in dev_insts:
            try:
                pred = rational_listener([model], None, inst.sentences,
                                         inst.initial_state, pcfg)
            except EmptyBeam:
                continue
            hits += pred.final_state == inst.final_state
        return 100.0 * hits / len(dev_insts)
    if config.role == "speaker":
        pcfg = PragmaticsConfig(mode="base", n_speaker=config.eval_beam,
                                n_listener=config.eval_beam)
        preds = [rational_speaker([model], None, inst, pcfg).sentences
                 for inst in dev_insts]
        refs = [inst.sentences for inst in dev_insts]
        return speaker_corpus_bleu(preds, refs)
    hits = pred_total = gold_total = 0
    for inst in dev_insts:
        gold = set()
        t = -1
        for seg in inst.segments:
            t += len(seg.actions)
            gold.add(t)
        spans = model.segment_route(inst.initial_state, inst.actions)
        pred = {b - 1 for _, b in spans}
        hits += len(gold & pred)
        pred_total += len(pred)
        gold_total += len(gold)
    if pred_total + gold_total == 0:
        return 0.0
    return 100.0 * 2 * hits / (pred_total + gold_total)


def train(config: TrainConfig, train_insts, dev_insts=None) -> TrainResult:
    """Maximize the conditional likelihood of the training pairs; keep the
    parameters from the best dev epoch. Reproducible given (seed, data,
    config)."""
    if not train_insts:
        raise ValueError("no training instances")
    model = _build_model(config, train_insts)
    params = model.parameters()
    adam = nn.AdamState.for_params(params)
    order_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    drop_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2]))
    best_metric = -np.inf
    best_epoch = -1
    best_snapshot = None
    since_best = 0
    history = []
    for epoch in range(config.epochs):
        for idx in order_rng.permutation(len(train_insts)):
            inst = train_insts[int(idx)]
            nn.zero_grads(params.values())
            loss = model.loss(inst, drop_rng)
            nn.backward(loss)
            grads = {k: p.grad for k, p in params.items() if p.grad is not None}
            nn.clip_global_norm(grads, config.grad_clip)
            nn.adam_step(params, grads, adam, lr=config.lr)
        metric = dev_metric(model, config, dev_insts if dev_insts is not None else train_insts)
        history.append({"epoch": epoch, "dev_metric": metric})
        if metric > best_metric:
            best_metric = metric
            best_epoch = epoch
            best_snapshot = {k: p.data.copy() for k, p in params.items()}
            since_best = 0
        else:
            since_best += 1
            if since_best > config.patience:
                break
    for k, p in params.items():
        p.data = best_snapshot[k]
    return TrainResult(model, float(best_metric), best_epoch, history)


def train_ensemble(config: TrainConfig, train_insts, dev_insts=None,
                   k: int = 10) -> list[TrainResult]:
    """k models from separate random initializations (seeds seed..seed+k-1);
    members are independent, so k=1 degenerates to a single train call."""
    results = []
    for member in range(k):
        member_cfg = TrainConfig.from_json({**config.to_json(), "seed": config.seed + member})
        results.append(train(member_cfg, train_insts, dev_insts))
    return results
