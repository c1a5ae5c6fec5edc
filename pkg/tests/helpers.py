"""Shared test scaffolding: toy domains and tiny corpora."""

import dataclasses

import numpy as np

from pragma.listener import ListenerConfig, ListenerModel
from pragma.scone import AlchemyConfig, AlchemyDomain, TangramsConfig, TangramsDomain
from pragma.scone_synth import synth_generate
from pragma.speaker import SpeakerConfig, SpeakerModel
from pragma.vocab import Vocab
from pragma.world import Instance, Segment


def toy_alchemy_domain():
    return AlchemyDomain(AlchemyConfig(n_beakers=3, capacity=2, colors=("r", "g", "n")))


def toy_tangrams_domain():
    return TangramsDomain(TangramsConfig(n_slots=2, n_shapes=2, max_steps=6))


def tiny_corpus(domain="alchemy", n=30, steps=3, ambiguity=0.0, seed=0):
    return synth_generate(domain, n, steps=steps, ambiguity=ambiguity, seed=seed)


def small_listener(domain="alchemy", insts=None, dims=8, seed=0, domain_obj=None):
    insts = insts if insts is not None else tiny_corpus(domain)
    vocab = Vocab.from_sentences((seg.sentence for i in insts for seg in i.segments),
                                 min_count=1)
    cfg = ListenerConfig(emb_dim=dims, hidden_dim=dims, attn_dim=dims, dropout=0.0)
    return ListenerModel(domain, vocab, cfg, np.random.default_rng(seed), domain=domain_obj)


def small_speaker(domain="alchemy", insts=None, dims=8, seed=0, domain_obj=None):
    insts = insts if insts is not None else tiny_corpus(domain)
    vocab = Vocab.from_sentences((seg.sentence for i in insts for seg in i.segments),
                                 min_count=1)
    cfg = SpeakerConfig(emb_dim=dims, hidden_dim=dims, attn_dim=dims, dropout=0.0)
    return SpeakerModel(domain, vocab, cfg, np.random.default_rng(seed), domain=domain_obj)


def with_actions(domain_obj, inst: Instance, action_seq) -> Instance:
    """Clone an instance substituting a different action sequence (states
    recomputed by replay through the provided domain adapter)."""
    segments = []
    state = inst.initial_state
    idx = 0
    for seg in inst.segments:
        take = action_seq[idx:idx + len(seg.actions)]
        idx += len(seg.actions)
        states = []
        for a in take:
            state = domain_obj.transition(state, a)
            states.append(state)
        segments.append(Segment(seg.sentence, tuple(take), tuple(states)))
    return dataclasses.replace(inst, segments=tuple(segments))


def enumerate_trajectories(domain_obj, initial_state, depth):
    """All valid action sequences of exactly `depth` steps (scone: one action
    per sentence)."""
    results = []

    def rec(state, prefix):
        if len(prefix) == depth:
            results.append(tuple(prefix))
            return
        for a in domain_obj.valid_actions(state):
            rec(domain_obj.transition(state, a), prefix + [a])

    rec(initial_state, [])
    return results


def toy_instance(domain_obj, domain_name, steps=2, seed=0) -> Instance:
    """A gold instance over a toy domain with simple one-word sentences."""
    rng = np.random.default_rng(seed)
    for _ in range(50):
        initial = domain_obj.random_state(rng)
        state = initial
        segments = []
        for k in range(steps):
            valid = domain_obj.valid_actions(state)
            if not valid:
                break
            action = valid[int(rng.integers(len(valid)))]
            nxt = domain_obj.transition(state, action)
            segments.append(Segment((f"step{k}", "now"), (action,), (nxt,)))
            state = nxt
        if len(segments) == steps:
            return Instance(f"toy-{seed}", domain_name, initial, tuple(segments), "train")
    raise RuntimeError("no valid toy walk found")
