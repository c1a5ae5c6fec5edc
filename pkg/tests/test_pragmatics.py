import itertools
import math

import numpy as np
import pytest

from pragma import neural as nn
from pragma.errors import EmptyBeam
from pragma.pragmatics import (
    Hypothesis, ListenerTask, PragmaticsConfig, SpeakerTask, combined_score,
    ensemble_beam, listener_segment_logp, rational_listener, rational_speaker,
    speaker_prefix_logp, _select,
)
from pragma.scone import TangramsState
from pragma.vocab import Vocab
from pragma.speaker import SpeakerConfig, SpeakerModel

from helpers import (
    enumerate_trajectories, small_listener, small_speaker, tiny_corpus,
    toy_alchemy_domain, toy_instance, toy_tangrams_domain, with_actions,
)


def traj_key(domain, actions):
    return tuple((0, domain.action_sort_key(a)) for a in actions)


def setup_toy(seed=0, steps=2, n_models=1, domain="alchemy"):
    # tangrams never dead-ends, so rational decoding tests use it; alchemy
    # toy worlds can run out of valid actions (EmptyBeam is then correct)
    dom = toy_alchemy_domain() if domain == "alchemy" else toy_tangrams_domain()
    inst = toy_instance(dom, domain, steps=steps, seed=seed)
    models = [small_listener(domain, insts=[inst], dims=5, seed=s, domain_obj=dom)
              for s in range(n_models)]
    return dom, inst, models


# ---------------------------------------------------------------------------
# config


def test_config_validation():
    with pytest.raises(ValueError):
        PragmaticsConfig(lam=1.5)
    with pytest.raises(ValueError):
        PragmaticsConfig(n_speaker=0)
    with pytest.raises(ValueError):
        PragmaticsConfig(mode="bogus")
    assert PragmaticsConfig(mode="base", lam=0.7).effective_lambda == 0.0
    assert PragmaticsConfig(mode="rational", lam=0.7).effective_lambda == 1.0
    assert PragmaticsConfig(mode="combined", lam=0.7).effective_lambda == 0.7


# ---------------------------------------------------------------------------
# combined score


def test_combined_score_reductions():
    g, r = -1.3, -0.4
    assert combined_score(g, r, 0.0) == g
    assert combined_score(g, r, 1.0) == r
    assert math.isclose(combined_score(g, r, 0.5), (g + r) / 2, rel_tol=0, abs_tol=1e-15)
    with pytest.raises(ValueError):
        combined_score(g, r, -0.1)


def test_argmax_invariance_under_generator_shift():
    cands = [(("a",), -2.0, -1.0, ("a",)), (("b",), -1.0, -3.0, ("b",))]
    at_one = _select(cands, 1.0)[0]
    shifted = [(o, g + 7.5, r, k) for o, g, r, k in cands]
    assert _select(shifted, 1.0)[0] == at_one


def test_select_tie_breaking():
    # equal combined scores: higher generator wins, then lexicographic
    cands = [(("b",), -1.0, -1.0, ("b",)), (("a",), -1.0, -1.0, ("a",))]
    assert _select(cands, 0.5)[0] == ("a",)
    cands = [(("b",), -0.5, -1.5, ("b",)), (("a",), -1.5, -0.5, ("a",))]
    assert _select(cands, 0.5)[0] == ("b",)  # tie on combined, better generator


# ---------------------------------------------------------------------------
# ensemble beam vs exhaustive enumeration


def test_beam_exhaustive_equivalence_single_model():
    dom, inst, models = setup_toy(seed=1)
    trajectories = enumerate_trajectories(dom, inst.initial_state, 2)
    assert 1 < len(trajectories) <= 200
    task = ListenerTask(models, inst.sentences, inst.initial_state)
    hyps = ensemble_beam(task, models, width=len(trajectories) + 50)
    assert len(hyps) == len(trajectories)
    oracle = []
    for actions in trajectories:
        variant = with_actions(dom, inst, list(actions))
        oracle.append((actions, models[0].score_trajectory(variant)))
    oracle.sort(key=lambda t: (-t[1], traj_key(dom, t[0])))
    assert [h.output for h in hyps] == [t[0] for t in oracle]
    for h, (_, score) in zip(hyps, oracle):
        assert math.isclose(h.score, score, rel_tol=0, abs_tol=1e-12)


def test_beam_exhaustive_equivalence_ensemble():
    dom, inst, models = setup_toy(seed=2, n_models=3)
    trajectories = enumerate_trajectories(dom, inst.initial_state, 2)
    task = ListenerTask(models, inst.sentences, inst.initial_state)
    hyps = ensemble_beam(task, models, width=len(trajectories) + 10)
    oracle = []
    for actions in trajectories:
        variant = with_actions(dom, inst, list(actions))
        total = sum(m.score_trajectory(variant) for m in models)
        oracle.append((actions, total))
    oracle.sort(key=lambda t: (-t[1], traj_key(dom, t[0])))
    assert [h.output for h in hyps] == [t[0] for t in oracle]


def test_one_model_ensemble_score_matches_score_trajectory():
    dom, inst, models = setup_toy(seed=3)
    task = ListenerTask(models, inst.sentences, inst.initial_state)
    hyps = ensemble_beam(task, models, width=300)
    gold = tuple(inst.actions)
    match = [h for h in hyps if h.output == gold]
    assert match
    assert math.isclose(match[0].member_logps[0], models[0].score_trajectory(inst),
                        rel_tol=0, abs_tol=1e-12)


def test_uniform_speaker_ties_break_lexicographically():
    vocab = Vocab.from_list(["<unk>", "<s>", "</s>", "b", "a"])
    cfg = SpeakerConfig(emb_dim=4, hidden_dim=4, dropout=0.0, max_words=1)
    dom = toy_alchemy_domain()
    inst = toy_instance(dom, "alchemy", steps=1, seed=4)
    model = SpeakerModel("alchemy", vocab, cfg, np.random.default_rng(0), domain=dom)
    for p in model.parameters().values():
        p.data[:] = 0.0
    with nn.no_grad():
        enc = [model.encode_trajectory(inst.initial_state, inst.segments)]
    task = SpeakerTask([model], enc, 0)
    hyps = ensemble_beam(task, [model], width=50)
    scores = {h.score for h in hyps}
    assert len(hyps) == 4  # "", "a", "b", "<unk>"
    assert all(math.isclose(s, math.log(1 / 4), abs_tol=1e-12) for s in scores)
    rendered = [tuple(vocab.word(i) for i in h.output) for h in hyps]
    assert rendered == [("</s>",), ("<unk>", "</s>"), ("a", "</s>"), ("b", "</s>")]


def test_empty_beam_raised_on_dead_end():
    models = [small_listener("tangrams", insts=tiny_corpus("tangrams", n=2, seed=5), dims=5)]
    stuck = TangramsState((), (), 0)  # no figures, no history: no valid actions
    task = ListenerTask(models, [("do", "something")], stuck)
    with pytest.raises(EmptyBeam):
        ensemble_beam(task, models, width=8)


# ---------------------------------------------------------------------------
# rational agents


def test_rational_listener_lambda_zero_is_base_top1():
    dom, inst, models = setup_toy(seed=6, domain="tangrams")
    speakers = [small_speaker("tangrams", insts=[inst], dims=5, domain_obj=dom)]
    base = rational_listener(models, None, inst.sentences, inst.initial_state,
                             PragmaticsConfig(mode="base", n_listener=6))
    comb0 = rational_listener(models, speakers, inst.sentences, inst.initial_state,
                              PragmaticsConfig(mode="combined", lam=0.0, n_listener=6))
    assert base.segments == comb0.segments
    assert base.final_state == comb0.final_state


def test_rational_listener_matches_bruteforce_argmax():
    dom, inst, models = setup_toy(seed=7)
    speakers = [small_speaker("alchemy", insts=[inst], dims=5, seed=2, domain_obj=dom)]
    lam = 0.6
    trajectories = enumerate_trajectories(dom, inst.initial_state, 2)
    cfg = PragmaticsConfig(mode="combined", lam=lam, n_listener=len(trajectories) + 20,
                           listener_whole_sequence=True)
    pred = rational_listener(models, speakers, inst.sentences, inst.initial_state, cfg)
    best = None
    for actions in trajectories:
        variant = with_actions(dom, inst, list(actions))
        gen = models[0].score_trajectory(variant)
        resc = speakers[0].score_description(variant)
        rank = (-combined_score(gen, resc, lam), -gen, traj_key(dom, actions))
        if best is None or rank < best[0]:
            best = (rank, actions)
    assert tuple(pred.actions) == best[1]


def test_rational_choice_is_candidate_member_and_dominates_base():
    dom, inst, models = setup_toy(seed=8)
    speakers = [small_speaker("alchemy", insts=[inst], dims=5, seed=3, domain_obj=dom)]
    lam = 0.8
    cfg = PragmaticsConfig(mode="combined", lam=lam, n_listener=10,
                           listener_whole_sequence=True)
    pred = rational_listener(models, speakers, inst.sentences, inst.initial_state, cfg)
    choice = pred.choices[0]
    outputs = [c[0] for c in choice.candidates]
    assert choice.output in outputs
    base = max(choice.candidates, key=lambda c: (c[1], [c[0] == o for o in outputs]))
    base_combined = combined_score(base[1], base[2], lam)
    chosen_combined = combined_score(choice.gen_logp, choice.resc_logp, lam)
    assert chosen_combined >= base_combined - 1e-12


def test_rational_speaker_lambda_zero_is_base():
    dom, inst, models = setup_toy(seed=9)
    speakers = [small_speaker("alchemy", insts=[inst], dims=6, seed=4, domain_obj=dom)]
    base = rational_speaker(speakers, None, inst, PragmaticsConfig(mode="base", n_speaker=5))
    comb0 = rational_speaker(speakers, models, inst,
                             PragmaticsConfig(mode="combined", lam=0.0, n_speaker=5))
    assert base.sentences == comb0.sentences


def test_rational_speaker_matches_bruteforce_argmax():
    dom = toy_alchemy_domain()
    inst = toy_instance(dom, "alchemy", steps=1, seed=10)
    vocab = Vocab.from_list(["<unk>", "<s>", "</s>", "mix", "go"])
    cfg_model = SpeakerConfig(emb_dim=5, hidden_dim=5, dropout=0.0, max_words=2)
    speaker = SpeakerModel("alchemy", vocab, cfg_model, np.random.default_rng(5), domain=dom)
    listener = small_listener("alchemy", insts=[inst], dims=5, seed=6, domain_obj=dom)
    lam = 0.7
    words = ["<unk>", "go", "mix"]
    space = [tuple(s) for L in range(0, 3) for s in itertools.product(words, repeat=L)]
    assert len(space) <= 200
    pred = rational_speaker([speaker], [listener], inst,
                            PragmaticsConfig(mode="combined", lam=lam,
                                             n_speaker=len(space) + 10))
    best = None
    from pragma.world import Instance, Segment
    for sent in space:
        variant = Instance(inst.id, "alchemy", inst.initial_state,
                           (Segment(sent, inst.segments[0].actions,
                                    inst.segments[0].states_after),), "train")
        gen = speaker.score_description(variant)
        resc = listener_segment_logp([listener], sent, inst.initial_state,
                                     list(inst.segments[0].actions))
        rank = (-combined_score(gen, resc, lam), -gen, tuple(sent) + ("</s>",))
        if best is None or rank < best[0]:
            best = (rank, sent)
    assert pred.sentences[0] == best[1]


def test_interleaved_listener_commits_greedily():
    dom, inst, models = setup_toy(seed=11, steps=3, domain="tangrams")
    speakers = [small_speaker("tangrams", insts=[inst], dims=5, seed=7, domain_obj=dom)]
    cfg = PragmaticsConfig(mode="combined", lam=0.5, n_listener=4)
    pred = rational_listener(models, speakers, inst.sentences, inst.initial_state, cfg)
    assert len(pred.segments) == len(inst.segments)
    assert len(pred.choices) == len(inst.segments)
    # every committed segment is one of its own candidates
    for choice in pred.choices:
        assert choice.output in [c[0] for c in choice.candidates]


def test_lambda_selection_changes_at_finitely_many_points():
    cands = [(("a",), -1.0, -5.0, ("a",)), (("b",), -3.0, -1.0, ("b",)),
             (("c",), -2.0, -2.0, ("c",))]
    grid = np.linspace(0, 1, 101)
    selections = [_select(cands, lam)[0] for lam in grid]
    changes = sum(1 for a, b in zip(selections, selections[1:]) if a != b)
    assert selections[0] == ("a",)  # lambda=0 equals base (best generator)
    assert changes <= len(cands) - 1
