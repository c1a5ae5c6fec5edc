import itertools
import math

import numpy as np
import pytest

from pragma import neural as nn
from pragma.sail_synth import synth_sail_instances
from pragma.speaker import RouteSegmenter, SegmenterConfig, SpeakerConfig, SpeakerModel, build_speaker
from pragma.vocab import Vocab
from pragma.world import Instance, Segment

from helpers import small_speaker, tiny_corpus, toy_alchemy_domain, toy_instance


def test_encode_length_one_trajectory():
    model = small_speaker()
    inst = tiny_corpus(n=1, steps=1, seed=1)[0]
    enc, spans = model.encode_trajectory(inst.initial_state, inst.segments)
    assert enc.data.shape == (1, model.z_dim)
    assert spans == [(0, 1)]


def test_scone_encoding_contextual_dependence():
    # same action, different beaker contents -> different encoder input
    model = small_speaker()
    insts = tiny_corpus(n=30, steps=2, seed=2)
    rows = {}
    for inst in insts:
        X, _ = model.trajectory_features(inst.initial_state, inst.segments)
        a = inst.segments[0].actions[0]
        rows.setdefault(a, []).append(X[0])
    for a, feats in rows.items():
        if len(feats) >= 2 and not np.array_equal(feats[0], feats[1]):
            return  # found contextual difference for identical action
    pytest.skip("corpus too uniform to witness the contextual difference")


def test_speaker_dims_audit():
    model = small_speaker(dims=7)
    d = model.domain
    assert model.feat_dim == d.action_input_dim + d.percept_dim
    assert model.z_dim == model.feat_dim + 2 * 7
    inst = tiny_corpus(n=1, seed=3)[0]
    enc, spans = model.encode_trajectory(inst.initial_state, inst.segments)
    assert enc.data.shape == (len(inst.actions), model.z_dim)


def test_word_distribution_sums_to_one():
    model = small_speaker()
    inst = tiny_corpus(n=1, seed=4)[0]
    with nn.no_grad():
        enc, spans = model.encode_trajectory(inst.initial_state, inst.segments)
        logits, _, _ = model.step_logits(enc, spans[0], model.vocab.bos_id, model.initial_hc())
        logp = nn.masked_log_probs(logits.data, model.output_mask())
    assert abs(np.exp(logp[model.output_mask()]).sum() - 1.0) <= 1e-9


def test_scone_speaker_never_attends():
    model = small_speaker()
    assert not model.uses_attention
    assert not hasattr(model, "att")


def test_sail_speaker_attends_over_segment():
    insts = synth_sail_instances(2, seed=5)
    model = small_speaker("sail", insts=insts, dims=6)
    assert model.uses_attention
    inst = insts[0]
    with nn.no_grad():
        enc, spans = model.encode_trajectory(inst.initial_state, inst.segments)
        # collapsed steps never exceed primitive steps
        assert enc.data.shape[0] <= len(inst.actions)
        logits, _, _ = model.step_logits(enc, spans[0], model.vocab.bos_id, model.initial_hc())
    assert logits.data.shape == (model.vocab.size,)


def test_score_description_nonpositive_and_decomposes():
    model = small_speaker()
    for inst in tiny_corpus(n=4, seed=6):
        total = model.score_description(inst)
        assert total <= 0.0
        with nn.no_grad():
            parts = [-float(l.data) for l in model.forced_losses(inst)]
        assert math.isclose(total, sum(parts), abs_tol=1e-12)


def test_exhaustive_sentence_space_sums_to_one_per_segment():
    # tiny vocab: all sentences of length <= 2 plus EOS cover the whole space
    dom = toy_alchemy_domain()
    inst = toy_instance(dom, "alchemy", steps=1, seed=2)
    vocab = Vocab.from_list(["<unk>", "<s>", "</s>", "go", "mix", "stop"])
    cfg = SpeakerConfig(emb_dim=5, hidden_dim=5, attn_dim=5, dropout=0.0, max_words=2)
    model = SpeakerModel("alchemy", vocab, cfg, np.random.default_rng(3), domain=dom)
    words = ["<unk>", "go", "mix", "stop"]  # everything predictable except BOS/EOS
    total = 0.0
    with nn.no_grad():
        for L in range(0, 3):
            for sent in itertools.product(words, repeat=L):
                variant = Instance(inst.id, "alchemy", inst.initial_state,
                                   (Segment(tuple(sent), inst.segments[0].actions,
                                            inst.segments[0].states_after),),
                                   "train")
                total += math.exp(model.score_description(variant))
    assert abs(total - 1.0) <= 1e-9


def test_full_speaker_gradcheck_scone():
    r = np.random.default_rng(7)
    worst = 0.0
    for seed in range(3):
        insts = tiny_corpus(n=2, steps=2, seed=seed)
        model = small_speaker(insts=insts, dims=int(r.integers(3, 7)), seed=seed)
        masks = model.sample_masks(r)
        inst = insts[0]

        def loss():
            return nn.add_n(*model.forced_losses(inst, masks))

        worst = max(worst, nn.grad_check(loss, model.parameters(), rng=r, max_coords=40))
    assert worst <= 1e-4


def test_full_speaker_gradcheck_sail():
    r = np.random.default_rng(8)
    insts = synth_sail_instances(2, seed=9)
    model = small_speaker("sail", insts=insts, dims=5)
    masks = model.sample_masks(r)
    inst = insts[0]

    def loss():
        return nn.add_n(*model.forced_losses(inst, masks))

    assert nn.grad_check(loss, model.parameters(), rng=r, max_coords=50) <= 1e-4


def test_speaker_checkpoint_roundtrip(tmp_path):
    insts = tiny_corpus(n=3, seed=10)
    model = build_speaker("alchemy", insts,
                          SpeakerConfig(emb_dim=6, hidden_dim=6, dropout=0.2), seed=4)
    path = tmp_path / "speaker.ck"
    model.save(path)
    clone = SpeakerModel.load(path)
    for inst in insts:
        assert clone.score_description(inst) == model.score_description(inst)


def test_speaker_training_reduces_loss():
    insts = tiny_corpus(n=15, steps=2, seed=11)
    model = small_speaker(insts=insts, dims=12)
    params = model.parameters()
    state = nn.AdamState.for_params(params)
    rng = np.random.default_rng(0)

    def epoch_loss():
        with nn.no_grad():
            return sum(-model.score_description(i) for i in insts)

    first = epoch_loss()
    for _ in range(3):
        for inst in insts:
            nn.zero_grads(params.values())
            loss = model.loss(inst, rng)
            nn.backward(loss)
            grads = {k: p.grad for k, p in params.items() if p.grad is not None}
            nn.clip_global_norm(grads)
            nn.adam_step(params, grads, state, lr=3e-3)
    assert epoch_loss() < first * 0.8


# ---------------------------------------------------------------------------
# segmenter


def test_segmenter_threshold_one_single_segment():
    insts = synth_sail_instances(1, seed=12)
    seg = RouteSegmenter(SegmenterConfig(hidden_dim=6), np.random.default_rng(1))
    inst = insts[0]
    spans = seg.segment_route(inst.initial_state, inst.actions, threshold=1.0)
    assert spans == [(0, len(inst.actions))]


def test_segmenter_output_is_partition():
    insts = synth_sail_instances(5, seed=13)
    seg = RouteSegmenter(SegmenterConfig(hidden_dim=6), np.random.default_rng(2))
    for inst in insts:
        for thr in (0.2, 0.5, 0.8):
            spans = seg.segment_route(inst.initial_state, inst.actions, threshold=thr)
            assert spans[0][0] == 0 and spans[-1][1] == len(inst.actions)
            for (a, b), (c, d) in zip(spans, spans[1:]):
                assert b == c and a < b
            assert all(a < b for a, b in spans)


def test_segmenter_gradcheck():
    insts = synth_sail_instances(1, seed=14)
    seg = RouteSegmenter(SegmenterConfig(hidden_dim=4), np.random.default_rng(3))
    r = np.random.default_rng(4)
    masks = seg.sample_masks(r)
    inst = insts[0]

    def loss():
        actions = inst.actions
        labels = np.zeros(len(actions))
        t = -1
        for s in inst.segments:
            t += len(s.actions)
            labels[t] = 1.0
        scores = seg.boundary_scores(inst.initial_state, actions, masks)
        return nn.add_n(*[nn.bce_logit(nn.part(scores, k), labels[k])
                          for k in range(len(actions))])

    assert nn.grad_check(loss, seg.parameters(), rng=r, max_coords=40) <= 1e-4


def test_segmenter_learns_gold_boundaries():
    insts = synth_sail_instances(30, seed=15)
    seg = RouteSegmenter(SegmenterConfig(hidden_dim=10), np.random.default_rng(5))
    params = seg.parameters()
    st = nn.AdamState.for_params(params)
    rng = np.random.default_rng(6)
    for _ in range(8):
        for inst in insts:
            nn.zero_grads(params.values())
            loss = seg.loss(inst, rng)
            nn.backward(loss)
            grads = {k: p.grad for k, p in params.items() if p.grad is not None}
            nn.clip_global_norm(grads)
            nn.adam_step(params, grads, st, lr=5e-3)
    hits = total_pred = total_gold = 0
    for inst in insts:
        gold = set()
        t = -1
        for s in inst.segments:
            t += len(s.actions)
            gold.add(t)
        pred = {b - 1 for _, b in seg.segment_route(inst.initial_state, inst.actions)}
        hits += len(gold & pred)
        total_pred += len(pred)
        total_gold += len(gold)
    f1 = 2 * hits / (total_pred + total_gold)
    assert f1 > 0.85
