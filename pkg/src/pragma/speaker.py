"""Base speaker: bidirectional trajectory encoder and a word decoder with
monotonic segment alignment. SAIL attends over the current segment's encoder
outputs and consumes collapsed move actions; the scone domains skip attention
and fix the context vector to the encoded step aligned with the sentence.
Also the SAIL route segmenter used at generation time.

All parameters are separate from the listener's; the two are trained
independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import neural as nn
from . import sail, world
from .neural import Tensor
from .vocab import Vocab

Array = np.ndarray


@dataclass
class SpeakerConfig:
    emb_dim: int = 50
    hidden_dim: int = 50
    attn_dim: int = 50     # unused by the scone variant
    dropout: float = 0.3
    max_words: int = 40
    unk_min_count: int = 1

    def to_json(self) -> dict:
        return self.__dict__.copy()

    @classmethod
    def from_json(cls, obj: dict) -> "SpeakerConfig":
        return cls(**obj)


@dataclass
class SpeakerMasks:
    enc_f: nn.DropoutMasks
    enc_b: nn.DropoutMasks
    dec: nn.DropoutMasks


class SpeakerModel:
    kind = "speaker"

    def __init__(self, domain_name: str, vocab: Vocab, cfg: SpeakerConfig,
                 rng: np.random.Generator | None = None, domain=None):
        self.domain = domain or world.get_domain(domain_name)
        self.domain_name = domain_name
        self.vocab = vocab
        self.cfg = cfg
        self.uses_attention = not self.domain.is_scone
        self.feat_dim = self.domain.action_input_dim + self.domain.percept_dim
        d = cfg.hidden_dim
        self.z_dim = self.feat_dim + 2 * d
        if rng is None:
            return
        self.emb = nn.glorot_init((vocab.size, cfg.emb_dim), rng)
        self.enc_f = nn.init_lstm(self.feat_dim, d, rng)
        self.enc_b = nn.init_lstm(self.feat_dim, d, rng)
        self.dec = nn.init_lstm(cfg.emb_dim + self.z_dim, d, rng)
        self.W_h = nn.glorot_init((vocab.size, d), rng)
        self.W_z = nn.glorot_init((vocab.size, self.z_dim), rng)
        if self.uses_attention:
            self.att = nn.init_attention(d, self.z_dim, cfg.attn_dim, rng)

    def parameters(self) -> dict[str, Tensor]:
        p = {"emb": self.emb, "W_h": self.W_h, "W_z": self.W_z}
        p.update(self.enc_f.named("enc_f"))
        p.update(self.enc_b.named("enc_b"))
        p.update(self.dec.named("dec"))
        if self.uses_attention:
            p.update(self.att.named("att"))
        return p

    def ones_masks(self) -> SpeakerMasks:
        d = self.cfg.hidden_dim
        return SpeakerMasks(nn.ones_masks(self.feat_dim, d), nn.ones_masks(self.feat_dim, d),
                            nn.ones_masks(self.cfg.emb_dim + self.z_dim, d))

    def sample_masks(self, rng: np.random.Generator) -> SpeakerMasks:
        r, d = self.cfg.dropout, self.cfg.hidden_dim
        return SpeakerMasks(nn.sample_masks(r, self.feat_dim, d, rng),
                            nn.sample_masks(r, self.feat_dim, d, rng),
                            nn.sample_masks(r, self.cfg.emb_dim + self.z_dim, d, rng))

    # ------------------------------------------------------------------ encoder

    def trajectory_features(self, initial_state, segments) -> tuple[Array, list[tuple[int, int]]]:
        """Per-step input features [action embedding; percept] and the span of
        steps aligned with each sentence. SAIL steps are collapsed moves."""
        rows = []
        spans = []
        state = initial_state
        for seg in segments:
            start = len(rows)
            if self.domain.is_scone:
                for action, after in zip(seg.actions, seg.states_after):
                    rows.append(np.concatenate([
                        self.domain.action_input_feature(state, action),
                        self.domain.percept(state)]))
                    state = after
            else:
                for action in sail.collapse_moves(list(seg.actions)):
                    rows.append(np.concatenate([
                        self.domain.action_input_feature(state, action),
                        self.domain.percept(state)]))
                    state = self.domain.transition(state, action)
            spans.append((start, len(rows)))
        return np.stack(rows), spans

    def encode_trajectory(self, initial_state, segments,
                          masks: SpeakerMasks | None = None) -> tuple[Tensor, list]:
        """h^e_t = [input features; forward LSTM; backward LSTM] over the
        whole (collapsed) trajectory."""
        masks = masks or self.ones_masks()
        X, spans = self.trajectory_features(initial_state, segments)
        Hf = nn.lstm_seq(self.enc_f, X, masks.enc_f)
        Hb = nn.lstm_seq(self.enc_b, X, masks.enc_b, reverse=True)
        return nn.concat_cols([X, Hf, Hb]), spans

    # ------------------------------------------------------------------ decoder

    def initial_hc(self):
        d = self.cfg.hidden_dim
        return (np.zeros(d), np.zeros(d))

    def fixed_context(self, encoded: Tensor, span: tuple[int, int]) -> Tensor:
        """Scone alignment: the context is the encoded vector of the single
        action this sentence describes; no attention."""
        return nn.row(encoded, span[0])

    def step_logits(self, encoded, span, prev_word: int, hc,
                    masks: SpeakerMasks | None = None, z: Tensor | None = None,
                    z_term: Tensor | None = None):
        """One word-decoder step; returns (logits over the vocabulary incl.
        the end-of-sentence token, new hc, context used). When the context is
        fixed for the whole sentence, its output-layer term can be hoisted and
        passed as z_term."""
        masks = masks or self.ones_masks()
        h_prev, c_prev = hc
        if z is None:
            if self.uses_attention:
                keys = nn.slice_rows(encoded, span[0], span[1])
                z = nn.attend(self.att, h_prev, keys)[1]
            else:
                z = self.fixed_context(encoded, span)
        x = nn.concat([nn.row(self.emb, prev_word), z])
        h1, c1 = nn.lstm_step(self.dec, h_prev, c_prev, x, masks.dec)
        if z_term is None:
            z_term = nn.matvec(self.W_z, z)
        logits = nn.add_n(nn.matvec(self.W_h, h1), z_term)
        return logits, (h1, c1), z

    def output_mask(self) -> Array:
        mask = np.ones(self.vocab.size, dtype=bool)
        mask[self.vocab.bos_id] = False  # begin-of-sentence is input-only
        return mask

    def forced_losses(self, inst, masks: SpeakerMasks | None = None) -> list[Tensor]:
        """Per-word cross-entropies, including the end-of-sentence decision.
        At the hard length cap the end token is forced (probability one), so
        sentence probabilities normalize over the capped output space."""
        masks = masks or self.ones_masks()
        encoded, spans = self.encode_trajectory(inst.initial_state, inst.segments, masks)
        out_mask = self.output_mask()
        losses = []
        for span, seg in zip(spans, inst.segments):
            if len(seg.sentence) > self.cfg.max_words:
                raise ValueError(f"sentence of {len(seg.sentence)} words exceeds the "
                                 f"{self.cfg.max_words}-word cap")
            hc = self.initial_hc()
            prev = self.vocab.bos_id
            fixed = None if self.uses_attention else self.fixed_context(encoded, span)
            z_term = None if fixed is None else nn.matvec(self.W_z, fixed)
            targets = [self.vocab.encode(w) for w in seg.sentence]
            if len(seg.sentence) < self.cfg.max_words:
                targets.append(self.vocab.eos_id)  # otherwise EOS is forced, zero loss
            for target in targets:
                logits, hc, _ = self.step_logits(encoded, span, prev, hc, masks,
                                                 z=fixed, z_term=z_term)
                losses.append(nn.xent_loss(logits, out_mask, target))
                prev = target
        return losses

    def loss(self, inst, rng: np.random.Generator | None = None) -> Tensor:
        masks = self.sample_masks(rng) if rng is not None else self.ones_masks()
        return nn.add_n(*self.forced_losses(inst, masks))

    def score_description(self, inst) -> float:
        """Total log P(sentences | actions, percepts); always <= 0."""
        with nn.no_grad():
            return -sum(float(l.data) for l in self.forced_losses(inst))

    # ------------------------------------------------------------------ io

    def checkpoint_meta(self) -> dict:
        return {"kind": self.kind, "domain": self.domain_name,
                "config": self.cfg.to_json(), "vocab": self.vocab.to_list()}

    def save(self, path) -> None:
        nn.save_checkpoint(path, self.checkpoint_meta(), self.parameters())

    @classmethod
    def load(cls, path) -> "SpeakerModel":
        meta, arrays = nn.load_checkpoint(path)
        if meta["kind"] != cls.kind:
            raise ValueError(f"checkpoint is a {meta['kind']}, expected {cls.kind}")
        return cls.from_arrays(meta, arrays)

    @classmethod
    def from_arrays(cls, meta: dict, arrays: dict[str, Array]) -> "SpeakerModel":
        cfg = SpeakerConfig.from_json(meta["config"])
        model = cls(meta["domain"], Vocab.from_list(meta["vocab"]), cfg, rng=None)
        d = cfg.hidden_dim

        def lstm(prefix, in_dim):
            return nn.LstmParams(
                W=nn.param(arrays[f"{prefix}.W"]), b=nn.param(arrays[f"{prefix}.b"]),
                pf=nn.param(arrays[f"{prefix}.pf"]), po=nn.param(arrays[f"{prefix}.po"]),
                in_dim=in_dim, hidden_dim=d)

        model.emb = nn.param(arrays["emb"])
        model.enc_f = lstm("enc_f", model.feat_dim)
        model.enc_b = lstm("enc_b", model.feat_dim)
        model.dec = lstm("dec", cfg.emb_dim + model.z_dim)
        model.W_h = nn.param(arrays["W_h"])
        model.W_z = nn.param(arrays["W_z"])
        if model.uses_attention:
            model.att = nn.AttentionParams(Wd=nn.param(arrays["att.Wd"]),
                                           We=nn.param(arrays["att.We"]),
                                           v=nn.param(arrays["att.v"]))
        return model


def build_speaker(domain_name: str, train_instances, cfg: SpeakerConfig,
                  seed: int = 0) -> SpeakerModel:
    vocab = Vocab.from_sentences((seg.sentence for inst in train_instances
                                  for seg in inst.segments), cfg.unk_min_count)
    return SpeakerModel(domain_name, vocab, cfg, np.random.default_rng(seed))


# ---------------------------------------------------------------------------
# route segmenter (SAIL generation)


@dataclass
class SegmenterConfig:
    hidden_dim: int = 50
    dropout: float = 0.25
    threshold: float = 0.5

    def to_json(self) -> dict:
        return self.__dict__.copy()

    @classmethod
    def from_json(cls, obj):
        return cls(**obj)


class RouteSegmenter:
    """Bidirectional LSTM over per-primitive-step [action; percept; 1]
    features with a logistic head scoring a split after each timestep."""

    kind = "segmenter"

    def __init__(self, cfg: SegmenterConfig, rng: np.random.Generator | None = None):
        self.domain = world.get_domain("sail")
        self.cfg = cfg
        self.feat_dim = self.domain.action_input_dim + self.domain.percept_dim + 1
        d = cfg.hidden_dim
        if rng is None:
            return
        self.enc_f = nn.init_lstm(self.feat_dim, d, rng)
        self.enc_b = nn.init_lstm(self.feat_dim, d, rng)
        self.w = nn.glorot_init((self.feat_dim + 2 * d,), rng)

    def parameters(self) -> dict[str, Tensor]:
        p = {"w": self.w}
        p.update(self.enc_f.named("enc_f"))
        p.update(self.enc_b.named("enc_b"))
        return p

    def _features(self, initial_state, actions) -> Array:
        rows = []
        state = initial_state
        for a in actions:
            rows.append(np.concatenate([
                self.domain.action_input_feature(state, a),
                self.domain.percept(state), [1.0]]))
            state = self.domain.transition(state, a)
        return np.stack(rows)

    def boundary_scores(self, initial_state, actions, masks=None) -> Tensor:
        d = self.cfg.hidden_dim
        if masks is None:
            mf = mb = nn.ones_masks(self.feat_dim, d)
        else:
            mf, mb = masks
        X = self._features(initial_state, actions)
        Hf = nn.lstm_seq(self.enc_f, X, mf)
        Hb = nn.lstm_seq(self.enc_b, X, mb, reverse=True)
        H = nn.concat_cols([X, Hf, Hb])
        return nn.matvec(H, self.w)

    def sample_masks(self, rng):
        d, r = self.cfg.hidden_dim, self.cfg.dropout
        return (nn.sample_masks(r, self.feat_dim, d, rng),
                nn.sample_masks(r, self.feat_dim, d, rng))

    def loss(self, inst, rng=None) -> Tensor:
        masks = self.sample_masks(rng) if rng is not None else None
        actions = inst.actions
        labels = np.zeros(len(actions))
        t = -1
        for seg in inst.segments:
            t += len(seg.actions)
            labels[t] = 1.0
        scores = self.boundary_scores(inst.initial_state, actions, masks)
        return nn.add_n(*[nn.bce_logit(nn.part(scores, t), labels[t])
                          for t in range(len(actions))])

    def segment_route(self, initial_state, actions, threshold: float | None = None):
        """Split points where sigma(score) exceeds the threshold; the route end
        is always a boundary, so every action lands in a nonempty segment.
        Returns (start, end) index spans over the actions."""
        threshold = self.cfg.threshold if threshold is None else threshold
        with nn.no_grad():
            scores = self.boundary_scores(initial_state, actions).data
        probs = 1.0 / (1.0 + np.exp(-scores))
        spans = []
        start = 0
        for t in range(len(actions)):
            if probs[t] > threshold or t == len(actions) - 1:
                spans.append((start, t + 1))
                start = t + 1
        return spans

    def checkpoint_meta(self) -> dict:
        return {"kind": self.kind, "domain": "sail", "config": self.cfg.to_json()}

    def save(self, path) -> None:
        nn.save_checkpoint(path, self.checkpoint_meta(), self.parameters())

    @classmethod
    def load(cls, path) -> "RouteSegmenter":
        meta, arrays = nn.load_checkpoint(path)
        if meta["kind"] != cls.kind:
            raise ValueError(f"checkpoint is a {meta['kind']}, expected {cls.kind}")
        cfg = SegmenterConfig.from_json(meta["config"])
        seg = cls(cfg, rng=None)
        d = cfg.hidden_dim
        seg.enc_f = nn.LstmParams(W=nn.param(arrays["enc_f.W"]), b=nn.param(arrays["enc_f.b"]),
                                  pf=nn.param(arrays["enc_f.pf"]), po=nn.param(arrays["enc_f.po"]),
                                  in_dim=seg.feat_dim, hidden_dim=d)
        seg.enc_b = nn.LstmParams(W=nn.param(arrays["enc_b.W"]), b=nn.param(arrays["enc_b.b"]),
                                  pf=nn.param(arrays["enc_b.pf"]), po=nn.param(arrays["enc_b.po"]),
                                  in_dim=seg.feat_dim, hidden_dim=d)
        seg.w = nn.param(arrays["w"])
        return seg
