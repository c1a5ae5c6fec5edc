"""Base listener: per-sentence bidirectional encoder and a monotonically
aligned action decoder with attention. The scone domains use a factored
decoder (action type and arguments scored by separate attention heads) plus a
bilinear bonus over context-dependent action embeddings; SAIL uses a single
softmax over the primitive inventory and an explicit shift action.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import neural as nn
from . import world
from .neural import Tensor
from .vocab import Vocab

Array = np.ndarray

SHIFT = "<shift>"  # distinguished "advance to the next sentence" symbol


@dataclass
class ListenerConfig:
    emb_dim: int = 50
    hidden_dim: int = 50
    attn_dim: int = 50
    dropout: float = 0.1
    max_actions_per_segment: int = 40
    unk_min_count: int = 2

    def to_json(self) -> dict:
        return self.__dict__.copy()

    @classmethod
    def from_json(cls, obj: dict) -> "ListenerConfig":
        return cls(**obj)


@dataclass
class ListenerMasks:
    enc_f: nn.DropoutMasks
    enc_b: nn.DropoutMasks
    dec: nn.DropoutMasks


@dataclass
class StepScores:
    symbols: list            # actions (plus SHIFT for sail)
    logits: Tensor           # aligned with symbols
    new_hc: tuple
    q_factors: Optional[list] = None


class ListenerModel:
    kind = "listener"

    def __init__(self, domain_name: str, vocab: Vocab, cfg: ListenerConfig,
                 rng: np.random.Generator | None = None, domain=None):
        self.domain = domain or world.get_domain(domain_name)
        self.domain_name = domain_name
        self.vocab = vocab
        self.cfg = cfg
        self.factored = self.domain.listener_inventory is None
        d, e = cfg.hidden_dim, cfg.emb_dim
        self.z_dim = e + 2 * d
        if rng is None:
            return  # parameters installed by from_checkpoint
        self.emb = nn.glorot_init((vocab.size, e), rng)
        self.enc_f = nn.init_lstm(e, d, rng)
        self.enc_b = nn.init_lstm(e, d, rng)
        self.dec = nn.init_lstm(d + self.z_dim, d, rng)
        self.W_y = nn.glorot_init((d, self.domain.percept_dim), rng)
        if self.factored:
            sizes = [size for _, size in self.domain.factors]
            self.atts = [nn.init_attention(d, self.z_dim, cfg.attn_dim, rng) for _ in sizes]
            self.W_h = [nn.glorot_init((d, d), rng) for _ in sizes]
            self.W_z = [nn.glorot_init((d, self.z_dim), rng) for _ in sizes]
            self.W_o = [nn.glorot_init((s, d), rng) for s in sizes]
            self.W_qa = nn.glorot_init((sum(sizes), self.domain.action_feature_dim), rng)
            self.w_a = nn.zeros_param(self.domain.action_feature_dim)
        else:
            self.att = nn.init_attention(d, self.z_dim, cfg.attn_dim, rng)
            n_out = len(self.domain.listener_inventory) + 1  # + SHIFT
            self.W_h = nn.glorot_init((d, d), rng)
            self.W_z = nn.glorot_init((d, self.z_dim), rng)
            self.W_o = nn.glorot_init((n_out, d), rng)
        self._init_caches()

    def _init_caches(self):
        self._fidx: dict = {}
        if self.factored:
            sizes = [size for _, size in self.domain.factors]
            self._offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        else:
            self._inventory = list(self.domain.listener_inventory)
            self._index = {a: i for i, a in enumerate(self._inventory)}

    # ------------------------------------------------------------------ params

    def parameters(self) -> dict[str, Tensor]:
        p = {"emb": self.emb, "W_y": self.W_y}
        p.update(self.enc_f.named("enc_f"))
        p.update(self.enc_b.named("enc_b"))
        p.update(self.dec.named("dec"))
        if self.factored:
            for f in range(len(self.atts)):
                p.update(self.atts[f].named(f"att{f}"))
                p[f"W_h{f}"] = self.W_h[f]
                p[f"W_z{f}"] = self.W_z[f]
                p[f"W_o{f}"] = self.W_o[f]
            p["W_qa"] = self.W_qa
            p["w_a"] = self.w_a
        else:
            p.update(self.att.named("att"))
            p.update({"W_h": self.W_h, "W_z": self.W_z, "W_o": self.W_o})
        return p

    # ------------------------------------------------------------------ dropout

    def ones_masks(self) -> ListenerMasks:
        d, e = self.cfg.hidden_dim, self.cfg.emb_dim
        return ListenerMasks(nn.ones_masks(e, d), nn.ones_masks(e, d),
                             nn.ones_masks(d + self.z_dim, d))

    def sample_masks(self, rng: np.random.Generator) -> ListenerMasks:
        r, d, e = self.cfg.dropout, self.cfg.hidden_dim, self.cfg.emb_dim
        return ListenerMasks(nn.sample_masks(r, e, d, rng),
                             nn.sample_masks(r, e, d, rng),
                             nn.sample_masks(r, d + self.z_dim, d, rng))

    # ------------------------------------------------------------------ forward

    def encode_sentence(self, tokens, masks: ListenerMasks | None = None) -> Tensor:
        """Per-token [embedding; forward output; backward output]; encoder
        state starts fresh for every sentence."""
        masks = masks or self.ones_masks()
        idx = [self.vocab.encode(t) for t in tokens]
        E = nn.rows(self.emb, idx)
        Hf = nn.lstm_seq(self.enc_f, E, masks.enc_f)
        Hb = nn.lstm_seq(self.enc_b, E, masks.enc_b, reverse=True)
        return nn.concat_cols([E, Hf, Hb])

    def initial_hc(self) -> tuple:
        d = self.cfg.hidden_dim
        return (np.zeros(d), np.zeros(d))

    def _factor_index_matrix(self, actions) -> Array:
        rows = []
        for a in actions:
            cached = self._fidx.get(a)
            if cached is None:
                cached = self._offsets + np.asarray(self.domain.factor_indices(a))
                self._fidx[a] = cached
            rows.append(cached)
        return np.stack(rows)

    def step_scores(self, encoded, state, hc, masks: ListenerMasks | None = None) -> StepScores:
        """One decoder step: unnormalized scores for every candidate symbol.
        The new LSTM state does not depend on which symbol is chosen."""
        masks = masks or self.ones_masks()
        y = self.domain.percept(state)
        Wy_y = nn.matvec(self.W_y, y)
        h_prev, c_prev = hc
        empty = nn.value(encoded).shape[0] == 0  # empty sentence: no context
        if self.factored:
            if empty:
                zs = [np.zeros(self.z_dim) for _ in self.atts]
            else:
                zs = [nn.attend(att, h_prev, encoded)[1] for att in self.atts]
            x = nn.concat([Wy_y, zs[0]])
            h1, c1 = nn.lstm_step(self.dec, h_prev, c_prev, x, masks.dec)
            q_fs = [
                nn.matvec(self.W_o[f],
                          nn.add_n(Wy_y, nn.matvec(self.W_h[f], h1),
                                   nn.matvec(self.W_z[f], zs[f])))
                for f in range(len(self.atts))
            ]
            q = nn.concat(q_fs)
            valid = self.domain.valid_actions(state)
            base = nn.gather_sum(q, self._factor_index_matrix(valid))
            A = self.domain.action_feature_matrix(state, valid)
            bonus = nn.matvec(A, nn.add_n(nn.matvec_t(self.W_qa, q), self.w_a))
            return StepScores(valid, nn.add_n(base, bonus), (h1, c1), q_fs)
        z = np.zeros(self.z_dim) if empty else nn.attend(self.att, h_prev, encoded)[1]
        x = nn.concat([Wy_y, z])
        h1, c1 = nn.lstm_step(self.dec, h_prev, c_prev, x, masks.dec)
        q = nn.matvec(self.W_o, nn.add_n(Wy_y, nn.matvec(self.W_h, h1), nn.matvec(self.W_z, z)))
        return StepScores(self._inventory + [SHIFT], q, (h1, c1))

    def factored_scores(self, encoded, state, hc=None, masks=None):
        """Scone decoder surface: per-factor score vectors plus the
        bonus-adjusted composed scores over valid actions."""
        if not self.factored:
            raise ValueError("factored scoring applies to the scone domains only")
        ss = self.step_scores(encoded, state, hc or self.initial_hc(), masks)
        return ss.q_factors, ss.symbols, ss.logits

    def allowed_mask(self, state, symbols, stopped: bool, seg_steps: int) -> Array:
        """Valid symbols for a decoding step (sail: world-valid actions plus
        SHIFT, only SHIFT once stopped or at the per-segment cap)."""
        if self.factored:
            return np.ones(len(symbols), dtype=bool)
        mask = np.zeros(len(symbols), dtype=bool)
        mask[-1] = True  # SHIFT
        if not stopped and seg_steps < self.cfg.max_actions_per_segment:
            for a in self.domain.valid_actions(state):
                mask[self._index[a]] = True
        return mask

    # ------------------------------------------------------------------ losses

    def forced_losses(self, inst, masks: ListenerMasks | None = None) -> list[Tensor]:
        """Teacher-forced per-step cross-entropies (shift decisions included)."""
        masks = masks or self.ones_masks()
        losses = []
        state = inst.initial_state
        if self.factored:
            for seg in inst.segments:
                enc = self.encode_sentence(seg.sentence, masks)
                ss = self.step_scores(enc, state, self.initial_hc(), masks)
                target = ss.symbols.index(seg.actions[0])
                losses.append(nn.xent_loss(ss.logits, np.ones(len(ss.symbols), bool), target))
                state = seg.states_after[-1]
            return losses
        stopped = False
        for seg in inst.segments:
            enc = self.encode_sentence(seg.sentence, masks)
            hc = self.initial_hc()
            seg_steps = 0
            for sym in list(seg.actions) + [SHIFT]:
                ss = self.step_scores(enc, state, hc, masks)
                mask = self.allowed_mask(state, ss.symbols, stopped, seg_steps)
                target = len(ss.symbols) - 1 if sym is SHIFT else self._index[sym]
                losses.append(nn.xent_loss(ss.logits, mask, target))
                hc = ss.new_hc
                if sym is not SHIFT:
                    state = self.domain.transition(state, sym)
                    stopped = stopped or sym.kind == "stop"
                    seg_steps += 1
        return losses

    def loss(self, inst, rng: np.random.Generator | None = None) -> Tensor:
        masks = self.sample_masks(rng) if rng is not None else self.ones_masks()
        return nn.add_n(*self.forced_losses(inst, masks))

    def score_trajectory(self, inst) -> float:
        """Total log P(actions, shifts | sentences, percepts); always <= 0."""
        with nn.no_grad():
            return -sum(float(l.data) for l in self.forced_losses(inst))

    # ------------------------------------------------------------------ io

    def checkpoint_meta(self) -> dict:
        return {"kind": self.kind, "domain": self.domain_name,
                "config": self.cfg.to_json(), "vocab": self.vocab.to_list()}

    def save(self, path) -> None:
        nn.save_checkpoint(path, self.checkpoint_meta(), self.parameters())

    @classmethod
    def load(cls, path) -> "ListenerModel":
        meta, arrays = nn.load_checkpoint(path)
        if meta["kind"] != cls.kind:
            raise ValueError(f"checkpoint is a {meta['kind']}, expected {cls.kind}")
        return cls.from_arrays(meta, arrays)

    @classmethod
    def from_arrays(cls, meta: dict, arrays: dict[str, Array]) -> "ListenerModel":
        cfg = ListenerConfig.from_json(meta["config"])
        model = cls(meta["domain"], Vocab.from_list(meta["vocab"]), cfg, rng=None)
        model._install(arrays)
        return model

    def _install(self, arrays: dict[str, Array]) -> None:
        d, e = self.cfg.hidden_dim, self.cfg.emb_dim

        def lstm(prefix, in_dim):
            return nn.LstmParams(
                W=nn.param(arrays[f"{prefix}.W"]), b=nn.param(arrays[f"{prefix}.b"]),
                pf=nn.param(arrays[f"{prefix}.pf"]), po=nn.param(arrays[f"{prefix}.po"]),
                in_dim=in_dim, hidden_dim=d)

        def att(prefix):
            return nn.AttentionParams(Wd=nn.param(arrays[f"{prefix}.Wd"]),
                                      We=nn.param(arrays[f"{prefix}.We"]),
                                      v=nn.param(arrays[f"{prefix}.v"]))

        self.emb = nn.param(arrays["emb"])
        self.enc_f = lstm("enc_f", e)
        self.enc_b = lstm("enc_b", e)
        self.dec = lstm("dec", d + self.z_dim)
        self.W_y = nn.param(arrays["W_y"])
        if self.factored:
            n_factors = len(self.domain.factors)
            self.atts = [att(f"att{f}") for f in range(n_factors)]
            self.W_h = [nn.param(arrays[f"W_h{f}"]) for f in range(n_factors)]
            self.W_z = [nn.param(arrays[f"W_z{f}"]) for f in range(n_factors)]
            self.W_o = [nn.param(arrays[f"W_o{f}"]) for f in range(n_factors)]
            self.W_qa = nn.param(arrays["W_qa"])
            self.w_a = nn.param(arrays["w_a"])
        else:
            self.att = att("att")
            self.W_h = nn.param(arrays["W_h"])
            self.W_z = nn.param(arrays["W_z"])
            self.W_o = nn.param(arrays["W_o"])
        self._init_caches()


def build_listener(domain_name: str, train_instances, cfg: ListenerConfig,
                   seed: int = 0) -> ListenerModel:
    vocab = Vocab.from_sentences((seg.sentence for inst in train_instances
                                  for seg in inst.segments), cfg.unk_min_count)
    return ListenerModel(domain_name, vocab, cfg, np.random.default_rng(seed))
