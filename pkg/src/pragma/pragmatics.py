"""Rational agents: candidates from one base model, rescored by the other.

Candidate generation is beam search run over all ensemble members in
lock-step: every extension is scored by the sum of the members' conditional
log-probabilities. Rescoring and the lambda combination use the mean of
member log-probabilities so the two sides of the weighted product live on the
same scale (the sum and the mean rank candidates identically inside the beam).

Tie-breaking is total and documented: combined score, then generator score,
then lexicographic output order (actions by their canonical sort key, words
by their surface string).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import neural as nn
from .errors import EmptyBeam
from .listener import SHIFT, ListenerModel
from .speaker import SpeakerModel
from .world import Instance, Segment

Array = np.ndarray


@dataclass(frozen=True)
class PragmaticsConfig:
    lam: float = 0.5                 # weight on the rescoring model (Eq. 3 lambda)
    n_speaker: int = 20
    n_listener: int = 40
    mode: str = "combined"           # base | rational | combined
    listener_whole_sequence: bool = False

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must be in [0, 1]")
        if self.n_speaker < 1 or self.n_listener < 1:
            raise ValueError("beam widths must be >= 1")
        if self.mode not in ("base", "rational", "combined"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def effective_lambda(self) -> float:
        if self.mode == "base":
            return 0.0
        if self.mode == "rational":
            return 1.0
        return self.lam


def combined_score(logp_generator: float, logp_rescorer: float, lam: float) -> float:
    """Weighted product of probabilities, in log space."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must be in [0, 1]")
    return lam * logp_rescorer + (1.0 - lam) * logp_generator


@dataclass(frozen=True)
class Hypothesis:
    output: tuple                    # action symbols or word ids
    member_logps: tuple[float, ...]  # cumulative per ensemble member
    complete: bool
    sort_key: tuple = ()

    @property
    def score(self) -> float:
        """Lockstep beam ranking: product of member probabilities."""
        return float(sum(self.member_logps))

    @property
    def mean_logp(self) -> float:
        """Geometric-mean member probability; the rescoring scale."""
        return float(sum(self.member_logps) / len(self.member_logps))


@dataclass
class _Item:
    shared: object
    mstates: list
    output: tuple
    member_logps: Array
    sort_key: tuple


def ensemble_beam(task, members, width: int) -> list[Hypothesis]:
    """Top-`width` complete hypotheses, sorted by descending summed member
    log-probability with lexicographic tie-breaking. Invalid expansions are
    never enqueued; EmptyBeam if nothing completes."""
    if width < 1:
        raise ValueError("beam width must be >= 1")
    if not members:
        raise ValueError("need at least one ensemble member")
    live = [_Item(task.initial_shared(), [task.member_start(m) for m in members],
                  (), np.zeros(len(members)), ())]
    completed: list[_Item] = []
    while live:
        expansions = []
        for item in live:
            if task.is_complete(item.shared):
                completed.append(item)
                continue
            symbols = task.allowed(item.shared)
            if not symbols:
                continue  # dead end: all expansions invalid
            logp_rows = []
            step_caches = []
            for member, mstate in zip(members, item.mstates):
                logps, cache = task.member_logps(member, mstate, item.shared, symbols)
                logp_rows.append(logps)
                step_caches.append(cache)
            totals = np.sum(logp_rows, axis=0)
            for si, sym in enumerate(symbols):
                if not np.isfinite(totals[si]):
                    continue
                expansions.append((item, sym, si, logp_rows, step_caches))
        if not expansions:
            break
        def rank(exp):
            item, sym, si, logp_rows, _ = exp
            total = float(item.member_logps.sum()) + float(sum(r[si] for r in logp_rows))
            return (-total, item.sort_key + (task.symbol_key(sym),))
        expansions.sort(key=rank)
        nxt = []
        for item, sym, si, logp_rows, step_caches in expansions[:width]:
            mstates = [task.member_advance(member, cache, item.shared, sym)
                       for member, cache in zip(members, step_caches)]
            nxt.append(_Item(task.advance_shared(item.shared, sym), mstates,
                             item.output + (sym,),
                             item.member_logps + np.array([r[si] for r in logp_rows]),
                             item.sort_key + (task.symbol_key(sym),)))
        live = nxt
    if not completed:
        raise EmptyBeam("no hypothesis reached completion")
    completed.sort(key=lambda it: (-float(it.member_logps.sum()), it.sort_key))
    return [Hypothesis(it.output, tuple(float(x) for x in it.member_logps), True, it.sort_key)
            for it in completed[:width]]


# ---------------------------------------------------------------------------
# listener decoding task


@dataclass(frozen=True)
class _LShared:
    world: object
    sent_idx: int
    seg_steps: int
    stopped: bool


class ListenerTask:
    """Grounded action decoding over sentences [start, end); hypotheses track
    the world state so only executable trajectories are expanded."""

    def __init__(self, models: list[ListenerModel], sentences, initial_state,
                 start: int = 0, end: int | None = None):
        self.models = models
        self.domain = models[0].domain
        self.sentences = [tuple(s) for s in sentences]
        self.start = start
        self.end = len(self.sentences) if end is None else end
        self.initial_state = initial_state
        self.cap = models[0].cfg.max_actions_per_segment
        self._enc: dict[int, dict[int, Array]] = {}
        with nn.no_grad():
            for mi, m in enumerate(models):
                self._enc[mi] = {k: m.encode_sentence(self.sentences[k]).data
                                 for k in range(self.start, self.end)}
        self._mindex = {id(m): i for i, m in enumerate(models)}

    def initial_shared(self):
        return _LShared(self.initial_state, self.start, 0, False)

    def is_complete(self, shared) -> bool:
        return shared.sent_idx >= self.end

    def allowed(self, shared):
        if self.is_complete(shared):
            return []
        if self.domain.is_scone:
            return self.domain.valid_actions(shared.world)
        if shared.stopped or shared.seg_steps >= self.cap:
            return [SHIFT]
        return self.domain.valid_actions(shared.world) + [SHIFT]

    def advance_shared(self, shared, sym):
        if sym is SHIFT:
            return _LShared(shared.world, shared.sent_idx + 1, 0, shared.stopped)
        world = self.domain.transition(shared.world, sym)
        if self.domain.is_scone:
            return _LShared(world, shared.sent_idx + 1, 0, False)
        stopped = shared.stopped or sym.kind == "stop"
        return _LShared(world, shared.sent_idx, shared.seg_steps + 1, stopped)

    def symbol_key(self, sym):
        if sym is SHIFT:
            return (1, ())
        return (0, self.domain.action_sort_key(sym))

    def member_start(self, model: ListenerModel):
        return model.initial_hc()

    def member_logps(self, model: ListenerModel, hc, shared, symbols):
        enc = self._enc[self._mindex[id(model)]][shared.sent_idx]
        with nn.no_grad():
            ss = model.step_scores(enc, shared.world, hc)
            if self.domain.is_scone:
                logp = nn.masked_log_probs(ss.logits.data, np.ones(len(ss.symbols), bool))
                assert ss.symbols == symbols
                out = logp
            else:
                mask = model.allowed_mask(shared.world, ss.symbols, shared.stopped,
                                          shared.seg_steps)
                logp = nn.masked_log_probs(ss.logits.data, mask)
                index = {a: i for i, a in enumerate(ss.symbols)}
                out = np.array([logp[index[s]] if s is not SHIFT else logp[-1]
                                for s in symbols])
        return out, ss.new_hc

    def member_advance(self, model, new_hc, shared, sym):
        if self.domain.is_scone or sym is SHIFT:
            return model.initial_hc()
        return new_hc


# ---------------------------------------------------------------------------
# speaker decoding task (one sentence for one segment)


@dataclass(frozen=True)
class _SShared:
    n_words: int
    done: bool


class SpeakerTask:
    """Word decoding for a single segment of an already-encoded trajectory."""

    def __init__(self, models: list[SpeakerModel], encoded_spans: list[tuple], seg_idx: int):
        self.models = models
        self.encoded_spans = encoded_spans  # per member: (encoded H, spans)
        self.seg = seg_idx
        self.vocab = models[0].vocab
        self.cap = models[0].cfg.max_words
        self._allowed_ids = [i for i in range(self.vocab.size) if i != self.vocab.bos_id]
        self._out_mask = models[0].output_mask()
        self._mindex = {id(m): i for i, m in enumerate(models)}
        self._fixed: list[tuple | None] = []
        with nn.no_grad():
            for m, (encoded, spans) in zip(models, encoded_spans):
                if m.uses_attention:
                    self._fixed.append(None)
                else:
                    z = m.fixed_context(encoded, spans[seg_idx])
                    self._fixed.append((z, nn.matvec(m.W_z, z)))

    def initial_shared(self):
        return _SShared(0, False)

    def is_complete(self, shared) -> bool:
        return shared.done

    def allowed(self, shared):
        if shared.done:
            return []
        if shared.n_words >= self.cap:
            return [self.vocab.eos_id]
        return self._allowed_ids

    def advance_shared(self, shared, sym):
        if sym == self.vocab.eos_id:
            return _SShared(shared.n_words, True)
        return _SShared(shared.n_words + 1, False)

    def symbol_key(self, sym):
        return self.vocab.word(sym)

    def member_start(self, model: SpeakerModel):
        return (model.initial_hc(), self.vocab.bos_id)

    def member_logps(self, model: SpeakerModel, mstate, shared, symbols):
        hc, prev = mstate
        mi = self._mindex[id(model)]
        encoded, spans = self.encoded_spans[mi]
        if shared.n_words >= self.cap:
            # end token forced with probability one; state is irrelevant past here
            return np.zeros(1), hc
        fixed = self._fixed[mi]
        z, z_term = fixed if fixed is not None else (None, None)
        with nn.no_grad():
            logits, new_hc, _ = model.step_logits(encoded, spans[self.seg], prev, hc,
                                                  z=z, z_term=z_term)
            logp = nn.masked_log_probs(logits.data, self._out_mask)
        return logp[symbols], new_hc

    def member_advance(self, model, new_hc, shared, sym):
        return (new_hc, sym)


# ---------------------------------------------------------------------------
# scoring helpers


def _segment_instance(domain_name: str, state, sentence, actions, domain) -> Instance:
    states = []
    st = state
    for a in actions:
        st = domain.transition(st, a)
        states.append(st)
    seg = Segment(tuple(sentence), tuple(actions), tuple(states))
    return Instance("candidate", domain_name, state, (seg,), "train")


def listener_segment_logp(models: list[ListenerModel], sentence, state, actions) -> float:
    """Mean member log P(segment actions, incl. the shift decision | sentence)."""
    inst = _segment_instance(models[0].domain_name, state, sentence, actions,
                             models[0].domain)
    return float(np.mean([m.score_trajectory(inst) for m in models]))


def speaker_prefix_logp(models: list[SpeakerModel], sentences, initial_state,
                        seg_actions: list[list], final_only: bool = True) -> float:
    """Mean member log P of the last sentence (or all sentences) given the
    prefix trajectory built from the committed segments."""
    domain = models[0].domain
    segs = []
    st = initial_state
    for sent, actions in zip(sentences, seg_actions):
        states = []
        for a in actions:
            st = domain.transition(st, a)
            states.append(st)
        segs.append(Segment(tuple(sent), tuple(actions), tuple(states)))
    inst = Instance("candidate", models[0].domain_name, initial_state, tuple(segs), "train")
    with nn.no_grad():
        scores = []
        for m in models:
            losses = m.forced_losses(inst)
            if final_only:
                # count only the last sentence's word losses
                per_sent = []
                idx = 0
                for seg in inst.segments:
                    n = len(seg.sentence)
                    if n < m.cfg.max_words:
                        n += 1  # its EOS decision
                    per_sent.append(losses[idx:idx + n])
                    idx += n
                scores.append(-sum(float(l.data) for l in per_sent[-1]))
            else:
                scores.append(-sum(float(l.data) for l in losses))
    return float(np.mean(scores))


def _select(candidates: list[tuple], lam: float):
    """candidates: (output, gen_logp, resc_logp, sort_key); argmax of the
    combined score, ties to the generator score, then lexicographic order."""
    best = None
    best_rank = None
    for output, gen, resc, key in candidates:
        rank = (-combined_score(gen, resc, lam), -gen, key)
        if best_rank is None or rank < best_rank:
            best_rank = rank
            best = (output, gen, resc, key)
    return best


# ---------------------------------------------------------------------------
# rational agents


@dataclass
class SegmentChoice:
    output: tuple
    gen_logp: float
    resc_logp: float
    candidates: list[tuple]  # (output, gen_logp, resc_logp, sort_key)


@dataclass
class ListenerPrediction:
    segments: list[tuple]    # chosen action tuple per sentence (SHIFT stripped)
    final_state: object
    choices: list[SegmentChoice]

    @property
    def actions(self) -> list:
        return [a for seg in self.segments for a in seg]


def _strip_shift(output: tuple) -> tuple:
    return tuple(a for a in output if a is not SHIFT)


def listener_segment_candidates(listeners, speakers, sentences, k, state,
                                initial_state, committed_sentences, committed_segments,
                                width, rescore: bool) -> list[tuple]:
    """Candidate trajectories for sentence k from the given world state, each
    with (output, generator mean logp, speaker rescore, sort key)."""
    task = ListenerTask(listeners, sentences, state, start=k, end=k + 1)
    hyps = ensemble_beam(task, listeners, width)
    cands = []
    for h in hyps:
        actions = _strip_shift(h.output)
        resc = (speaker_prefix_logp(
            speakers, list(committed_sentences) + [sentences[k]],
            initial_state, list(committed_segments) + [list(actions)])
            if rescore else 0.0)
        cands.append((h.output, h.mean_logp, resc, h.sort_key))
    return cands


def rational_listener(listeners: list[ListenerModel], speakers: list[SpeakerModel] | None,
                      sentences, initial_state, config: PragmaticsConfig) -> ListenerPrediction:
    """Follow directions by generating candidate trajectories with the base
    listener ensemble and rescoring them with the base speaker ensemble."""
    lam = config.effective_lambda
    rescore = bool(lam > 0.0 and speakers)
    sentences = [tuple(s) for s in sentences]
    if config.listener_whole_sequence:
        task = ListenerTask(listeners, sentences, initial_state)
        hyps = ensemble_beam(task, listeners, config.n_listener)
        cands = []
        for h in hyps:
            segs = _split_segments(h.output, listeners[0].domain.is_scone)
            resc = (speaker_prefix_logp(speakers, sentences, initial_state, segs,
                                        final_only=False) if rescore else 0.0)
            cands.append((h.output, h.mean_logp, resc, h.sort_key))
        output, gen, resc, _ = _select(cands, lam)
        segs = _split_segments(output, listeners[0].domain.is_scone)
        state = initial_state
        for seg in segs:
            for a in seg:
                state = listeners[0].domain.transition(state, a)
        return ListenerPrediction([tuple(s) for s in segs], state,
                                  [SegmentChoice(output, gen, resc, cands)])
    # interleaved: commit one segment per sentence
    state = initial_state
    committed_sentences: list[tuple] = []
    committed_segments: list[tuple] = []
    choices = []
    for k in range(len(sentences)):
        cands = listener_segment_candidates(
            listeners, speakers, sentences, k, state, initial_state,
            committed_sentences, committed_segments, config.n_listener, rescore)
        output, gen, resc, _ = _select(cands, lam)
        actions = _strip_shift(output)
        choices.append(SegmentChoice(output, gen, resc, cands))
        committed_sentences.append(sentences[k])
        committed_segments.append(tuple(actions))
        for a in actions:
            state = listeners[0].domain.transition(state, a)
    return ListenerPrediction(committed_segments, state, choices)


def _split_segments(output: tuple, is_scone: bool) -> list[list]:
    if is_scone:
        return [[a] for a in output]
    segs: list[list] = [[]]
    for sym in output:
        if sym is SHIFT:
            segs.append([])
        else:
            segs[-1].append(sym)
    if segs and not segs[-1]:
        segs.pop()  # the closing shift opens an empty trailing segment
    return segs


@dataclass
class SpeakerPrediction:
    sentences: list[tuple[str, ...]]
    choices: list[SegmentChoice]


def rational_speaker(speakers: list[SpeakerModel], listeners: list[ListenerModel] | None,
                     inst: Instance, config: PragmaticsConfig) -> SpeakerPrediction:
    """Describe a gold trajectory: per segment, candidate sentences from the
    speaker ensemble rescored by the listeners' probability of the segment's
    gold actions, interleaving segment by segment."""
    lam = config.effective_lambda
    rescore = lam > 0.0 and listeners
    vocab = speakers[0].vocab
    with nn.no_grad():
        encoded = [(m.encode_trajectory(inst.initial_state, inst.segments)) for m in speakers]
        encoded = [(enc, spans) for enc, spans in encoded]
    sentences: list[tuple[str, ...]] = []
    choices = []
    state = inst.initial_state
    for k, seg in enumerate(inst.segments):
        task = SpeakerTask(speakers, encoded, k)
        hyps = ensemble_beam(task, speakers, config.n_speaker)
        cands = []
        for h in hyps:
            words = tuple(vocab.word(i) for i in h.output if i != vocab.eos_id)
            resc = (listener_segment_logp(listeners, words, state, list(seg.actions))
                    if rescore else 0.0)
            cands.append((words, h.mean_logp, resc, h.sort_key))
        output, gen, resc, _ = _select(cands, lam)
        sentences.append(output)
        choices.append(SegmentChoice(output, gen, resc, cands))
        state = seg.states_after[-1]
    return SpeakerPrediction(sentences, choices)
