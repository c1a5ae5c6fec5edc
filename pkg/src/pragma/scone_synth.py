"""Synthetic instance generator for the scone domains.

Each instance is a uniform random walk over valid actions from a random
initial state, with one templated sentence per action. The ambiguity knob p
controls how often an applicable under-specified template is used instead of
a fully specifying one. Under-specified templates drop an argument and refer
anaphorically ("it" / "he") to the element touched by the previous action, so
the sentence literally matches several valid actions while the intended one
is recoverable from trajectory context.

A template-inverse parser (`parse_sentence`) gives the literal reading: the
set of valid actions consistent with some template match.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import scone
from .errors import GenerationStuck
from .scone import SconeAction, SconeDomain
from .world import Instance, Segment

ORDINALS = ("first", "second", "third", "fourth", "fifth",
            "sixth", "seventh", "eighth", "ninth", "tenth")
UNIT_PHRASES = {1: ("one", "unit"), 2: ("two", "units"),
                3: ("three", "units"), 4: ("four", "units")}
SHAPE_NAMES = ("cat", "bird", "boat", "tree", "star")


@dataclass(frozen=True)
class Template:
    kind: str
    pattern: tuple[str, ...]   # literal tokens and {slot} placeholders
    ambiguous: bool = False


def _t(kind: str, text: str, ambiguous: bool = False) -> Template:
    return Template(kind, tuple(text.split()), ambiguous)


TEMPLATES: dict[str, list[Template]] = {
    "alchemy": [
        _t("mix", "mix the {i} beaker"),
        _t("mix", "stir the {i} beaker"),
        _t("mix", "blend the {i} beaker"),
        _t("pour", "pour the {i} beaker into the {j} beaker"),
        _t("pour", "empty the {i} beaker into the {j} beaker"),
        _t("pour", "tip the {i} beaker into the {j} beaker"),
        _t("drain", "drain {a} from the {i} beaker"),
        _t("drain", "remove {a} from the {i} beaker"),
        _t("drain", "spill {a} from the {i} beaker"),
        # one under-specified variant per reading keeps its conditional mass
        # concentrated, so a learned speaker actually produces it
        _t("mix", "mix it", ambiguous=True),
        _t("pour", "pour it into the {j} beaker", ambiguous=True),
        _t("pour", "pour the {i} beaker into it", ambiguous=True),
        _t("drain", "drain {a} from it", ambiguous=True),
    ],
    "scene": [
        _t("enter", "a man in {c} appears in the {i} spot"),
        _t("enter", "a {c} guy enters at the {i} spot"),
        _t("enter", "a person in {c} shows up at the {i} spot"),
        _t("exit", "the man in the {i} spot leaves"),
        _t("exit", "the {i} guy exits"),
        _t("exit", "the person in the {i} spot walks away"),
        _t("move", "the man in the {i} spot moves to the {j} spot"),
        _t("move", "the {i} guy goes to the {j} spot"),
        _t("move", "the person in the {i} spot walks to the {j} spot"),
        _t("switch", "the man in the {i} spot switches places with the man in the {j} spot"),
        _t("switch", "the {i} guy trades spots with the {j} guy"),
        _t("switch", "the person in the {i} spot swaps places with the person in the {j} spot"),
        _t("takehat", "the man in the {j} spot takes the hat of the man in the {i} spot"),
        _t("takehat", "the {j} guy grabs the {i} guy's hat"),
        _t("takehat", "the hat of the {i} guy goes to the {j} guy"),
        _t("exit", "he leaves", ambiguous=True),
        _t("move", "he moves to the {j} spot", ambiguous=True),
        _t("switch", "he switches places with the {j} guy", ambiguous=True),
        _t("takehat", "he takes the {i} guy's hat", ambiguous=True),
    ],
    "tangrams": [
        _t("remove", "remove the {i} figure"),
        _t("remove", "delete the {i} figure"),
        _t("remove", "take away the {i} figure"),
        _t("swap", "swap the {i} and {j} figures"),
        _t("swap", "switch the {i} and {j} figures"),
        _t("swap", "exchange the {i} and {j} figures"),
        _t("insert", "put the {s} back in the {i} spot"),
        _t("insert", "add the {s} at the {i} spot"),
        _t("insert", "insert the {s} at the {i} spot"),
        _t("insert", "add it back", ambiguous=True),
    ],
}

# which argument the anaphoric templates leave to context, per action kind
_ANAPHOR_ARG = {
    "alchemy": {"mix": "i", "pour": None, "drain": "i"},  # pour resolved per template
    "scene": {"exit": "i", "move": "i", "switch": "i", "takehat": "j"},
    "tangrams": {"insert": None},
}


def _slot_lexicon(domain: SconeDomain, slot: str) -> dict:
    if slot in ("i", "j"):
        if domain.name == "alchemy":
            n = domain.cfg.n_beakers
        elif domain.name == "scene":
            n = domain.cfg.n_positions
        else:
            n = domain.cfg.n_slots
        return {k + 1: (ORDINALS[k],) for k in range(n)}
    if slot == "a":
        return {k: UNIT_PHRASES[k] for k in range(1, domain.cfg.capacity + 1)
                if k in UNIT_PHRASES}
    if slot == "c":
        return {c: (scone.COLOR_WORDS[c],) for c in domain.cfg.colors}
    if slot == "s":
        return {k: (SHAPE_NAMES[k],) for k in range(domain.cfg.n_shapes)}
    raise KeyError(slot)


def _arg_slots(kind: str) -> tuple[str, ...]:
    return scone.ARG_NAMES[kind]


def render(domain: SconeDomain, tpl: Template, action: SconeAction) -> tuple[str, ...]:
    bound = dict(zip(_arg_slots(action.kind), action.args))
    out: list[str] = []
    for tok in tpl.pattern:
        if tok.startswith("{"):
            slot = tok[1:-1]
            out.extend(_slot_lexicon(domain, slot)[bound[slot]])
        else:
            out.append(tok)
    return tuple(out)


def match(domain: SconeDomain, tpl: Template, tokens: tuple[str, ...]) -> dict | None:
    """Bind template slots against a token sequence; None if no match."""

    def rec(pi: int, ti: int, bound: dict) -> dict | None:
        if pi == len(tpl.pattern):
            return bound if ti == len(tokens) else None
        tok = tpl.pattern[pi]
        if not tok.startswith("{"):
            if ti < len(tokens) and tokens[ti] == tok:
                return rec(pi + 1, ti + 1, bound)
            return None
        slot = tok[1:-1]
        for val, words in _slot_lexicon(domain, slot).items():
            n = len(words)
            if tuple(tokens[ti:ti + n]) == words:
                res = rec(pi + 1, ti + n, {**bound, slot: val})
                if res is not None:
                    return res
        return None

    return rec(0, 0, {})


def parse_sentence(domain: SconeDomain, state, tokens) -> list[SconeAction]:
    """Literal reading: every valid action consistent with some template."""
    tokens = tuple(tokens)
    valid = domain.valid_actions(state)
    matches: list[SconeAction] = []
    for tpl in TEMPLATES[domain.name]:
        bound = match(domain, tpl, tokens)
        if bound is None:
            continue
        names = _arg_slots(tpl.kind)
        for action in valid:
            if action.kind != tpl.kind:
                continue
            args = dict(zip(names, action.args))
            if all(args[k] == v for k, v in bound.items()):
                matches.append(action)
    seen = set()
    out = []
    for a in sorted(matches, key=domain.action_sort_key):
        if a not in seen:
            seen.add(a)
            out.append(a)
    return out


# ---------------------------------------------------------------------------
# anaphora context


class _Context:
    """Tracks what "it"/"he" can refer to: the element touched last."""

    def __init__(self):
        self.focus = None          # beaker index / scene position
        self.last_remove = None    # (position, shape) still off-canvas

    def applicable(self, domain: SconeDomain, action: SconeAction, tpl: Template) -> bool:
        if not tpl.ambiguous:
            return True
        if domain.name == "alchemy":
            if self.focus is None:
                return False
            if action.kind == "pour":
                i, j = action.args
                if "{j}" in tpl.pattern:   # "pour it into the {j} beaker"
                    return i == self.focus
                return j == self.focus     # "pour the {i} beaker into it"
            arg = _ANAPHOR_ARG["alchemy"][action.kind]
            bound = dict(zip(_arg_slots(action.kind), action.args))
            return bound[arg] == self.focus
        if domain.name == "scene":
            if self.focus is None or action.kind == "enter":
                return False
            arg = _ANAPHOR_ARG["scene"][action.kind]
            bound = dict(zip(_arg_slots(action.kind), action.args))
            return bound[arg] == self.focus
        # tangrams: "put it back" means the shape removed last, same position
        if self.last_remove is None or action.kind != "insert":
            return False
        return action.args == self.last_remove

    def update(self, action: SconeAction, prev_state) -> None:
        kind = action.kind
        if kind == "mix":
            self.focus = action.args[0]
        elif kind == "pour":
            self.focus = action.args[1]
        elif kind == "drain":
            self.focus = action.args[1]
        elif kind == "enter":
            self.focus = action.args[1]
        elif kind == "exit":
            self.focus = None
        elif kind in ("move", "switch", "takehat"):
            self.focus = action.args[1]
        elif kind == "remove":
            pos = action.args[0]
            shape = prev_state.figures[pos - 1]
            self.last_remove = (pos, shape)
        elif kind == "insert":
            if self.last_remove is not None and action.args[1] == self.last_remove[1]:
                self.last_remove = None


# ---------------------------------------------------------------------------
# generation


def synth_generate(domain_name: str, n: int, steps: int = 5, ambiguity: float = 0.0,
                   seed: int = 0, max_retries: int = 50) -> list[Instance]:
    """Deterministic synthetic corpus: `n` instances of `steps` actions each."""
    if not 0.0 <= ambiguity <= 1.0:
        raise ValueError("ambiguity must be in [0, 1]")
    domain = scone.get_scone_domain(domain_name)
    rng = np.random.default_rng(seed)
    out = []
    for index in range(n):
        inst = _generate_one(domain, f"{domain_name}-{seed}-{index}", steps, ambiguity,
                             rng, max_retries)
        out.append(inst)
    return out


def _generate_one(domain: SconeDomain, inst_id: str, steps: int, p: float,
                  rng: np.random.Generator, max_retries: int) -> Instance:
    for _ in range(max_retries):
        initial = domain.random_state(rng)
        state = initial
        ctx = _Context()
        segments: list[Segment] = []
        ok = True
        for _step in range(steps):
            valid = domain.valid_actions(state)
            if not valid:
                ok = False
                break
            action = valid[int(rng.integers(len(valid)))]
            candidates = [t for t in TEMPLATES[domain.name] if t.kind == action.kind]
            amb = [t for t in candidates if t.ambiguous and ctx.applicable(domain, action, t)]
            full = [t for t in candidates if not t.ambiguous]
            if amb and rng.random() < p:
                tpl = amb[int(rng.integers(len(amb)))]
            else:
                tpl = full[int(rng.integers(len(full)))]
            sentence = render(domain, tpl, action)
            ctx.update(action, state)
            nxt = domain.transition(state, action)
            segments.append(Segment(sentence, (action,), (nxt,)))
            state = nxt
        if ok:
            return Instance(inst_id, domain.name, initial, tuple(segments))
    raise GenerationStuck(f"no valid walk of length {steps} found after {max_retries} restarts")


def ambiguous_segment_flags(inst: Instance) -> list[bool]:
    """True per segment when its sentence literally matches more than one
    valid action in context (the under-specified subset used in evaluation)."""
    domain = scone.get_scone_domain(inst.domain)
    state = inst.initial_state
    flags = []
    for seg in inst.segments:
        flags.append(len(parse_sentence(domain, state, seg.sentence)) > 1)
        state = seg.states_after[-1]
    return flags


def is_ambiguous_instance(inst: Instance) -> bool:
    return any(ambiguous_segment_flags(inst))
