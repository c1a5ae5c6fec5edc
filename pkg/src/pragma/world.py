"""Domain-agnostic task data model, trajectory replay and dataset io.

The canonical on-disk format is jsonl, one instance per line:
    {"id", "domain", "split", "initial_state": <state>, "segments":
      [{"sentence": [tok...], "actions": [<action>...], "states_after": [<state>...]}]}
Original-corpus formats (scone_tsv, sail_native) are adapters whose accepted
grammar is documented on their loader functions.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, replace
from functools import lru_cache

from . import sail, scone
from .errors import InvalidAction, ParseError, ValidationError

SPLITS = ("train", "dev", "test")
DOMAINS = ("alchemy", "scene", "tangrams", "sail")

_STATE_TYPES = {
    scone.AlchemyState: "alchemy",
    scone.SceneState: "scene",
    scone.TangramsState: "tangrams",
    sail.SailState: "sail",
}


@lru_cache(maxsize=None)
def get_domain(name: str):
    if name in scone.SCONE_DOMAIN_NAMES:
        return scone.get_scone_domain(name)
    if name == "sail":
        return sail.SailDomain()
    raise KeyError(f"unknown domain {name!r}")


def domain_of_state(state) -> str:
    for t, name in _STATE_TYPES.items():
        if isinstance(state, t):
            return name
    raise TypeError(f"not a world state: {type(state)}")


def tokenize(text: str) -> list[str]:
    """Lowercase, whitespace-split, punctuation detached as separate tokens."""
    return re.findall(r"[\w']+|[^\w\s]", text.lower())


@dataclass(frozen=True)
class Segment:
    sentence: tuple[str, ...]
    actions: tuple
    states_after: tuple


@dataclass(frozen=True)
class Instance:
    id: str
    domain: str
    initial_state: object
    segments: tuple[Segment, ...]
    split: str = "train"

    @property
    def actions(self) -> list:
        return [a for seg in self.segments for a in seg.actions]

    @property
    def sentences(self) -> list[tuple[str, ...]]:
        return [seg.sentence for seg in self.segments]

    @property
    def final_state(self):
        return self.segments[-1].states_after[-1] if self.segments else self.initial_state

    def with_split(self, split: str) -> "Instance":
        return replace(self, split=split)


def apply_actions(state, actions) -> list:
    """Replay actions from a state; returns the successor state after each
    action. Raises InvalidAction (carrying the step index) on the first
    illegal action."""
    domain = get_domain(domain_of_state(state))
    out = []
    for idx, action in enumerate(actions):
        try:
            state = domain.transition(state, action)
        except InvalidAction as e:
            raise InvalidAction(e.reason, index=idx) from e
        out.append(state)
    return out


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    instance_id: str
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_instance(inst: Instance) -> ValidationReport:
    v: list[Violation] = []

    def add(code, message):
        v.append(Violation(code, message))

    if inst.domain not in DOMAINS:
        add("domain", f"unknown domain {inst.domain!r}")
        return ValidationReport(inst.id, tuple(v))
    if inst.split not in SPLITS:
        add("split", f"unknown split {inst.split!r}")
    try:
        actual = domain_of_state(inst.initial_state)
        if actual != inst.domain:
            add("state-variant", f"state is {actual} but instance domain is {inst.domain}")
            return ValidationReport(inst.id, tuple(v))
    except TypeError as e:
        add("state-variant", str(e))
        return ValidationReport(inst.id, tuple(v))
    if not inst.segments:
        add("segments", "instance has no segments")
    is_scone = inst.domain != "sail"
    for k, seg in enumerate(inst.segments):
        if not seg.actions:
            add("segmentation", f"segment {k} has no actions")
        if is_scone and len(seg.actions) != 1:
            add("segmentation",
                f"segment {k} has {len(seg.actions)} actions; this domain pairs one "
                f"(non-decomposed) action with each sentence")
        if len(seg.actions) != len(seg.states_after):
            add("segmentation", f"segment {k}: {len(seg.actions)} actions but "
                                f"{len(seg.states_after)} recorded states")
        if not seg.sentence:
            add("sentence", f"segment {k} has an empty sentence")
        for tok in seg.sentence:
            if not tok or tok != tok.lower():
                add("vocabulary", f"segment {k}: token {tok!r} must be lowercase and non-empty")
    # replay; stop at the first divergence so one perturbation yields one violation
    state = inst.initial_state
    step = 0
    for k, seg in enumerate(inst.segments):
        for a, recorded in zip(seg.actions, seg.states_after):
            try:
                state = get_domain(inst.domain).transition(state, a)
            except InvalidAction as e:
                add("replay", f"step {step}: action {a} invalid: {e.reason}")
                return ValidationReport(inst.id, tuple(v))
            if state != recorded:
                add("replay", f"step {step}: replayed state does not match the recorded state")
                return ValidationReport(inst.id, tuple(v))
            step += 1
    return ValidationReport(inst.id, tuple(v))


# ---------------------------------------------------------------------------
# canonical jsonl


def instance_to_json(inst: Instance) -> dict:
    dom = get_domain(inst.domain)
    return {
        "id": inst.id,
        "domain": inst.domain,
        "split": inst.split,
        "initial_state": dom.state_to_json(inst.initial_state),
        "segments": [
            {
                "sentence": list(seg.sentence),
                "actions": [dom.action_to_json(a) for a in seg.actions],
                "states_after": [dom.state_to_json(s) for s in seg.states_after],
            }
            for seg in inst.segments
        ],
    }


def instance_from_json(obj: dict) -> Instance:
    dom = get_domain(obj["domain"])
    segments = tuple(
        Segment(
            sentence=tuple(seg["sentence"]),
            actions=tuple(dom.action_from_json(a) for a in seg["actions"]),
            states_after=tuple(dom.state_from_json(s) for s in seg["states_after"]),
        )
        for seg in obj["segments"]
    )
    return Instance(
        id=obj["id"],
        domain=obj["domain"],
        initial_state=dom.state_from_json(obj["initial_state"]),
        segments=segments,
        split=obj.get("split", "train"),
    )


def save_instances(insts: list[Instance], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for inst in insts:
            f.write(json.dumps(instance_to_json(inst), sort_keys=True,
                               separators=(",", ":")) + "\n")


def load_instances(path, format: str = "jsonl", **kwargs) -> list[Instance]:
    if format == "jsonl":
        insts = _load_jsonl(path)
    elif format == "scone_tsv":
        insts = _load_scone_tsv(path, **kwargs)
    elif format == "sail_native":
        insts = _load_sail_native(path, **kwargs)
    else:
        raise ValueError(f"unknown format {format!r}")
    for inst in insts:
        report = validate_instance(inst)
        if not report.ok:
            raise ValidationError(inst.id, "; ".join(x.message for x in report.violations))
    return insts


def _load_jsonl(path) -> list[Instance]:
    out = []
    with open(path, encoding="utf-8") as f:
        for ln, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(instance_from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise ParseError(f"bad instance record: {e}", line=ln) from e
    return out


# ---------------------------------------------------------------------------
# scone tsv adapter


def _parse_scone_state(domain: str, text: str):
    """State grammar (space-separated `pos:payload` fields, positions 1-based):
    alchemy payload is a string of color letters or `_` for an empty beaker;
    scene payload is two letters (shirt, hat) with `_` for none; tangrams
    fields list the shapes on the canvas in order."""
    fields = text.split()
    try:
        if domain == "alchemy":
            cfg = scone.AlchemyConfig()
            beakers = [()] * cfg.n_beakers
            for field in fields:
                pos, payload = field.split(":", 1)
                beakers[int(pos) - 1] = () if payload == "_" else tuple(payload)
            return scone.AlchemyState(tuple(beakers))
        if domain == "scene":
            cfg = scone.SceneConfig()
            people: list = [None] * cfg.n_positions
            for field in fields:
                pos, payload = field.split(":", 1)
                shirt, hat = payload[0], payload[1]
                if shirt != "_":
                    people[int(pos) - 1] = scone.Person(shirt, None if hat == "_" else hat)
            return scone.SceneState(tuple(people))
        if domain == "tangrams":
            figures = []
            for field in fields:
                pos, payload = field.split(":", 1)
                if payload != "_":
                    figures.append(int(payload))
            return scone.TangramsState(tuple(figures), (), 0)
    except (ValueError, IndexError) as e:
        raise ParseError(f"bad {domain} state {text!r}: {e}") from e
    raise ParseError(f"tsv adapter does not support domain {domain!r}")


def _infer_action(domain_name: str, state, nxt) -> object:
    """Recover the unique valid action mapping state to nxt (first in
    canonical order when several produce identical successors)."""
    dom = get_domain(domain_name)
    for action in dom.valid_actions(state):
        try:
            if dom.transition(state, action) == nxt:
                return action
        except InvalidAction:  # pragma: no cover - valid_actions filters these
            continue
    raise ParseError("no valid action maps the recorded state to its successor")


def _split_from_name(path) -> str:
    import os
    name = os.path.basename(str(path)).lower()
    for split in ("test", "dev"):
        if split in name:
            return split
    return "train"


def _load_scone_tsv(path, domain: str | None = None) -> list[Instance]:
    """Grammar: one instance per line, tab-separated:
    <id> TAB <initial state> TAB <sentence 1> TAB <state 1> [TAB <sentence k> TAB <state k>]...
    Actions are not part of the format; each step's action is recovered by
    searching the valid-action set for the unique transition that reproduces
    the recorded successor state. Domain is inferred from the filename unless
    passed explicitly."""
    if domain is None:
        name = str(path).lower()
        for cand in scone.SCONE_DOMAIN_NAMES:
            if cand in name:
                domain = cand
                break
        else:
            raise ParseError("cannot infer scone domain from filename; pass domain=")
    split = _split_from_name(path)
    out = []
    with open(path, encoding="utf-8") as f:
        for ln, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cells = line.split("\t")
            if len(cells) < 4 or len(cells) % 2 != 0:
                raise ParseError("expected id, initial state, then sentence/state pairs", line=ln)
            inst_id = cells[0]
            try:
                initial = _parse_scone_state(domain, cells[1])
                state = initial
                segments = []
                for k in range(2, len(cells), 2):
                    nxt = _parse_scone_state(domain, cells[k + 1])
                    if domain == "tangrams":
                        # canvas-only records: carry replayed history forward
                        nxt = _match_tangrams(state, nxt)
                    action = _infer_action(domain, state, nxt)
                    after = get_domain(domain).transition(state, action)
                    segments.append(Segment(tuple(tokenize(cells[k])), (action,), (after,)))
                    state = after
            except ParseError as e:
                raise ParseError(str(e), line=ln) from e
            out.append(Instance(inst_id, domain, initial, tuple(segments), split))
    return out


def _match_tangrams(state: scone.TangramsState, recorded: scone.TangramsState):
    """The tsv records only the visible canvas; find the successor whose
    figures match among actions applied to the replayed state."""
    dom = get_domain("tangrams")
    for action in dom.valid_actions(state):
        nxt = dom.transition(state, action)
        if nxt.figures == recorded.figures:
            return nxt
    raise ParseError("no valid tangrams action reproduces the recorded canvas")


# ---------------------------------------------------------------------------
# sail native adapter


def _turns_toward(current: str, target: str) -> list:
    diff = (sail.ORIENTATIONS.index(target) - sail.ORIENTATIONS.index(current)) % 4
    if diff == 0:
        return []
    if diff == 1:
        return [sail.RIGHT]
    if diff == 3:
        return [sail.LEFT]
    return [sail.RIGHT, sail.RIGHT]


def _load_sail_native(path, orientation_mode: str = "abs", clockwise: bool = True) -> list[Instance]:
    """Grammar: a MAP section followed by ROUTE sections.
        MAP
        <map lines: node / edge, see sail.parse_map>
        ENDMAP
        ROUTE id=<id> split=<train|dev|test> start=<x>,<y>,<N|E|S|W|U>
        SENT <raw sentence text>
        PATH <x>,<y> ; <x>,<y> ...     ("-" for a segment with no movement)
        ENDROUTE
    Each PATH lists the nodes visited while following its sentence. Actions
    are derived after resolving the start orientation (U under mode "abs"
    becomes N; under "rel" it is a 90-degree rotation from the heading toward
    the route's first waypoint): turns as needed, one move per waypoint, and
    a closing stop on the final segment."""
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    i = 0
    grid = None
    out = []
    while i < len(lines):
        line = lines[i].strip()
        if not line or line.startswith("#"):
            i += 1
            continue
        if line == "MAP":
            j = i + 1
            block = []
            while j < len(lines) and lines[j].strip() != "ENDMAP":
                block.append(lines[j])
                j += 1
            if j == len(lines):
                raise ParseError("MAP section not closed", line=i + 1)
            grid = sail.parse_map("\n".join(block))
            i = j + 1
        elif line.startswith("ROUTE"):
            if grid is None:
                raise ParseError("ROUTE before MAP", line=i + 1)
            kv = dict(part.split("=", 1) for part in line.split()[1:])
            x, y, orient = kv["start"].split(",")
            node = (int(x), int(y))
            sents: list[str] = []
            paths: list[list[tuple[int, int]]] = []
            j = i + 1
            while j < len(lines) and lines[j].strip() != "ENDROUTE":
                row = lines[j].strip()
                if row.startswith("SENT "):
                    sents.append(row[5:])
                elif row.startswith("PATH"):
                    payload = row[4:].strip()
                    if payload == "-":
                        paths.append([])
                    else:
                        paths.append([tuple(int(c) for c in wp.strip().split(","))
                                      for wp in payload.split(";")])
                elif row and not row.startswith("#"):
                    raise ParseError(f"unexpected line in ROUTE: {row!r}", line=j + 1)
                j += 1
            if j == len(lines):
                raise ParseError("ROUTE section not closed", line=i + 1)
            if len(sents) != len(paths):
                raise ParseError("SENT/PATH pairs must align", line=i + 1)
            if orient == sail.UNDETERMINED:
                waypoints = [wp for p in paths for wp in p]
                if orientation_mode == "rel":
                    if not waypoints:
                        raise ParseError("rel orientation needs a moving route", line=i + 1)
                    orient = sail.resolve_start_orientation("rel", [node] + waypoints, clockwise)
                else:
                    orient = sail.resolve_start_orientation("abs", [node])
            initial = sail.SailState(grid, sail.Pose(node, orient))
            state = initial
            segments = []
            try:
                for k, (sent, waypoints) in enumerate(zip(sents, paths)):
                    actions: list = []
                    for wp in waypoints:
                        heading = sail.direction_between(state.pose.node, wp)
                        for turn in _turns_toward(state.pose.orientation, heading):
                            actions.append(turn)
                            state = sail.transition(state, turn)
                        actions.append(sail.FORWARD)
                        state = sail.transition(state, sail.FORWARD)
                    if k == len(sents) - 1:
                        actions.append(sail.STOP)
                    if not actions:
                        raise ParseError(f"segment {k} of route {kv['id']} has no actions",
                                         line=i + 1)
                    seg_states = apply_actions(
                        segments[-1].states_after[-1] if segments else initial, actions)
                    segments.append(Segment(tuple(tokenize(sent)), tuple(actions),
                                            tuple(seg_states)))
            except (ValueError, InvalidAction) as e:
                raise ParseError(f"route {kv.get('id', '?')}: {e}", line=i + 1) from e
            out.append(Instance(kv["id"], "sail", initial, tuple(segments),
                                kv.get("split", _split_from_name(path))))
            i = j + 1
        else:
            raise ParseError(f"unexpected line {line!r}", line=i + 1)
    return out


# ---------------------------------------------------------------------------
# split assignment


def stable_hash(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def split_instances(insts: list[Instance], ratios=(0.8, 0.1, 0.1)) -> list[Instance]:
    """Assign train/dev/test by ranking on a seed-stable hash of the id, with
    exact proportional counts."""
    order = sorted(insts, key=lambda x: (stable_hash(x.id), x.id))
    n = len(order)
    n_dev = round(n * ratios[1])
    n_test = round(n * ratios[2])
    n_train = n - n_dev - n_test
    assigned = {}
    for rank, inst in enumerate(order):
        if rank < n_train:
            split = "train"
        elif rank < n_train + n_dev:
            split = "dev"
        else:
            split = "test"
        assigned[inst.id] = split
    return [inst.with_split(assigned[inst.id]) for inst in insts]
