"""Alchemy, Scene and Tangrams world states, action semantics, contextual
action embeddings and percept featurization.

Cardinalities (7 beakers x capacity 4, 10 scene positions, 5 tangram slots)
follow the conventions of the original corpus release and are configurable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidAction

Array = np.ndarray

# single-letter color codes used on disk; "n" stands for brown, "k" for pink
ALCHEMY_COLORS = ("r", "o", "g", "y", "b", "p", "n")
BROWN = "n"
SCENE_COLORS = ("r", "o", "g", "y", "b", "p", "n", "k")

COLOR_WORDS = {
    "r": "red", "o": "orange", "g": "green", "y": "yellow",
    "b": "blue", "p": "purple", "n": "brown", "k": "pink",
}
WORD_COLORS = {w: c for c, w in COLOR_WORDS.items()}


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class AlchemyState:
    beakers: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class Person:
    shirt: str
    hat: str | None


@dataclass(frozen=True)
class SceneState:
    positions: tuple[Person | None, ...]


@dataclass(frozen=True)
class TangramsState:
    figures: tuple[int, ...]
    history: tuple[tuple[int, int], ...]  # (action step when removed, shape)
    step: int = 0


@dataclass(frozen=True)
class SconeAction:
    kind: str
    args: tuple

    def __str__(self):
        return f"{self.kind}({','.join(str(a) for a in self.args)})"


def mix(i: int) -> SconeAction: return SconeAction("mix", (i,))
def pour(i: int, j: int) -> SconeAction: return SconeAction("pour", (i, j))
def drain(a: int, i: int) -> SconeAction: return SconeAction("drain", (a, i))
def enter(c: str, i: int) -> SconeAction: return SconeAction("enter", (c, i))
def exit_(i: int) -> SconeAction: return SconeAction("exit", (i,))
def move(i: int, j: int) -> SconeAction: return SconeAction("move", (i, j))
def switch(i: int, j: int) -> SconeAction: return SconeAction("switch", (i, j))
def takehat(i: int, j: int) -> SconeAction: return SconeAction("takehat", (i, j))
def remove(i: int) -> SconeAction: return SconeAction("remove", (i,))
def swap(i: int, j: int) -> SconeAction: return SconeAction("swap", (i, j))
def insert(i: int, s: int) -> SconeAction: return SconeAction("insert", (i, s))


ARG_NAMES = {
    "mix": ("i",), "pour": ("i", "j"), "drain": ("a", "i"),
    "enter": ("c", "i"), "exit": ("i",), "move": ("i", "j"),
    "switch": ("i", "j"), "takehat": ("i", "j"),
    "remove": ("i",), "swap": ("i", "j"), "insert": ("i", "s"),
}


def action_to_json(a: SconeAction) -> dict:
    return {"type": a.kind, "args": dict(zip(ARG_NAMES[a.kind], a.args))}


def action_from_json(obj: dict) -> SconeAction:
    kind = obj["type"]
    args = tuple(obj["args"][name] for name in ARG_NAMES[kind])
    return SconeAction(kind, args)


# ---------------------------------------------------------------------------
# configs


@dataclass(frozen=True)
class AlchemyConfig:
    n_beakers: int = 7
    capacity: int = 4
    colors: tuple[str, ...] = ALCHEMY_COLORS


@dataclass(frozen=True)
class SceneConfig:
    n_positions: int = 10
    colors: tuple[str, ...] = SCENE_COLORS


@dataclass(frozen=True)
class TangramsConfig:
    n_slots: int = 5
    n_shapes: int = 5
    max_steps: int = 10  # size of the removal-step one-hot


# ---------------------------------------------------------------------------
# transition semantics


def _alchemy_transition(st: AlchemyState, a: SconeAction, cfg: AlchemyConfig) -> AlchemyState:
    bs = list(st.beakers)
    n = cfg.n_beakers

    def check_idx(i, name):
        if not 1 <= i <= n:
            raise InvalidAction(f"beaker index {name}={i} out of range")

    if a.kind == "mix":
        (i,) = a.args
        check_idx(i, "i")
        units = bs[i - 1]
        if len(set(units)) < 2:
            raise InvalidAction(f"mix requires >=2 distinct colors in beaker {i}")
        bs[i - 1] = (BROWN,) * len(units)
    elif a.kind == "pour":
        i, j = a.args
        check_idx(i, "i"); check_idx(j, "j")
        if i == j:
            raise InvalidAction("pour source equals target")
        if not bs[i - 1]:
            raise InvalidAction(f"pour from empty beaker {i}")
        if len(bs[i - 1]) + len(bs[j - 1]) > cfg.capacity:
            raise InvalidAction(f"pour overflows beaker {j}")
        bs[j - 1] = bs[j - 1] + bs[i - 1]
        bs[i - 1] = ()
    elif a.kind == "drain":
        amt, i = a.args
        check_idx(i, "i")
        if not 1 <= amt <= len(bs[i - 1]):
            raise InvalidAction(f"cannot drain {amt} units from beaker {i}")
        bs[i - 1] = bs[i - 1][:len(bs[i - 1]) - amt]
    else:
        raise InvalidAction(f"unknown alchemy action {a.kind}")
    return AlchemyState(tuple(bs))


def _scene_transition(st: SceneState, a: SconeAction, cfg: SceneConfig) -> SceneState:
    ps = list(st.positions)
    n = cfg.n_positions

    def check_idx(i, name):
        if not 1 <= i <= n:
            raise InvalidAction(f"position {name}={i} out of range")

    if a.kind == "enter":
        c, i = a.args
        check_idx(i, "i")
        if c not in cfg.colors:
            raise InvalidAction(f"unknown shirt color {c}")
        if ps[i - 1] is not None:
            raise InvalidAction(f"enter into occupied position {i}")
        ps[i - 1] = Person(shirt=c, hat=None)
    elif a.kind == "exit":
        (i,) = a.args
        check_idx(i, "i")
        if ps[i - 1] is None:
            raise InvalidAction(f"exit from empty position {i}")
        ps[i - 1] = None
    elif a.kind == "move":
        i, j = a.args
        check_idx(i, "i"); check_idx(j, "j")
        if i == j:
            raise InvalidAction("move source equals target")
        if ps[i - 1] is None:
            raise InvalidAction(f"move from empty position {i}")
        if ps[j - 1] is not None:
            raise InvalidAction(f"move into occupied position {j}")
        ps[j - 1], ps[i - 1] = ps[i - 1], None
    elif a.kind == "switch":
        i, j = a.args
        check_idx(i, "i"); check_idx(j, "j")
        if i == j:
            raise InvalidAction("switch with itself")
        if ps[i - 1] is None or ps[j - 1] is None:
            raise InvalidAction("switch requires two people")
        ps[i - 1], ps[j - 1] = ps[j - 1], ps[i - 1]
    elif a.kind == "takehat":
        i, j = a.args
        check_idx(i, "i"); check_idx(j, "j")
        if i == j:
            raise InvalidAction("takehat with itself")
        giver, taker = ps[i - 1], ps[j - 1]
        if giver is None or giver.hat is None:
            raise InvalidAction(f"person at {i} has no hat to give")
        if taker is None:
            raise InvalidAction(f"no person at {j} to take the hat")
        if taker.hat is not None:
            raise InvalidAction(f"person at {j} already has a hat")
        ps[i - 1] = Person(shirt=giver.shirt, hat=None)
        ps[j - 1] = Person(shirt=taker.shirt, hat=giver.hat)
    else:
        raise InvalidAction(f"unknown scene action {a.kind}")
    return SceneState(tuple(ps))


def _tangrams_transition(st: TangramsState, a: SconeAction, cfg: TangramsConfig) -> TangramsState:
    figs = list(st.figures)
    step = st.step + 1
    if a.kind == "remove":
        (i,) = a.args
        if not 1 <= i <= len(figs):
            raise InvalidAction(f"remove position {i} out of range")
        shape = figs.pop(i - 1)
        return TangramsState(tuple(figs), st.history + ((step, shape),), step)
    if a.kind == "swap":
        i, j = a.args
        if i == j:
            raise InvalidAction("swap with itself")
        if not (1 <= i <= len(figs) and 1 <= j <= len(figs)):
            raise InvalidAction(f"swap positions ({i},{j}) out of range")
        figs[i - 1], figs[j - 1] = figs[j - 1], figs[i - 1]
        return TangramsState(tuple(figs), st.history, step)
    if a.kind == "insert":
        i, s = a.args
        removed = {sh for _, sh in st.history}
        if s not in removed:
            raise InvalidAction(f"shape {s} was never removed")
        if s in figs:
            raise InvalidAction(f"shape {s} is already on the canvas")
        if len(figs) >= cfg.n_slots:
            raise InvalidAction("canvas is full")
        if not 1 <= i <= len(figs) + 1:
            raise InvalidAction(f"insert position {i} out of range")
        figs.insert(i - 1, s)
        return TangramsState(tuple(figs), st.history, step)
    raise InvalidAction(f"unknown tangrams action {a.kind}")


# ---------------------------------------------------------------------------
# encodings


def _encode_contents(units: tuple[str, ...], cfg: AlchemyConfig) -> Array:
    """Color-only unit-slot encoding; an empty beaker is all zeros."""
    nc = len(cfg.colors)
    out = np.zeros(cfg.capacity * nc)
    for slot, color in enumerate(units):
        out[slot * nc + cfg.colors.index(color)] = 1.0
    return out


def _encode_person_context(st: SceneState, pos: int, cfg: SceneConfig) -> Array:
    """Block [oob, empty, shirt one-hot, hat one-hot]; out-of-bounds positions
    get a dedicated sentinel bit."""
    nc = len(cfg.colors)
    out = np.zeros(2 + 2 * nc)
    if not 1 <= pos <= cfg.n_positions:
        out[0] = 1.0
        return out
    person = st.positions[pos - 1]
    if person is None:
        out[1] = 1.0
        return out
    out[2 + cfg.colors.index(person.shirt)] = 1.0
    if person.hat is not None:
        out[2 + nc + cfg.colors.index(person.hat)] = 1.0
    return out


# ---------------------------------------------------------------------------
# domain adapters


class SconeDomain:
    """Shared surface over the three domains used by the world model, the
    sequence models and the generator."""

    name: str
    is_scone = True
    kinds: tuple[str, ...]

    def transition(self, state, action: SconeAction):
        raise NotImplementedError

    def valid_actions(self, state) -> list[SconeAction]:
        raise NotImplementedError

    def action_grid(self, state) -> list[SconeAction]:
        """Every action in the full argument grid, valid or not."""
        raise NotImplementedError

    def percept(self, state) -> Array:
        raise NotImplementedError

    def contextual_embedding(self, state, action: SconeAction) -> Array:
        raise NotImplementedError

    # factored decoding -----------------------------------------------------
    @property
    def factors(self) -> list[tuple[str, int]]:
        """(name, cardinality) per factor; index 0 of argument factors means
        "argument absent"."""
        raise NotImplementedError

    def factor_indices(self, action: SconeAction) -> tuple[int, ...]:
        raise NotImplementedError

    def arg_feature(self, action: SconeAction) -> Array:
        """Type one-hot plus per-argument one-hots (no context)."""
        cached = getattr(self, "_arg_rows", None)
        if cached is None:
            cached = self._arg_rows = {}
        row = cached.get(action)
        if row is not None:
            return row
        sizes = [size for _, size in self.factors]
        idxs = self.factor_indices(action)
        out = np.zeros(sum(sizes))
        off = 0
        for size, idx in zip(sizes, idxs):
            out[off + idx] = 1.0
            off += size
        cached[action] = out
        return out

    def contextual_embedding(self, state, action: SconeAction) -> Array:
        out = np.zeros(self.context_dim)
        self._context_into(state, action, out, self._state_cache(state))
        return out

    def _state_cache(self, state):
        return None

    def _context_into(self, state, action: SconeAction, out: Array, cache) -> None:
        raise NotImplementedError

    def action_features(self, state, action: SconeAction) -> Array:
        return np.concatenate([self.arg_feature(action), self.contextual_embedding(state, action)])

    def action_feature_matrix(self, state, actions) -> Array:
        """Stacked action_features rows; the per-state context cache makes
        this much cheaper than per-action assembly."""
        args_dim = sum(size for _, size in self.factors)
        A = np.zeros((len(actions), self.action_feature_dim))
        cache = self._state_cache(state)
        for r, a in enumerate(actions):
            A[r, :args_dim] = self.arg_feature(a)
            self._context_into(state, a, A[r, args_dim:], cache)
        return A

    @property
    def percept_dim(self) -> int:
        raise NotImplementedError

    @property
    def context_dim(self) -> int:
        raise NotImplementedError

    @property
    def action_feature_dim(self) -> int:
        return sum(size for _, size in self.factors) + self.context_dim

    # speaker encoders consume the same context-dependent embeddings
    @property
    def action_input_dim(self) -> int:
        return self.action_feature_dim

    def action_input_feature(self, state, action: SconeAction) -> Array:
        return self.action_features(state, action)

    @property
    def listener_inventory(self):
        return None  # factored scoring enumerates valid actions per state

    def action_to_json(self, a: SconeAction) -> dict:
        return action_to_json(a)

    def action_from_json(self, obj: dict) -> SconeAction:
        return action_from_json(obj)

    def action_sort_key(self, a: SconeAction):
        return (self.kinds.index(a.kind), a.args)

    def random_state(self, rng: np.random.Generator):
        raise NotImplementedError

    # serialization ---------------------------------------------------------
    def state_to_json(self, state) -> dict:
        raise NotImplementedError

    def state_from_json(self, obj: dict):
        raise NotImplementedError


class AlchemyDomain(SconeDomain):
    name = "alchemy"
    kinds = ("mix", "pour", "drain")

    def __init__(self, cfg: AlchemyConfig = AlchemyConfig()):
        self.cfg = cfg

    def transition(self, state, action):
        return _alchemy_transition(state, action, self.cfg)

    def valid_actions(self, state: AlchemyState) -> list[SconeAction]:
        out = []
        bs = state.beakers
        n = self.cfg.n_beakers
        for i in range(1, n + 1):
            if len(set(bs[i - 1])) >= 2:
                out.append(mix(i))
        for i in range(1, n + 1):
            if not bs[i - 1]:
                continue
            for j in range(1, n + 1):
                if i != j and len(bs[i - 1]) + len(bs[j - 1]) <= self.cfg.capacity:
                    out.append(pour(i, j))
        for a in range(1, self.cfg.capacity + 1):
            for i in range(1, n + 1):
                if a <= len(bs[i - 1]):
                    out.append(drain(a, i))
        out.sort(key=self.action_sort_key)
        return out

    def action_grid(self, state) -> list[SconeAction]:
        n = self.cfg.n_beakers
        grid = [mix(i) for i in range(1, n + 1)]
        grid += [pour(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
        grid += [drain(a, i) for a in range(1, self.cfg.capacity + 1) for i in range(1, n + 1)]
        grid.sort(key=self.action_sort_key)
        return grid

    @property
    def percept_dim(self):
        return self.cfg.n_beakers * self.cfg.capacity * (1 + len(self.cfg.colors))

    def percept(self, state: AlchemyState) -> Array:
        nc = len(self.cfg.colors)
        width = 1 + nc
        out = np.zeros(self.percept_dim)
        for b, units in enumerate(state.beakers):
            for slot in range(self.cfg.capacity):
                off = (b * self.cfg.capacity + slot) * width
                if slot < len(units):
                    out[off + 1 + self.cfg.colors.index(units[slot])] = 1.0
                else:
                    out[off] = 1.0
        return out

    @property
    def context_dim(self):
        return self.cfg.capacity + 2 * self.cfg.capacity * len(self.cfg.colors)

    def _state_cache(self, state: AlchemyState):
        return [_encode_contents(b, self.cfg) for b in state.beakers]

    def _context_into(self, state: AlchemyState, a: SconeAction, out: Array, cache) -> None:
        cfg = self.cfg
        block = cfg.capacity * len(cfg.colors)
        if a.kind == "mix":
            (i,) = a.args
            out[cfg.capacity:cfg.capacity + block] = cache[i - 1]
        elif a.kind == "pour":
            i, j = a.args
            out[cfg.capacity:cfg.capacity + block] = cache[i - 1]
            out[cfg.capacity + block:] = cache[j - 1]
        elif a.kind == "drain":
            amt, i = a.args
            out[amt - 1] = 1.0
            out[cfg.capacity:cfg.capacity + block] = cache[i - 1]

    @property
    def factors(self):
        n = self.cfg.n_beakers
        return [("type", 3), ("i", 1 + n), ("j", 1 + n), ("a", 1 + self.cfg.capacity)]

    def factor_indices(self, a: SconeAction):
        if a.kind == "mix":
            return (0, a.args[0], 0, 0)
        if a.kind == "pour":
            return (1, a.args[0], a.args[1], 0)
        return (2, a.args[1], 0, a.args[0])

    def random_state(self, rng: np.random.Generator) -> AlchemyState:
        cfg = self.cfg
        beakers = []
        for _ in range(cfg.n_beakers):
            h = int(rng.integers(0, cfg.capacity))  # leave room for pours
            beakers.append(tuple(cfg.colors[int(rng.integers(len(cfg.colors)))] for _ in range(h)))
        return AlchemyState(tuple(beakers))

    def state_to_json(self, state: AlchemyState) -> dict:
        return {"beakers": [list(b) for b in state.beakers]}

    def state_from_json(self, obj: dict) -> AlchemyState:
        return AlchemyState(tuple(tuple(b) for b in obj["beakers"]))


class SceneDomain(SconeDomain):
    name = "scene"
    kinds = ("enter", "exit", "move", "switch", "takehat")

    def __init__(self, cfg: SceneConfig = SceneConfig()):
        self.cfg = cfg

    def transition(self, state, action):
        return _scene_transition(state, action, self.cfg)

    def valid_actions(self, state: SceneState) -> list[SconeAction]:
        cfg = self.cfg
        ps = state.positions
        occupied = [i for i in range(1, cfg.n_positions + 1) if ps[i - 1] is not None]
        empty = [i for i in range(1, cfg.n_positions + 1) if ps[i - 1] is None]
        out = [enter(c, i) for c in cfg.colors for i in empty]
        out += [exit_(i) for i in occupied]
        out += [move(i, j) for i in occupied for j in empty]
        out += [switch(i, j) for i in occupied for j in occupied if i != j]
        hats = [i for i in occupied if ps[i - 1].hat is not None]
        bare = [j for j in occupied if ps[j - 1].hat is None]
        out += [takehat(i, j) for i in hats for j in bare if i != j]
        out.sort(key=self.action_sort_key)
        return out

    def action_grid(self, state) -> list[SconeAction]:
        cfg = self.cfg
        pos = range(1, cfg.n_positions + 1)
        grid = [enter(c, i) for c in cfg.colors for i in pos]
        grid += [exit_(i) for i in pos]
        grid += [move(i, j) for i in pos for j in pos if i != j]
        grid += [switch(i, j) for i in pos for j in pos if i != j]
        grid += [takehat(i, j) for i in pos for j in pos if i != j]
        grid.sort(key=self.action_sort_key)
        return grid

    @property
    def percept_dim(self):
        return self.cfg.n_positions * 2 * (1 + len(self.cfg.colors))

    def percept(self, state: SceneState) -> Array:
        cfg = self.cfg
        nc = len(cfg.colors)
        width = 2 * (1 + nc)
        out = np.zeros(self.percept_dim)
        for p in range(cfg.n_positions):
            off = p * width
            person = state.positions[p]
            if person is None:
                out[off] = 1.0
                out[off + 1 + nc] = 1.0
            else:
                out[off + 1 + cfg.colors.index(person.shirt)] = 1.0
                if person.hat is None:
                    out[off + 1 + nc] = 1.0
                else:
                    out[off + 2 + nc + cfg.colors.index(person.hat)] = 1.0
        return out

    @property
    def context_dim(self):
        return 3 * (2 + 2 * len(self.cfg.colors))

    def _state_cache(self, state: SceneState):
        # person-context blocks for positions 0..n+1 (index shifted by one)
        return [_encode_person_context(state, pos, self.cfg)
                for pos in range(0, self.cfg.n_positions + 2)]

    def _context_into(self, state: SceneState, a: SconeAction, out: Array, cache) -> None:
        block = 2 + 2 * len(self.cfg.colors)

        def enc(pos):
            return cache[pos]

        if a.kind == "enter":
            _, i = a.args
            out[:block] = enc(i - 1)
            out[block:2 * block] = enc(i + 1)
        elif a.kind == "exit":
            (i,) = a.args
            out[:block] = enc(i)
            out[block:2 * block] = enc(i - 1)
            out[2 * block:] = enc(i + 1)
        elif a.kind == "move":
            i, j = a.args
            out[:block] = enc(i)
            out[block:2 * block] = enc(j - 1)
            out[2 * block:] = enc(j + 1)
        else:  # switch, takehat: people at i and j
            i, j = a.args
            out[:block] = enc(i)
            out[block:2 * block] = enc(j)

    @property
    def factors(self):
        n = self.cfg.n_positions
        return [("type", 5), ("c", 1 + len(self.cfg.colors)), ("i", 1 + n), ("j", 1 + n)]

    def factor_indices(self, a: SconeAction):
        t = self.kinds.index(a.kind)
        if a.kind == "enter":
            c, i = a.args
            return (t, 1 + self.cfg.colors.index(c), i, 0)
        if a.kind == "exit":
            return (t, 0, a.args[0], 0)
        i, j = a.args
        return (t, 0, i, j)

    def random_state(self, rng: np.random.Generator) -> SceneState:
        cfg = self.cfg
        ps: list[Person | None] = []
        for _ in range(cfg.n_positions):
            if rng.random() < 0.5:
                shirt = cfg.colors[int(rng.integers(len(cfg.colors)))]
                hat = cfg.colors[int(rng.integers(len(cfg.colors)))] if rng.random() < 0.4 else None
                ps.append(Person(shirt, hat))
            else:
                ps.append(None)
        return SceneState(tuple(ps))

    def state_to_json(self, state: SceneState) -> dict:
        return {"positions": [None if p is None else {"shirt": p.shirt, "hat": p.hat}
                              for p in state.positions]}

    def state_from_json(self, obj: dict) -> SceneState:
        return SceneState(tuple(
            None if p is None else Person(p["shirt"], p.get("hat"))
            for p in obj["positions"]))


class TangramsDomain(SconeDomain):
    name = "tangrams"
    kinds = ("remove", "swap", "insert")

    def __init__(self, cfg: TangramsConfig = TangramsConfig()):
        self.cfg = cfg

    def transition(self, state, action):
        return _tangrams_transition(state, action, self.cfg)

    def valid_actions(self, state: TangramsState) -> list[SconeAction]:
        figs = state.figures
        out = [remove(i) for i in range(1, len(figs) + 1)]
        out += [swap(i, j) for i in range(1, len(figs) + 1)
                for j in range(1, len(figs) + 1) if i != j]
        if len(figs) < self.cfg.n_slots:
            removed = sorted({sh for _, sh in state.history} - set(figs))
            out += [insert(i, s) for i in range(1, len(figs) + 2) for s in removed]
        out.sort(key=self.action_sort_key)
        return out

    def action_grid(self, state) -> list[SconeAction]:
        cfg = self.cfg
        pos = range(1, cfg.n_slots + 1)
        grid = [remove(i) for i in pos]
        grid += [swap(i, j) for i in pos for j in pos if i != j]
        # insert requires a free slot, so its position never exceeds n_slots
        grid += [insert(i, s) for i in pos for s in range(cfg.n_shapes)]
        grid.sort(key=self.action_sort_key)
        return grid

    @property
    def percept_dim(self):
        return self.cfg.n_slots * (1 + self.cfg.n_shapes)

    def percept(self, state: TangramsState) -> Array:
        width = 1 + self.cfg.n_shapes
        out = np.zeros(self.percept_dim)
        for slot in range(self.cfg.n_slots):
            off = slot * width
            if slot < len(state.figures):
                out[off + 1 + state.figures[slot]] = 1.0
            else:
                out[off] = 1.0
        return out

    @property
    def context_dim(self):
        return self.cfg.max_steps

    def _state_cache(self, state: TangramsState):
        last_removed = {}
        for t, sh in state.history:
            last_removed[sh] = t
        return last_removed

    def _context_into(self, state: TangramsState, a: SconeAction, out: Array, cache) -> None:
        if a.kind == "insert":
            _, s = a.args
            when = cache.get(s)
            if when is not None:
                out[min(when, self.cfg.max_steps) - 1] = 1.0

    @property
    def factors(self):
        n = self.cfg.n_slots
        return [("type", 3), ("i", 1 + n), ("j", 1 + n), ("s", 1 + self.cfg.n_shapes)]

    def factor_indices(self, a: SconeAction):
        t = self.kinds.index(a.kind)
        if a.kind == "remove":
            return (t, a.args[0], 0, 0)
        if a.kind == "swap":
            return (t, a.args[0], a.args[1], 0)
        i, s = a.args
        return (t, i, 0, 1 + s)

    def random_state(self, rng: np.random.Generator) -> TangramsState:
        shapes = list(range(self.cfg.n_shapes))
        rng.shuffle(shapes)
        return TangramsState(tuple(shapes[:self.cfg.n_slots]), (), 0)

    def state_to_json(self, state: TangramsState) -> dict:
        return {"figures": list(state.figures),
                "history": [list(h) for h in state.history],
                "step": state.step}

    def state_from_json(self, obj: dict) -> TangramsState:
        return TangramsState(tuple(obj["figures"]),
                             tuple(tuple(h) for h in obj["history"]),
                             obj.get("step", 0))


SCONE_DOMAIN_NAMES = ("alchemy", "scene", "tangrams")


@lru_cache(maxsize=None)
def _default_domain(name: str) -> SconeDomain:
    return {"alchemy": AlchemyDomain, "scene": SceneDomain, "tangrams": TangramsDomain}[name]()


def get_scone_domain(name: str) -> SconeDomain:
    if name not in SCONE_DOMAIN_NAMES:
        raise KeyError(f"unknown scone domain {name!r}")
    return _default_domain(name)
