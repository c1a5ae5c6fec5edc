"""SAIL-style grid navigation: maps, poses, percepts, movement actions,
collapsed-action representation and start-orientation handling.

Map text format (one item per line, '#' comments allowed):
    node <x> <y> [<object>]
    edge <x1> <y1> <x2> <y2> floor=<floor> wall=<wall>
Edges must connect orthogonally adjacent nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Blocked, DegenerateRoute, InvalidAction, ParseError, UndeterminedOrientation

Array = np.ndarray

ORIENTATIONS = ("N", "E", "S", "W")  # clockwise order
UNDETERMINED = "U"
DELTAS = {"N": (0, 1), "E": (1, 0), "S": (0, -1), "W": (-1, 0)}

FLOOR_PATTERNS = ("blue", "brick", "concrete", "flower", "grass", "gravel", "wood", "yellow")
WALL_PATTERNS = ("butterfly", "fish", "tower")
OBJECT_KINDS = ("barstool", "chair", "easel", "hatrack", "lamp", "sofa")

Coord = tuple[int, int]


def rotate(orientation: str, steps_cw: int) -> str:
    if orientation == UNDETERMINED:
        return UNDETERMINED
    i = ORIENTATIONS.index(orientation)
    return ORIENTATIONS[(i + steps_cw) % 4]


def direction_between(a: Coord, b: Coord) -> str:
    d = (b[0] - a[0], b[1] - a[1])
    for o, delta in DELTAS.items():
        if delta == d:
            return o
    raise ValueError(f"nodes {a} and {b} are not adjacent")


@dataclass(frozen=True)
class EdgeAttrs:
    floor: str
    wall: str


class SailMap:
    """Immutable grid of hallways; equality and hashing are structural."""

    def __init__(self, nodes, edges, objects=()):
        self.nodes = frozenset(tuple(n) for n in nodes)
        self._attrs: dict[tuple[Coord, Coord], EdgeAttrs] = {}
        for a, b, attrs in edges:
            a, b = tuple(a), tuple(b)
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge ({a},{b}) references an unknown node")
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
                raise ValueError(f"edge ({a},{b}) is not orthogonally adjacent")
            if attrs.floor not in FLOOR_PATTERNS:
                raise ValueError(f"unknown floor pattern {attrs.floor!r}")
            if attrs.wall not in WALL_PATTERNS:
                raise ValueError(f"unknown wall pattern {attrs.wall!r}")
            key = (min(a, b), max(a, b))
            self._attrs[key] = attrs
        self.objects: dict[Coord, str] = {}
        for node, obj in dict(objects).items():
            node = tuple(node)
            if node not in self.nodes:
                raise ValueError(f"object at unknown node {node}")
            if obj not in OBJECT_KINDS:
                raise ValueError(f"unknown object kind {obj!r}")
            self.objects[node] = obj
        self._key = (tuple(sorted(self.nodes)),
                     tuple(sorted((k, v.floor, v.wall) for k, v in self._attrs.items())),
                     tuple(sorted(self.objects.items())))

    def edge(self, a: Coord, b: Coord) -> EdgeAttrs | None:
        return self._attrs.get((min(a, b), max(a, b)))

    def neighbor(self, node: Coord, orientation: str) -> Coord | None:
        dx, dy = DELTAS[orientation]
        nxt = (node[0] + dx, node[1] + dy)
        return nxt if self.edge(node, nxt) is not None else None

    def __eq__(self, other):
        return isinstance(other, SailMap) and self._key == other._key

    def __hash__(self):
        return hash(self._key)


@dataclass(frozen=True)
class Pose:
    node: Coord
    orientation: str


@dataclass(frozen=True)
class SailState:
    grid: SailMap
    pose: Pose


@dataclass(frozen=True)
class SailAction:
    kind: str      # move | left | right | stop
    n: int = 0     # >= 1 for move

    def __str__(self):
        return f"move{self.n}" if self.kind == "move" else self.kind


def move_n(n: int) -> SailAction:
    if n < 1:
        raise ValueError("move count must be >= 1")
    return SailAction("move", n)


FORWARD = SailAction("move", 1)
LEFT = SailAction("left")
RIGHT = SailAction("right")
STOP = SailAction("stop")

SAIL_KINDS = ("move", "left", "right", "stop")


def sail_action_to_json(a: SailAction) -> dict:
    if a.kind == "move":
        return {"type": "move", "args": {"n": a.n}}
    return {"type": a.kind, "args": {}}


def sail_action_from_json(obj: dict) -> SailAction:
    if obj["type"] == "move":
        return move_n(obj["args"]["n"])
    return SailAction(obj["type"])


# ---------------------------------------------------------------------------
# transitions


def transition(state: SailState, action: SailAction) -> SailState:
    pose = state.pose
    if action.kind in ("left", "right"):
        steps = -1 if action.kind == "left" else 1
        return SailState(state.grid, Pose(pose.node, rotate(pose.orientation, steps)))
    if action.kind == "stop":
        return state
    if action.kind == "move":
        if pose.orientation == UNDETERMINED:
            raise UndeterminedOrientation()
        node = pose.node
        for k in range(action.n):
            nxt = state.grid.neighbor(node, pose.orientation)
            if nxt is None:
                raise Blocked(at_step=k + 1)
            node = nxt
        return SailState(state.grid, Pose(node, pose.orientation))
    raise InvalidAction(f"unknown sail action {action.kind}")


def valid_primitive_actions(state: SailState) -> list[SailAction]:
    out = []
    pose = state.pose
    if pose.orientation != UNDETERMINED and state.grid.neighbor(pose.node, pose.orientation):
        out.append(FORWARD)
    out += [LEFT, RIGHT, STOP]
    return out


# ---------------------------------------------------------------------------
# percepts

# per relative direction: [edge-exists, floor one-hot, wall one-hot]
_DIR_BLOCK = 1 + len(FLOOR_PATTERNS) + len(WALL_PATTERNS)
PERCEPT_DIM = 4 * _DIR_BLOCK + len(OBJECT_KINDS)


def percept(grid: SailMap, pose: Pose) -> Array:
    out = np.zeros(PERCEPT_DIM)
    if pose.orientation != UNDETERMINED:
        for d, rel in enumerate((0, -1, 1, 2)):  # forward, left, right, behind
            o = rotate(pose.orientation, rel)
            dx, dy = DELTAS[o]
            attrs = grid.edge(pose.node, (pose.node[0] + dx, pose.node[1] + dy))
            off = d * _DIR_BLOCK
            if attrs is not None:
                out[off] = 1.0
                out[off + 1 + FLOOR_PATTERNS.index(attrs.floor)] = 1.0
                out[off + 1 + len(FLOOR_PATTERNS) + WALL_PATTERNS.index(attrs.wall)] = 1.0
    obj = grid.objects.get(pose.node)
    if obj is not None:
        out[4 * _DIR_BLOCK + OBJECT_KINDS.index(obj)] = 1.0
    return out


# ---------------------------------------------------------------------------
# collapsed representation (speaker side)


def collapse_moves(actions: list[SailAction]) -> list[SailAction]:
    out: list[SailAction] = []
    for a in actions:
        if a.kind == "move" and out and out[-1].kind == "move":
            out[-1] = move_n(out[-1].n + a.n)
        else:
            out.append(a)
    return out


def expand_moves(actions: list[SailAction]) -> list[SailAction]:
    out: list[SailAction] = []
    for a in actions:
        if a.kind == "move":
            out.extend([FORWARD] * a.n)
        else:
            out.append(a)
    return out


# ---------------------------------------------------------------------------
# start orientation


def resolve_start_orientation(mode: str, route_nodes: list[Coord],
                              clockwise: bool = True) -> str:
    """Abs fixes the start orientation globally (N). Rel sets it 90 degrees
    from the direction toward the route's next node (clockwise by default)."""
    if mode == "abs":
        return "N"
    if mode != "rel":
        raise ValueError(f"unknown orientation mode {mode!r}")
    first_move = None
    for a, b in zip(route_nodes, route_nodes[1:]):
        if a != b:
            first_move = (a, b)
            break
    if first_move is None:
        raise DegenerateRoute("route never moves; relative orientation undefined")
    heading = direction_between(*first_move)
    return rotate(heading, 1 if clockwise else -1)


# ---------------------------------------------------------------------------
# map io


def parse_map(text: str) -> SailMap:
    nodes: list[Coord] = []
    edges: list[tuple[Coord, Coord, EdgeAttrs]] = []
    objects: dict[Coord, str] = {}
    saw_content = False
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        saw_content = True
        parts = line.split()
        try:
            if parts[0] == "node":
                x, y = int(parts[1]), int(parts[2])
                nodes.append((x, y))
                if len(parts) > 3:
                    objects[(x, y)] = parts[3]
            elif parts[0] == "edge":
                x1, y1, x2, y2 = (int(p) for p in parts[1:5])
                kv = dict(p.split("=", 1) for p in parts[5:])
                edges.append(((x1, y1), (x2, y2), EdgeAttrs(kv["floor"], kv["wall"])))
            else:
                raise ParseError(f"unknown directive {parts[0]!r}", line=ln)
        except (IndexError, KeyError, ValueError) as e:
            if isinstance(e, ParseError):
                raise
            raise ParseError(f"malformed map line: {raw!r} ({e})", line=ln) from e
    if not saw_content:
        raise ParseError("empty map file")
    try:
        return SailMap(nodes, edges, objects)
    except ValueError as e:
        raise ParseError(str(e)) from e


def format_map(grid: SailMap) -> str:
    lines = []
    for node in sorted(grid.nodes):
        obj = grid.objects.get(node)
        lines.append(f"node {node[0]} {node[1]}" + (f" {obj}" if obj else ""))
    for (a, b), attrs in sorted(grid._attrs.items()):
        lines.append(f"edge {a[0]} {a[1]} {b[0]} {b[1]} floor={attrs.floor} wall={attrs.wall}")
    return "\n".join(lines) + "\n"


def load_map(path) -> SailMap:
    with open(path, encoding="utf-8") as f:
        return parse_map(f.read())


def map_to_json(grid: SailMap) -> dict:
    return {
        "nodes": [list(n) for n in sorted(grid.nodes)],
        "edges": [[a[0], a[1], b[0], b[1], {"floor": at.floor, "wall": at.wall}]
                  for (a, b), at in sorted(grid._attrs.items())],
        "objects": [[n[0], n[1], o] for n, o in sorted(grid.objects.items())],
    }


def map_from_json(obj: dict) -> SailMap:
    nodes = [tuple(n) for n in obj["nodes"]]
    edges = [((e[0], e[1]), (e[2], e[3]), EdgeAttrs(e[4]["floor"], e[4]["wall"]))
             for e in obj["edges"]]
    objects = {(o[0], o[1]): o[2] for o in obj.get("objects", [])}
    return SailMap(nodes, edges, objects)


# ---------------------------------------------------------------------------
# synthetic maps and routes (test-scale data)


class SailDomain:
    """Adapter with the same surface as the scone domains. Listener-side
    actions are primitive; collapsed moves are a speaker-side representation."""

    name = "sail"
    is_scone = False
    kinds = SAIL_KINDS
    max_collapsed = 10  # collapsed move-count one-hot cap

    @property
    def listener_inventory(self) -> list[SailAction]:
        return [FORWARD, LEFT, RIGHT, STOP]

    def transition(self, state: SailState, action: SailAction) -> SailState:
        return transition(state, action)

    def valid_actions(self, state: SailState) -> list[SailAction]:
        return valid_primitive_actions(state)

    @property
    def percept_dim(self) -> int:
        return PERCEPT_DIM

    def percept(self, state: SailState) -> Array:
        return percept(state.grid, state.pose)

    def action_sort_key(self, a: SailAction):
        return (SAIL_KINDS.index(a.kind), a.n)

    # speaker encoder input for one (collapsed) action
    @property
    def action_input_dim(self) -> int:
        return len(SAIL_KINDS) + self.max_collapsed

    def action_input_feature(self, state: SailState, action: SailAction) -> Array:
        out = np.zeros(self.action_input_dim)
        out[SAIL_KINDS.index(action.kind)] = 1.0
        if action.kind == "move":
            out[len(SAIL_KINDS) + min(action.n, self.max_collapsed) - 1] = 1.0
        return out

    def action_to_json(self, a):
        return sail_action_to_json(a)

    def action_from_json(self, obj):
        return sail_action_from_json(obj)

    def state_to_json(self, state: SailState) -> dict:
        return {"map": map_to_json(state.grid),
                "pose": {"node": list(state.pose.node), "orientation": state.pose.orientation}}

    def state_from_json(self, obj: dict) -> SailState:
        pose = Pose(tuple(obj["pose"]["node"]), obj["pose"]["orientation"])
        return SailState(map_from_json(obj["map"]), pose)


def synth_map(rng: np.random.Generator, width: int = 4, height: int = 4,
              edge_keep: float = 0.85, object_rate: float = 0.3) -> SailMap:
    nodes = [(x, y) for x in range(width) for y in range(height)]
    edges = []
    for x, y in nodes:
        for dx, dy in ((1, 0), (0, 1)):
            b = (x + dx, y + dy)
            if b in set(nodes) and rng.random() < edge_keep:
                attrs = EdgeAttrs(
                    FLOOR_PATTERNS[int(rng.integers(len(FLOOR_PATTERNS)))],
                    WALL_PATTERNS[int(rng.integers(len(WALL_PATTERNS)))],
                )
                edges.append(((x, y), b, attrs))
    objects = {}
    for n in nodes:
        if rng.random() < object_rate:
            objects[n] = OBJECT_KINDS[int(rng.integers(len(OBJECT_KINDS)))]
    return SailMap(nodes, edges, objects)
