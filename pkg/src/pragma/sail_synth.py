"""Small synthetic navigation corpora for exercising the SAIL pipeline.

Routes are random walks over a synthetic map, segmented into sentences like
"turn left and walk forward two times"; the closing segment issues "stop".
"""

from __future__ import annotations

import numpy as np

from . import sail
from .errors import GenerationStuck
from .world import Instance, Segment, apply_actions

_COUNT_WORDS = {1: ("once",), 2: ("two", "times"), 3: ("three", "times"), 4: ("four", "times")}


def _segment_sentence(actions: list[sail.SailAction]) -> tuple[str, ...]:
    words: list[str] = []
    i = 0
    while i < len(actions):
        a = actions[i]
        if words:
            words.append("and")
        if a.kind == "left":
            words += ["turn", "left"]
            i += 1
        elif a.kind == "right":
            words += ["turn", "right"]
            i += 1
        elif a.kind == "stop":
            words += ["stop"]
            i += 1
        else:
            n = 0
            while i < len(actions) and actions[i].kind == "move":
                n += actions[i].n
                i += 1
            words += ["walk", "forward"] + list(_COUNT_WORDS[min(n, 4)])
    return tuple(words)


def synth_sail_instances(n: int, segments: int = 3, seed: int = 0,
                         width: int = 4, height: int = 4) -> list[Instance]:
    rng = np.random.default_rng(seed)
    grid = sail.synth_map(rng, width, height)
    out = []
    for index in range(n):
        for _attempt in range(50):
            node = sorted(grid.nodes)[int(rng.integers(len(grid.nodes)))]
            orient = sail.ORIENTATIONS[int(rng.integers(4))]
            start = sail.SailState(grid, sail.Pose(node, orient))
            state = start
            segs: list[Segment] = []
            ok = True
            for k in range(segments):
                actions: list[sail.SailAction] = []
                if rng.random() < 0.6:
                    turn = sail.LEFT if rng.random() < 0.5 else sail.RIGHT
                    actions.append(turn)
                    state = sail.transition(state, turn)
                steps = int(rng.integers(1, 4))
                moved = 0
                for _ in range(steps):
                    if state.grid.neighbor(state.pose.node, state.pose.orientation) is None:
                        break
                    state = sail.transition(state, sail.FORWARD)
                    actions.append(sail.FORWARD)
                    moved += 1
                if k == segments - 1:
                    actions.append(sail.STOP)
                if not actions or (moved == 0 and not actions[-1].kind == "stop" and len(actions) == 1):
                    pass  # a lone turn is still a fine segment
                if not actions:
                    ok = False
                    break
                segs.append(Segment(_segment_sentence(actions), tuple(actions), ()))
            if not ok:
                continue
            # fill recorded states by replay
            st = start
            filled = []
            for seg in segs:
                states = apply_actions(st, seg.actions)
                filled.append(Segment(seg.sentence, seg.actions, tuple(states)))
                st = states[-1]
            out.append(Instance(f"sail-{seed}-{index}", "sail", start, tuple(filled)))
            break
        else:
            raise GenerationStuck("could not build a sail route")
    return out
