import numpy as np
import pytest

from pragma import scone
from pragma.errors import InvalidAction
from pragma.scone import (
    AlchemyState, Person, SceneState, TangramsState,
    drain, enter, exit_, insert, mix, move, pour, remove, swap, switch, takehat,
    get_scone_domain,
)


def rng(seed=0):
    return np.random.default_rng(seed)


ALC = get_scone_domain("alchemy")
SCN = get_scone_domain("scene")
TAN = get_scone_domain("tangrams")


def alc_state(*beakers):
    bs = list(beakers) + [()] * (7 - len(beakers))
    return AlchemyState(tuple(tuple(b) for b in bs))


# ---------------------------------------------------------------------------
# transition semantics


def test_pour_moves_everything():
    st = alc_state(("o", "o"), ())
    out = ALC.transition(st, pour(1, 2))
    assert out.beakers[0] == ()
    assert out.beakers[1] == ("o", "o")


def test_mix_turns_brown():
    st = alc_state((), (), ("r", "g"))
    out = ALC.transition(st, mix(3))
    assert out.beakers[2] == ("n", "n")


def test_mix_requires_two_colors():
    st = alc_state(("r", "r"))
    with pytest.raises(InvalidAction):
        ALC.transition(st, mix(1))


def test_pour_overflow_rejected():
    st = alc_state(("r", "r", "r"), ("g", "g"))
    with pytest.raises(InvalidAction):
        ALC.transition(st, pour(1, 2))


def test_drain_removes_top():
    st = alc_state(("r", "g", "y"))
    out = ALC.transition(st, drain(2, 1))
    assert out.beakers[0] == ("r",)


def test_scene_switch_involution():
    st = SceneState((Person("r", None), None, None, Person("b", "g")) + (None,) * 6)
    once = SCN.transition(st, switch(1, 4))
    twice = SCN.transition(once, switch(1, 4))
    assert twice == st
    assert once.positions[0] == Person("b", "g")


def test_scene_exit_empty_rejected():
    st = SceneState((None,) * 10)
    with pytest.raises(InvalidAction):
        SCN.transition(st, exit_(3))


def test_scene_takehat():
    st = SceneState((Person("r", "y"), Person("b", None)) + (None,) * 8)
    out = SCN.transition(st, takehat(1, 2))
    assert out.positions[0] == Person("r", None)
    assert out.positions[1] == Person("b", "y")


def test_tangrams_remove_insert_restores_canvas():
    st = TangramsState((0, 1, 2, 3, 4), (), 0)
    removed = TAN.transition(st, remove(2))
    assert removed.figures == (0, 2, 3, 4)
    assert removed.history == ((1, 1),)
    back = TAN.transition(removed, insert(2, 1))
    assert back.figures == st.figures


def test_tangrams_insert_never_removed_rejected():
    st = TangramsState((0, 1, 2), ((1, 4),), 1)
    with pytest.raises(InvalidAction):
        TAN.transition(st, insert(1, 3))


# ---------------------------------------------------------------------------
# valid actions vs brute force


@pytest.mark.parametrize("dom", [ALC, SCN, TAN])
def test_valid_actions_match_brute_force(dom):
    r = rng(42)
    for trial in range(25):
        state = dom.random_state(r)
        # walk a few steps so histories and hats appear
        for _ in range(trial % 4):
            acts = dom.valid_actions(state)
            if not acts:
                break
            state = dom.transition(state, acts[int(r.integers(len(acts)))])
        analytic = dom.valid_actions(state)
        brute = []
        for action in dom.action_grid(state):
            try:
                dom.transition(state, action)
                brute.append(action)
            except InvalidAction:
                pass
        assert analytic == sorted(brute, key=dom.action_sort_key)
        # everything valid really does transition; a sample outside errors
        for a in analytic:
            dom.transition(state, a)


def test_invalid_outside_valid_set_errors():
    st = alc_state(("r",), ("g", "g", "g", "g"))
    valid = set(ALC.valid_actions(st))
    for action in ALC.action_grid(st):
        if action in valid:
            continue
        with pytest.raises(InvalidAction):
            ALC.transition(st, action)


def test_empty_tangrams_canvas_no_history_no_actions():
    st = TangramsState((), (), 0)
    assert TAN.valid_actions(st) == []


def test_full_beaker_never_pour_target():
    st = alc_state(("r", "g"), ("g", "g", "g", "g"))
    for a in ALC.valid_actions(st):
        if a.kind == "pour":
            assert a.args[1] != 2


# ---------------------------------------------------------------------------
# conservation properties


def test_random_walk_invariants():
    r = rng(7)
    for dom in (ALC, SCN, TAN):
        state = dom.random_state(r)
        for _ in range(60):
            acts = dom.valid_actions(state)
            if not acts:
                break
            a = acts[int(r.integers(len(acts)))]
            nxt = dom.transition(state, a)
            if dom is ALC:
                before = sum(len(b) for b in state.beakers)
                after = sum(len(b) for b in nxt.beakers)
                if a.kind == "pour":
                    assert after == before
                elif a.kind == "mix":
                    assert after == before
                    assert set(nxt.beakers[a.args[0] - 1]) == {scone.BROWN}
                else:
                    assert after == before - a.args[0]
            elif dom is SCN:
                before = sum(p is not None for p in state.positions)
                after = sum(p is not None for p in nxt.positions)
                expected = before + (1 if a.kind == "enter" else -1 if a.kind == "exit" else 0)
                assert after == expected
            else:
                on_canvas = set(nxt.figures)
                removed = {sh for _, sh in nxt.history}
                assert on_canvas | removed >= set(state.figures)
                assert len(set(nxt.figures)) == len(nxt.figures)
            state = nxt


# ---------------------------------------------------------------------------
# percepts


def test_percept_dims():
    assert ALC.percept_dim == 7 * 4 * 8
    assert SCN.percept_dim == 10 * (9 + 9)
    assert TAN.percept_dim == 5 * (5 + 1)
    r = rng(3)
    for dom in (ALC, SCN, TAN):
        for _ in range(10):
            st = dom.random_state(r)
            assert dom.percept(st).shape == (dom.percept_dim,)


def test_percept_empty_alchemy_all_empty_bits():
    st = alc_state()
    v = ALC.percept(st)
    empty_bits = v.reshape(7 * 4, 8)[:, 0]
    color_bits = v.reshape(7 * 4, 8)[:, 1:]
    assert np.all(empty_bits == 1.0)
    assert np.all(color_bits == 0.0)


def test_percept_single_unit_difference():
    a = alc_state(("r", "g"))
    b = alc_state(("r", "y"))
    va, vb = ALC.percept(a), ALC.percept(b)
    diff = np.nonzero(va != vb)[0]
    # both changed bits live in beaker 1's second unit slot
    assert len(diff) == 2
    assert all(8 <= d < 16 for d in diff)


# ---------------------------------------------------------------------------
# contextual embeddings


def test_ctx_mix_empty_beaker_zero_block():
    st = alc_state()
    v = ALC.contextual_embedding(st, mix(5))
    assert np.all(v == 0.0)


def test_ctx_pour_is_concat_of_recoding():
    r = rng(5)
    for _ in range(20):
        st = ALC.random_state(r)
        acts = [a for a in ALC.valid_actions(st) if a.kind == "pour"]
        if not acts:
            continue
        a = acts[int(r.integers(len(acts)))]
        v = ALC.contextual_embedding(st, a)
        i, j = a.args

        def encode(units):
            out = np.zeros(4 * 7)
            for slot, color in enumerate(units):
                out[slot * 7 + ALC.cfg.colors.index(color)] = 1.0
            return out

        assert np.array_equal(v[:4], np.zeros(4))
        assert np.array_equal(v[4:4 + 28], encode(st.beakers[i - 1]))
        assert np.array_equal(v[4 + 28:], encode(st.beakers[j - 1]))


def test_ctx_enter_boundary_sentinel():
    st = SceneState((None,) * 10)
    v = SCN.contextual_embedding(st, enter("r", 1))
    block = 2 + 16
    left = v[:block]
    assert left[0] == 1.0 and np.all(left[1:] == 0.0)  # out-of-bounds sentinel
    right = v[block:2 * block]
    assert right[1] == 1.0  # empty slot bit


def test_ctx_tangrams_insert_encodes_removal_step():
    st = TangramsState((0, 1, 2, 3, 4), (), 0)
    st = TAN.transition(st, swap(1, 2))      # step 1
    st = TAN.transition(st, remove(3))       # step 2 removes shape 2
    v = TAN.contextual_embedding(st, insert(1, 2))
    expected = np.zeros(10)
    expected[1] = 1.0
    assert np.array_equal(v, expected)
    assert np.all(TAN.contextual_embedding(st, remove(1)) == 0.0)


def test_embeddings_dimension_stable_over_walks():
    r = rng(11)
    for dom in (ALC, SCN, TAN):
        st = dom.random_state(r)
        for _ in range(30):
            acts = dom.valid_actions(st)
            if not acts:
                break
            for a in acts[:5]:
                assert dom.contextual_embedding(st, a).shape == (dom.context_dim,)
                assert dom.action_features(st, a).shape == (dom.action_feature_dim,)
            st = dom.transition(st, acts[int(r.integers(len(acts)))])
