import hashlib
import json
import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from zsc_lab.environment import (
    Action,
    ActionKind,
    Card,
    Discard,
    GameConfig,
    HintColor,
    HintRank,
    Level,
    Play,
    PRESETS,
    action_index,
    all_actions,
    card_multiset,
    deal,
    encode_observation,
    final_score,
    full_deck,
    legal_actions,
    new_game,
    observe,
    preset,
    resolve_game,
    step,
)
from zsc_lab.errors import ConfigError, ContractError

DATA = Path(__file__).parent / "data"


def small():
    return preset("hanabi-small")


def test_presets():
    full = preset("hanabi-full")
    assert (full.colors, full.ranks, full.multiplicity, full.hand_size,
            full.info_tokens_max, full.life_tokens_max) == (5, 5, (3, 2, 2, 2, 1), 5, 8, 3)
    assert full.deck_size == 50 and full.max_score == 25
    s = small()
    assert s.deck_size == 20 and s.max_score == 10 and s.num_actions == 2 * 2 + 2 + 5 and s.hand_size == 2
    o = preset("hanabi-oracle")
    assert o.deck_size == 4 and o.max_score == 2
    assert set(PRESETS) == {"hanabi-full", "hanabi-small", "hanabi-oracle"}


def test_unknown_preset_and_bad_configs():
    with pytest.raises(ConfigError):
        preset("hanabi-huge")
    with pytest.raises(ConfigError):
        GameConfig(2, 3, (1, 1), 2, 3, 1).validate()   # multiplicity length
    with pytest.raises(ConfigError):
        GameConfig(1, 2, (1, 1), 2, 3, 1).validate()   # deck smaller than two hands
    with pytest.raises(ConfigError):
        GameConfig(1, 2, (2, 2), 1, 1, 0).validate()   # no life tokens


def test_resolve_game_roundtrip():
    s = small()
    assert resolve_game("hanabi-small") == s
    assert resolve_game(s.to_dict()) == s
    assert GameConfig.from_dict(json.loads(json.dumps(s.to_dict()))) == s


def test_action_indexing_is_a_bijection():
    cfg = small()
    acts = all_actions(cfg)
    assert len(acts) == cfg.num_actions
    assert [action_index(a, cfg) for a in acts] == list(range(cfg.num_actions))
    assert repr(Play(0)) == "Play(0)" and repr(HintRank(3)) == "HintRank(3)"


def test_deal_alternates_starting_with_seat_zero():
    cfg = small()
    order = full_deck(cfg)
    s = deal(cfg, order)
    assert s.hands[0] == tuple(order[0:4:2])
    assert s.hands[1] == tuple(order[1:4:2])
    assert s.deck == tuple(order[4:])
    assert s.info_tokens == 3 and s.life_tokens == 1 and s.active_seat == 0


def test_new_game_is_seeded():
    cfg = small()
    assert new_game(cfg, 5) == new_game(cfg, 5)
    assert new_game(cfg, 5).to_bytes() != new_game(cfg, 6).to_bytes()


def _state(cfg, hand0, hand1):
    """Deal the given hands; the deck holds the remaining cards in canonical order."""
    rest = full_deck(cfg)
    order = []
    for a, b in zip(hand0, hand1):
        order += [a, b]
        rest.remove(a)
        rest.remove(b)
    return deal(cfg, order + rest)


SEAT0 = [Card(0, 0), Card(0, 1)]


def test_legal_action_order_and_hint_matching():
    cfg = small()
    s = _state(cfg, SEAT0, [Card(1, 4), Card(1, 2)])
    legal = legal_actions(s, 0)
    # full info tokens: no discards; only colors and ranks present in the partner's hand
    assert legal == [Play(0), Play(1), HintColor(1), HintRank(2), HintRank(4)]
    with pytest.raises(ContractError):
        legal_actions(s, 1)
    with pytest.raises(ContractError):
        step(s, HintColor(0))
    with pytest.raises(ContractError):
        step(s, Discard(0))


def test_successful_play_draws_from_the_top():
    cfg = GameConfig(2, 5, (3, 2, 2, 2, 1), 2, 3, 1)
    s = _state(cfg, [Card(0, 0), Card(1, 1)], [Card(1, 0), Card(0, 3)])
    top = s.deck[0]
    nxt, r, done = step(s, Play(0))
    assert r == 1.0 and not done
    assert nxt.fireworks == (1, 0)
    assert nxt.hands[0] == (Card(1, 1), top) and nxt.deck == s.deck[1:]
    assert nxt.active_seat == 1 and nxt.turn_index == 1
    assert nxt.last_action.effect == (0, 0, 1)


def test_reaching_max_score_ends_the_game():
    cfg = GameConfig(1, 3, (2, 2, 1), 1, 2, 1)
    s = deal(cfg, [Card(0, 0), Card(0, 1), Card(0, 2), Card(0, 0), Card(0, 1)])
    s, r1, _ = step(s, Play(0))            # seat 0 plays rank 0, draws rank 2
    s, r2, done = step(s, Play(0))         # seat 1 plays rank 1
    assert r1 == r2 == 1.0 and not done
    s, r3, done = step(s, Play(0))
    assert done and r3 == 1.0 and s.score_at_termination == 3


def test_bomb_out_zeroes_score_and_telescopes():
    cfg = GameConfig(1, 3, (2, 2, 1), 1, 2, 1)
    s = deal(cfg, [Card(0, 0), Card(0, 2), Card(0, 1), Card(0, 0), Card(0, 1)])
    s, r1, _ = step(s, Play(0))
    s, r2, done = step(s, Play(0))         # rank 2 on height 1: misplay, last life
    assert done and r1 == 1.0 and r1 + r2 == 0
    assert s.score_at_termination == 0 and final_score(s) == 0 and s.score == 1
    with pytest.raises(ContractError):
        step(s, Play(0))


def test_hint_reveals_and_costs_a_token():
    cfg = small()
    s = _state(cfg, SEAT0, [Card(1, 2), Card(0, 2)])
    nxt, r, _ = step(s, HintRank(2))
    assert r == 0 and nxt.info_tokens == 2
    assert nxt.last_action.effect == (0, 1)
    assert observe(nxt, 1).own_knowledge == ((-1, 2), (-1, 2))
    nxt, _, _ = step(nxt, HintColor(0))
    assert observe(nxt, 0).own_knowledge[0] == (0, -1)


def test_discard_restores_a_token():
    cfg = GameConfig(1, 2, (2, 1), 1, 2, 1)
    s = deal(cfg, [Card(0, 0), Card(0, 0), Card(0, 1)])
    s, _, _ = step(s, HintRank(0))
    assert s.info_tokens == 1
    s, _, _ = step(s, Discard(0))
    assert s.info_tokens == 2 and s.discards == ((1, 0),)


def test_completing_a_color_restores_a_token():
    cfg = GameConfig(1, 2, (2, 1), 1, 2, 1)
    s = deal(cfg, [Card(0, 0), Card(0, 0), Card(0, 1)])
    s, _, _ = step(s, HintRank(0))
    s, _, _ = step(s, Play(0))             # seat 1 plays rank 0 and draws the last card
    s, _, _ = step(s, HintRank(1))
    assert s.info_tokens == 0
    s, r, done = step(s, Play(0))          # rank 1 completes the color
    assert r == 1 and done and s.score_at_termination == 2 and s.info_tokens == 1


def test_each_seat_gets_one_turn_after_the_deck_empties():
    cfg = GameConfig(1, 2, (2, 1), 1, 3, 3)
    s = deal(cfg, [Card(0, 1), Card(0, 0), Card(0, 0)])
    s, _, _ = step(s, HintRank(0))          # seat 0
    s, _, done = step(s, Discard(0))        # seat 1 draws the last card
    assert not done and not s.deck
    s, _, done = step(s, HintRank(0))       # seat 0: final turn
    assert not done
    s, _, done = step(s, Discard(0))        # seat 1: final turn
    assert done and s.turn_index == 4 and s.score_at_termination == 0


def test_observation_hides_own_cards():
    s = new_game(small(), 3)
    o = observe(s, 0)
    assert o.partner_hand == s.hands[1]
    assert all(k == (-1, -1) for k in o.own_knowledge)
    assert o.deck_size == len(s.deck)


def test_keys_are_deterministic_and_level_specific():
    s = new_game(small(), 11)
    o = observe(s, 0)
    keys = {lvl: encode_observation(o, lvl) for lvl in Level}
    assert len(set(keys.values())) == 3
    assert encode_observation(observe(s, 0), Level.COMPACT) == keys[Level.COMPACT]
    sad = encode_observation(observe(s, 0, Play(0)), Level.COMPACT, sad=True)
    assert sad != keys[Level.COMPACT]
    assert encode_observation(o, Level.COMPACT, sad=True) != sad


def test_keys_ignore_hidden_information():
    cfg = small()
    partner = [Card(1, 1), Card(1, 2)]
    a = _state(cfg, SEAT0, partner)
    b = _state(cfg, [Card(1, 0), Card(1, 4)], partner)
    for lvl in Level:
        assert encode_observation(observe(a, 0), lvl) == encode_observation(observe(b, 0), lvl)
        assert encode_observation(observe(a, 1), lvl) != encode_observation(observe(b, 1), lvl)


def _random_episode(cfg, seed):
    rng = random.Random(seed)
    s = new_game(cfg, seed)
    initial = card_multiset(s)
    total = 0.0
    while not s.terminal:
        s, r, _ = step(s, rng.choice(legal_actions(s, s.active_seat)))
        total += r
        assert card_multiset(s) == initial
        assert 0 <= s.info_tokens <= cfg.info_tokens_max
        assert 0 <= s.life_tokens <= cfg.life_tokens_max
    return s, total


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["hanabi-small", "hanabi-oracle", "hanabi-full"]))
def test_random_play_invariants(seed, name):
    cfg = preset(name)
    s, total = _random_episode(cfg, seed)
    assert total == s.score_at_termination
    assert 0 <= s.score_at_termination <= cfg.max_score


def test_state_serialization_is_stable():
    s = new_game(small(), 2)
    assert json.loads(s.to_json())["deck"] == [list(c) for c in s.deck]
    assert s.to_bytes() == new_game(small(), 2).to_bytes()


def _key_corpus():
    cfg = small()
    rng = random.Random(1234)
    lines = []
    for i in range(100):
        s = new_game(cfg, i)
        for _ in range(rng.randrange(12)):
            if s.terminal:
                break
            s, _, _ = step(s, rng.choice(legal_actions(s, s.active_seat)))
        seat = i % 2
        hint = Play(0) if i % 3 == 0 else None
        keys = [encode_observation(observe(s, seat, hint), lvl, sad=hint is not None)
                for lvl in Level]
        lines.append(" ".join(k.hex() for k in keys))
    return "\n".join(lines) + "\n"


def test_golden_key_corpus():
    """Key layout is frozen: saved models depend on it."""
    text = _key_corpus()
    golden = DATA / "golden_keys.txt"
    assert text == golden.read_text()
    assert hashlib.sha256(text.encode()).hexdigest() == (DATA / "golden_keys.sha256").read_text().strip()
