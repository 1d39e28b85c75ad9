import json
import math
import random

import pytest

from zsc_lab.environment import Discard, HintRank, Level, Play, new_game, observe, preset
from zsc_lab.errors import ConfigError, ContractError, NumericError
from zsc_lab.qlearn import (
    ModelRecord,
    QFunction,
    RoundTransition,
    TrainConfig,
    Transition,
    check_finite,
    epsilon_greedy,
    greedy_action,
    run_training_episode,
    sad_augment,
    td_update_iql,
    td_update_vdn,
    train_selfplay,
)

ORACLE = preset("hanabi-oracle")
SMALL = preset("hanabi-small")
K1, K2, K3, K4 = b"\x01", b"\x02", b"\x03", b"\x04"


def q_with(values, cfg=SMALL):
    q = QFunction(cfg)
    for (k, a), v in values.items():
        q.set(k, a, v)
    return q


def test_default_value_and_finite_guard():
    q = QFunction(SMALL, default_value=0.5)
    assert q.get(K1, Play(0)) == 0.5
    assert q.max_value(K1, [Play(0), Play(1)]) == 0.5
    with pytest.raises(NumericError):
        q.set(K1, Play(0), float("nan"))
    with pytest.raises(NumericError):
        q.set(K1, Play(0), float("inf"))


def test_greedy_ties_break_in_legal_order():
    legal = [Play(0), Play(1), HintRank(2)]
    q = q_with({(K1, Play(1)): 1.0, (K1, HintRank(2)): 1.0})
    assert greedy_action(q, K1, legal) == Play(1)
    assert greedy_action(q, K2, legal) == Play(0)   # unseen key
    q.set(K1, Play(1), -1.0)
    assert greedy_action(q, K1, legal) == HintRank(2)
    with pytest.raises(ContractError):
        greedy_action(q, K1, [])


def test_epsilon_greedy_extremes():
    legal = [Play(0), Play(1), Discard(0), Discard(1)]
    q = q_with({(K1, Discard(1)): 2.0})
    rng = random.Random(3)
    assert all(epsilon_greedy(q, K1, legal, 0.0, rng) == Discard(1) for _ in range(200))
    counts = {a: 0 for a in legal}
    for _ in range(8000):
        counts[epsilon_greedy(q, K1, legal, 1.0, rng)] += 1
    assert all(abs(c / 8000 - 0.25) < 0.03 for c in counts.values())
    with pytest.raises(ContractError):
        epsilon_greedy(q, K1, legal, 1.5, rng)


def test_iql_update_matches_hand_computation():
    q = q_with({(K1, Play(0)): 0.5, (K2, Play(0)): 1.0, (K2, Play(1)): 3.0})
    t = Transition(K1, Play(0), 1.0, K2, (Play(0), Play(1)), 0.99 ** 2)
    td_update_iql(q, t, 0.1)
    target = 1.0 + 0.9801 * 3.0
    assert q.get(K1, Play(0)) == pytest.approx(0.5 + 0.1 * (target - 0.5), abs=1e-15)


def test_iql_terminal_update_has_no_bootstrap():
    q = q_with({(K1, Play(0)): 2.0, (K2, Play(0)): 100.0})
    td_update_iql(q, Transition(K1, Play(0), -1.0, None), 0.5)
    assert q.get(K1, Play(0)) == pytest.approx(0.5)


def test_iql_rejects_nonfinite_inputs():
    q = QFunction(SMALL)
    with pytest.raises(NumericError):
        td_update_iql(q, Transition(K1, Play(0), float("nan"), None), 0.1)


def test_vdn_update_applies_the_joint_error_to_each_addend():
    q = q_with({(K1, Play(0)): 1.0, (K2, Play(1)): 2.0,
                (K3, Play(0)): 4.0, (K4, Play(0)): -1.0, (K4, Play(1)): 0.5})
    t = RoundTransition((K1, K2), (Play(0), Play(1)), 1.0, (K3, K4),
                        ((Play(0), Play(1)), (Play(0), Play(1))), 0.9 ** 2)
    td_update_vdn(q, t, 0.2)
    delta = 1.0 + 0.81 * (4.0 + 0.5) - (1.0 + 2.0)
    assert q.get(K1, Play(0)) == pytest.approx(1.0 + 0.2 * delta, abs=1e-15)
    assert q.get(K2, Play(1)) == pytest.approx(2.0 + 0.2 * delta, abs=1e-15)


def test_vdn_partial_terminal_round():
    q = q_with({(K1, Play(0)): 1.0})
    td_update_vdn(q, RoundTransition((K1,), (Play(0),), 0.0), 1.0)
    assert q.get(K1, Play(0)) == 0.0


def test_sad_augment_sets_the_hint():
    o = observe(new_game(SMALL, 1), 0)
    assert sad_augment(o, Play(1), Discard(0)).sad_hint == Play(1)


def test_train_config_schedule_and_validation():
    tc = TrainConfig(epochs=10, epsilon_start=1.0, epsilon_end=0.1)
    assert tc.decay_epochs == 8
    assert tc.epsilon(0) == 1.0
    assert tc.epsilon(4) == pytest.approx(0.55)
    assert tc.epsilon(8) == tc.epsilon(9) == 0.1
    with pytest.raises(ConfigError):
        TrainConfig(framework="PPO").validate()
    with pytest.raises(ConfigError):
        TrainConfig(learning_rate=0.0).validate()
    with pytest.raises(ConfigError):
        TrainConfig.from_dict({"episodes": 3})
    assert TrainConfig.from_dict(tc.to_dict()) == tc


@pytest.mark.parametrize("framework", ["IQL", "VDN", "SAD"])
def test_training_is_deterministic_and_finite(framework):
    tc = TrainConfig(framework=framework, episodes_per_epoch=30, epochs=3, seed=4)
    a = train_selfplay(SMALL, tc)
    b = train_selfplay(SMALL, tc)
    assert a.dumps() == b.dumps()
    check_finite(a.q)
    other = train_selfplay(SMALL, TrainConfig(framework=framework, episodes_per_epoch=30,
                                              epochs=3, seed=5))
    assert other.dumps() != a.dumps()
    assert len(a.q) > 0


def test_sad_keys_differ_from_plain_keys():
    sad = train_selfplay(ORACLE, TrainConfig(framework="SAD", episodes_per_epoch=10, epochs=1))
    iql = train_selfplay(ORACLE, TrainConfig(framework="IQL", episodes_per_epoch=10, epochs=1))
    assert not set(sad.q.table) & set(iql.q.table)


def test_episode_stats():
    q = QFunction(SMALL)
    stats = run_training_episode(q, SMALL, TrainConfig(), 0, 1.0)
    assert stats.turns >= 1 and 0 <= stats.score <= SMALL.max_score
    assert stats.perturbed == 0


def test_model_file_roundtrip_is_bit_exact(tmp_path):
    rec = train_selfplay(SMALL, TrainConfig(episodes_per_epoch=20, epochs=2, seed=9,
                                            abstraction="COARSE"))
    path = tmp_path / "m.json"
    rec.save(path)
    back = ModelRecord.load(path)
    assert back.dumps() == path.read_text()
    assert back.q == rec.q and back.model_id == "iql-s9"
    data = json.loads(path.read_text())
    assert set(data) == {"format_version", "framework", "seed", "game_config",
                         "train_config", "q"}
    entries = data["q"]["entries"]
    assert entries == sorted(entries)
    assert all(math.isfinite(v) for _, _, v in entries)
    data["format_version"] = 99
    with pytest.raises(ConfigError):
        ModelRecord.loads(json.dumps(data))


def test_levels_are_recorded():
    rec = train_selfplay(ORACLE, TrainConfig(episodes_per_epoch=5, epochs=1, abstraction="FULL"))
    assert rec.q.abstraction_level is Level.FULL
