"""Deterministic evaluation-time policies and game rollouts."""

from __future__ import annotations

from typing import Callable, Optional, Protocol, Union

from .environment import Action, GameConfig, GameState, _legal, encode_observation, new_game, observe, step
from .errors import ConfigError
from .qlearn import ModelRecord, greedy_action


class Policy(Protocol):
    name: str
    game_config: GameConfig

    def act(self, state: GameState, seat: int) -> Action: ...


class GreedyPolicy:
    """Exploration-free policy of a trained model.

    SAD models see the partner's last executed action as the greedy
    annotation; at evaluation time the two coincide.
    """

    def __init__(self, record: ModelRecord, name: Optional[str] = None):
        self.record = record
        self.q = record.q
        self.game_config = record.game_config
        self.level = record.q.abstraction_level
        self.sad = record.framework == "SAD"
        self.name = name or record.model_id

    def key(self, state: GameState, seat: int) -> bytes:
        hint = None
        if self.sad and state.last_action is not None:
            hint = state.last_action.action
        return encode_observation(observe(state, seat, hint), self.level, sad=self.sad)

    def act(self, state: GameState, seat: int) -> Action:
        return greedy_action(self.q, self.key(state, seat), _legal(state))


class ScriptedPolicy:
    """Wraps ``fn(state, seat, legal) -> Action``; used for oracles and tests."""

    def __init__(self, fn: Callable[[GameState, int, list], Action], game_config: GameConfig,
                 name: str = "scripted"):
        self.fn = fn
        self.game_config = game_config
        self.name = name

    def act(self, state: GameState, seat: int) -> Action:
        return self.fn(state, seat, _legal(state))


PolicyLike = Union[ModelRecord, Policy]


def as_policy(p: PolicyLike) -> Policy:
    if isinstance(p, ModelRecord):
        return GreedyPolicy(p)
    return p


def check_compatible(*policies: Policy) -> GameConfig:
    cfg = policies[0].game_config
    for p in policies[1:]:
        if p.game_config.rules_key() != cfg.rules_key():
            raise ConfigError(f"incompatible game configs: {p.name} vs {policies[0].name}")
    return cfg


def play_game(seat0: Policy, seat1: Policy, config: GameConfig, deal_seed: int) -> int:
    """Final score (0 on bomb-out) of one game dealt from ``deal_seed``."""
    return play_from(seat0, seat1, new_game(config, deal_seed))


def play_from(seat0: Policy, seat1: Policy, state: GameState) -> int:
    seats = (seat0, seat1)
    while not state.terminal:
        s = state.active_seat
        state, _, _ = step(state, seats[s].act(state, s))
    return state.score_at_termination
