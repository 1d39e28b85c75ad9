"""Tabular self-play Q-learning: IQL, VDN and SAD-style trainers.

Both seats share one :class:`QFunction` (parameter sharing). Tables are keyed
by :func:`~zsc_lab.environment.encode_observation` bytes, which stand in for
the action-observation history.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

from . import rng as rngmod
from .environment import (
    Action,
    GameConfig,
    Level,
    ObsKey,
    Observation,
    _legal,
    all_actions,
    encode_observation,
    new_game,
    observe,
    step,
)
from .errors import ConfigError, ContractError, NumericError

FORMAT_VERSION = 1
FRAMEWORKS = ("IQL", "VDN", "SAD")


class QFunction:
    """Sparse action-value table: ObsKey -> {Action: value}.

    Absent entries read as ``default_value``.
    """

    def __init__(self, game_config: GameConfig, abstraction_level: Level = Level.COMPACT,
                 default_value: float = 0.0):
        self.game_config = game_config
        self.abstraction_level = Level(abstraction_level)
        self.default_value = float(default_value)
        self.table: dict[ObsKey, dict[Action, float]] = {}
        self._actions = all_actions(game_config)
        self._index = {a: i for i, a in enumerate(self._actions)}

    def get(self, key: ObsKey, action: Action) -> float:
        row = self.table.get(key)
        if row is None:
            return self.default_value
        return row.get(action, self.default_value)

    def set(self, key: ObsKey, action: Action, value: float) -> None:
        if not math.isfinite(value):
            raise NumericError(f"non-finite Q value {value!r}")
        row = self.table.get(key)
        if row is None:
            row = self.table[key] = {}
        row[action] = value

    def max_value(self, key: ObsKey, legal: list[Action]) -> float:
        row = self.table.get(key)
        if row is None:
            return self.default_value
        d = self.default_value
        return max(row.get(a, d) for a in legal)

    def __len__(self):
        return sum(len(r) for r in self.table.values())

    def entries(self) -> list[tuple[str, int, float]]:
        out = [(key.hex(), self._index[a], v)
               for key, row in self.table.items() for a, v in row.items()]
        out.sort()
        return out

    def to_dict(self) -> dict:
        return {
            "default_value": self.default_value,
            "abstraction_level": self.abstraction_level.name,
            "entries": [list(e) for e in self.entries()],
        }

    @classmethod
    def from_dict(cls, data: dict, game_config: GameConfig) -> "QFunction":
        q = cls(game_config, Level[data["abstraction_level"]], data["default_value"])
        for hexkey, idx, value in data["entries"]:
            q.set(bytes.fromhex(hexkey), q._actions[idx], float(value))
        return q

    def __eq__(self, other):
        if not isinstance(other, QFunction):
            return NotImplemented
        return self.to_dict() == other.to_dict()


@dataclass(frozen=True)
class TrainConfig:
    framework: str = "IQL"
    episodes_per_epoch: int = 1000
    epochs: int = 50
    learning_rate: float = 0.1
    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    # None means 80% of epochs
    epsilon_decay_epochs: Optional[int] = None
    seed: int = 0
    abstraction: str = "COMPACT"
    # value of never-updated (key, action) entries
    q_init: float = 0.0

    def validate(self) -> "TrainConfig":
        if self.framework not in FRAMEWORKS:
            raise ConfigError(f"framework must be one of {FRAMEWORKS}, got {self.framework!r}")
        if self.episodes_per_epoch < 0 or self.epochs < 0:
            raise ConfigError("episode and epoch counts must be >= 0")
        if not 0 < self.learning_rate <= 1:
            raise ConfigError("learning_rate must lie in (0, 1]")
        if not 0 <= self.gamma <= 1:
            raise ConfigError("gamma must lie in [0, 1]")
        for eps in (self.epsilon_start, self.epsilon_end):
            if not 0 <= eps <= 1:
                raise ConfigError("epsilon values must lie in [0, 1]")
        if self.epsilon_decay_epochs is not None and self.epsilon_decay_epochs < 0:
            raise ConfigError("epsilon_decay_epochs must be >= 0")
        if self.abstraction not in Level.__members__:
            raise ConfigError(f"abstraction must be one of {list(Level.__members__)}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not math.isfinite(self.q_init):
            raise ConfigError("q_init must be finite")
        return self

    @property
    def level(self) -> Level:
        return Level[self.abstraction]

    @property
    def decay_epochs(self) -> int:
        if self.epsilon_decay_epochs is None:
            return round(0.8 * self.epochs)
        return self.epsilon_decay_epochs

    def epsilon(self, epoch: int) -> float:
        """Linear anneal from epsilon_start to epsilon_end, flat afterwards."""
        n = self.decay_epochs
        if n <= 0 or epoch >= n:
            return self.epsilon_end
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * epoch / n

    def to_dict(self) -> dict:
        return {
            "framework": self.framework,
            "episodes_per_epoch": self.episodes_per_epoch,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "gamma": self.gamma,
            "epsilon_start": self.epsilon_start,
            "epsilon_end": self.epsilon_end,
            "epsilon_decay_epochs": self.epsilon_decay_epochs,
            "seed": self.seed,
            "abstraction": self.abstraction,
            "q_init": self.q_init,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown train config fields: {sorted(unknown)}")
        try:
            return cls(**data).validate()
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class ModelRecord:
    q: QFunction
    game_config: GameConfig
    train_config: TrainConfig
    sbrt_config: Optional[object] = None  # zsc_lab.sbrt.SbrtConfig
    format_version: int = FORMAT_VERSION

    @property
    def framework(self) -> str:
        return self.train_config.framework

    @property
    def seed(self) -> int:
        return self.train_config.seed

    @property
    def variant(self) -> str:
        """Framework tag, e.g. ``IQL`` or ``IQL+SBRT``."""
        return self.framework + ("+SBRT" if self.sbrt_config is not None else "")

    @property
    def model_id(self) -> str:
        return f"{self.variant.lower()}-s{self.seed}"

    def to_dict(self, include_sbrt: bool = True) -> dict:
        d = {
            "format_version": self.format_version,
            "framework": self.framework,
            "seed": self.seed,
            "game_config": self.game_config.to_dict(),
            "train_config": self.train_config.to_dict(),
        }
        if include_sbrt and self.sbrt_config is not None:
            d["sbrt_config"] = self.sbrt_config.to_dict()
        d["q"] = self.q.to_dict()
        return d

    def dumps(self, include_sbrt: bool = True) -> str:
        return json.dumps(self.to_dict(include_sbrt), separators=(",", ":")) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ModelRecord":
        data = json.loads(text)
        if data.get("format_version") != FORMAT_VERSION:
            raise ConfigError(f"unsupported model format_version {data.get('format_version')!r}")
        game = GameConfig.from_dict(data["game_config"])
        train = TrainConfig.from_dict(data["train_config"])
        sbrt = None
        if "sbrt_config" in data:
            from .sbrt import SbrtConfig
            sbrt = SbrtConfig.from_dict(data["sbrt_config"])
        return cls(QFunction.from_dict(data["q"], game), game, train, sbrt, data["format_version"])

    def save(self, path) -> None:
        from pathlib import Path
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "ModelRecord":
        from pathlib import Path
        return cls.loads(Path(path).read_text())


def greedy_action(q: QFunction, key: ObsKey, legal: list[Action]) -> Action:
    """First legal action with maximal value (legal order breaks ties)."""
    if not legal:
        raise ContractError("greedy_action needs at least one legal action")
    row = q.table.get(key)
    if row is None:
        return legal[0]
    d = q.default_value
    best = legal[0]
    best_v = row.get(best, d)
    for a in legal[1:]:
        v = row.get(a, d)
        if v > best_v:
            best, best_v = a, v
    return best


def epsilon_greedy(q: QFunction, key: ObsKey, legal: list[Action], epsilon: float,
                   rng: random.Random) -> Action:
    """Draw u = rng.random(); if u < epsilon, a second draw rng.randrange(len(legal))
    picks the action uniformly, otherwise the greedy action is returned."""
    if not 0 <= epsilon <= 1:
        raise ContractError(f"epsilon {epsilon} outside [0, 1]")
    if not legal:
        raise ContractError("epsilon_greedy needs at least one legal action")
    if rng.random() < epsilon:
        return legal[rng.randrange(len(legal))]
    return greedy_action(q, key, legal)


class Transition(NamedTuple):
    """One seat's move up to its next decision point.

    ``reward`` sums every reward from this move until the seat acts again;
    ``discount`` is gamma ** (turns elapsed). ``next_key`` is None at terminal.
    """

    key: ObsKey
    action: Action
    reward: float
    next_key: Optional[ObsKey]
    next_legal: tuple[Action, ...] = ()
    discount: float = 1.0


class RoundTransition(NamedTuple):
    """Two consecutive turns (seat 0 then seat 1) treated as one joint step.

    ``keys``/``actions`` have one entry if the game ended after the first
    turn. ``next_keys`` holds the following round's keys that exist, with
    their legal sets in ``next_legal``; empty when the round was terminal.
    """

    keys: tuple[ObsKey, ...]
    actions: tuple[Action, ...]
    reward: float
    next_keys: tuple[ObsKey, ...] = ()
    next_legal: tuple[tuple[Action, ...], ...] = ()
    discount: float = 1.0


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise NumericError(f"non-finite input {v!r}")


def td_update_iql(q: QFunction, t: Transition, lr: float) -> QFunction:
    """q[key, action] += lr * (reward + discount * max q[next] - q[key, action]); in place."""
    _check_finite(t.reward, t.discount, lr)
    current = q.get(t.key, t.action)
    target = t.reward
    if t.next_key is not None:
        target += t.discount * q.max_value(t.next_key, list(t.next_legal))
    q.set(t.key, t.action, current + lr * (target - current))
    return q


def td_update_vdn(q: QFunction, t: RoundTransition, lr: float) -> QFunction:
    """Sum-decomposed TD step; the full error is applied to each addend."""
    _check_finite(t.reward, t.discount, lr)
    joint = math.fsum(q.get(k, a) for k, a in zip(t.keys, t.actions))
    boot = math.fsum(q.max_value(k, list(legal)) for k, legal in zip(t.next_keys, t.next_legal))
    delta = t.reward + t.discount * boot - joint
    _check_finite(delta)
    for k, a in zip(t.keys, t.actions):
        q.set(k, a, q.get(k, a) + lr * delta)
    return q


def sad_augment(obs: Observation, greedy: Action, executed: Action) -> Observation:
    """Attach the actor's greedy choice for the partner to see."""
    # the executed action is already public through last_action
    return replace(obs, sad_hint=greedy)


# perturbation hook used by the robust phase: (q, key, legal, intended, rng) -> executed
Perturber = Callable[[QFunction, ObsKey, list, Action, random.Random], Action]


@dataclass
class EpisodeStats:
    score: int = 0
    turns: int = 0
    decisions: int = 0
    perturbed: int = 0


def run_training_episode(q: QFunction, game_config: GameConfig, tc: TrainConfig,
                         episode: int, epsilon: float,
                         perturber: Optional[Perturber] = None) -> EpisodeStats:
    """Play one self-play episode and apply the framework's online updates."""
    deal_seed = rngmod.derive_seed(tc.seed, "deal", episode)
    act_rng = rngmod.stream(tc.seed, "act", episode)
    perturb_rng = rngmod.stream(tc.seed, "perturb", episode) if perturber else None
    framework = tc.framework
    sad = framework == "SAD"
    level = tc.level
    lr = tc.learning_rate
    gamma = tc.gamma
    gamma2 = gamma * gamma

    state = new_game(game_config, deal_seed)
    stats = EpisodeStats()
    prev_greedy: Optional[Action] = None
    # IQL/SAD: per seat [key, action, accumulated reward, turn]
    pending: list = [None, None]
    # VDN: per turn (key, action, reward, legal)
    turns: list = []

    while not state.terminal:
        seat = state.active_seat
        obs = observe(state, seat, prev_greedy if sad else None)
        key = encode_observation(obs, level, sad=sad)
        legal = _legal(state)
        t = state.turn_index

        if framework == "VDN":
            if t % 2 == 1 and t >= 3:
                r0 = t - 3
                k0, a0, rw0, _ = turns[r0]
                k1, a1, rw1, _ = turns[r0 + 1]
                td_update_vdn(q, RoundTransition(
                    (k0, k1), (a0, a1), rw0 + rw1,
                    (turns[t - 1][0], key), (turns[t - 1][3], tuple(legal)), gamma2), lr)
        else:
            p = pending[seat]
            if p is not None:
                td_update_iql(q, Transition(p[0], p[1], p[2], key, tuple(legal),
                                            gamma ** (t - p[3])), lr)

        greedy = greedy_action(q, key, legal)
        if act_rng.random() < epsilon:
            intended = legal[act_rng.randrange(len(legal))]
        else:
            intended = greedy
        executed = intended
        if perturber is not None:
            executed = perturber(q, key, legal, intended, perturb_rng)
            if len(legal) > 1:
                stats.decisions += 1
                stats.perturbed += executed != intended

        state, reward, _ = step(state, executed)
        if sad:
            prev_greedy = greedy

        if framework == "VDN":
            turns.append((key, executed, reward, tuple(legal)))
        else:
            pending[seat] = [key, executed, 0.0, t]
            for p in pending:
                if p is not None:
                    p[2] += reward

    if framework == "VDN":
        n = len(turns)
        # rounds not yet updated online: those whose successor round is incomplete
        first = (n - 4) // 2 + 1 if n >= 4 else 0
        for r in range(first, (n + 1) // 2):
            i = 2 * r
            keys = tuple(x[0] for x in turns[i:i + 2])
            acts = tuple(x[1] for x in turns[i:i + 2])
            rew = sum(x[2] for x in turns[i:i + 2])
            nxt = turns[i + 2:i + 4]
            td_update_vdn(q, RoundTransition(keys, acts, rew,
                                             tuple(x[0] for x in nxt),
                                             tuple(x[3] for x in nxt), gamma2), lr)
    else:
        for p in pending:
            if p is not None:
                td_update_iql(q, Transition(p[0], p[1], p[2], None), lr)

    stats.score = state.score_at_termination
    stats.turns = state.turn_index
    return stats


def train(game_config: GameConfig, train_config: TrainConfig,
          robust: Optional[tuple[int, Perturber]] = None,
          sbrt_config=None, progress: Optional[Callable[[int, float], None]] = None) -> ModelRecord:
    """Shared training loop. ``robust`` = (first robust epoch, perturber)."""
    game_config.validate()
    tc = train_config.validate()
    q = QFunction(game_config, tc.level, tc.q_init)
    for epoch in range(tc.epochs):
        eps = tc.epsilon(epoch)
        perturber = None
        if robust is not None and epoch >= robust[0]:
            perturber = robust[1]
        total = 0
        for i in range(tc.episodes_per_epoch):
            episode = epoch * tc.episodes_per_epoch + i
            total += run_training_episode(q, game_config, tc, episode, eps, perturber).score
        if progress is not None:
            progress(epoch, total / max(1, tc.episodes_per_epoch))
    return ModelRecord(q, game_config, tc, sbrt_config)


def train_selfplay(game_config: GameConfig, train_config: TrainConfig,
                   progress=None) -> ModelRecord:
    """Self-play training with one shared table on both seats."""
    return train(game_config, train_config, progress=progress)


def check_finite(q: QFunction) -> None:
    for row in q.table.values():
        for v in row.values():
            if not math.isfinite(v):
                raise NumericError("non-finite entry in Q table")
