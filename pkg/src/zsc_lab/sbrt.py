"""Similarity-based robust training.

Training runs ``n_st`` epochs of plain self-play, then ``n_rt`` epochs in
which every executed action is swapped for an alternative with probability
``1 - alpha_r``. Both seats are perturbed because, with one shared table,
each seat is the other's training partner.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import NamedTuple

from .environment import Action, GameConfig, ObsKey
from .errors import ConfigError, ContractError
from .qlearn import ModelRecord, QFunction, TrainConfig, train


class Mode(str, enum.Enum):
    WORST = "WORST"
    BEST = "BEST"
    RANDOM = "RANDOM"


@dataclass(frozen=True)
class SbrtConfig:
    alpha_r: float = 0.8
    n_st: int = 40
    n_rt: int = 10
    mode: Mode = Mode.RANDOM

    def __post_init__(self):
        try:
            object.__setattr__(self, "mode", Mode(str(getattr(self.mode, "value", self.mode)).upper()))
        except ValueError:
            raise ConfigError(f"unknown SBRT mode {self.mode!r}") from None

    def validate(self) -> "SbrtConfig":
        if not 0 <= self.alpha_r <= 1:
            raise ConfigError("alpha_r must lie in [0, 1]")
        if self.n_st < 0 or self.n_rt < 0:
            raise ConfigError("n_st and n_rt must be >= 0")
        return self

    @property
    def epochs(self) -> int:
        return self.n_st + self.n_rt

    def to_dict(self) -> dict:
        return {"alpha_r": self.alpha_r, "n_st": self.n_st, "n_rt": self.n_rt,
                "mode": self.mode.value}

    @classmethod
    def from_dict(cls, data: dict) -> "SbrtConfig":
        try:
            return cls(alpha_r=float(data.get("alpha_r", 0.8)), n_st=int(data.get("n_st", 40)),
                       n_rt=int(data.get("n_rt", 10)), mode=data.get("mode", "RANDOM")).validate()
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad sbrt config: {exc}") from exc


class PerturbDecision(NamedTuple):
    executed: Action
    intended: Action
    perturbed: bool


def _require_member(legal: list[Action], a_p: Action) -> None:
    if a_p not in legal:
        raise ContractError(f"intended action {a_p!r} is not legal")


def random_alternative(legal: list[Action], a_p: Action, rng: random.Random) -> Action:
    """Uniform over the other legal actions; one ``randrange`` draw when |legal| >= 2."""
    _require_member(legal, a_p)
    if len(legal) < 2:
        return a_p
    others = [a for a in legal if a != a_p]
    return others[rng.randrange(len(others))]


def worst_alternative(q: QFunction, key: ObsKey, legal: list[Action], a_p: Action) -> Action:
    """Lowest-valued legal action other than ``a_p`` (first in legal order on ties)."""
    _require_member(legal, a_p)
    if len(legal) < 2:
        return a_p
    return min((a for a in legal if a != a_p), key=lambda a: q.get(key, a))


def best_alternative(q: QFunction, key: ObsKey, legal: list[Action], a_p: Action) -> Action:
    """Highest-valued legal action other than ``a_p`` (first in legal order on ties)."""
    _require_member(legal, a_p)
    if len(legal) < 2:
        return a_p
    best = None
    best_v = 0.0
    for a in legal:
        if a == a_p:
            continue
        v = q.get(key, a)
        if best is None or v > best_v:
            best, best_v = a, v
    return best


def perturb(q: QFunction, key: ObsKey, legal: list[Action], a_p: Action, alpha: float,
            mode: Mode, rng: random.Random) -> PerturbDecision:
    """Keep ``a_p`` with probability ``alpha``, else substitute the mode's alternative.

    The Bernoulli draw ``rng.random()`` is taken on every call, then RANDOM
    mode takes one ``randrange`` draw if it perturbs. Single-action states are
    never perturbed.
    """
    if not 0 <= alpha <= 1:
        raise ContractError(f"alpha {alpha} outside [0, 1]")
    _require_member(legal, a_p)
    u = rng.random()
    if len(legal) < 2 or u < alpha:
        return PerturbDecision(a_p, a_p, False)
    mode = Mode(mode)
    if mode is Mode.RANDOM:
        alt = random_alternative(legal, a_p, rng)
    elif mode is Mode.WORST:
        alt = worst_alternative(q, key, legal, a_p)
    else:
        alt = best_alternative(q, key, legal, a_p)
    return PerturbDecision(alt, a_p, alt != a_p)


def make_perturber(alpha: float, mode: Mode):
    def perturber(q, key, legal, intended, rng):
        return perturb(q, key, legal, intended, alpha, mode, rng).executed
    return perturber


def train_sbrt(game_config: GameConfig, train_config: TrainConfig, sbrt_config: SbrtConfig,
               progress=None) -> ModelRecord:
    sbrt_config.validate()
    if sbrt_config.epochs != train_config.epochs:
        raise ConfigError(
            f"n_st + n_rt = {sbrt_config.epochs} must equal training epochs {train_config.epochs}"
        )
    robust = (sbrt_config.n_st, make_perturber(sbrt_config.alpha_r, sbrt_config.mode))
    return train(game_config, train_config, robust=robust, sbrt_config=sbrt_config,
                 progress=progress)
