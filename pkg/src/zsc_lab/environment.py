"""Two-player cooperative Hanabi-family card game.

Ranks and colors are 0-based internally (rank 0 is the card printed "1").
States are immutable values; :func:`step` returns a new state.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import ConfigError, ContractError

NUM_SEATS = 2
KEY_FORMAT_VERSION = 1


@dataclass(frozen=True)
class GameConfig:
    colors: int
    ranks: int
    multiplicity: tuple[int, ...]
    hand_size: int
    info_tokens_max: int
    life_tokens_max: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "multiplicity", tuple(int(m) for m in self.multiplicity))

    @property
    def deck_size(self) -> int:
        return self.colors * sum(self.multiplicity)

    @property
    def max_score(self) -> int:
        return self.colors * self.ranks

    @property
    def num_actions(self) -> int:
        return 2 * self.hand_size + self.colors + self.ranks

    def validate(self) -> "GameConfig":
        if self.colors < 1 or self.ranks < 1 or self.hand_size < 1:
            raise ConfigError("colors, ranks and hand_size must be >= 1")
        if len(self.multiplicity) != self.ranks:
            raise ConfigError(
                f"multiplicity has {len(self.multiplicity)} entries for {self.ranks} ranks"
            )
        if any(m < 1 for m in self.multiplicity):
            raise ConfigError("every rank needs at least one copy")
        if self.info_tokens_max < 0 or self.life_tokens_max < 1:
            raise ConfigError("info_tokens_max must be >= 0 and life_tokens_max >= 1")
        if self.deck_size < NUM_SEATS * self.hand_size:
            raise ConfigError(
                f"deck of {self.deck_size} cards cannot deal {self.hand_size} to each seat"
            )
        # keys pack every count into a single byte
        if self.deck_size > 255 or self.num_actions > 255 or self.info_tokens_max > 255:
            raise ConfigError("game too large for the key encoding")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        return self

    def to_dict(self) -> dict:
        return {
            "colors": self.colors,
            "ranks": self.ranks,
            "multiplicity": list(self.multiplicity),
            "hand_size": self.hand_size,
            "info_tokens_max": self.info_tokens_max,
            "life_tokens_max": self.life_tokens_max,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GameConfig":
        try:
            cfg = cls(
                colors=int(data["colors"]),
                ranks=int(data["ranks"]),
                multiplicity=tuple(data["multiplicity"]),
                hand_size=int(data["hand_size"]),
                info_tokens_max=int(data["info_tokens_max"]),
                life_tokens_max=int(data["life_tokens_max"]),
                seed=int(data.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad game config: {exc}") from exc
        return cfg.validate()

    def rules_key(self) -> tuple:
        """Everything except the seed; two models are compatible iff these match."""
        return (self.colors, self.ranks, self.multiplicity, self.hand_size,
                self.info_tokens_max, self.life_tokens_max)


PRESETS: dict[str, GameConfig] = {
    "hanabi-full": GameConfig(5, 5, (3, 2, 2, 2, 1), 5, 8, 3),
    "hanabi-small": GameConfig(2, 5, (3, 2, 2, 2, 1), 2, 3, 1),
    "hanabi-oracle": GameConfig(1, 2, (2, 2), 1, 1, 1),
}


def preset(name: str) -> GameConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def resolve_game(spec: str | dict | GameConfig) -> GameConfig:
    """Accept a preset name, a config dict, or a GameConfig."""
    if isinstance(spec, GameConfig):
        return spec.validate()
    if isinstance(spec, str):
        return preset(spec)
    if isinstance(spec, dict):
        if "preset" in spec:
            return preset(spec["preset"])
        return GameConfig.from_dict(spec)
    raise ConfigError(f"cannot interpret game spec {spec!r}")


class Card(NamedTuple):
    color: int
    rank: int


class ActionKind(enum.IntEnum):
    PLAY = 0
    DISCARD = 1
    HINT_COLOR = 2
    HINT_RANK = 3


_KIND_NAMES = ("Play", "Discard", "HintColor", "HintRank")


class Action(NamedTuple):
    """``target`` is a slot for Play/Discard, a color or rank index for hints.

    Tuple order (kind, target) coincides with the fixed legal-action order.
    """

    kind: int
    target: int

    def __repr__(self):
        return f"{_KIND_NAMES[self.kind]}({self.target})"


def Play(slot: int) -> Action:
    return Action(ActionKind.PLAY, slot)


def Discard(slot: int) -> Action:
    return Action(ActionKind.DISCARD, slot)


def HintColor(color: int) -> Action:
    return Action(ActionKind.HINT_COLOR, color)


def HintRank(rank: int) -> Action:
    return Action(ActionKind.HINT_RANK, rank)


def action_index(action: Action, config: GameConfig) -> int:
    kind, target = action
    if kind == ActionKind.PLAY:
        return target
    if kind == ActionKind.DISCARD:
        return config.hand_size + target
    if kind == ActionKind.HINT_COLOR:
        return 2 * config.hand_size + target
    return 2 * config.hand_size + config.colors + target


def all_actions(config: GameConfig) -> list[Action]:
    """Every action of the game, position == :func:`action_index`."""
    h = config.hand_size
    return ([Action(ActionKind.PLAY, s) for s in range(h)]
            + [Action(ActionKind.DISCARD, s) for s in range(h)]
            + [Action(ActionKind.HINT_COLOR, c) for c in range(config.colors)]
            + [Action(ActionKind.HINT_RANK, r) for r in range(config.ranks)])


class LastAction(NamedTuple):
    """Public record of the previous move.

    ``effect`` is (color, rank, success) for Play, (color, rank) for Discard
    and the ascending tuple of matched slots for a hint.
    """

    actor: int
    action: Action
    effect: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class GameState:
    config: GameConfig
    deck: tuple[Card, ...]
    hands: tuple[tuple[Card, ...], tuple[Card, ...]]
    # per seat, per slot: (color revealed, rank revealed)
    knowledge: tuple[tuple[tuple[bool, bool], ...], tuple[tuple[bool, bool], ...]]
    fireworks: tuple[int, ...]
    discards: tuple[tuple[int, ...], ...]
    info_tokens: int
    life_tokens: int
    active_seat: int = 0
    turn_index: int = 0
    # turns left once the deck is exhausted; -1 while cards remain
    final_turns: int = -1
    terminal: bool = False
    score_at_termination: int | None = None
    last_action: LastAction | None = None

    @property
    def score(self) -> int:
        """Current firework total (not zeroed by a bomb-out)."""
        return sum(self.fireworks)

    def to_json(self) -> str:
        la = self.last_action
        return json.dumps({
            "config": self.config.to_dict(),
            "deck": [list(c) for c in self.deck],
            "hands": [[list(c) for c in h] for h in self.hands],
            "knowledge": [[list(k) for k in kn] for kn in self.knowledge],
            "fireworks": list(self.fireworks),
            "discards": [list(d) for d in self.discards],
            "info_tokens": self.info_tokens,
            "life_tokens": self.life_tokens,
            "active_seat": self.active_seat,
            "turn_index": self.turn_index,
            "final_turns": self.final_turns,
            "terminal": self.terminal,
            "score_at_termination": self.score_at_termination,
            "last_action": None if la is None else [la.actor, list(la.action), list(la.effect)],
        }, separators=(",", ":"))

    def to_bytes(self) -> bytes:
        return self.to_json().encode()


@dataclass(frozen=True, slots=True)
class Observation:
    viewer_seat: int
    partner_hand: tuple[Card, ...]
    # per own slot: (revealed color or -1, revealed rank or -1)
    own_knowledge: tuple[tuple[int, int], ...]
    fireworks: tuple[int, ...]
    discards: tuple[tuple[int, ...], ...]
    info_tokens: int
    life_tokens: int
    deck_size: int
    last_action: LastAction | None = None
    sad_hint: Action | None = field(default=None)


class Level(enum.IntEnum):
    FULL = 0
    COMPACT = 1
    COARSE = 2


ObsKey = bytes


def full_deck(config: GameConfig) -> list[Card]:
    return [Card(c, r)
            for c in range(config.colors)
            for r in range(config.ranks)
            for _ in range(config.multiplicity[r])]


def deal(config: GameConfig, deck_order) -> GameState:
    """Initial state for an explicit deck order (top of deck first).

    Cards are dealt alternately, seat 0 first.
    """
    config.validate()
    order = tuple(Card(*c) for c in deck_order)
    if sorted(order) != sorted(full_deck(config)):
        raise ConfigError("deck order is not a permutation of the configured deck")
    n = NUM_SEATS * config.hand_size
    hands = (order[0:n:2], order[1:n:2])
    blank = ((False, False),) * config.hand_size
    rest = order[n:]
    return GameState(
        config=config,
        deck=rest,
        hands=hands,
        knowledge=(blank, blank),
        fireworks=(0,) * config.colors,
        discards=((0,) * config.ranks,) * config.colors,
        info_tokens=config.info_tokens_max,
        life_tokens=config.life_tokens_max,
        final_turns=-1 if rest else NUM_SEATS,
    )


def new_game(config: GameConfig, seed: int) -> GameState:
    """Shuffle the deck with a generator seeded by ``seed`` and deal."""
    cards = full_deck(config.validate())
    random.Random(seed).shuffle(cards)
    return deal(config, cards)


def legal_actions(state: GameState, seat: int) -> list[Action]:
    if state.terminal:
        raise ContractError("no legal actions in a terminal state")
    if seat != state.active_seat:
        raise ContractError(f"seat {seat} is not active (active seat {state.active_seat})")
    return _legal(state)


def _legal(state: GameState) -> list[Action]:
    cfg = state.config
    n = len(state.hands[state.active_seat])
    out = [Action(ActionKind.PLAY, s) for s in range(n)]
    if state.info_tokens < cfg.info_tokens_max:
        out += [Action(ActionKind.DISCARD, s) for s in range(n)]
    if state.info_tokens > 0:
        partner = state.hands[1 - state.active_seat]
        colors = {c.color for c in partner}
        ranks = {c.rank for c in partner}
        out += [Action(ActionKind.HINT_COLOR, c) for c in sorted(colors)]
        out += [Action(ActionKind.HINT_RANK, r) for r in sorted(ranks)]
    return out


def _is_legal(state: GameState, action: Action) -> bool:
    kind, target = action
    hand = state.hands[state.active_seat]
    if kind == ActionKind.PLAY:
        return 0 <= target < len(hand)
    if kind == ActionKind.DISCARD:
        return 0 <= target < len(hand) and state.info_tokens < state.config.info_tokens_max
    if state.info_tokens <= 0:
        return False
    partner = state.hands[1 - state.active_seat]
    if kind == ActionKind.HINT_COLOR:
        return any(c.color == target for c in partner)
    if kind == ActionKind.HINT_RANK:
        return any(c.rank == target for c in partner)
    return False


def step(state: GameState, action: Action) -> tuple[GameState, float, bool]:
    """Apply ``action`` for the active seat; returns (next state, reward, terminal).

    Reward is +1 per successful play. Losing the last life token ends the
    game and pays minus the current score, so episode returns telescope to 0.
    """
    if state.terminal:
        raise ContractError("step called on a terminal state")
    if not _is_legal(state, action):
        raise ContractError(f"illegal action {action!r} for seat {state.active_seat}")
    cfg = state.config
    seat = state.active_seat
    kind, target = action
    hands = list(state.hands)
    knowledge = list(state.knowledge)
    fireworks = state.fireworks
    discards = state.discards
    info = state.info_tokens
    life = state.life_tokens
    deck = state.deck
    final_turns = state.final_turns
    reward = 0.0

    if kind == ActionKind.PLAY or kind == ActionKind.DISCARD:
        hand = hands[seat]
        card = hand[target]
        if kind == ActionKind.PLAY and fireworks[card.color] == card.rank:
            fw = list(fireworks)
            fw[card.color] += 1
            fireworks = tuple(fw)
            reward = 1.0
            if card.rank == cfg.ranks - 1 and info < cfg.info_tokens_max:
                info += 1
            effect = (card.color, card.rank, 1)
        else:
            row = list(discards[card.color])
            row[card.rank] += 1
            discards = discards[:card.color] + (tuple(row),) + discards[card.color + 1:]
            if kind == ActionKind.PLAY:
                life -= 1
                effect = (card.color, card.rank, 0)
            else:
                info = min(info + 1, cfg.info_tokens_max)
                effect = (card.color, card.rank)
        kn = knowledge[seat]
        hand = hand[:target] + hand[target + 1:]
        kn = kn[:target] + kn[target + 1:]
        if deck:
            hand = hand + (deck[0],)
            kn = kn + ((False, False),)
            deck = deck[1:]
            if not deck:
                # the drawing seat's partner and then the drawer get one last turn
                final_turns = NUM_SEATS + 1
        hands[seat] = hand
        knowledge[seat] = kn
    else:
        info -= 1
        other = 1 - seat
        partner = hands[other]
        if kind == ActionKind.HINT_COLOR:
            matched = tuple(i for i, c in enumerate(partner) if c.color == target)
            knowledge[other] = tuple((True, k[1]) if i in matched else k
                                     for i, k in enumerate(knowledge[other]))
        else:
            matched = tuple(i for i, c in enumerate(partner) if c.rank == target)
            knowledge[other] = tuple((k[0], True) if i in matched else k
                                     for i, k in enumerate(knowledge[other]))
        effect = matched

    if final_turns > 0:
        final_turns -= 1
    score = sum(fireworks)
    terminal = False
    final_score = None
    if life <= 0:
        terminal = True
        reward -= score
        final_score = 0
    elif score == cfg.max_score or final_turns == 0:
        terminal = True
        final_score = score

    nxt = GameState(
        config=cfg,
        deck=deck,
        hands=(hands[0], hands[1]),
        knowledge=(knowledge[0], knowledge[1]),
        fireworks=fireworks,
        discards=discards,
        info_tokens=info,
        life_tokens=life,
        active_seat=1 - seat,
        turn_index=state.turn_index + 1,
        final_turns=final_turns,
        terminal=terminal,
        score_at_termination=final_score,
        last_action=LastAction(seat, action, effect),
    )
    return nxt, reward, terminal


def observe(state: GameState, seat: int, sad_hint: Action | None = None) -> Observation:
    """Partial view for ``seat``: partner's cards visible, own cards only via hints."""
    own = state.hands[seat]
    own_knowledge = tuple(
        (card.color if kc else -1, card.rank if kr else -1)
        for card, (kc, kr) in zip(own, state.knowledge[seat])
    )
    return Observation(
        viewer_seat=seat,
        partner_hand=state.hands[1 - seat],
        own_knowledge=own_knowledge,
        fireworks=state.fireworks,
        discards=state.discards,
        info_tokens=state.info_tokens,
        life_tokens=state.life_tokens,
        deck_size=len(state.deck),
        last_action=state.last_action,
        sad_hint=sad_hint,
    )


def _deck_bucket(n: int) -> int:
    if n == 0:
        return 0
    return 1 if n <= 4 else 2


def encode_observation(obs: Observation, level: Level = Level.COMPACT, *, sad: bool = False) -> ObsKey:
    """Canonical byte key for ``obs``.

    Layout (version 1), one byte per item, every variable-length run prefixed
    by its length so the encoding is self-delimiting:

        version, level, sad_arity, viewer_seat, info_tokens, life_tokens,
        deck (FULL: size; COMPACT: bucket 0 / 1-4 / 5+),
        n, partner cards as (color, rank) * n,
        n, own knowledge as (color+1, rank+1) * n   (0 = unrevealed),
        n, fireworks * n,
        discards (FULL: colors, ranks, counts row-major; COMPACT: ranks, per-rank totals),
        last action: 0 | 1, actor, kind, target, len(effect), *effect,
        SAD only: 0, 0 | kind+1, target.

    SAD keys carry sad_arity=1 and are never equal to non-SAD keys.
    """
    sad = sad or obs.sad_hint is not None
    if level == Level.COARSE:
        return _encode_coarse(obs, sad)
    out = [KEY_FORMAT_VERSION, int(level), 1 if sad else 0, obs.viewer_seat,
           obs.info_tokens, obs.life_tokens]
    out.append(obs.deck_size if level == Level.FULL else _deck_bucket(obs.deck_size))
    out.append(len(obs.partner_hand))
    for c in obs.partner_hand:
        out += c
    out.append(len(obs.own_knowledge))
    for c, r in obs.own_knowledge:
        out += (c + 1, r + 1)
    out.append(len(obs.fireworks))
    out += obs.fireworks
    if level == Level.FULL:
        out += (len(obs.discards), len(obs.discards[0]))
        for row in obs.discards:
            out += row
    else:
        out.append(len(obs.discards[0]))
        out += [sum(col) for col in zip(*obs.discards)]
    la = obs.last_action
    if la is None:
        out.append(0)
    else:
        out += (1, la.actor, la.action[0], la.action[1], len(la.effect))
        out += la.effect
    if sad:
        h = obs.sad_hint
        out += (0, 0) if h is None else (h[0] + 1, h[1])
    return bytes(out)


# card status relative to the fireworks
PLAYABLE, LATER, DEAD, UNKNOWN, UNHINTED = 0, 1, 2, 3, 4


def _card_status(color: int, rank: int, fireworks) -> int:
    h = fireworks[color]
    if rank == h:
        return PLAYABLE
    return DEAD if rank < h else LATER


def _knowledge_status(color: int, rank: int, fireworks, n_ranks: int) -> int:
    """What a hinted slot's owner can infer from its revealed color/rank alone."""
    if color < 0 and rank < 0:
        return UNHINTED
    colors = range(len(fireworks)) if color < 0 else (color,)
    ranks = range(n_ranks) if rank < 0 else (rank,)
    found = {_card_status(c, r, fireworks) for c in colors for r in ranks}
    return found.pop() if len(found) == 1 else UNKNOWN


def _encode_coarse(obs: Observation, sad: bool) -> ObsKey:
    """COARSE layout (version 1): cards are described relative to the fireworks.

        version, level, sad_arity, viewer_seat, info_tokens, life_tokens, deck bucket,
        n, partner cards as (color, status) * n,
        n, own slot knowledge status * n,
        SAD only: 0, 0 | kind+1, target.

    The partner's last action is left out: hints already show up in the
    knowledge statuses, and keeping it multiplies the number of keys.
    """
    fw = obs.fireworks
    n_ranks = len(obs.discards[0])
    out = [KEY_FORMAT_VERSION, int(Level.COARSE), 1 if sad else 0, obs.viewer_seat,
           obs.info_tokens, obs.life_tokens, _deck_bucket(obs.deck_size),
           len(obs.partner_hand)]
    for c in obs.partner_hand:
        out += (c.color, _card_status(c.color, c.rank, fw))
    out.append(len(obs.own_knowledge))
    out += [_knowledge_status(c, r, fw, n_ranks) for c, r in obs.own_knowledge]
    if sad:
        h = obs.sad_hint
        out += (0, 0) if h is None else (h[0] + 1, h[1])
    return bytes(out)


def final_score(state: GameState) -> int:
    if not state.terminal:
        raise ContractError("game not finished")
    return state.score_at_termination


def card_multiset(state: GameState) -> dict[Card, int]:
    """Every card accounted for: deck, hands, discards and played fireworks."""
    counts: dict[Card, int] = {}
    for card in state.deck + state.hands[0] + state.hands[1]:
        counts[card] = counts.get(card, 0) + 1
    for c, row in enumerate(state.discards):
        for r, n in enumerate(row):
            if n:
                counts[Card(c, r)] = counts.get(Card(c, r), 0) + n
    for c, height in enumerate(state.fireworks):
        for r in range(height):
            counts[Card(c, r)] = counts.get(Card(c, r), 0) + 1
    return counts
