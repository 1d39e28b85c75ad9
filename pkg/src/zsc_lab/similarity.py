"""Monte-Carlo estimate of conditional policy similarity.

``S_pi(pi1, pi2)`` is the probability that ``pi2`` picks the same action as
``pi1`` at ``pi1``'s decision points, on trajectories generated by ``pi``
playing with ``pi1``. The similarity between an agent's training partner
and a test partner (CPSTT) is ``estimate_cpstt(agent, test_partner, agent)``
when the agent trained against a copy of itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import rng as rngmod
from .environment import new_game, step
from .errors import ContractError, DegenerateInputError
from .policy import PolicyLike, as_policy, check_compatible


@dataclass(frozen=True)
class SimilarityEstimate:
    matches: int
    n_decisions: int
    n_games: int

    @property
    def value(self) -> float:
        return self.matches / self.n_decisions

    @property
    def exact(self) -> Fraction:
        return Fraction(self.matches, self.n_decisions)

    def merge(self, other: "SimilarityEstimate") -> "SimilarityEstimate":
        return SimilarityEstimate(self.matches + other.matches,
                                  self.n_decisions + other.n_decisions,
                                  self.n_games + other.n_games)


def count_agreement(pi, pi1, pi2, state, partner_seat: int = 1) -> tuple[int, int]:
    """Play one game from ``state``; return (matches, decisions) at ``pi1``'s seat."""
    seats = (pi1, pi) if partner_seat == 0 else (pi, pi1)
    matches = decisions = 0
    while not state.terminal:
        s = state.active_seat
        a = seats[s].act(state, s)
        if s == partner_seat:
            decisions += 1
            matches += pi2.act(state, s) == a
        state, _, _ = step(state, a)
    return matches, decisions


def estimate_cpstt(pi: PolicyLike, pi1: PolicyLike, pi2: PolicyLike, n_games: int, seed: int,
                   both_seats: bool = False, start: int = 0) -> SimilarityEstimate:
    """Agreement rate of ``pi2`` with ``pi1`` on (pi, pi1) greedy rollouts.

    ``pi`` sits in seat 0 and ``pi1`` in seat 1; with ``both_seats`` each deal
    is also played with the seats swapped and the counts pooled. Game ``i``
    is dealt from ``derive_seed(seed, "cpstt", start + i)``.
    """
    if n_games < 1:
        raise ContractError("n_games must be >= 1")
    pi, pi1, pi2 = as_policy(pi), as_policy(pi1), as_policy(pi2)
    cfg = check_compatible(pi, pi1, pi2)
    matches = decisions = games = 0
    for g in range(start, start + n_games):
        deal_seed = rngmod.derive_seed(seed, "cpstt", g)
        for partner_seat in ((1, 0) if both_seats else (1,)):
            m, d = count_agreement(pi, pi1, pi2, new_game(cfg, deal_seed), partner_seat)
            matches += m
            decisions += d
            games += 1
    if decisions == 0:
        raise DegenerateInputError("the partner never had to decide in any sampled game")
    return SimilarityEstimate(matches, decisions, games)
