"""Cross-play evaluation of independently trained models."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Optional, Sequence

from . import rng as rngmod
from .errors import ConfigError, ContractError
from .policy import GreedyPolicy, check_compatible, play_game
from .qlearn import ModelRecord
from .similarity import SimilarityEstimate, estimate_cpstt


@dataclass(frozen=True)
class ScoreStats:
    """Mean and standard error of per-game scores, kept with exact integer sums."""

    n_games: int
    total: int
    total_sq: int

    @classmethod
    def from_scores(cls, scores: Iterable[int]) -> "ScoreStats":
        scores = list(scores)
        return cls(len(scores), sum(scores), sum(s * s for s in scores))

    @property
    def mean(self) -> float:
        return self.total / self.n_games

    @property
    def std_err(self) -> float:
        n = self.n_games
        if n < 2:
            return 0.0
        var = Fraction(n * self.total_sq - self.total * self.total, n * (n - 1))
        return math.sqrt(var / n)

    def merge(self, other: "ScoreStats") -> "ScoreStats":
        return ScoreStats(self.n_games + other.n_games, self.total + other.total,
                          self.total_sq + other.total_sq)

    def to_dict(self) -> dict:
        return {"n_games": self.n_games, "total": self.total, "total_sq": self.total_sq}

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreStats":
        return cls(int(d["n_games"]), int(d["total"]), int(d["total_sq"]))


@dataclass(frozen=True)
class CrossPlayCell:
    model_a: str
    model_b: str
    framework_a: str
    framework_b: str
    seed_a: int
    seed_b: int
    score: ScoreStats
    cpstt_ab: Optional[SimilarityEstimate] = None
    cpstt_ba: Optional[SimilarityEstimate] = None

    @property
    def cpstt(self) -> Optional[float]:
        """Both directions averaged; the x value of a scatter point."""
        if self.cpstt_ab is None or self.cpstt_ba is None:
            return None
        return (self.cpstt_ab.value + self.cpstt_ba.value) / 2

    def to_dict(self) -> dict:
        def sim(s):
            return None if s is None else [s.matches, s.n_decisions, s.n_games]
        return {
            "model_a": self.model_a, "model_b": self.model_b,
            "framework_a": self.framework_a, "framework_b": self.framework_b,
            "seed_a": self.seed_a, "seed_b": self.seed_b,
            "score": self.score.to_dict(),
            "cpstt_ab": sim(self.cpstt_ab), "cpstt_ba": sim(self.cpstt_ba),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CrossPlayCell":
        def sim(v):
            return None if v is None else SimilarityEstimate(*v)
        return cls(d["model_a"], d["model_b"], d["framework_a"], d["framework_b"],
                   int(d["seed_a"]), int(d["seed_b"]), ScoreStats.from_dict(d["score"]),
                   sim(d["cpstt_ab"]), sim(d["cpstt_ba"]))


def play_match(pi_a, pi_b, n_games: int, seed: int) -> ScoreStats:
    """Seat-balanced greedy cross-play: deal ``i`` is played once per seating."""
    if n_games < 2 or n_games % 2:
        raise ContractError("n_games must be even and >= 2")
    a = GreedyPolicy(pi_a) if isinstance(pi_a, ModelRecord) else pi_a
    b = GreedyPolicy(pi_b) if isinstance(pi_b, ModelRecord) else pi_b
    cfg = check_compatible(a, b)
    scores = []
    for i in range(n_games // 2):
        deal_seed = rngmod.derive_seed(seed, "match", i)
        scores.append(play_game(a, b, cfg, deal_seed))
        scores.append(play_game(b, a, cfg, deal_seed))
    return ScoreStats.from_scores(scores)


def pair_seed(master_seed: int, id_a: str, id_b: str) -> int:
    """Depends only on the unordered pair, so adding models never moves old cells."""
    lo, hi = sorted((id_a, id_b))
    return rngmod.derive_seed(master_seed, "pair", lo, hi)


def _index_pool(pool) -> dict[str, ModelRecord]:
    if isinstance(pool, dict):
        return dict(pool)
    out: dict[str, ModelRecord] = {}
    for m in pool:
        if m.model_id in out:
            raise ConfigError(f"duplicate model id {m.model_id!r} in pool")
        out[m.model_id] = m
    return out


def _cell_task(args) -> CrossPlayCell:
    id_a, a, id_b, b, n_games, master_seed, with_cpstt, cpstt_games = args
    seed = pair_seed(master_seed, id_a, id_b)
    score = play_match(a, b, n_games, seed)
    ab = ba = None
    if with_cpstt:
        ab = estimate_cpstt(a, b, a, cpstt_games, rngmod.derive_seed(seed, "cpstt", id_a))
        ba = estimate_cpstt(b, a, b, cpstt_games, rngmod.derive_seed(seed, "cpstt", id_b))
    return CrossPlayCell(id_a, id_b, a.variant, b.variant, a.seed, b.seed, score, ab, ba)


def matrix_pairs(ids: Sequence[str], ordered: bool = False,
                 include_self: bool = False) -> list[tuple[str, str]]:
    ids = sorted(ids)
    if ordered:
        return [(x, y) for x in ids for y in ids if include_self or x != y]
    pairs = list(combinations(ids, 2))
    if include_self:
        pairs += [(x, x) for x in ids]
    return sorted(pairs)


def cross_play_matrix(pool, n_games: int, seed: int, with_cpstt: bool = True,
                      ordered: bool = False, include_self: bool = False,
                      cpstt_games: Optional[int] = None, jobs: int = 1) -> list[CrossPlayCell]:
    """One cell per pair, sorted by (model_a, model_b).

    Unordered pairs by default; ``ordered`` emits both (a, b) and (b, a).
    Every cell is a pure function of the two models, ``n_games`` and
    ``seed``, so ``jobs`` changes only wall time.
    """
    models = _index_pool(pool)
    if len(models) < 2:
        raise ConfigError("cross-play needs at least two models")
    check_compatible(*(GreedyPolicy(m, i) for i, m in models.items()))
    cg = n_games if cpstt_games is None else cpstt_games
    tasks = [(x, models[x], y, models[y], n_games, seed, with_cpstt, cg)
             for x, y in matrix_pairs(list(models), ordered, include_self)]
    if jobs <= 1:
        cells = [_cell_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            cells = list(ex.map(_cell_task, tasks))
    return sorted(cells, key=lambda c: (c.model_a, c.model_b))


def zsc_aggregate(pool_m, pool_mo=None, n_games: int = 2000, seed: int = 0) -> ScoreStats:
    """Zero-shot coordination score of a model pool.

    Intra-algorithm (``pool_mo`` None): every unordered pair of distinct
    models in ``pool_m``. Inter-algorithm: every (m, o) with m from
    ``pool_m`` and o from ``pool_mo``. Pair scores use :func:`pair_seed`,
    so the result equals the pooled cross-play matrix cells.
    """
    m = _index_pool(pool_m)
    if pool_mo is None:
        pairs = [(x, m[x], y, m[y]) for x, y in combinations(sorted(m), 2)]
    else:
        o = _index_pool(pool_mo)
        pairs = [(x, m[x], y, o[y]) for x in sorted(m) for y in sorted(o)]
    if not pairs:
        raise ConfigError("no qualifying pairs for aggregation")
    total = None
    for x, a, y, b in pairs:
        s = play_match(a, b, n_games, pair_seed(seed, x, y))
        total = s if total is None else total.merge(s)
    return total


def aggregate_cells(cells: Iterable[CrossPlayCell], ids_m: Iterable[str],
                    ids_mo: Optional[Iterable[str]] = None) -> ScoreStats:
    """Same pooling as :func:`zsc_aggregate`, read off precomputed cells."""
    ids_m = set(ids_m)
    total = None
    seen = set()
    for c in cells:
        if ids_mo is None:
            hit = c.model_a in ids_m and c.model_b in ids_m and c.model_a != c.model_b
        else:
            mo = set(ids_mo)
            hit = ((c.model_a in ids_m and c.model_b in mo)
                   or (c.model_b in ids_m and c.model_a in mo))
        pair = frozenset((c.model_a, c.model_b))
        if hit and pair not in seen:
            seen.add(pair)
            total = c.score if total is None else total.merge(c.score)
    if total is None:
        raise ConfigError("no qualifying pairs for aggregation")
    return total
