"""Correlation statistics, CSV tables and SVG scatter plots."""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import ContractError, DegenerateInputError, NumericError, OutputError

SCATTER_HEADER = ["cpstt", "mean_score", "model_a", "model_b", "framework_a", "framework_b"]
CORRELATION_HEADER = ["framework_a", "framework_b", "n_pairs", "mean_cpstt", "mean_score",
                      "r_p", "p_value"]
PERMUTATIONS = 10_000


@dataclass(frozen=True)
class ScatterPoint:
    x: float
    y: float
    model_a: str = ""
    model_b: str = ""
    framework_a: str = ""
    framework_b: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise NumericError(f"non-finite scatter point ({self.x!r}, {self.y!r})")
        if not 0.0 <= self.x <= 1.0:
            raise ContractError(f"similarity {self.x!r} outside [0, 1]")

    @property
    def pair(self) -> tuple[str, str]:
        return (self.framework_a, self.framework_b)


def points_from_cells(cells) -> list[ScatterPoint]:
    """One point per cross-play cell that carries a similarity estimate."""
    out = []
    for c in cells:
        if c.cpstt is None:
            continue
        out.append(ScatterPoint(c.cpstt, c.score.mean, c.model_a, c.model_b,
                                c.framework_a, c.framework_b))
    return out


def _coords(points) -> tuple[list[float], list[float]]:
    return [float(p.x) for p in points], [float(p.y) for p in points]


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation, two-pass with compensated sums."""
    n = len(xs)
    if n != len(ys):
        raise ContractError("x and y lengths differ")
    if n < 2:
        raise DegenerateInputError("correlation needs at least two points")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInputError("zero variance in " + ("x" if sxx == 0.0 else "y"))
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def pearson_r(points: Sequence[ScatterPoint]) -> float:
    return pearson(*_coords(points))


def permutation_p_value(points: Sequence[ScatterPoint], n_shuffles: int = PERMUTATIONS,
                        seed: int = 0) -> float:
    """Two-sided p-value of ``pearson_r`` under shuffled y values.

    Uses the (1 + hits) / (1 + n_shuffles) estimate, so it is never 0.
    """
    xs, ys = _coords(points)
    r = abs(pearson(xs, ys))
    rng = random.Random(seed)
    ys = list(ys)
    hits = 0
    for _ in range(n_shuffles):
        rng.shuffle(ys)
        if abs(pearson(xs, ys)) >= r - 1e-12:
            hits += 1
    return (1 + hits) / (1 + n_shuffles)


def least_squares(points: Sequence[ScatterPoint]) -> Optional[tuple[float, float]]:
    """(slope, intercept) of the y-on-x fit; None when x has no spread."""
    xs, ys = _coords(points)
    n = len(xs)
    if n < 2:
        return None
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    if sxx == 0.0:
        return None
    slope = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
    return slope, my - slope * mx


def _g6(v: float) -> str:
    return f"{v:.6g}"


def _write_text(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_scatter_csv(points: Iterable[ScatterPoint], path) -> Path:
    rows = [[_g6(p.x), _g6(p.y), p.model_a, p.model_b, p.framework_a, p.framework_b]
            for p in sorted(points, key=lambda p: (p.model_a, p.model_b))]
    return _write_text(path, _csv_text(SCATTER_HEADER, rows))


def read_scatter_csv(path) -> list[ScatterPoint]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return [ScatterPoint(float(r["cpstt"]), float(r["mean_score"]), r["model_a"], r["model_b"],
                         r["framework_a"], r["framework_b"]) for r in rows]


def correlation_rows(points: Sequence[ScatterPoint], n_shuffles: int = PERMUTATIONS,
                     seed: int = 0) -> list[list[str]]:
    """One row per framework pair, then an ``*,*`` row over all points.

    r_p and p_value are left empty where the correlation is undefined.
    """
    groups: dict[tuple[str, str], list[ScatterPoint]] = {}
    for p in points:
        groups.setdefault(tuple(sorted(p.pair)), []).append(p)
    keyed = [(k, groups[k]) for k in sorted(groups)]
    if len(keyed) != 1:
        keyed.append((("*", "*"), list(points)))
    rows = []
    for (fa, fb), pts in keyed:
        xs, ys = _coords(pts)
        try:
            r, pv = _g6(pearson(xs, ys)), _g6(permutation_p_value(pts, n_shuffles, seed))
        except DegenerateInputError:
            r = pv = ""
        mean_x = math.fsum(xs) / len(xs) if xs else 0.0
        mean_y = math.fsum(ys) / len(ys) if ys else 0.0
        rows.append([fa, fb, str(len(pts)), _g6(mean_x), _g6(mean_y), r, pv])
    return rows


def write_correlation_csv(points: Sequence[ScatterPoint], path, n_shuffles: int = PERMUTATIONS,
                          seed: int = 0) -> Path:
    return _write_text(path, _csv_text(CORRELATION_HEADER,
                                       correlation_rows(points, n_shuffles, seed)))


# plot geometry, in SVG user units
_W, _H = 640, 480
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 170, 40, 60
_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_scatter_svg(points: Sequence[ScatterPoint], r_p: Optional[float], path,
                       max_score: Optional[float] = None) -> Path:
    """Standalone SVG scatter of cross-play score against similarity.

    The y axis spans [0, max_score] (default: the largest y, at least 1).
    ``r_p`` None prints "r_p = n/a".
    """
    points = list(points)
    if not points:
        raise ContractError("scatter plot needs at least one point")
    y_max = float(max_score) if max_score else max(1.0, max(p.y for p in points))
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def sx(x):
        return _LEFT + x * pw

    def sy(y):
        return _TOP + ph - (y / y_max) * ph

    pairs = sorted({p.pair for p in points})
    colour = {pair: _PALETTE[i % len(_PALETTE)] for i, pair in enumerate(pairs)}
    caption = "r_p = n/a" if r_p is None else f"r_p = {r_p:.3f}"
    x0, y0, x1, y1 = sx(0), sy(0), sx(1), sy(y_max)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y0)}" stroke="black"/>',
        f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x0)}" y2="{_fmt(y1)}" stroke="black"/>',
    ]
    for i in range(6):
        t = i / 5
        out.append(f'<text x="{_fmt(sx(t))}" y="{_fmt(y0 + 18)}" text-anchor="middle">{t:.1f}</text>')
        out.append(f'<text x="{_fmt(x0 - 8)}" y="{_fmt(sy(t * y_max) + 4)}" '
                   f'text-anchor="end">{t * y_max:.3g}</text>')
    out.append(f'<text x="{_fmt(_LEFT + pw / 2)}" y="{_H - 15}" text-anchor="middle">CPSTT</text>')
    out.append(f'<text transform="translate(18,{_fmt(_TOP + ph / 2)}) rotate(-90)" '
               f'text-anchor="middle">cross-play score</text>')
    out.append(f'<text x="{_fmt(_LEFT + pw / 2)}" y="24" text-anchor="middle" '
               f'font-size="14">{caption}</text>')
    fit = least_squares(points)
    if fit is not None:
        slope, intercept = fit
        out.append(f'<line class="fit" x1="{_fmt(x0)}" y1="{_fmt(sy(intercept))}" '
                   f'x2="{_fmt(x1)}" y2="{_fmt(sy(slope + intercept))}" '
                   f'stroke="#444" stroke-dasharray="6,4"/>')
    for p in sorted(points, key=lambda p: (p.model_a, p.model_b, p.x, p.y)):
        out.append(f'<circle class="point" cx="{_fmt(sx(p.x))}" cy="{_fmt(sy(p.y))}" r="4" '
                   f'fill="{colour[p.pair]}" fill-opacity="0.8"/>')
    for i, pair in enumerate(pairs):
        ly = _TOP + 10 + 18 * i
        out.append(f'<circle cx="{_W - _RIGHT + 20}" cy="{ly}" r="4" fill="{colour[pair]}"/>')
        out.append(f'<text x="{_W - _RIGHT + 30}" y="{ly + 4}">{_escape(pair[0])} / '
                   f'{_escape(pair[1])}</text>')
    out.append("</svg>")
    return _write_text(path, "\n".join(out) + "\n")


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
