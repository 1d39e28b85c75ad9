import random
import xml.etree.ElementTree as ET
from decimal import Decimal, getcontext
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import assume, given, settings, strategies as st

from zsc_lab.analysis import (
    SCATTER_HEADER,
    ScatterPoint,
    correlation_rows,
    least_squares,
    pearson,
    pearson_r,
    permutation_p_value,
    read_scatter_csv,
    render_scatter_svg,
    write_scatter_csv,
)
from zsc_lab.errors import ContractError, DegenerateInputError, NumericError, OutputError

DATA = Path(__file__).parent / "data"
SVG = "{http://www.w3.org/2000/svg}"


def pts(xy, fw=("IQL", "IQL")):
    return [ScatterPoint(x, y, f"a{i}", f"b{i}", *fw) for i, (x, y) in enumerate(xy)]


def reference_r(xy) -> float:
    """Textbook formula in 50-digit decimal arithmetic."""
    getcontext().prec = 50
    xs = [Decimal(repr(x)) for x, _ in xy]
    ys = [Decimal(repr(y)) for _, y in xy]
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    return float(sxy / (sxx * syy).sqrt())


def test_perfect_lines():
    xs = [i / 10 for i in range(1, 10)]
    assert pearson_r(pts([(x, 2 * x + 1) for x in xs])) == pytest.approx(1.0, abs=1e-12)
    assert pearson_r(pts([(x, -x) for x in xs])) == pytest.approx(-1.0, abs=1e-12)


def test_three_point_reference():
    xy = [(0.1, 5), (0.5, 12), (0.9, 14)]
    assert pearson_r(pts(xy)) == pytest.approx(reference_r(xy), abs=1e-14)


def test_degenerate_inputs_raise():
    with pytest.raises(DegenerateInputError):
        pearson_r(pts([(0.5, 1.0), (0.5, 2.0)]))
    with pytest.raises(DegenerateInputError):
        pearson_r(pts([(0.1, 3.0), (0.7, 3.0)]))
    with pytest.raises(DegenerateInputError):
        pearson_r(pts([(0.1, 3.0)]))


def test_point_validation():
    with pytest.raises(ContractError):
        ScatterPoint(1.5, 0.0)
    with pytest.raises(NumericError):
        ScatterPoint(0.5, float("nan"))


coords = st.lists(st.tuples(st.floats(0, 1), st.floats(-50, 50)), min_size=3, max_size=30)


@settings(max_examples=200, deadline=None)
@given(coords, st.floats(0.01, 100), st.floats(-100, 100), st.randoms(use_true_random=False))
def test_pearson_properties(xy, scale, shift, rnd):
    xs = [x for x, _ in xy]
    ys = [y for _, y in xy]
    try:
        r = pearson(xs, ys)
        pearson([x * scale + shift for x in xs], ys)
    except DegenerateInputError:
        assume(False)
    # spreads too small to survive the affine map are rounding noise
    assume(max(xs) - min(xs) > 1e-6 and max(ys) - min(ys) > 1e-6)
    assert -1.0 <= r <= 1.0
    assert pearson([x * scale + shift for x in xs], ys) == pytest.approx(r, abs=1e-9)
    assert pearson(xs, [y * scale + shift for y in ys]) == pytest.approx(r, abs=1e-9)
    assert pearson([-x for x in xs], ys) == pytest.approx(-r, abs=1e-12)
    order = list(range(len(xs)))
    rnd.shuffle(order)
    assert pearson([xs[i] for i in order], [ys[i] for i in order]) == r


def test_permutation_p_value():
    rng = random.Random(0)
    strong = pts([(x / 30, 10 * x / 30 + rng.random()) for x in range(30)])
    p = permutation_p_value(strong, 2000, seed=1)
    assert p == 1 / 2001
    assert permutation_p_value(strong, 2000, seed=1) == p
    noise = pts([(rng.random(), rng.random()) for _ in range(30)])
    assert permutation_p_value(noise, 2000, seed=1) > 0.01


def test_least_squares_matches_normal_equations():
    rng = random.Random(4)
    xy = [(rng.random(), rng.uniform(0, 10)) for _ in range(12)]
    n = len(xy)
    sx = sum(Fraction(x) for x, _ in xy)
    sy = sum(Fraction(y) for _, y in xy)
    sxx = sum(Fraction(x) ** 2 for x, _ in xy)
    sxy = sum(Fraction(x) * Fraction(y) for x, y in xy)
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx)
    intercept = (sy - slope * sx) / n
    got = least_squares(pts(xy))
    assert got[0] == pytest.approx(float(slope), abs=1e-9)
    assert got[1] == pytest.approx(float(intercept), abs=1e-9)
    assert least_squares(pts([(0.2, 1.0)])) is None


def test_csv_empty_and_roundtrip(tmp_path):
    path = write_scatter_csv([], tmp_path / "e.csv")
    assert path.read_text() == ",".join(SCATTER_HEADER) + "\n"
    points = [ScatterPoint(0.123456789, 7.654321987, "m1", "m2", "IQL", "VDN"),
              ScatterPoint(1 / 3, 2 / 3, "m0", "m9", "SAD", "SAD")]
    write_scatter_csv(points, tmp_path / "p.csv")
    back = read_scatter_csv(tmp_path / "p.csv")
    assert [p.model_a for p in back] == ["m0", "m1"]
    for orig, got in zip(sorted(points, key=lambda p: p.model_a), back):
        assert got.x == pytest.approx(orig.x, rel=5e-6)
        assert got.y == pytest.approx(orig.y, rel=5e-6)
    assert (tmp_path / "p.csv").read_text().endswith("\n")


GOLDEN_POINTS = [
    ScatterPoint(0.61, 4.25, "iql-s3", "iql-s4", "IQL", "IQL"),
    ScatterPoint(0.4375, 2.0, "iql-s0", "vdn-s1", "IQL", "VDN"),
    ScatterPoint(0.9, 7.123456789, "sad-s0", "sad-s1", "SAD", "SAD"),
    ScatterPoint(0.0, 0.0, "iql-s0", "iql-s1", "IQL", "IQL"),
    ScatterPoint(1.0, 10.0, "vdn-s0", "vdn-s1", "VDN", "VDN"),
]


def test_golden_scatter_csv(tmp_path):
    write_scatter_csv(GOLDEN_POINTS, tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_bytes() == (DATA / "golden_scatter.csv").read_bytes()


def test_svg_single_point_has_no_fit_line(tmp_path):
    path = render_scatter_svg(GOLDEN_POINTS[:1], None, tmp_path / "one.svg", 10)
    root = ET.parse(path).getroot()
    assert len(root.findall(f"{SVG}circle[@class='point']")) == 1
    assert root.findall(f"{SVG}line[@class='fit']") == []
    assert "r_p = n/a" in path.read_text()


def test_svg_is_deterministic_and_labelled(tmp_path):
    rng = random.Random(2)
    points = pts([(rng.random(), rng.uniform(0, 10)) for _ in range(10)])
    r = pearson_r(points)
    a = render_scatter_svg(points, r, tmp_path / "a.svg", 10).read_bytes()
    b = render_scatter_svg(list(reversed(points)), r, tmp_path / "b.svg", 10).read_bytes()
    assert a == b
    text = a.decode()
    assert ">CPSTT<" in text and ">cross-play score<" in text
    assert f"r_p = {r:.3f}" in text
    root = ET.fromstring(text)
    assert len(root.findall(f"{SVG}circle[@class='point']")) == 10
    assert len(root.findall(f"{SVG}line[@class='fit']")) == 1


def test_svg_colors_by_framework_pair(tmp_path):
    text = render_scatter_svg(GOLDEN_POINTS, 0.5, tmp_path / "c.svg", 10).read_text()
    root = ET.fromstring(text)
    fills = {c.get("fill") for c in root.findall(f"{SVG}circle[@class='point']")}
    assert len(fills) == 4


def test_svg_needs_points(tmp_path):
    with pytest.raises(ContractError):
        render_scatter_svg([], 0.0, tmp_path / "x.svg")


def test_unwritable_path_is_reported(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OutputError, match="file"):
        write_scatter_csv(GOLDEN_POINTS, blocker / "sub" / "s.csv")


def test_correlation_rows():
    rng = random.Random(5)
    a = pts([(x / 10, x + rng.random()) for x in range(10)], ("IQL", "IQL"))
    b = pts([(x / 10, 5.0) for x in range(3)], ("IQL", "VDN"))
    rows = correlation_rows(a + b, 500, 0)
    assert [r[:3] for r in rows] == [["IQL", "IQL", "10"], ["IQL", "VDN", "3"], ["*", "*", "13"]]
    assert float(rows[0][5]) > 0.9 and rows[1][5] == ""
