import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siwvanet.mobility import (
    GridMap,
    TraceError,
    dump_trace,
    generate_manhattan,
    load_trace,
    position,
    static_trace,
)

SEGMENT = "bounds 820 620\n0 0 0 0\n10 0 100 0\n"


class TestLoadTrace:
    def test_speed_of_a_segment(self):
        trace = load_trace(SEGMENT)
        assert trace.tracks[0].speeds() == [10.0]
        assert (trace.width, trace.height) == (820.0, 620.0)

    def test_comments_and_blank_lines(self):
        trace = load_trace("# header\n\nbounds 100 100\n0 3 1 2  # start\n")
        assert trace.nodes == [3]

    def test_empty_input(self):
        trace = load_trace("")
        assert trace.nodes == []

    def test_out_of_bounds(self):
        with pytest.raises(TraceError, match="outside bounds"):
            load_trace("bounds 100 100\n0 0 150 0\n")

    @pytest.mark.parametrize("text,line", [("bounds 100 100\n0 0 1\n", 2), ("0 0 1 x\n", 1), ("bounds 1\n", 1)])
    def test_malformed_line_number(self, text, line):
        with pytest.raises(TraceError, match=f"line {line}"):
            load_trace(text)

    def test_decreasing_time(self):
        with pytest.raises(TraceError, match="does not increase"):
            load_trace("5 0 0 0\n4 0 1 0\n")

    def test_speed_limit(self):
        with pytest.raises(TraceError, match="speed"):
            load_trace(SEGMENT, max_speed=5.0)

    def test_dump_round_trip(self):
        trace = generate_manhattan(GridMap(), 4, 60.0, seed=3)
        assert load_trace(dump_trace(trace)) == trace


class TestPosition:
    @pytest.mark.parametrize(
        "t,expected",
        [(5.0, (50.0, 0.0)), (0.0, (0.0, 0.0)), (10.0, (100.0, 0.0)), (25.0, (100.0, 0.0)), (-3.0, (0.0, 0.0))],
    )
    def test_interpolation(self, t, expected):
        assert position(load_trace(SEGMENT), 0, t) == expected

    def test_unknown_node(self):
        with pytest.raises(KeyError, match="unknown node"):
            position(load_trace(SEGMENT), 9, 1.0)

    def test_static(self):
        trace = static_trace({0: (1, 2)}, 10, 10)
        assert trace.position(0, 123.0) == (1.0, 2.0)


class TestGridMap:
    def test_streets_tile_bounds(self):
        g = GridMap()
        assert g.xs[0] == 0 and g.xs[-1] == 820
        assert g.ys[0] == 0 and g.ys[-1] == 620
        assert len(g.intersections) == len(g.xs) * len(g.ys)

    def test_bad_spacing(self):
        with pytest.raises(ValueError):
            GridMap(spacing=0)


class TestManhattan:
    def test_paper_shape(self):
        trace = generate_manhattan(GridMap(), 15, 150.0, seed=1)
        assert trace.nodes == list(range(15))
        for tr in trace.tracks.values():
            assert tr.times[0] == 0.0
            assert tr.times[-1] <= 150.0
            assert all(0 <= x <= 820 for x in tr.xs)
            assert all(0 <= y <= 620 for y in tr.ys)

    def test_deterministic(self):
        a = generate_manhattan(GridMap(), 5, 100.0, seed=11)
        b = generate_manhattan(GridMap(), 5, 100.0, seed=11)
        c = generate_manhattan(GridMap(), 5, 100.0, seed=12)
        assert a == b
        assert a != c

    def test_fixed_speed(self):
        trace = generate_manhattan(GridMap(), 6, 120.0, seed=2, speed_range=(10.0, 10.0))
        for tr in trace.tracks.values():
            for v in tr.speeds():
                assert v == 0.0 or v == pytest.approx(10.0, rel=1e-9)

    @pytest.mark.parametrize("kwargs", [{"n_nodes": 0}, {"duration": 0.0}, {"speed_range": (5.0, 1.0)}])
    def test_invalid(self, kwargs):
        args = {"grid": GridMap(), "n_nodes": 2, "duration": 10.0, "seed": 0, **kwargs}
        with pytest.raises(ValueError):
            generate_manhattan(**args)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.floats(5.0, 200.0))
    def test_on_streets_and_continuous(self, seed, duration):
        grid = GridMap()
        trace = generate_manhattan(grid, 3, duration, seed)
        for node in trace.nodes:
            prev = trace.position(node, 0.0)
            steps = 200
            for k in range(1, steps + 1):
                t = duration * k / steps
                x, y = trace.position(node, t)
                assert grid.on_street(x, y)
                # no teleports: at most speed_limit * dt apart
                assert math.dist(prev, (x, y)) <= grid.speed_limit * duration / steps + 1e-6
                prev = (x, y)
