import math

import numpy as np
import pytest

from dirfsim.errors import DegenerateWindow, WindowOutsideTrace
from dirfsim.geometry import Vec3
from dirfsim.mobility import (MobilityTrace, generate_cell_waypoint, generate_trace,
                              moving_direction, tour_order)

from conftest import grid_layout


def make_trace(rows):
    return MobilityTrace([r[0] for r in rows], [Vec3(*r[1]) for r in rows])


# -- moving_direction ---------------------------------------------------------

def test_stationary_trace_zero_direction():
    tr = make_trace([(0.0, (1, 2, 0)), (5.0, (1, 2, 0))])
    assert moving_direction(tr, 1.0, 3.0) == Vec3(0, 0, 0)


def test_direction_is_position_difference():
    tr = make_trace([(0.0, (0, 0, 0)), (1.0, (1, 2, 0))])
    assert moving_direction(tr, 0.0, 1.0) == Vec3(1, 2, 0)


def test_direction_linear_path_sampled_at_10hz():
    # client walks (t, 0.5t, 0); window [2.0, 3.5] spans interpolated samples
    times = [i / 10 for i in range(51)]
    pts = [Vec3(t, 0.5 * t, 0.0) for t in times]
    tr = MobilityTrace(times, pts)
    d = moving_direction(tr, 2.0, 3.5)
    assert abs(d.x - 1.5) < 1e-9
    assert abs(d.y - 0.75) < 1e-9
    assert abs(d.z) < 1e-9


def test_direction_antisymmetric():
    times = [i / 10 for i in range(31)]
    pts = [Vec3(math.sin(t), math.cos(t), 0.1 * t) for t in times]
    tr = MobilityTrace(times, pts, max_speed=3.0)
    fwd = moving_direction(tr, 0.4, 2.3)
    bwd = moving_direction(tr, 2.3, 0.4)
    assert (fwd + bwd).norm() < 1e-12


def test_window_outside_trace():
    tr = make_trace([(0.0, (0, 0, 0)), (1.0, (1, 0, 0))])
    with pytest.raises(WindowOutsideTrace):
        moving_direction(tr, 0.5, 1.5)


def test_degenerate_window():
    tr = make_trace([(0.0, (0, 0, 0)), (1.0, (1, 0, 0))])
    with pytest.raises(DegenerateWindow):
        moving_direction(tr, 0.5, 0.5 + 1e-9)


# -- trace invariants ---------------------------------------------------------

def test_timestamps_must_increase():
    with pytest.raises(ValueError, match="increasing"):
        make_trace([(0.0, (0, 0, 0)), (0.0, (1, 0, 0))])


def test_speed_cap_enforced():
    with pytest.raises(ValueError, match="exceeds"):
        make_trace([(0.0, (0, 0, 0)), (1.0, (5, 0, 0))])


def test_interpolation_between_samples():
    tr = make_trace([(0.0, (0, 0, 0)), (2.0, (4, 0, 0))])
    assert tr.position_at(0.5) == Vec3(1, 0, 0)


# -- generators ---------------------------------------------------------------

def test_straight_trace_path_length_is_speed_times_duration():
    layout = grid_layout()
    tr = generate_trace("straight", layout, 1.4, seed=9, duration=10.0)
    assert abs(tr.path_length() - 14.0) < 1e-6
    assert len(tr) == 101


def test_tour_visits_cells_in_order():
    layout = grid_layout()
    tr = generate_trace("tour", layout, 1.4, seed=2, duration=32.0)
    seen = []
    for p in tr.points:
        cell = layout.nearest_ap(p)
        if not seen or seen[-1] != cell:
            seen.append(cell)
    assert seen == tour_order(layout) == [0, 2, 4, 5, 3, 1]


def test_same_seed_reproduces_trace():
    layout = grid_layout()
    a = generate_trace("random_waypoint", layout, 1.0, seed=5, duration=8.0)
    b = generate_trace("random_waypoint", layout, 1.0, seed=5, duration=8.0)
    assert a.points == b.points


def test_random_waypoint_stays_in_bounds():
    layout = grid_layout()
    bounds = ((0.0, 15.0), (0.0, 10.0))
    tr = generate_trace("random_waypoint", layout, 2.0, seed=3, duration=30.0,
                        bounds=bounds)
    for p in tr.points:
        assert 0.0 <= p.x <= 15.0 and 0.0 <= p.y <= 10.0


def test_cell_waypoint_stays_in_cell():
    layout = grid_layout()
    tr = generate_cell_waypoint(layout, cell=3, speed=1.0, duration=20.0)
    assert all(layout.nearest_ap(p) == 3 for p in tr.points)


def test_speed_at_is_path_length_based():
    # an L-turn at constant speed should not read as a slowdown
    times = [i / 10 for i in range(21)]
    pts = [Vec3(min(t, 1.0), max(0.0, t - 1.0), 0.0) for t in times]
    tr = MobilityTrace(times, pts)
    assert abs(tr.speed_at(1.0) - 1.0) < 1e-9


def test_generator_rejects_bad_args():
    layout = grid_layout()
    with pytest.raises(ValueError):
        generate_trace("straight", layout, 0.0, seed=1, duration=5.0)
    with pytest.raises(ValueError):
        generate_trace("warp", layout, 1.0, seed=1, duration=5.0)
