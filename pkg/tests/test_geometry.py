import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirfsim.geometry import (ApDescriptor, ApLayout, SwitchLine, Vec3, anchor_layout,
                              crossed_switch_line, switch_lines_for, voronoi_neighbors)

from conftest import DOWN, grid_layout


def vec(x, y, z=0.0):
    return Vec3(x, y, z)


# -- anchor_layout ---------------------------------------------------------------

def test_anchor_degenerate_layout_all_at_anchor():
    aps = [ApDescriptor(id=i, position=Vec3(2.0, 2.0, 3.0), boresight=DOWN)
           for i in range(3)]
    layout = ApLayout(aps)
    out = anchor_layout(layout, Vec3(1.0, 1.0, 1.0))
    assert all(p == Vec3(1.0, 1.0, 1.0) for p in out)


def test_anchor_is_translation():
    aps = [ApDescriptor(id=0, position=Vec3(0, 0, 3), boresight=DOWN),
           ApDescriptor(id=1, position=Vec3(5, 0, 3), boresight=DOWN)]
    layout = ApLayout(aps)
    out = anchor_layout(layout, Vec3(2, 3, 0))
    assert out == [Vec3(2, 3, 0), Vec3(7, 3, 0)]


def test_anchor_preserves_pairwise_distances(layout6):
    anchored = anchor_layout(layout6, Vec3(-3.7, 12.9, 0.4))
    true_pos = layout6.positions()
    for i in range(len(layout6)):
        for j in range(len(layout6)):
            want = true_pos[i].distance_to(true_pos[j])
            got = anchored[i].distance_to(anchored[j])
            assert abs(want - got) < 1e-12


def test_anchor_translation_equivariance(layout6, rng):
    a = Vec3(*rng.uniform(-5, 5, 3))
    delta = Vec3(*rng.uniform(-5, 5, 3))
    base = anchor_layout(layout6, a)
    shifted = anchor_layout(layout6, a + delta)
    for p, q in zip(base, shifted):
        assert (q - (p + delta)).norm() < 1e-12


# -- Voronoi neighbors / switch lines ----------------------------------------------

def test_single_ap_layout_has_no_switch_lines():
    layout = ApLayout([ApDescriptor(id=0, position=Vec3(0, 0, 3), boresight=DOWN)])
    assert switch_lines_for(layout, 0) == []


def test_two_ap_bisector():
    layout = ApLayout([
        ApDescriptor(id=0, position=Vec3(0, 0, 3), boresight=DOWN),
        ApDescriptor(id=1, position=Vec3(10, 0, 3), boresight=DOWN)])
    lines = switch_lines_for(layout, 0)
    assert len(lines) == 1
    line = lines[0]
    assert line.point == Vec3(5, 0, 0)
    assert abs(line.normal.x - 1.0) < 1e-12 and abs(line.normal.y) < 1e-12


def rasterized_voronoi_adjacency(layout, resolution=0.01, margin=2.5):
    """Brute-force oracle: nearest-site labels on a floor grid, 4-connectivity."""
    pts = np.array([[ap.position.x, ap.position.y] for ap in layout.aps])
    ids = [ap.id for ap in layout.aps]
    x0, x1 = pts[:, 0].min() - margin, pts[:, 0].max() + margin
    y0, y1 = pts[:, 1].min() - margin, pts[:, 1].max() + margin
    xs = np.arange(x0 + resolution / 2, x1, resolution)
    ys = np.arange(y0 + resolution / 2, y1, resolution)
    label = np.empty((len(xs), len(ys)), dtype=np.int64)
    for i in range(0, len(xs), 256):    # chunk rows to bound memory
        block = xs[i:i + 256]
        d2 = ((block[:, None, None] - pts[:, 0][None, None, :]) ** 2
              + (ys[None, :, None] - pts[:, 1][None, None, :]) ** 2)
        label[i:i + 256] = np.argmin(d2, axis=2)
    adj = set()
    a, b = label[:-1, :], label[1:, :]
    for u, v in zip(a[a != b], b[a != b]):
        adj.add((min(ids[u], ids[v]), max(ids[u], ids[v])))
    a, b = label[:, :-1], label[:, 1:]
    for u, v in zip(a[a != b], b[a != b]):
        adj.add((min(ids[u], ids[v]), max(ids[u], ids[v])))
    return adj


def test_grid_adjacency_matches_rasterized_oracle(layout6):
    oracle = rasterized_voronoi_adjacency(layout6, resolution=0.01)
    mine = set()
    for ap in layout6.aps:
        for nb in voronoi_neighbors(layout6, ap.id):
            mine.add((min(ap.id, nb), max(ap.id, nb)))
    assert mine == oracle


def test_grid_interior_ap_has_three_lines(layout6):
    # middle-column APs (ids 2 and 3) touch left, right, and across
    assert len(switch_lines_for(layout6, 2)) == 3
    assert len(switch_lines_for(layout6, 3)) == 3
    # corner APs touch two cells; diagonals only share a point
    assert len(switch_lines_for(layout6, 0)) == 2
    assert len(switch_lines_for(layout6, 5)) == 2


def test_random_layout_adjacency_matches_oracle(rng):
    pts = rng.uniform(0, 12, size=(7, 2))
    layout = ApLayout([ApDescriptor(id=i, position=Vec3(x, y, 3.0), boresight=DOWN)
                       for i, (x, y) in enumerate(pts)])
    oracle = rasterized_voronoi_adjacency(layout, resolution=0.02)
    mine = set()
    for ap in layout.aps:
        for nb in voronoi_neighbors(layout, ap.id):
            mine.add((min(ap.id, nb), max(ap.id, nb)))
    assert mine == oracle


def test_collinear_layout_neighbors():
    # Delaunay-degenerate case: three APs on a line
    layout = ApLayout([ApDescriptor(id=i, position=Vec3(4.0 * i, 0, 3), boresight=DOWN)
                       for i in range(3)])
    assert voronoi_neighbors(layout, 0) == [1]
    assert sorted(voronoi_neighbors(layout, 1)) == [0, 2]
    assert voronoi_neighbors(layout, 2) == [1]


def test_switch_line_contains_midpoint_and_splits_pair(layout6):
    for ap in layout6.aps:
        for line in switch_lines_for(layout6, ap.id):
            a = layout6.by_id(line.current_ap).position
            b = layout6.by_id(line.neighbor_ap).position
            mid = (a.floor() + b.floor()).scale(0.5)
            assert abs(line.signed_distance(mid)) < 1e-9
            da = line.signed_distance(a)
            db = line.signed_distance(b)
            assert da < 0 < db
            assert abs(da + db) < 1e-9


# -- crossed_switch_line -----------------------------------------------------------

LINE = SwitchLine(point=Vec3(5, 0, 0), normal=Vec3(1, 0, 0), current_ap=0, neighbor_ap=1)


def test_no_crossing_same_side():
    assert not crossed_switch_line(LINE, vec(1, 0), vec(4, 2))


def test_crossing_sign_change():
    assert crossed_switch_line(LINE, vec(4.5, 0), vec(5.5, 0))


def test_exact_landing_counts_once():
    assert crossed_switch_line(LINE, vec(4.5, 0), vec(5.0, 0))
    assert not crossed_switch_line(LINE, vec(5.0, 0), vec(5.5, 0))


def test_straight_walk_crosses_exactly_once(layout6):
    # sampled 1.4 m/s walk from AP0's cell into AP2's: one crossing event
    line = next(l for l in switch_lines_for(layout6, 0) if l.neighbor_ap == 2)
    ts = np.arange(0, 5.01, 0.1)
    pts = [Vec3(1.5 + 1.4 * t, 2.5, 1.0) for t in ts]
    crossings = sum(crossed_switch_line(line, a, b) for a, b in zip(pts, pts[1:]))
    assert crossings == 1


@settings(max_examples=200, deadline=None)
@given(px=st.floats(-10, 10), py=st.floats(-10, 10),
       nx=st.floats(-1, 1), ny=st.floats(-1, 1),
       ax=st.floats(-20, 20), ay=st.floats(-20, 20),
       bx=st.floats(-20, 20), by=st.floats(-20, 20))
def test_crossing_property_random_planes(px, py, nx, ny, ax, ay, bx, by):
    n = math.hypot(nx, ny)
    if n < 1e-6:
        return
    line = SwitchLine(point=Vec3(px, py, 0), normal=Vec3(nx / n, ny / n, 0),
                      current_ap=0, neighbor_ap=1)
    a, b = vec(ax, ay), vec(bx, by)
    da, db = line.signed_distance(a), line.signed_distance(b)
    crossed = crossed_switch_line(line, a, b)
    if da < 0 <= db:
        assert crossed
    else:
        assert not crossed
    # a path that stays strictly on one side never fires
    if da < 0 and db < 0:
        mid = Vec3((ax + bx) / 2, (ay + by) / 2, 0)
        assert not crossed_switch_line(line, a, mid) and not crossed_switch_line(line, mid, b)


def test_monotone_crossing_fires_once_on_sampled_path(rng):
    for _ in range(50):
        ang = rng.uniform(0, 2 * math.pi)
        line = SwitchLine(point=Vec3(*rng.uniform(-5, 5, 2), 0),
                          normal=Vec3(math.cos(ang), math.sin(ang), 0),
                          current_ap=0, neighbor_ap=1)
        d = rng.uniform(0.5, 3.0)
        start = line.point - line.normal.scale(d)
        step = line.normal.scale(rng.uniform(d / 20, d / 5))
        pts = [start + step.scale(i) for i in range(40)]
        crossings = sum(crossed_switch_line(line, a, b) for a, b in zip(pts, pts[1:]))
        assert crossings == 1


# -- layout validation --------------------------------------------------------------

def test_duplicate_ids_rejected():
    aps = [ApDescriptor(id=0, position=Vec3(0, 0, 3), boresight=DOWN),
           ApDescriptor(id=0, position=Vec3(5, 0, 3), boresight=DOWN)]
    with pytest.raises(ValueError, match="duplicate"):
        ApLayout(aps)


def test_bad_beamwidth_rejected():
    with pytest.raises(ValueError, match="beamwidth"):
        ApDescriptor(id=0, position=Vec3(0, 0, 3), boresight=DOWN, beamwidth_deg=181.0)


def test_nonfinite_vec_rejected():
    with pytest.raises(ValueError):
        Vec3(float("nan"), 0, 0)


def test_relative_offsets_zero_for_ap0(layout6):
    assert layout6.relative_offsets[0] == Vec3(0, 0, 0)
