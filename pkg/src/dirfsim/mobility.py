"""Client mobility: timestamped traces and synthetic trace generators.

Positions between samples are linearly interpolated; the direction of motion
over a window is the interpolated position difference.
"""

from __future__ import annotations

import bisect
import math

from .errors import DegenerateWindow, WindowOutsideTrace
from .geometry import ApLayout, Vec3, layout_bounds, switch_lines_for

SAMPLE_HZ = 10.0
DEFAULT_MAX_SPEED = 3.0  # m/s, above the fastest supported walking case (2.0 m/s)
_MIN_WINDOW_S = 1e-6


class MobilityTrace:
    """Ordered (timestamp, position) samples for one client."""

    def __init__(self, times: list[float], points: list[Vec3],
                 max_speed: float = DEFAULT_MAX_SPEED):
        if len(times) != len(points) or not times:
            raise ValueError("trace needs equal-length, non-empty times and points")
        for a, b in zip(times, times[1:]):
            if not b > a:
                raise ValueError("trace timestamps must be strictly increasing")
        for i, (a, b) in enumerate(zip(points, points[1:])):
            v = a.distance_to(b) / (times[i + 1] - times[i])
            if v > max_speed + 1e-9:
                raise ValueError(
                    f"speed {v:.3f} m/s between samples {i} and {i + 1} "
                    f"exceeds the maximum {max_speed} m/s")
        self.times = list(times)
        self.points = list(points)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def start_time(self) -> float:
        return self.times[0]

    @property
    def end_time(self) -> float:
        return self.times[-1]

    def covers(self, t: float) -> bool:
        return self.start_time <= t <= self.end_time

    def position_at(self, t: float) -> Vec3:
        if not self.covers(t):
            raise WindowOutsideTrace(
                f"t={t} outside trace span [{self.start_time}, {self.end_time}]")
        i = bisect.bisect_right(self.times, t) - 1
        if i >= len(self.times) - 1:
            return self.points[-1]
        t0, t1 = self.times[i], self.times[i + 1]
        w = (t - t0) / (t1 - t0)
        a, b = self.points[i], self.points[i + 1]
        return a + (b - a).scale(w)

    def speed_at(self, t: float, window_s: float = 0.5) -> float:
        """Mean speed over a short centered window, clipped to the trace.

        Path length, not displacement, so turns do not read as slowdowns.
        """
        lo = max(self.start_time, t - window_s / 2)
        hi = min(self.end_time, t + window_s / 2)
        if hi - lo < _MIN_WINDOW_S:
            return 0.0
        i = bisect.bisect_right(self.times, lo)
        length = 0.0
        prev = self.position_at(lo)
        while i < len(self.times) and self.times[i] < hi:
            length += prev.distance_to(self.points[i])
            prev = self.points[i]
            i += 1
        length += prev.distance_to(self.position_at(hi))
        return length / (hi - lo)

    def path_length(self) -> float:
        return sum(a.distance_to(b) for a, b in zip(self.points, self.points[1:]))


def moving_direction(trace: MobilityTrace, t: float, t_prime: float) -> Vec3:
    """Position variation over [t, t']: position(t') - position(t).

    Accepts either window order so the result is antisymmetric in its
    endpoints.
    """
    if abs(t_prime - t) < _MIN_WINDOW_S:
        raise DegenerateWindow(f"window [{t}, {t_prime}] shorter than {_MIN_WINDOW_S} s")
    if not (trace.covers(t) and trace.covers(t_prime)):
        raise WindowOutsideTrace(
            f"window [{t}, {t_prime}] outside trace span "
            f"[{trace.start_time}, {trace.end_time}]")
    return trace.position_at(t_prime) - trace.position_at(t)


# -- synthetic generators ------------------------------------------------------

def tour_order(layout: ApLayout) -> list[int]:
    """Cell visit order for the tour: even ids ascending, then odd descending.

    For the default 2x3 grid this is 0, 2, 4, 5, 3, 1 (a serpentine over the
    two rows).
    """
    ids = layout.ids()
    return sorted(i for i in ids if i % 2 == 0) + sorted(
        (i for i in ids if i % 2 == 1), reverse=True)


def _reflect(value: float, lo: float, hi: float) -> float:
    span = hi - lo
    if span <= 0:
        return lo
    v = (value - lo) % (2 * span)
    return lo + (span - abs(v - span))


def _wander_step(pos, heading, step, rng, inside):
    """One heading-random-walk step; turns instead of leaving the region."""
    for _ in range(16):
        heading += float(rng.normal(0.0, 0.35))
        cand = (pos[0] + step * math.cos(heading), pos[1] + step * math.sin(heading))
        if inside(cand):
            return cand, heading
        heading += math.pi / 2
    return pos, heading  # boxed in; stand still this tick

def _cell_interior_test(layout: ApLayout, ap_id: int, bounds, margin: float):
    lines = switch_lines_for(layout, ap_id)
    (x0, x1), (y0, y1) = bounds

    def inside(p):
        if not (x0 + margin <= p[0] <= x1 - margin and y0 + margin <= p[1] <= y1 - margin):
            return False
        q = Vec3(p[0], p[1], 0.0)
        return all(line.signed_distance(q) <= -margin for line in lines)

    return inside


def _wander_points(layout: ApLayout, ap_id: int, bounds, speed, n_steps, rng, z,
                   margin: float = 0.4):
    inside = _cell_interior_test(layout, ap_id, bounds, margin)
    ap = layout.by_id(ap_id).position
    pos = (ap.x, ap.y)
    if not inside(pos):  # margin larger than the cell; fall back to the AP foot
        margin = 0.0
        inside = _cell_interior_test(layout, ap_id, bounds, margin)
    heading = float(rng.uniform(0.0, 2 * math.pi))
    step = speed / SAMPLE_HZ
    pts = [Vec3(pos[0], pos[1], z)]
    for _ in range(n_steps):
        pos, heading = _wander_step(pos, heading, step, rng, inside)
        pts.append(Vec3(pos[0], pos[1], z))
    return pts


def generate_trace(kind: str, layout: ApLayout, speed: float, seed: int,
                   duration: float, *, client_height: float = 1.0,
                   bounds=None, rng=None) -> MobilityTrace:
    """Synthetic 10 Hz trace of the requested kind.

    kinds:
      straight        constant-velocity walk, reflecting at the room bounds
      tour            wander inside the first cell until ~16 m of path have
                      been covered, then visit every cell in tour_order()
      random_waypoint uniform waypoints inside the room at constant speed
    """
    if speed <= 0:
        raise ValueError("speed must be > 0")
    if duration <= 0:
        raise ValueError("duration must be > 0")
    from .seeding import substream
    if rng is None:
        rng = substream(seed, 0x7261CE)
    if bounds is None:
        bounds = layout_bounds(layout)
    (x0, x1), (y0, y1) = bounds
    n_steps = int(round(duration * SAMPLE_HZ))
    times = [i / SAMPLE_HZ for i in range(n_steps + 1)]
    z = client_height
    step = speed / SAMPLE_HZ

    if kind == "straight":
        # Start by the first AP's wall with seeded jitter, heading across the
        # room's long axis; walks up to the room width fit without touching a
        # wall, and longer ones reflect.
        start_ap = layout.aps[0].position
        sy = min(max(start_ap.y + float(rng.uniform(-0.5, 0.5)), y0 + 0.3), y1 - 0.3)
        ang = float(rng.uniform(-0.1, 0.1))
        if abs(start_ap.x - x0) <= abs(x1 - start_ap.x):
            sx = x0 + 0.3
        else:
            sx = x1 - 0.3
            ang += math.pi
        ux, uy = math.cos(ang), math.sin(ang)
        pts = []
        for t in times:
            px = _reflect(sx + ux * speed * t, x0, x1)
            py = _reflect(sy + uy * speed * t, y0, y1)
            pts.append(Vec3(px, py, z))
        return MobilityTrace(times, pts)

    if kind == "random_waypoint":
        pos = (float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1)))
        target = pos
        pts = [Vec3(pos[0], pos[1], z)]
        for _ in range(n_steps):
            remaining = math.hypot(target[0] - pos[0], target[1] - pos[1])
            while remaining < step:
                target = (float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1)))
                remaining = math.hypot(target[0] - pos[0], target[1] - pos[1])
            f = step / remaining
            pos = (pos[0] + (target[0] - pos[0]) * f, pos[1] + (target[1] - pos[1]) * f)
            pts.append(Vec3(pos[0], pos[1], z))
        return MobilityTrace(times, pts)

    if kind == "tour":
        order = tour_order(layout)
        first = order[0]
        wander_steps = min(n_steps, int(round(16.0 / step)))
        pts = _wander_points(layout, first, bounds, speed, wander_steps, rng, z)
        waypoints = [layout.by_id(i).position for i in order]
        wp_idx = 1  # head out from inside the first cell
        pos = (pts[-1].x, pts[-1].y)
        while len(pts) < n_steps + 1:
            if wp_idx < len(waypoints):
                tx, ty = waypoints[wp_idx].x, waypoints[wp_idx].y
                remaining = math.hypot(tx - pos[0], ty - pos[1])
                if remaining <= step:
                    pos = (tx, ty)
                    wp_idx += 1
                else:
                    f = step / remaining
                    pos = (pos[0] + (tx - pos[0]) * f, pos[1] + (ty - pos[1]) * f)
            pts.append(Vec3(pos[0], pos[1], z))  # after the tour: hold position
        return MobilityTrace(times, pts)

    raise ValueError(f"unknown trace kind {kind!r}")


def generate_cell_waypoint(layout: ApLayout, cell: int, speed: float,
                           duration: float, *, client_height: float = 1.0,
                           bounds=None, rng=None, margin: float = 0.4) -> MobilityTrace:
    """Random-waypoint walk confined to one AP's Voronoi cell.

    Waypoints are rejected outside the cell interior; cells are convex, so the
    legs between waypoints stay inside as well.
    """
    if speed <= 0 or duration <= 0:
        raise ValueError("speed and duration must be > 0")
    from .seeding import substream
    if rng is None:
        rng = substream(cell, 0xCE11)
    if bounds is None:
        bounds = layout_bounds(layout)
    (x0, x1), (y0, y1) = bounds
    inside = _cell_interior_test(layout, cell, bounds, margin)
    ap = layout.by_id(cell).position
    if not inside((ap.x, ap.y)):
        inside = _cell_interior_test(layout, cell, bounds, 0.0)

    def draw_point():
        for _ in range(256):
            cand = (float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1)))
            if inside(cand):
                return cand
        return (ap.x, ap.y)

    n_steps = int(round(duration * SAMPLE_HZ))
    times = [i / SAMPLE_HZ for i in range(n_steps + 1)]
    step = speed / SAMPLE_HZ
    pos = draw_point()
    target = pos
    pts = [Vec3(pos[0], pos[1], client_height)]
    for _ in range(n_steps):
        remaining = math.hypot(target[0] - pos[0], target[1] - pos[1])
        while remaining < step:
            target = draw_point()
            remaining = math.hypot(target[0] - pos[0], target[1] - pos[1])
        f = step / remaining
        pos = (pos[0] + (target[0] - pos[0]) * f, pos[1] + (target[1] - pos[1]) * f)
        pts.append(Vec3(pos[0], pos[1], client_height))
    return MobilityTrace(times, pts)
