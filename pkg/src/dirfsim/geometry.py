"""Room geometry: positions, AP layouts, and switch-line primitives.

All types are immutable values; operations are pure functions. Switch-line
geometry lives on the floor plane (z dropped) because APs are ceiling-mounted
and clients move on the floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ZeroDirection

_ADJACENCY_TOL = 1e-9  # minimum shared-edge length for Voronoi adjacency (m)


@dataclass(frozen=True)
class Vec3:
    """3D point or direction, in meters (dimensionless when a direction)."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for c in (self.x, self.y, self.z):
            if not math.isfinite(c):
                raise ValueError(f"non-finite component in {self!r}")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scale(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def unit(self) -> "Vec3":
        n = self.norm()
        if n == 0.0:
            raise ZeroDirection("cannot normalize a zero vector")
        return self.scale(1.0 / n)

    def floor(self) -> "Vec3":
        """Projection onto the floor plane (z = 0)."""
        return Vec3(self.x, self.y, 0.0)

    def distance_to(self, other: "Vec3") -> float:
        return (self - other).norm()

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


ZERO = Vec3(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ApDescriptor:
    """One ceiling-mounted AP: mount point, antenna aim, and main-lobe shape."""

    id: int
    position: Vec3
    boresight: Vec3
    beamwidth_deg: float = 60.0
    boresight_gain_db: float = 9.0

    def __post_init__(self):
        if not 0.0 < self.beamwidth_deg <= 180.0:
            raise ValueError(f"beamwidth_deg must be in (0, 180], got {self.beamwidth_deg}")
        n = self.boresight.norm()
        if abs(n - 1.0) > 1e-9:
            if n == 0.0:
                raise ValueError("boresight must be a unit vector")
            object.__setattr__(self, "boresight", self.boresight.scale(1.0 / n))


class ApLayout:
    """Set of APs plus the relative geometry used to anchor them.

    ``relative_offsets[i]`` is AP i's position minus AP 0's position, so
    anchoring the layout at any estimate of AP 0 reproduces every pairwise
    distance exactly.
    """

    def __init__(self, aps: list[ApDescriptor]):
        if not aps:
            raise ValueError("layout needs at least one AP")
        ids = [ap.id for ap in aps]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate AP ids in layout: {ids}")
        self.aps = sorted(aps, key=lambda ap: ap.id)
        origin = self.aps[0].position
        self.relative_offsets = [ap.position - origin for ap in self.aps]

    def __len__(self) -> int:
        return len(self.aps)

    def ids(self) -> list[int]:
        return [ap.id for ap in self.aps]

    def by_id(self, ap_id: int) -> ApDescriptor:
        for ap in self.aps:
            if ap.id == ap_id:
                return ap
        raise KeyError(f"no AP with id {ap_id}")

    def index_of(self, ap_id: int) -> int:
        for i, ap in enumerate(self.aps):
            if ap.id == ap_id:
                return i
        raise KeyError(f"no AP with id {ap_id}")

    def positions(self) -> list[Vec3]:
        return [ap.position for ap in self.aps]

    def nearest_ap(self, pos: Vec3) -> int:
        """Id of the AP owning the floor-projected Voronoi cell containing pos."""
        f = pos.floor()
        best = min(self.aps, key=lambda ap: (f.distance_to(ap.position.floor()), ap.id))
        return best.id


@dataclass(frozen=True)
class SwitchLine:
    """Perpendicular-bisector plane between a Voronoi-adjacent AP pair.

    Stored on the floor plane; ``normal`` points from the current AP's side
    toward the neighbor's side.
    """

    point: Vec3
    normal: Vec3
    current_ap: int
    neighbor_ap: int

    def signed_distance(self, pos: Vec3) -> float:
        """Floor-projected signed distance; negative on the current AP's side."""
        d = pos.floor() - self.point
        return d.dot(self.normal)


def anchor_layout(layout: ApLayout, anchor_ap0: Vec3) -> list[Vec3]:
    """All AP positions reconstructed from an anchor for AP 0.

    Returns one position per AP in id order; element 0 equals the anchor.
    """
    return [anchor_ap0 + off for off in layout.relative_offsets]


def layout_bounds(layout: ApLayout, margin: float = 2.5):
    """Rectangular room bounds: AP floor bounding box plus a margin."""
    xs = [ap.position.x for ap in layout.aps]
    ys = [ap.position.y for ap in layout.aps]
    return ((min(xs) - margin, max(xs) + margin), (min(ys) - margin, max(ys) + margin))


def voronoi_neighbors(layout: ApLayout, ap_id: int, bounds=None) -> list[int]:
    """Ids of APs whose floor-projected Voronoi cells share an edge with ap_id's
    inside the room box.

    Exact test: sites i and j are adjacent iff their bisector line contains a
    segment of positive length, within bounds, whose points are at least as
    close to i and j as to every other site. Solved as a 1D interval
    intersection along the bisector, which stays robust for collinear layouts
    where Delaunay-based adjacency degenerates. Clipping to the room keeps
    out far-field edges no client can ever cross.
    """
    if bounds is None:
        bounds = layout_bounds(layout)
    (bx0, bx1), (by0, by1) = bounds
    i = layout.index_of(ap_id)
    pts = [ap.position.floor() for ap in layout.aps]
    pi = pts[i]
    neighbors = []
    for j in range(len(pts)):
        if j == i:
            continue
        pj = pts[j]
        axis = pj - pi
        if axis.norm() < 1e-12:
            continue  # coincident floor projections never form a cell edge
        mid = (pi + pj).scale(0.5)
        u = Vec3(-axis.y, axis.x, 0.0).unit()  # direction along the bisector
        lo, hi = -math.inf, math.inf

        def clip(a, c):
            # constraint a*s <= c
            nonlocal lo, hi
            if abs(a) < 1e-15:
                if c < 0.0:
                    lo, hi = math.inf, -math.inf
                return
            s = c / a
            if a > 0.0:
                hi = min(hi, s)
            else:
                lo = max(lo, s)

        for k in range(len(pts)):
            if k in (i, j):
                continue
            pk = pts[k]
            # |x - pi|^2 <= |x - pk|^2 for x = mid + s*u reduces to a*s <= c
            clip(2.0 * u.dot(pk - pi),
                 pk.dot(pk) - pi.dot(pi) - 2.0 * mid.dot(pk - pi))
        clip(u.x, bx1 - mid.x)
        clip(-u.x, mid.x - bx0)
        clip(u.y, by1 - mid.y)
        clip(-u.y, mid.y - by0)
        if hi - lo > _ADJACENCY_TOL:
            neighbors.append(layout.aps[j].id)
    return neighbors


def switch_lines_for(layout: ApLayout, current_ap: int, bounds=None) -> list[SwitchLine]:
    """Switch lines of the given AP: one bisector plane per Voronoi neighbor.

    A single-AP layout has no neighbors and yields an empty list (selection
    never triggers).
    """
    cur = layout.by_id(current_ap)
    lines = []
    for nb_id in voronoi_neighbors(layout, current_ap, bounds=bounds):
        nb = layout.by_id(nb_id)
        a = cur.position.floor()
        b = nb.position.floor()
        mid = (a + b).scale(0.5)
        normal = (b - a).unit()
        lines.append(SwitchLine(point=mid, normal=normal,
                                current_ap=current_ap, neighbor_ap=nb_id))
    return lines


def crossed_switch_line(line: SwitchLine, prev_pos: Vec3, cur_pos: Vec3) -> bool:
    """True iff the floor-projected step crosses from the current-AP side over.

    Landing exactly on the plane counts as crossed; starting on it does not,
    so a sampled monotone crossing fires exactly once.
    """
    return line.signed_distance(prev_pos) < 0.0 <= line.signed_distance(cur_pos)
