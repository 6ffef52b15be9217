"""Visibility polygon and visible-object computation via an angular sweep.

The sensor sees a wedge of half-angle ``fov_half_angle`` about +x, clipped to
the ``r_visible`` disc, minus the shadows of the occluder rectangles (parked
cars; optionally crossing pedestrians).  The sweep partitions the wedge at
every occluder-corner angle; inside one angular interval the nearest blocking
edge cannot change (occluders are disjoint, so their edges never cross), so a
single ray cast at the interval midpoint identifies it.  Object visibility is
then decided exactly: an object at distance d and angle t is visible iff
d <= min(r_visible, distance along t to the interval's blocking edge), with a
1e-9 m tie epsilon so corner-grazing rays resolve to "visible".

The polygon vertex list is derived lazily from the same profile (arcs sampled
at <= 2 degrees) and is used for traces/plots only; visibility decisions never
go through the sampled polygon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError
from .world import WorldState

EPS = 1e-9  # geometric tie epsilon, meters
PED_OCCLUDER_SIZE = 0.5  # square side when pedestrians are configured to occlude


@dataclass(frozen=True)
class SensorSpec:
    r_visible: float = 40.0
    fov_half_angle: float = math.pi / 2.0
    mount_dx: float = 0.0  # ego-local, from the front-bumper center
    mount_dy: float = 0.0
    pedestrians_occlude: bool = False

    def __post_init__(self):
        if self.r_visible <= 0:
            raise ConfigError(f"r_visible must be positive, got {self.r_visible}")
        if not (0.0 < self.fov_half_angle <= math.pi):
            raise ConfigError(f"fov_half_angle must be in (0, pi], got {self.fov_half_angle}")


@dataclass
class VisibilityResult:
    sensor: SensorSpec
    origin: tuple[float, float]
    visible_pedestrian_ids: tuple[int, ...]
    visible_parked_car_indices: tuple[int, ...]
    crosswalk_visible: bool
    occluded_sidewalk_intervals: tuple[tuple[str, float, float], ...]
    # angular profile: boundaries (M+1,), per-interval blocking edge index (-1 = range arc)
    _crit: np.ndarray = field(repr=False, default=None)
    _edge_idx: np.ndarray = field(repr=False, default=None)
    _edges: np.ndarray = field(repr=False, default=None)  # (E, 4) px, py, qx, qy
    _lam_mid: np.ndarray = field(repr=False, default=None)  # (M, E) midpoint distances
    _edge_owner: np.ndarray = field(repr=False, default=None)

    def is_visible_point(self, x: float, y: float) -> bool:
        return bool(
            _membership_core(
                np.array([[x, y]]),
                np.array([-1]),
                self._edge_owner,
                self.origin,
                self.sensor,
                self._crit,
                self._edges,
                self._lam_mid,
            )[0]
        )

    @cached_property
    def polygon(self) -> list[tuple[float, float]]:
        """Ordered vertex list (world coordinates), star-shaped about the origin."""
        return _profile_polygon(self.origin, self.sensor, self._crit, self._edge_idx, self._edges)


def _occluder_rects(world: WorldState, sensor: SensorSpec) -> tuple[np.ndarray, np.ndarray]:
    """Occluder rectangles plus an owner id per rectangle (car index, or
    n_cars + pedestrian list index for crossing-pedestrian squares) so an
    object's own body never occludes its reference point."""
    n_cars = len(world.parked_cars)
    rects = [car.rect(world.road) for car in world.parked_cars]
    owners = list(range(n_cars))
    if sensor.pedestrians_occlude:
        h = PED_OCCLUDER_SIZE / 2.0
        for i, p in enumerate(world.pedestrians):
            if p.state == "crossing":
                rects.append((p.x - h, p.y - h, p.x + h, p.y + h))
                owners.append(n_cars + i)
    if not rects:
        return np.empty((0, 4)), np.empty(0, dtype=int)
    return np.asarray(rects, dtype=float), np.asarray(owners, dtype=int)


def _rect_edges(rects: np.ndarray) -> np.ndarray:
    """(E, 4) rows px, py, qx, qy; four edges per rectangle."""
    if rects.size == 0:
        return np.empty((0, 4))
    x0, y0, x1, y1 = rects[:, 0], rects[:, 1], rects[:, 2], rects[:, 3]
    edges = np.concatenate(
        [
            np.stack([x0, y0, x1, y0], axis=1),
            np.stack([x1, y0, x1, y1], axis=1),
            np.stack([x1, y1, x0, y1], axis=1),
            np.stack([x0, y1, x0, y0], axis=1),
        ]
    )
    return edges


def _ray_edge_distances(origin, thetas: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """(M, E) distance along each ray to each edge; inf where no hit."""
    sx, sy = origin
    ux = np.cos(thetas)[:, None]
    uy = np.sin(thetas)[:, None]
    px = edges[None, :, 0] - sx
    py = edges[None, :, 1] - sy
    dx = edges[None, :, 2] - edges[None, :, 0]
    dy = edges[None, :, 3] - edges[None, :, 1]
    det = dx * uy - dy * ux
    safe = np.abs(det) > 1e-15
    det = np.where(safe, det, 1.0)
    lam = (dx * py - dy * px) / det
    t = (ux * py - uy * px) / det
    hit = safe & (t >= -1e-12) & (t <= 1.0 + 1e-12) & (lam > EPS)
    return np.where(hit, lam, np.inf)


def _build_profile(origin, sensor: SensorSpec, rects: np.ndarray):
    """Critical angles, the nearest blocking edge per angular interval, and the
    full midpoint distance matrix (for owner-excluding queries)."""
    fov = sensor.fov_half_angle
    sx, sy = origin
    edges = _rect_edges(rects)
    angles = [np.array([-fov, fov])]
    if rects.size:
        cx = np.concatenate([rects[:, 0], rects[:, 2], rects[:, 0], rects[:, 2]])
        cy = np.concatenate([rects[:, 1], rects[:, 1], rects[:, 3], rects[:, 3]])
        corner = np.arctan2(cy - sy, cx - sx)
        angles.append(corner[(corner > -fov) & (corner < fov)])
    crit = np.unique(np.concatenate(angles))
    mids = (crit[:-1] + crit[1:]) / 2.0
    if edges.size:
        lam = _ray_edge_distances(origin, mids, edges)
        nearest = np.argmin(lam, axis=1)
        best = lam[np.arange(len(mids)), nearest]
        edge_idx = np.where(np.isfinite(best), nearest, -1).astype(np.int64)
    else:
        lam = np.empty((len(mids), 0))
        edge_idx = np.full(len(mids), -1, dtype=np.int64)
    return crit, edge_idx, edges, lam


ANG_EPS = 1e-9  # angular tie tolerance: boundary-grazing objects check both sides


def _nearest_foreign_edge(lam_row, edge_owner, owner: int) -> int:
    """Index of the nearest interval edge not owned by `owner`, or -1."""
    row = lam_row
    if owner >= 0 and edge_owner.size:
        row = np.where(edge_owner == owner, np.inf, row)
    e = int(np.argmin(row))
    return e if np.isfinite(row[e]) else -1


def _membership_core(points, owners, edge_owner, origin, sensor, crit, edges, lam_mid) -> np.ndarray:
    """Exact visible/invisible decision for an (N, 2) array of points.

    The sight limit along a ray is min(r_visible, distance to the interval's
    nearest edge not owned by the queried object).  A point within ANG_EPS of
    an interval boundary is visible if either adjacent interval admits it
    (corner grazing resolves to visible).
    """
    if points.size == 0:
        return np.zeros(0, dtype=bool)
    sx, sy = origin
    dx = points[:, 0] - sx
    dy = points[:, 1] - sy
    d = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    r = sensor.r_visible
    in_fov = np.abs(theta) <= sensor.fov_half_angle + 1e-12
    n_int = lam_mid.shape[0]
    if n_int == 0 or edges.size == 0:
        return in_fov & (d <= r + EPS)
    idx = np.clip(np.searchsorted(crit, theta, side="right") - 1, 0, n_int - 1)

    # nearest non-own edge per point, from the midpoint ranking of its interval
    lam_rows = lam_mid[idx]  # (N, E)
    if edge_owner.size:
        lam_rows = np.where(edge_owner[None, :] == owners[:, None], np.inf, lam_rows)
    nearest = np.argmin(lam_rows, axis=1)
    blocked = np.isfinite(lam_rows[np.arange(len(points)), nearest])

    limit = np.full(len(points), r)
    if blocked.any():
        e = edges[nearest[blocked]]
        ux, uy = np.cos(theta[blocked]), np.sin(theta[blocked])
        px, py = e[:, 0] - sx, e[:, 1] - sy
        qx, qy = e[:, 2] - e[:, 0], e[:, 3] - e[:, 1]
        det = qx * uy - qy * ux
        safe = np.abs(det) > 1e-15
        det = np.where(safe, det, 1.0)
        lam = (qx * py - qy * px) / det
        lam = np.where(safe & (lam > EPS), lam, np.inf)
        limit[blocked] = np.minimum(limit[blocked], lam)
    visible = in_fov & (d <= limit + EPS)

    # rescue pass: boundary-grazing points may be admitted by a neighbor interval
    maybe = in_fov & ~visible & (d <= r + EPS)
    for i in np.nonzero(maybe)[0]:
        k = int(idx[i])
        t = float(theta[i])
        for k2 in (k - 1, k + 1):
            if k2 < 0 or k2 >= n_int:
                continue
            boundary = crit[max(k, k2)]
            if abs(t - boundary) >= ANG_EPS:
                continue
            e = _nearest_foreign_edge(lam_mid[k2], edge_owner, int(owners[i]))
            lim = r if e < 0 else min(r, _edge_distance_at(origin, t, edges[e]))
            if d[i] <= lim + EPS:
                visible[i] = True
                break
    return visible


def _edge_distance_at(origin, theta: float, edge) -> float:
    sx, sy = origin
    ux, uy = math.cos(theta), math.sin(theta)
    px, py = edge[0] - sx, edge[1] - sy
    qx, qy = edge[2] - edge[0], edge[3] - edge[1]
    det = qx * uy - qy * ux
    if abs(det) < 1e-15:
        return math.inf
    lam = (qx * py - qy * px) / det
    return lam if lam > EPS else math.inf


def _profile_polygon(origin, sensor: SensorSpec, crit, edge_idx, edges, arc_step=math.radians(2.0)):
    sx, sy = origin
    r = sensor.r_visible
    verts: list[tuple[float, float]] = [(sx, sy)]

    def push(x, y):
        if not verts or abs(verts[-1][0] - x) > 1e-9 or abs(verts[-1][1] - y) > 1e-9:
            verts.append((x, y))

    for i in range(len(edge_idx)):
        ta, tb = float(crit[i]), float(crit[i + 1])
        if tb - ta < 1e-12:
            continue
        e = edge_idx[i]
        if e < 0:
            n = max(1, int(math.ceil((tb - ta) / arc_step)))
            for k in range(n + 1):
                t = ta + (tb - ta) * k / n
                push(sx + r * math.cos(t), sy + r * math.sin(t))
        else:
            for t in (ta, tb):
                lam = min(_edge_distance_at(origin, t, edges[e]), r)
                push(sx + lam * math.cos(t), sy + lam * math.sin(t))
    return verts


def _sidewalk_occlusion(origin, sensor: SensorSpec, crit, edge_idx, edges, road) -> list:
    """Occluded [start, end] x-intervals per sidewalk; exact complement of the
    visible portion of the line y = +-sidewalk_y inside [0, road.length]."""
    sx, sy = origin
    r = sensor.r_visible
    out = []
    for side, ys in (("left", road.sidewalk_y), ("right", -road.sidewalk_y)):
        visible: list[tuple[float, float]] = []
        rel = ys - sy
        # the sidewalk line is radially reachable only if r exceeds its offset
        reach = r * r - rel * rel
        if reach > 0.0:
            half = math.sqrt(reach)
            rx_lo, rx_hi = sx - half, sx + half
            for i in range(len(edge_idx)):
                ta, tb = float(crit[i]), float(crit[i + 1])
                # the +ys sidewalk occupies angles (0, pi), the -ys one (-pi, 0)
                if rel > 0:
                    ta, tb = max(ta, 1e-12), min(tb, math.pi - 1e-12)
                else:
                    ta, tb = max(ta, -math.pi + 1e-12), min(tb, -1e-12)
                if tb - ta < 1e-12:
                    continue
                xa = sx + rel / math.tan(ta)
                xb = sx + rel / math.tan(tb)
                lo, hi = min(xa, xb), max(xa, xb)
                lo = max(lo, 0.0, rx_lo)
                hi = min(hi, road.length, rx_hi)
                if hi - lo < 1e-12:
                    continue
                e = edge_idx[i]
                if e >= 0:
                    xm = (lo + hi) / 2.0
                    tm = math.atan2(rel, xm - sx)
                    lam_sw = math.hypot(xm - sx, rel)
                    if lam_sw > _edge_distance_at(origin, tm, edges[e]) + EPS:
                        continue
                visible.append((lo, hi))
        # complement of the merged visible intervals within [0, length]
        visible.sort()
        occluded = []
        cursor = 0.0
        for lo, hi in visible:
            if lo > cursor + 1e-9:
                occluded.append((side, cursor, lo))
            cursor = max(cursor, hi)
        if cursor < road.length - 1e-9:
            occluded.append((side, cursor, road.length))
        out.extend(occluded)
    return out


def compute_visibility(world: WorldState, sensor: SensorSpec) -> VisibilityResult:
    """Visible pedestrians/parked cars/crosswalk and occluded sidewalk spans."""
    origin = (world.ego.position + sensor.mount_dx, world.road.ego_lane_y + sensor.mount_dy)
    rects, owners = _occluder_rects(world, sensor)
    if rects.size:
        # drop occluders that cannot intersect the range disc
        sx, sy = origin
        ddx = np.maximum(np.maximum(rects[:, 0] - sx, sx - rects[:, 2]), 0.0)
        ddy = np.maximum(np.maximum(rects[:, 1] - sy, sy - rects[:, 3]), 0.0)
        keep = np.hypot(ddx, ddy) <= sensor.r_visible
        rects, owners = rects[keep], owners[keep]
    crit, edge_idx, edges, lam_mid = _build_profile(origin, sensor, rects)
    edge_owner = np.tile(owners, 4) if rects.size else np.empty(0, dtype=int)

    n_cars = len(world.parked_cars)
    ped_points = np.array([[p.x, p.y] for p in world.pedestrians]).reshape(-1, 2)
    car_points = np.array([car.centroid(world.road) for car in world.parked_cars]).reshape(-1, 2)
    # the crosswalk is referenced where it crosses the ego's lane
    cw_point = np.array([[world.road.crosswalk_position, world.road.ego_lane_y]])

    ped_vis = _membership_core(
        ped_points, n_cars + np.arange(len(world.pedestrians)), edge_owner, origin, sensor, crit, edges, lam_mid
    )
    car_vis = _membership_core(
        car_points, np.arange(n_cars), edge_owner, origin, sensor, crit, edges, lam_mid
    )
    cw_vis = _membership_core(
        cw_point, np.array([-1]), edge_owner, origin, sensor, crit, edges, lam_mid
    )

    occluded = _sidewalk_occlusion(origin, sensor, crit, edge_idx, edges, world.road)

    return VisibilityResult(
        sensor=sensor,
        origin=origin,
        visible_pedestrian_ids=tuple(p.id for p, v in zip(world.pedestrians, ped_vis) if v),
        visible_parked_car_indices=tuple(i for i, v in enumerate(car_vis) if v),
        crosswalk_visible=bool(cw_vis[0]),
        occluded_sidewalk_intervals=tuple(occluded),
        _crit=crit,
        _edge_idx=edge_idx,
        _edges=edges,
        _lam_mid=lam_mid,
        _edge_owner=edge_owner,
    )
