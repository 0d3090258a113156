"""Scaffolding plan: reorient the structure and place one vertical post per strut.

The longitudinal axis runs through the two strut centroids that are furthest
apart. The structure is rotated so that axis lies along +x, moved into the
first octant, and each strut gets azimuth/elevation angles locating its
high end plus an attachment point at 1/4, 1/2 or 3/4 of its length, chosen
to maximize the smallest plan-view distance between posts.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .model import Configuration, TopologyMap, check_configuration

log = logging.getLogger(__name__)

FRACTIONS = (0.25, 0.5, 0.75)
POST_ALLOWANCE = 1.0  # inches added to zpost: 0.25 base + 0.5 clearance + socket


class ScaffoldError(ValueError):
    pass


@dataclass(frozen=True)
class AxisRecord:
    pt1: int  # 1-based strut indices
    pt2: int
    maxdis: float


@dataclass(frozen=True)
class StrutPlacement:
    strut: int
    xpost: float
    ypost: float
    zpost: float
    theta_az: float
    theta_el: float
    jsave: int
    high_vertex: int
    low_vertex: int
    endpoint_z: tuple[float, float]  # (low, high)

    def to_dict(self) -> dict:
        return {
            "strut": self.strut,
            "xpost": self.xpost,
            "ypost": self.ypost,
            "zpost": self.zpost,
            "theta_az": self.theta_az,
            "theta_el": self.theta_el,
            "jsave": self.jsave,
            "high_vertex": self.high_vertex,
            "low_vertex": self.low_vertex,
            "endpoint_z": list(self.endpoint_z),
        }


@dataclass(frozen=True)
class ScaffoldPlan:
    axis: AxisRecord
    placements: tuple[StrutPlacement, ...]
    reoriented_config: Configuration | None = None
    margin: float = 0.5
    min_post_spacing: float = math.inf
    post_length: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.post_length:
            object.__setattr__(self, "post_length",
                               tuple(p.zpost + POST_ALLOWANCE for p in self.placements))

    def column(self, name: str) -> list:
        return [getattr(p, name) for p in self.placements]

    def to_dict(self) -> dict:
        return {
            "pt1": self.axis.pt1,
            "pt2": self.axis.pt2,
            "maxdis": self.axis.maxdis,
            "placements": [p.to_dict() for p in self.placements],
            "post_length": list(self.post_length),
            "min_post_spacing": None if math.isinf(self.min_post_spacing) else self.min_post_spacing,
            "margin": self.margin,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScaffoldPlan":
        placements = tuple(
            StrutPlacement(
                strut=int(p["strut"]), xpost=p["xpost"], ypost=p["ypost"], zpost=p["zpost"],
                theta_az=p["theta_az"], theta_el=p["theta_el"], jsave=int(p["jsave"]),
                high_vertex=int(p["high_vertex"]), low_vertex=int(p.get("low_vertex", 0)),
                endpoint_z=tuple(p["endpoint_z"]),
            )
            for p in data["placements"]
        )
        spacing = data.get("min_post_spacing")
        return cls(
            axis=AxisRecord(int(data["pt1"]), int(data["pt2"]), float(data["maxdis"])),
            placements=placements,
            margin=float(data.get("margin", 0.5)),
            min_post_spacing=math.inf if spacing is None else float(spacing),
            post_length=tuple(data.get("post_length", ())),
        )


def centroids(config: Configuration, topo: TopologyMap) -> np.ndarray:
    check_configuration(config, topo)
    st = topo.strut_index_array()
    return 0.5 * (config.coords[st[:, 0]] + config.coords[st[:, 1]])


def longitudinal_axis(cents: np.ndarray) -> AxisRecord:
    """Pair of centroids furthest apart; ties go to the smallest (pt1, pt2)."""
    cents = np.asarray(cents, dtype=float)
    n = len(cents)
    if n < 2:
        raise ScaffoldError("need at least two struts for a longitudinal axis")
    D = np.linalg.norm(cents[:, None] - cents[None], axis=2)
    iu, ju = np.triu_indices(n, 1)
    # triu_indices is lexicographic, argmax returns the first maximum
    k = int(np.argmax(D[iu, ju]))
    return AxisRecord(int(iu[k]) + 1, int(ju[k]) + 1, float(D[iu[k], ju[k]]))


def rotation_to_x(v: np.ndarray) -> np.ndarray:
    """Minimal rotation taking the direction ``v`` onto +x (Rodrigues)."""
    u = np.asarray(v, dtype=float) / np.linalg.norm(v)
    x = np.array([1.0, 0.0, 0.0])
    c = float(u @ x)
    w = np.cross(u, x)
    s = float(np.linalg.norm(w))
    if s < 1e-15:
        if c > 0:
            return np.eye(3)
        return np.diag([-1.0, -1.0, 1.0])  # 180 degrees about z
    k = w / s
    Kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * Kx + (1 - c) * (Kx @ Kx)


def _rot_x(deg: float) -> np.ndarray:
    a = math.radians(deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def reorient(config: Configuration, topo: TopologyMap, axis: AxisRecord, roll_scan: bool = False,
             margin: float = 0.5) -> Configuration:
    """Rotate the axis onto +x and shift so min z = 0 and min x = min y = ``margin``."""
    if axis.maxdis < 1e-9:
        raise ScaffoldError(f"degenerate longitudinal axis (maxdis = {axis.maxdis:.3g})")
    cents = centroids(config, topo)
    R = rotation_to_x(cents[axis.pt2 - 1] - cents[axis.pt1 - 1])
    X = config.coords @ R.T
    if roll_scan:
        heights = [np.ptp(X @ _rot_x(d).T[:, 2]) for d in range(360)]
        best = int(np.argmin(np.round(heights, 12)))
        X = X @ _rot_x(best).T
    X = X - X.min(axis=0)
    X[:, :2] += margin
    return Configuration(X)


def strut_angles(low_end, high_end) -> tuple[float, float]:
    """Azimuth in (-180, 180] and elevation in [0, 90] of the high end, degrees."""
    d = np.asarray(high_end, dtype=float) - np.asarray(low_end, dtype=float)
    n = float(np.linalg.norm(d))
    if n == 0:
        raise ScaffoldError("coincident strut endpoints")
    if d[2] < 0:
        raise ScaffoldError("high end lies below the low end")
    el = math.degrees(math.asin(min(d[2] / n, 1.0)))
    if el == 90.0 or math.hypot(d[0], d[1]) == 0:
        return 0.0, 90.0
    az = math.degrees(math.atan2(d[1], d[0]))
    if az <= -180.0:
        az += 360.0
    return az, el


def low_high(config: Configuration, strut: tuple[int, int]) -> tuple[int, int]:
    """Vertex labels ``(low, high)`` by z; exact ties put the smaller label low."""
    a, b = strut
    za, zb = config.vertex(a)[2], config.vertex(b)[2]
    if za < zb or (za == zb and a < b):
        return a, b
    return b, a


def _candidates(config: Configuration, topo: TopologyMap, from_end: str = "low") -> np.ndarray:
    """Attachment points, shape (n_struts, 3, 3): strut, choice, xyz."""
    out = np.empty((topo.n_struts, 3, 3))
    for i, pair in enumerate(topo.struts):
        lo, hi = low_high(config, pair)
        if from_end == "high":
            lo, hi = hi, lo
        a, b = config.vertex(lo), config.vertex(hi)
        for j, f in enumerate(FRACTIONS):
            out[i, j] = a + f * (b - a)
    return out


def _pair_distances(cand: np.ndarray) -> np.ndarray:
    """Plan-view distances D[i, a, j, b] between choice a on strut i and choice b on strut j."""
    xy = cand[:, :, :2]
    return np.linalg.norm(xy[:, :, None, None, :] - xy[None, None, :, :, :], axis=-1)


def spacing_objective(D: np.ndarray, jsave) -> float:
    """Minimum plan-view distance between posts for the 0-based choice vector."""
    n = D.shape[0]
    if n < 2:
        return math.inf
    c = np.asarray(jsave)
    iu, ju = np.triu_indices(n, 1)
    return float(np.min(D[iu, c[iu], ju, c[ju]]))


def _exhaustive(D: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact maximin over all 3^n choices; ties go to the lexicographically smallest."""
    n = D.shape[0]
    best = np.full(3, np.inf)  # running minimum for each choice of strut 0
    for k in range(1, n):
        # extend (3,)*k table with strut k's choice on a new trailing axis
        best = np.broadcast_to(best[..., None], best.shape + (3,)).copy()
        for j in range(k):
            T = D[j, :, k, :]  # (choice j, choice k)
            shape = [1] * (k + 1)
            shape[j] = 3
            shape[k] = 3
            np.minimum(best, T.reshape(shape), out=best)
    flat = best.ravel()
    idx = int(np.argmax(flat))
    choice = np.array(np.unravel_index(idx, (3,) * n)).astype(int).ravel()
    return choice, float(flat[idx])


def _leximin_key(D: np.ndarray, c: np.ndarray) -> np.ndarray:
    n = D.shape[0]
    iu, ju = np.triu_indices(n, 1)
    return np.sort(D[iu, c[iu], ju, c[ju]])


def _better(a: np.ndarray, b: np.ndarray) -> bool:
    """Lexicographic ``a > b`` on sorted distance vectors."""
    diff = np.flatnonzero(a != b)
    return bool(diff.size) and a[diff[0]] > b[diff[0]]


def _local_search(D: np.ndarray, restarts: int, seed: int) -> tuple[np.ndarray, float]:
    """Steepest ascent over single-strut moves on the leximin order of post distances."""
    n = D.shape[0]
    rng = np.random.default_rng(seed)
    starts = [np.ones(n, dtype=int)] + [rng.integers(0, 3, n) for _ in range(restarts)]
    best_c, best_key = None, None
    for c in starts:
        c = c.copy()
        key = _leximin_key(D, c)
        while True:
            move, move_key = None, key
            for i in range(n):
                for v in range(3):
                    if v == c[i]:
                        continue
                    trial = c.copy()
                    trial[i] = v
                    k2 = _leximin_key(D, trial)
                    if _better(k2, move_key):
                        move, move_key = trial, k2
            if move is None:
                break
            c, key = move, move_key
        if best_key is None or key[0] > best_key[0] or (key[0] == best_key[0] and tuple(c) < tuple(best_c)):
            best_c, best_key = c, key
    return best_c, float(best_key[0])


@dataclass(frozen=True)
class PostLayout:
    jsave: np.ndarray  # 1-based choices
    posts: np.ndarray  # (n, 3)
    objective: float
    exhaustive: bool


def optimize_posts(config: Configuration, topo: TopologyMap, exhaustive_budget: int = 3 ** 13,
                   restarts: int = 20, seed: int = 0, from_end: str = "low") -> PostLayout:
    """Choose the attachment fraction per strut maximizing the minimum post spacing.

    Exact when ``3**n <= exhaustive_budget``, otherwise a seeded multi-start
    local search (always including the all-1/2 start).
    """
    n = topo.n_struts
    if n == 0:
        raise ScaffoldError("no struts")
    cand = _candidates(config, topo, from_end)
    if n == 1:
        choice, obj, exact = np.zeros(1, dtype=int), math.inf, True
    else:
        D = _pair_distances(cand)
        if 3 ** n <= exhaustive_budget:
            choice, obj = _exhaustive(D)
            exact = True
        else:
            choice, obj = _local_search(D, restarts, seed)
            exact = False
    posts = cand[np.arange(n), choice]
    log.info("post layout: min spacing %.4f in (%s)", obj, "exhaustive" if exact else "local search")
    return PostLayout(choice + 1, posts, obj, exact)


def brute_force_posts(config: Configuration, topo: TopologyMap, from_end: str = "low") -> tuple[np.ndarray, float]:
    """Enumerate every assignment with itertools; reference for small n."""
    D = _pair_distances(_candidates(config, topo, from_end))
    best, best_val = None, -math.inf
    for c in itertools.product(range(3), repeat=topo.n_struts):
        v = spacing_objective(D, c)
        if v > best_val:
            best, best_val = c, v
    return np.array(best) + 1, best_val


@dataclass(frozen=True)
class ScaffoldOptions:
    roll_scan: bool = False
    margin: float = 0.5
    exhaustive_budget: int = 3 ** 13
    restarts: int = 20
    seed: int = 0
    attach_from: str = "low"


def build_plan(config: Configuration, topo: TopologyMap, opts: ScaffoldOptions | None = None,
               **kwargs) -> ScaffoldPlan:
    opts = opts or ScaffoldOptions(**kwargs)
    axis = longitudinal_axis(centroids(config, topo))
    X = reorient(config, topo, axis, roll_scan=opts.roll_scan, margin=opts.margin)
    layout = optimize_posts(X, topo, opts.exhaustive_budget, opts.restarts, opts.seed, opts.attach_from)
    placements = []
    for i, pair in enumerate(topo.struts):
        lo, hi = low_high(X, pair)
        az, el = strut_angles(X.vertex(lo), X.vertex(hi))
        px, py, pz = (float(v) for v in layout.posts[i])
        placements.append(StrutPlacement(
            strut=i + 1, xpost=px, ypost=py, zpost=pz, theta_az=az, theta_el=el,
            jsave=int(layout.jsave[i]), high_vertex=hi, low_vertex=lo,
            endpoint_z=(float(X.vertex(lo)[2]), float(X.vertex(hi)[2])),
        ))
    return ScaffoldPlan(axis, tuple(placements), X, opts.margin, layout.objective)
