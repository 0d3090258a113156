"""Shortest distances between struts."""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .model import Configuration, TopologyMap, check_configuration


def _closest_params(p1, p2, q1, q2):
    d1 = p2 - p1
    d2 = q2 - q1
    r = p1 - q1
    a = d1 @ d1
    e = d2 @ d2
    f = d2 @ r
    tiny = np.finfo(float).eps * max(a, e, 1e-300)
    if a <= tiny and e <= tiny:
        return 0.0, 0.0
    if a <= tiny:
        return 0.0, float(np.clip(f / e, 0.0, 1.0))
    c = d1 @ r
    if e <= tiny:
        return float(np.clip(-c / a, 0.0, 1.0)), 0.0
    b = d1 @ d2
    denom = a * e - b * b
    # parallel segments: clamp s first (s = 0), then minimize t
    s = float(np.clip((b * f - c * e) / denom, 0.0, 1.0)) if denom > 1e-14 * a * e else 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = float(np.clip(-c / a, 0.0, 1.0))
    elif t > 1.0:
        t = 1.0
        s = float(np.clip((b - c) / a, 0.0, 1.0))
    return s, float(t)


def segment_distance(p1, p2, q1, q2) -> tuple[float, np.ndarray, np.ndarray]:
    """Minimum distance between segments ``p1-p2`` and ``q1-q2`` and the closest points.

    The computation is done on a canonical ordering of the two segments, so
    swapping them gives bit-identical distances (closest points swap too).
    """
    p1, p2, q1, q2 = (np.asarray(v, dtype=float) for v in (p1, p2, q1, q2))
    swap = tuple(np.concatenate([q1, q2])) < tuple(np.concatenate([p1, p2]))
    if swap:
        p1, p2, q1, q2 = q1, q2, p1, p2
    s, t = _closest_params(p1, p2, q1, q2)
    cp = p1 + s * (p2 - p1)
    cq = q1 + t * (q2 - q1)
    dist = float(np.linalg.norm(cp - cq))
    if swap:
        cp, cq = cq, cp
    return dist, cp, cq


@dataclass(frozen=True)
class ClearanceEntry:
    i: int  # 1-based strut indices, i < j
    j: int
    distance: float
    closest_point_i: np.ndarray
    closest_point_j: np.ndarray


@dataclass(frozen=True)
class ClearanceReport:
    entries: tuple[ClearanceEntry, ...]
    violations: tuple[ClearanceEntry, ...]
    threshold: float

    def distance(self, i: int, j: int) -> float:
        i, j = min(i, j), max(i, j)
        for e in self.entries:
            if (e.i, e.j) == (i, j):
                return e.distance
        raise KeyError((i, j))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("strut_i,strut_j,distance_in,violation\n")
        for e in self.entries:
            buf.write(f"{e.i},{e.j},{e.distance:.4f},{int(e.distance < self.threshold)}\n")
        return buf.getvalue()


def clearance_report(config: Configuration, topo: TopologyMap, threshold: float) -> ClearanceReport:
    """All strut pairs, ordered by (i, j); violations are pairs closer than ``threshold``."""
    check_configuration(config, topo)
    st = topo.strut_index_array()
    X = config.coords
    entries = []
    for i in range(topo.n_struts):
        for j in range(i + 1, topo.n_struts):
            d, cp, cq = segment_distance(X[st[i, 0]], X[st[i, 1]], X[st[j, 0]], X[st[j, 1]])
            entries.append(ClearanceEntry(i + 1, j + 1, d, cp, cq))
    violations = sorted((e for e in entries if e.distance < threshold), key=lambda e: (e.distance, e.i, e.j))
    return ClearanceReport(tuple(entries), tuple(violations), float(threshold))
