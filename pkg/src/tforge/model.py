"""Topology maps, material parameters and configurations.

Vertex labels are 1-based throughout (they match the stickers put on the
physical strut ends). Internally, arrays are indexed by ``label - 1``.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# lbm * in / (lbf * s^2); converts pound-mass to slinch and weights to lbf
G_STANDARD = 386.09


class TopologyError(ValueError):
    """Raised when a topology map violates its invariants."""


class MaterialError(ValueError):
    pass


def _pairs(raw) -> tuple[tuple[int, int], ...]:
    out = []
    for p in raw:
        if len(p) != 2:
            raise TopologyError(f"expected a vertex pair, got {list(p)!r}")
        a, b = p
        if isinstance(a, bool) or isinstance(b, bool) or int(a) != a or int(b) != b:
            raise TopologyError(f"vertex labels must be integers, got {list(p)!r}")
        out.append((int(a), int(b)))
    return tuple(out)


@dataclass(frozen=True)
class TopologyMap:
    """Strut and spring connectivity over vertex labels ``1..2*n_struts``."""

    n_struts: int
    struts: tuple[tuple[int, int], ...]
    springs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "struts", _pairs(self.struts))
        object.__setattr__(self, "springs", _pairs(self.springs))

    @property
    def n_vertices(self) -> int:
        return 2 * self.n_struts

    @property
    def n_springs(self) -> int:
        return len(self.springs)

    def strut_index_array(self) -> np.ndarray:
        """(n_struts, 2) zero-based vertex indices."""
        return np.asarray(self.struts, dtype=int).reshape(-1, 2) - 1

    def spring_index_array(self) -> np.ndarray:
        """(n_springs, 2) zero-based vertex indices."""
        return np.asarray(self.springs, dtype=int).reshape(-1, 2) - 1

    def to_dict(self) -> dict:
        return {
            "n_struts": self.n_struts,
            "struts": [list(p) for p in self.struts],
            "springs": [list(p) for p in self.springs],
        }


def validate(topo: TopologyMap) -> list[str]:
    """Return a list of invariant violations; empty means the map is valid."""
    problems = []
    n = topo.n_struts
    if not isinstance(n, int) or n < 1:
        return [f"n_struts must be a positive integer, got {n!r}"]
    if len(topo.struts) != n:
        problems.append(f"expected {n} struts, got {len(topo.struts)}")
    labels = range(1, 2 * n + 1)

    seen: dict[int, tuple[int, int]] = {}
    for pair in topo.struts:
        a, b = pair
        if a == b:
            problems.append(f"strut {list(pair)} is a self-loop")
        for v in (a, b):
            if v not in labels:
                problems.append(f"strut {list(pair)}: vertex {v} outside 1..{2 * n}")
            elif v in seen and seen[v] != pair:
                problems.append(f"vertex {v} in two struts {list(seen[v])} and {list(pair)}")
            else:
                seen[v] = pair
    for v in labels:
        if v not in seen:
            problems.append(f"vertex {v} not covered by any strut")

    strut_set = {frozenset(p) for p in topo.struts}
    spring_seen: set[frozenset] = set()
    if not topo.springs:
        problems.append("no springs")
    for pair in topo.springs:
        a, b = pair
        key = frozenset(pair)
        if a == b:
            problems.append(f"spring {list(pair)} is a self-loop")
            continue
        for v in (a, b):
            if v not in labels:
                problems.append(f"spring {list(pair)}: vertex {v} outside 1..{2 * n}")
        if key in strut_set:
            problems.append(f"spring {list(pair)} duplicates a strut")
        if key in spring_seen:
            problems.append(f"spring {list(pair)} is a duplicate")
        spring_seen.add(key)
    return problems


def check_topology(topo: TopologyMap) -> TopologyMap:
    problems = validate(topo)
    if problems:
        raise TopologyError("invalid topology: " + "; ".join(problems))
    return topo


def load_topology(path) -> TopologyMap:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise TopologyError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise TopologyError(f"{path}: expected a JSON object")
    try:
        topo = TopologyMap(int(data["n_struts"]), data["struts"], data["springs"])
    except KeyError as exc:
        raise TopologyError(f"{path}: missing key {exc}") from exc
    except TypeError as exc:
        raise TopologyError(f"{path}: malformed pair list ({exc})") from exc
    return check_topology(topo)


def dump_topology(topo: TopologyMap, path) -> None:
    Path(path).write_text(json.dumps(topo.to_dict()) + "\n")


def prism_topology(p: int) -> TopologyMap:
    """Standard p-strut prism tensegrity.

    Struts are ``(2i-1, 2i)``: the odd label is bottom vertex ``b_i`` and the
    even label is top vertex ``t_{i+1}`` (cyclic). Springs are the bottom
    ring, the top ring and the ``b_i``-``t_i`` tendons, in that order.
    """
    if p < 3:
        raise ValueError(f"a prism needs at least 3 struts, got {p}")
    bottom, top = prism_rings(p)
    springs = [(bottom[i], bottom[(i + 1) % p]) for i in range(p)]
    springs += [(top[i], top[(i + 1) % p]) for i in range(p)]
    springs += [(bottom[i], top[i]) for i in range(p)]
    struts = [(2 * i + 1, 2 * i + 2) for i in range(p)]
    return TopologyMap(p, struts, springs)


def prism_rings(p: int) -> tuple[list[int], list[int]]:
    """Labels of the bottom and top polygons of ``prism_topology(p)``, in ring order."""
    bottom = [2 * i + 1 for i in range(p)]
    # strut i carries b_i and t_{i+1}, so t_i sits on strut i-1
    top = [2 * ((i - 1) % p) + 2 for i in range(p)]
    return bottom, top


def random_topology(n_struts: int, n_springs: int, seed: int = 0, min_degree: int = 3) -> TopologyMap:
    """Synthetic valid map with ``n_struts`` struts and ``n_springs`` springs.

    Every vertex first receives ``min_degree`` springs (where the count
    allows), then the remainder is filled with uniformly random pairs.
    """
    nv = 2 * n_struts
    max_springs = nv * (nv - 1) // 2 - n_struts
    if n_springs < 1 or n_springs > max_springs:
        raise ValueError(f"n_springs must be in 1..{max_springs}")
    rng = np.random.default_rng(seed)
    struts = [(2 * i + 1, 2 * i + 2) for i in range(n_struts)]
    forbidden = {frozenset(p) for p in struts}
    chosen: list[tuple[int, int]] = []
    degree = np.zeros(nv + 1, dtype=int)

    def add(a, b):
        key = frozenset((a, b))
        if a == b or key in forbidden:
            return False
        forbidden.add(key)
        chosen.append((min(a, b), max(a, b)))
        degree[a] += 1
        degree[b] += 1
        return True

    for v in range(1, nv + 1):
        while degree[v] < min_degree and len(chosen) < n_springs:
            others = [u for u in range(1, nv + 1) if frozenset((u, v)) not in forbidden and u != v]
            if not others:
                break
            weights = np.array([1.0 / (1 + degree[u]) for u in others])
            u = int(rng.choice(others, p=weights / weights.sum()))
            add(v, u)
    while len(chosen) < n_springs:
        a, b = (int(x) for x in rng.integers(1, nv + 1, size=2))
        add(a, b)
    return check_topology(TopologyMap(n_struts, struts, sorted(chosen)))


@dataclass(frozen=True)
class MaterialSpec:
    """Design variables: strut length/mass and spring stiffness/free length.

    Units are inches, pound-mass and pound-force. ``spring_stiffness`` and
    ``spring_free_length`` are either one uniform value or one value per
    spring (in topology order).
    """

    strut_length: float
    strut_mass: float
    spring_stiffness: float | tuple[float, ...]
    spring_free_length: float | tuple[float, ...]
    gravity: float = G_STANDARD

    def __post_init__(self):
        for name in ("spring_stiffness", "spring_free_length"):
            v = getattr(self, name)
            if np.ndim(v) > 0:
                object.__setattr__(self, name, tuple(float(x) for x in v))
            else:
                object.__setattr__(self, name, float(v))
        if not self.strut_length > 0:
            raise MaterialError(f"strut_length must be positive, got {self.strut_length}")
        if not self.strut_mass > 0:
            raise MaterialError(f"strut_mass must be positive, got {self.strut_mass}")
        if not self.gravity >= 0:
            raise MaterialError(f"gravity must be non-negative, got {self.gravity}")
        for name in ("spring_stiffness", "spring_free_length"):
            vals = np.atleast_1d(getattr(self, name))
            if vals.size == 0 or not np.all(vals > 0):
                raise MaterialError(f"{name} must be strictly positive")
        if np.any(np.atleast_1d(self.spring_free_length) >= self.strut_length):
            warnings.warn("spring free length is not shorter than the strut length", stacklevel=3)

    def stiffness(self, n_springs: int) -> np.ndarray:
        return _per_spring(self.spring_stiffness, n_springs, "spring_stiffness")

    def free_length(self, n_springs: int) -> np.ndarray:
        return _per_spring(self.spring_free_length, n_springs, "spring_free_length")

    def scaled(self, stiffness_factor: float = 1.0, mass_factor: float = 1.0) -> "MaterialSpec":
        k = self.spring_stiffness
        k = tuple(stiffness_factor * x for x in k) if isinstance(k, tuple) else stiffness_factor * k
        return MaterialSpec(self.strut_length, mass_factor * self.strut_mass, k,
                            self.spring_free_length, self.gravity)

    @property
    def strut_weight(self) -> float:
        """Strut weight in lbf under the configured gravity."""
        return self.strut_mass * self.gravity / G_STANDARD

    @property
    def strut_mass_slinch(self) -> float:
        return self.strut_mass / G_STANDARD

    def to_dict(self) -> dict:
        def plain(v):
            return list(v) if isinstance(v, tuple) else v

        return {
            "strut_length_in": self.strut_length,
            "strut_mass_lbm": self.strut_mass,
            "spring_stiffness_lbf_per_in": plain(self.spring_stiffness),
            "spring_free_length_in": plain(self.spring_free_length),
            "gravity_in_per_s2": self.gravity,
        }


def _per_spring(value, n: int, name: str) -> np.ndarray:
    if isinstance(value, tuple):
        if len(value) != n:
            raise MaterialError(f"{name} has {len(value)} entries for {n} springs")
        return np.array(value, dtype=float)
    return np.full(n, float(value))


def load_material(path) -> MaterialSpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
        return MaterialSpec(
            strut_length=float(data["strut_length_in"]),
            strut_mass=float(data["strut_mass_lbm"]),
            spring_stiffness=data["spring_stiffness_lbf_per_in"],
            spring_free_length=data["spring_free_length_in"],
            gravity=float(data.get("gravity_in_per_s2", G_STANDARD)),
        )
    except json.JSONDecodeError as exc:
        raise MaterialError(f"{path}: not valid JSON ({exc})") from exc
    except KeyError as exc:
        raise MaterialError(f"{path}: missing key {exc}") from exc


@dataclass(frozen=True)
class Configuration:
    """Coordinates of all ``2n`` vertices; row ``label - 1`` holds vertex ``label``."""

    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.ndim != 2 or c.shape[1] != 3:
            raise ValueError(f"coords must have shape (2n, 3), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def n_vertices(self) -> int:
        return self.coords.shape[0]

    def vertex(self, label: int) -> np.ndarray:
        return self.coords[label - 1]

    def strut_lengths(self, topo: TopologyMap) -> np.ndarray:
        s = topo.strut_index_array()
        return np.linalg.norm(self.coords[s[:, 1]] - self.coords[s[:, 0]], axis=1)

    def is_rigid(self, topo: TopologyMap, strut_length: float, rtol: float = 1e-6) -> bool:
        return bool(np.all(np.abs(self.strut_lengths(topo) - strut_length) <= rtol * strut_length))

    def __eq__(self, other):
        return isinstance(other, Configuration) and np.array_equal(self.coords, other.coords)

    __hash__ = None


def check_configuration(config: Configuration, topo: TopologyMap) -> None:
    if config.n_vertices != topo.n_vertices:
        raise ValueError(f"configuration has {config.n_vertices} vertices, topology needs {topo.n_vertices}")
    if not np.all(np.isfinite(config.coords)):
        raise ValueError("configuration contains non-finite coordinates")


