"""Form-finding by minimizing spring strain energy over rigid-strut poses.

Each strut is a pose (centroid, unit direction); its first vertex sits at
``c - (L/2) d`` and its second at ``c + (L/2) d``, so strut lengths are exact
by construction. The free parameters per strut are the 3 centroid
coordinates plus 2 end-displacement coordinates in a chart centred on the
current direction::

    d(u) = normalize(d0 + (2/L) (u1 e1 + u2 e2))

with ``e1, e2`` an orthonormal basis of the plane normal to ``d0``. All five
parameters are lengths, so the gradient is a force (lbf).
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import Configuration, MaterialSpec, TopologyMap, check_topology

log = logging.getLogger(__name__)


class FormFindingError(RuntimeError):
    pass


@dataclass(frozen=True)
class StrutPose:
    centroid: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.centroid, dtype=float).reshape(3)
        d = np.asarray(self.direction, dtype=float).reshape(3)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError(f"direction must be a unit vector, |d| = {np.linalg.norm(d)!r}")
        object.__setattr__(self, "centroid", c)
        object.__setattr__(self, "direction", d)

    def endpoints(self, strut_length: float) -> tuple[np.ndarray, np.ndarray]:
        h = 0.5 * strut_length * self.direction
        return self.centroid - h, self.centroid + h


def poses_to_arrays(poses: Sequence[StrutPose]) -> tuple[np.ndarray, np.ndarray]:
    C = np.array([p.centroid for p in poses], dtype=float).reshape(-1, 3)
    D = np.array([p.direction for p in poses], dtype=float).reshape(-1, 3)
    return C, D


def arrays_to_poses(C: np.ndarray, D: np.ndarray) -> list[StrutPose]:
    return [StrutPose(c, d) for c, d in zip(C, D)]


def poses_from_config(config: Configuration, topo: TopologyMap) -> list[StrutPose]:
    s = topo.strut_index_array()
    a, b = config.coords[s[:, 0]], config.coords[s[:, 1]]
    d = b - a
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return arrays_to_poses(0.5 * (a + b), d)


def tangent_basis(D: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal pair spanning the plane normal to each row of ``D``."""
    D = np.atleast_2d(D)
    ref = np.zeros_like(D)
    ref[np.arange(len(D)), np.argmin(np.abs(D), axis=1)] = 1.0
    e1 = np.cross(D, ref)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(D, e1)
    return e1, e2


def retract(poses: Sequence[StrutPose], delta: np.ndarray, strut_length: float) -> list[StrutPose]:
    """Move ``poses`` by chart coordinates ``delta`` (n, 5)."""
    C, D = poses_to_arrays(poses)
    delta = np.asarray(delta, dtype=float).reshape(len(C), 5)
    e1, e2 = tangent_basis(D)
    W = delta[:, 3:4] * e1 + delta[:, 4:5] * e2
    C2, D2 = _retract(C, D, delta[:, :3], W, strut_length)
    return arrays_to_poses(C2, D2)


def _retract(C, D, dC, dW, L):
    D2 = D + (2.0 / L) * dW
    D2 /= np.linalg.norm(D2, axis=1, keepdims=True)
    return C + dC, D2


class _SpringNet:
    """Vectorized spring energy over strut poses."""

    def __init__(self, topo: TopologyMap, mat: MaterialSpec, tension_only: bool = False):
        self.topo = topo
        self.L = mat.strut_length
        self.struts = topo.strut_index_array()
        sp = topo.spring_index_array()
        self.si, self.sj = sp[:, 0], sp[:, 1]
        self.k = mat.stiffness(topo.n_springs)
        self.L0 = mat.free_length(topo.n_springs)
        self.tension_only = tension_only
        self.nv = topo.n_vertices

    def vertices(self, C, D):
        P = np.empty((self.nv, 3))
        h = 0.5 * self.L * D
        P[self.struts[:, 0]] = C - h
        P[self.struts[:, 1]] = C + h
        return P

    def stretch(self, P):
        a = P[self.sj] - P[self.si]
        ell = np.linalg.norm(a, axis=1)
        m = ell - self.L0
        if self.tension_only:
            m = np.maximum(m, 0.0)
        return a, ell, m

    def energy(self, P) -> float:
        _, _, m = self.stretch(P)
        return float(0.5 * np.sum(self.k * m * m))

    def energy_delta(self, P, P2) -> float:
        """E(P2) - E(P), accurate even when the two energies agree to many digits."""
        a = P[self.sj] - P[self.si]
        a2 = P2[self.sj] - P2[self.si]
        dP = P2 - P
        da = dP[self.sj] - dP[self.si]
        ell = np.linalg.norm(a, axis=1)
        ell2 = np.linalg.norm(a2, axis=1)
        denom = ell + ell2
        dl = np.where(denom > 0, np.einsum("ij,ij->i", da, a + a2) / np.where(denom > 0, denom, 1.0), 0.0)
        m, m2 = ell - self.L0, ell2 - self.L0
        terms = dl * (m + m2)
        if self.tension_only:
            both = (m > 0) & (m2 > 0)
            direct = np.maximum(m2, 0.0) ** 2 - np.maximum(m, 0.0) ** 2
            terms = np.where(both, terms, direct)
        return float(0.5 * np.sum(self.k * terms))

    def energy_noise(self, P) -> float:
        """Rounding floor of an energy difference at ``P`` (force x coordinate ulp)."""
        _, _, m = self.stretch(P)
        reach = float(np.max(np.abs(P))) + self.L
        return 16 * np.finfo(float).eps * float(np.sum(self.k * np.abs(m))) * reach

    def vertex_gradient(self, P) -> np.ndarray:
        """dE/dP, shape (2n, 3)."""
        a, ell, m = self.stretch(P)
        safe = np.where(ell > 0, ell, 1.0)
        f = (self.k * m / safe)[:, None] * a
        G = np.zeros_like(P)
        np.add.at(G, self.sj, f)
        np.add.at(G, self.si, -f)
        return G

    def tangent_gradient(self, D, G):
        """Gradient as an ambient tangent vector: (dE/dC, projected dE/dW)."""
        Ga, Gb = G[self.struts[:, 0]], G[self.struts[:, 1]]
        gC = Ga + Gb
        gW = Gb - Ga
        gW -= np.einsum("ij,ij->i", gW, D)[:, None] * D
        return gC, gW


def spring_energy(poses: Sequence[StrutPose], topo: TopologyMap, mat: MaterialSpec,
                  tension_only: bool = False) -> float:
    """Total strain energy ``sum 1/2 k (l - L0)^2`` over all springs."""
    net = _SpringNet(topo, mat, tension_only)
    C, D = poses_to_arrays(poses)
    return net.energy(net.vertices(C, D))


def energy_gradient(poses: Sequence[StrutPose], topo: TopologyMap, mat: MaterialSpec,
                    tension_only: bool = False) -> np.ndarray:
    """Gradient of :func:`spring_energy` in chart coordinates, shape (n_struts, 5).

    Columns are ``dE/dc_x, dE/dc_y, dE/dc_z, dE/du1, dE/du2`` with the chart of
    :func:`tangent_basis` centred on the current directions.
    """
    net = _SpringNet(topo, mat, tension_only)
    C, D = poses_to_arrays(poses)
    gC, gW = net.tangent_gradient(D, net.vertex_gradient(net.vertices(C, D)))
    e1, e2 = tangent_basis(D)
    return np.column_stack([gC, np.einsum("ij,ij->i", gW, e1), np.einsum("ij,ij->i", gW, e2)])


@dataclass(frozen=True)
class FormFindOptions:
    restarts: int = 8
    max_iters: int = 10000
    grad_tol: float | None = None
    seed: int = 0
    tension_only: bool = False
    memory: int = 20

    def tolerance(self, mat: MaterialSpec, n_springs: int) -> float:
        if self.grad_tol is not None:
            return float(self.grad_tol)
        return 1e-8 * float(np.mean(mat.stiffness(n_springs))) * mat.strut_length


@dataclass(frozen=True)
class EquilibriumResult:
    config: Configuration
    energy: float
    gradient_norm: float
    iterations: int
    restarts_used: int
    slack_springs: tuple[int, ...]
    best_restart: int = 0
    converged_restarts: int = 0
    grad_tol: float = 0.0
    energy_history: tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "coords": self.config.coords.tolist(),
            "energy": self.energy,
            "gradient_norm": self.gradient_norm,
            "slack_springs": list(self.slack_springs),
            "iterations": self.iterations,
            "restarts_used": self.restarts_used,
            "best_restart": self.best_restart,
        }


@dataclass
class _Run:
    C: np.ndarray
    D: np.ndarray
    energy: float
    gnorm: float
    iterations: int
    converged: bool
    history: list


def _minimize(net: _SpringNet, C, D, tol, max_iters, memory) -> _Run:
    """Limited-memory BFGS on the pose manifold with Armijo backtracking."""
    L = net.L
    P = net.vertices(C, D)
    E = net.energy(P)
    gC, gW = net.tangent_gradient(D, net.vertex_gradient(P))
    g = np.concatenate([gC.ravel(), gW.ravel()])
    n3 = C.size
    S: list[np.ndarray] = []
    Y: list[np.ndarray] = []
    history = [E]

    def project(v, Dcur):
        w = v[n3:].reshape(-1, 3)
        w = w - np.einsum("ij,ij->i", w, Dcur)[:, None] * Dcur
        return np.concatenate([v[:n3], w.ravel()])

    it = 0
    gnorm = float(np.linalg.norm(g))
    while gnorm >= tol and it < max_iters:
        it += 1
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y in zip(reversed(S), reversed(Y)):
            rho = 1.0 / (y @ s)
            a = rho * (s @ q)
            alphas.append((a, rho))
            q -= a * y
        if S:
            q *= (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1])
        for (s, y), (a, rho) in zip(zip(S, Y), reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        p = project(-q, D)
        slope = float(p @ g)
        if not S or slope >= 0:
            S.clear()
            Y.clear()
            p = -g
            slope = -gnorm * gnorm
            step = min(1.0, 0.05 * L / gnorm)
        else:
            step = 1.0
        pn = float(np.linalg.norm(p))
        if step * pn > L:
            step = L / pn

        floor = net.energy_noise(P)
        accepted = False
        g2 = None
        while step * pn > 1e-15 * L:
            dC = step * p[:n3].reshape(-1, 3)
            dW = step * p[n3:].reshape(-1, 3)
            C2, D2 = _retract(C, D, dC, dW, L)
            P2 = net.vertices(C2, D2)
            dE = net.energy_delta(P, P2)
            if dE <= 1e-4 * step * slope:
                accepted = True
                break
            if dE <= floor:
                # energy change is below rounding: approximate Wolfe test on the slope
                gC2, gW2 = net.tangent_gradient(D2, net.vertex_gradient(P2))
                g2 = np.concatenate([gC2.ravel(), gW2.ravel()])
                if g2 @ project(p, D2) <= -(1 - 2e-4) * slope:
                    accepted = True
                    break
                g2 = None
            step *= 0.5
        if not accepted:
            if S:
                S.clear()
                Y.clear()
                continue
            break

        if g2 is None:
            gC2, gW2 = net.tangent_gradient(D2, net.vertex_gradient(P2))
            g2 = np.concatenate([gC2.ravel(), gW2.ravel()])
        s_new = project(step * p, D2)
        y_new = g2 - project(g, D2)
        C, D, P, g = C2, D2, P2, g2
        E = net.energy(P)
        history.append(E)
        gnorm = float(np.linalg.norm(g))
        S = [project(s, D) for s in S]
        Y = [project(y, D) for y in Y]
        keep = [i for i in range(len(S)) if S[i] @ Y[i] > 1e-12 * np.linalg.norm(S[i]) * np.linalg.norm(Y[i])]
        S = [S[i] for i in keep]
        Y = [Y[i] for i in keep]
        if s_new @ y_new > 1e-12 * np.linalg.norm(s_new) * np.linalg.norm(y_new):
            S.append(s_new)
            Y.append(y_new)
            if len(S) > memory:
                S.pop(0)
                Y.pop(0)
    return _Run(C, D, E, gnorm, it, gnorm < tol, history)


def random_poses(n: int, strut_length: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Centroids uniform in a cube of side 1.5 L, directions uniform on the sphere."""
    C = (rng.random((n, 3)) - 0.5) * 1.5 * strut_length
    D = rng.standard_normal((n, 3))
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    return C, D


def find_equilibrium(topo: TopologyMap, mat: MaterialSpec, opts: FormFindOptions | None = None,
                     **kwargs) -> EquilibriumResult:
    """Lowest-energy converged equilibrium over seeded random restarts."""
    opts = opts or FormFindOptions(**kwargs)
    check_topology(topo)
    if topo.n_springs == 0:
        raise FormFindingError("topology has no springs")
    tol = opts.tolerance(mat, topo.n_springs)
    net = _SpringNet(topo, mat, opts.tension_only)

    best = None
    best_idx = -1
    converged = 0
    for r in range(opts.restarts):
        rng = np.random.default_rng([opts.seed, r])
        C0, D0 = random_poses(topo.n_struts, mat.strut_length, rng)
        run = _minimize(net, C0, D0, tol, opts.max_iters, opts.memory)
        log.debug("restart %d: E=%.12g |g|=%.3g iters=%d converged=%s",
                  r, run.energy, run.gnorm, run.iterations, run.converged)
        if not run.converged:
            continue
        converged += 1
        if best is None or run.energy < best.energy - 1e-12 * max(1.0, abs(best.energy)):
            best, best_idx = run, r
    if best is None:
        raise FormFindingError(
            f"no restart converged to |grad| < {tol:.3g} within {opts.max_iters} iterations")

    P = net.vertices(best.C, best.D)
    _, ell, _ = net.stretch(P)
    slack = tuple(int(i) for i in np.flatnonzero(ell < net.L0))
    if slack:
        warnings.warn(f"{len(slack)} spring(s) below free length at equilibrium: {list(slack)}", stacklevel=2)
    return EquilibriumResult(
        config=canonicalize(Configuration(P)),
        energy=best.energy,
        gradient_norm=best.gnorm,
        iterations=best.iterations,
        restarts_used=opts.restarts,
        slack_springs=slack,
        best_restart=best_idx,
        converged_restarts=converged,
        grad_tol=tol,
        energy_history=tuple(best.history),
    )


def _sign_fix(axis: np.ndarray, X: np.ndarray, tol: float) -> np.ndarray:
    proj = X @ axis
    for v in proj:
        if abs(v) > tol:
            return axis if v > 0 else -axis
    return axis


def canonicalize(config: Configuration, degeneracy_tol: float = 1e-6) -> Configuration:
    """Remove rigid-body freedom: centre on the vertex mean, rotate to principal axes.

    Axes are ordered by decreasing variance; each axis is signed so the first
    vertex (by label) with a non-negligible coordinate on it is positive.
    Where variances coincide, the axes inside the degenerate subspace are
    fixed by projecting vertices onto it in label order. The resulting frame
    may be a reflection of the input; spring energy is reflection invariant.
    """
    X = config.coords - config.coords.mean(axis=0)
    cov = X.T @ X / len(X)
    w, V = np.linalg.eigh(cov)
    w, V = w[::-1], V[:, ::-1]
    scale = float(np.sqrt(max(w[0], 0.0)))
    if scale == 0 or w[1] <= 1e-12 * w[0]:
        warnings.warn("degenerate (collinear) vertex cloud; rotation skipped", stacklevel=2)
        return Configuration(X)
    tol = 1e-9 * scale

    clusters = [[0]]
    for i in (1, 2):
        if w[clusters[-1][-1]] - w[i] <= degeneracy_tol * w[0]:
            clusters[-1].append(i)
        else:
            clusters.append([i])

    axes: list[np.ndarray] = []
    for cl in clusters:
        Q = V[:, cl]
        for m in range(len(cl)):
            R = Q.copy()
            for a in axes[len(axes) - m:] if m else ():
                R -= np.outer(a, a @ R)
            B = np.linalg.svd(R)[0][:, : len(cl) - m]
            axis = B[:, 0]
            if len(cl) - m > 1:
                for v in X @ B @ B.T:
                    nv = np.linalg.norm(v)
                    if nv > 1e-6 * scale:
                        axis = v / nv
                        break
            axes.append(_sign_fix(axis, X, tol))
    A = np.column_stack(axes)
    return Configuration(X @ A)
