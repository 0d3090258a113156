"""Tangent stiffness, static sag under strut weight, and modal analysis.

Struts enter the stiffness as stiff axial members whose compression is
recovered from the spring forces at equilibrium. Degrees of freedom are
ordered ``(x, y, z)`` per vertex, vertex ``label`` at rows ``3*(label-1)``.
"""
from __future__ import annotations

import io
import logging
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .model import Configuration, MaterialSpec, TopologyMap, check_configuration

log = logging.getLogger(__name__)

DEFAULT_STRUT_STIFFNESS_RATIO = 1e4


class EquilibriumError(ValueError):
    pass


class SingularStructureError(ValueError):
    pass


@dataclass(frozen=True)
class Members:
    """Axial members: vertex index pairs, axial stiffness and tension (compression < 0)."""

    i: np.ndarray
    j: np.ndarray
    axial_stiffness: np.ndarray
    tension: np.ndarray


def assemble_tangent(coords: np.ndarray, members: Members) -> np.ndarray:
    """Sum of ``k d d^T + (t/l)(I - d d^T)`` blocks over members."""
    coords = np.asarray(coords, dtype=float)
    ndof = coords.size
    K = np.zeros((ndof, ndof))
    a = coords[members.j] - coords[members.i]
    ell = np.linalg.norm(a, axis=1)
    d = a / ell[:, None]
    eye = np.eye(3)
    for m in range(len(ell)):
        dd = np.outer(d[m], d[m])
        blk = members.axial_stiffness[m] * dd + (members.tension[m] / ell[m]) * (eye - dd)
        ii = slice(3 * members.i[m], 3 * members.i[m] + 3)
        jj = slice(3 * members.j[m], 3 * members.j[m] + 3)
        K[ii, ii] += blk
        K[jj, jj] += blk
        K[ii, jj] -= blk
        K[jj, ii] -= blk
    return K


def member_forces(config: Configuration, topo: TopologyMap, mat: MaterialSpec,
                  strut_axial_stiffness: float | None = None,
                  eq_tol: float | None = None) -> Members:
    """Springs from their constitutive law, struts from the endpoint equilibrium residual.

    Raises :class:`EquilibriumError` when the spring forces at the strut ends
    are not balanced by axial strut forces within ``eq_tol`` (default
    ``1e-6`` times the largest spring force).
    """
    check_configuration(config, topo)
    X = config.coords
    sp = topo.spring_index_array()
    st = topo.strut_index_array()
    k = mat.stiffness(topo.n_springs)
    L0 = mat.free_length(topo.n_springs)
    a = X[sp[:, 1]] - X[sp[:, 0]]
    ell = np.linalg.norm(a, axis=1)
    t_spring = k * (ell - L0)

    # net spring force on each vertex
    F = np.zeros_like(X)
    f = (t_spring / ell)[:, None] * a
    np.add.at(F, sp[:, 0], f)
    np.add.at(F, sp[:, 1], -f)

    ds = X[st[:, 1]] - X[st[:, 0]]
    d = ds / np.linalg.norm(ds, axis=1)[:, None]
    Fa, Fb = F[st[:, 0]], F[st[:, 1]]
    t_strut = 0.5 * (np.einsum("ij,ij->i", Fb, d) - np.einsum("ij,ij->i", Fa, d))
    residual = np.concatenate([Fa + t_strut[:, None] * d, Fb - t_strut[:, None] * d])
    res_norm = float(np.linalg.norm(residual))
    if eq_tol is None:
        eq_tol = 1e-6 * max(float(np.max(np.abs(t_spring))), np.finfo(float).tiny)
    if res_norm > eq_tol:
        raise EquilibriumError(f"configuration is not in equilibrium: residual norm {res_norm:.3e} lbf "
                               f"exceeds {eq_tol:.3e}")
    if strut_axial_stiffness is None:
        strut_axial_stiffness = DEFAULT_STRUT_STIFFNESS_RATIO * float(np.max(k))
    return Members(
        i=np.concatenate([sp[:, 0], st[:, 0]]),
        j=np.concatenate([sp[:, 1], st[:, 1]]),
        axial_stiffness=np.concatenate([k, np.full(len(st), float(strut_axial_stiffness))]),
        tension=np.concatenate([t_spring, t_strut]),
    )


def tangent_stiffness(config: Configuration, topo: TopologyMap, mat: MaterialSpec,
                      strut_axial_stiffness: float | None = None, eq_tol: float | None = None) -> np.ndarray:
    """Tangent stiffness (lbf/in) of the pre-stressed structure, shape (6n, 6n)."""
    members = member_forces(config, topo, mat, strut_axial_stiffness, eq_tol)
    return assemble_tangent(config.coords, members)


def lumped_masses(topo: TopologyMap, mat: MaterialSpec) -> np.ndarray:
    """Per-vertex mass in lbf s^2/in: half a strut at each end, springs massless."""
    return np.full(topo.n_vertices, 0.5 * mat.strut_mass_slinch)


def _free_dofs(n_vertices: int, supports: Sequence[int]) -> np.ndarray:
    fixed = np.zeros(3 * n_vertices, dtype=bool)
    for v in supports:
        if not 1 <= v <= n_vertices:
            raise ValueError(f"support vertex {v} outside 1..{n_vertices}")
        fixed[3 * (v - 1): 3 * v] = True
    return np.flatnonzero(~fixed)


def _describe_mode(vec: np.ndarray, free: np.ndarray) -> str:
    full = np.zeros(free.max() + 1 if free.size else 0)
    full[free] = vec
    dof = int(np.argmax(np.abs(full)))
    return f"vertex {dof // 3 + 1} {'xyz'[dof % 3]}"


@dataclass(frozen=True)
class SagResult:
    displacement: np.ndarray  # (2n, 3) inches, zero at supports
    max_sag: float
    supports: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "supports": list(self.supports),
            "max_sag_in": self.max_sag,
            "displacement_in": self.displacement.tolist(),
        }


def solve_static(K: np.ndarray, loads: np.ndarray, supports: Sequence[int]) -> np.ndarray:
    """Solve ``K u = f`` with all DOFs of the ``supports`` vertices held at zero."""
    loads = np.asarray(loads, dtype=float)
    nv = loads.shape[0]
    free = _free_dofs(nv, supports)
    Kr = K[np.ix_(free, free)]
    w, V = np.linalg.eigh(Kr)
    scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    if w[0] <= 1e-12 * scale:
        raise SingularStructureError(
            f"reduced stiffness is singular or indefinite (min eigenvalue {w[0]:.3e}); "
            f"near-zero mode dominated by {_describe_mode(V[:, 0], free)}")
    u = np.zeros(loads.size)
    u[free] = scipy.linalg.solve(Kr, loads.ravel()[free], assume_a="pos")
    return u.reshape(nv, 3)


def gravity_loads(topo: TopologyMap, mat: MaterialSpec) -> np.ndarray:
    f = np.zeros((topo.n_vertices, 3))
    f[:, 2] = -0.5 * mat.strut_weight
    return f


def static_sag(config: Configuration, topo: TopologyMap, mat: MaterialSpec, supports: Sequence[int],
               strut_axial_stiffness: float | None = None, eq_tol: float | None = None) -> SagResult:
    """Displacement of the equilibrium shape under strut self-weight."""
    supports = tuple(int(v) for v in supports)
    if len(supports) < 3:
        raise SingularStructureError(f"need at least 3 supported vertices, got {list(supports)}")
    pts = config.coords[np.array(supports) - 1]
    if np.linalg.matrix_rank(pts - pts[0], tol=1e-9 * mat.strut_length) < 2:
        raise SingularStructureError(f"supported vertices {list(supports)} are collinear")
    K = tangent_stiffness(config, topo, mat, strut_axial_stiffness, eq_tol)
    u = solve_static(K, gravity_loads(topo, mat), supports)
    return SagResult(u, float(np.max(np.linalg.norm(u, axis=1))), supports)


@dataclass(frozen=True)
class ModalResult:
    frequencies: np.ndarray  # Hz, ascending
    mode_shapes: np.ndarray  # (6n, n_modes), mass-normalized, zeros at supported DOFs
    eigenvalues: np.ndarray
    supports: tuple[int, ...] = ()

    def to_list(self) -> list[dict]:
        return [{"mode": i + 1, "frequency_hz": float(f)} for i, f in enumerate(self.frequencies)]


def modal_analysis(K: np.ndarray, masses: np.ndarray, supports: Sequence[int] = (),
                   rigid_tol: float = 1e-9) -> ModalResult:
    """Generalized eigenproblem ``K phi = lam M phi`` with a lumped diagonal mass.

    Eigenvalues with ``|lam| < rigid_tol * max|lam|`` are rigid-body modes
    and clamped to zero.
    """
    if not np.allclose(K, K.T, rtol=0, atol=1e-10 * np.max(np.abs(K))):
        raise ValueError("stiffness matrix is not symmetric")
    masses = np.asarray(masses, dtype=float)
    nv = len(masses)
    free = _free_dofs(nv, supports)
    M = np.repeat(masses, 3)[free]
    lam, phi = scipy.linalg.eigh(K[np.ix_(free, free)], np.diag(M))
    thresh = rigid_tol * max(float(np.max(np.abs(lam))), np.finfo(float).tiny)
    lam = np.where(np.abs(lam) < thresh, 0.0, lam)
    if np.any(lam < 0):
        warnings.warn(f"{int(np.sum(lam < 0))} negative eigenvalue(s): equilibrium is unstable", stacklevel=2)
    freq = np.sqrt(np.maximum(lam, 0.0)) / (2 * np.pi)
    shapes = np.zeros((3 * nv, len(lam)))
    shapes[free] = phi
    return ModalResult(freq, shapes, lam, tuple(int(v) for v in supports))


def natural_frequencies(config: Configuration, topo: TopologyMap, mat: MaterialSpec,
                        supports: Sequence[int] = (), strut_axial_stiffness: float | None = None,
                        eq_tol: float | None = None) -> ModalResult:
    K = tangent_stiffness(config, topo, mat, strut_axial_stiffness, eq_tol)
    return modal_analysis(K, lumped_masses(topo, mat), supports)


def mode_frames(config: Configuration, modal: ModalResult, mode_index: int, amplitude: float,
                n_frames: int) -> np.ndarray:
    """Linear mode animation ``x0 + A sin(2 pi j / n_frames) phi``, shape (n_frames, 2n, 3).

    ``amplitude`` scales the mode so its largest vertex displacement equals
    ``amplitude`` inches. Struts are not re-rigidified.
    """
    n_modes = modal.mode_shapes.shape[1]
    if not 0 <= mode_index < n_modes:
        raise IndexError(f"mode index {mode_index} out of range 0..{n_modes - 1}")
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    if n_frames < 1:
        raise ValueError("n_frames must be positive")
    x0 = config.coords
    phi = modal.mode_shapes[:, mode_index].reshape(-1, 3)
    peak = float(np.max(np.linalg.norm(phi, axis=1)))
    if peak > 0:
        phi = phi / peak
    s = np.sin(2 * np.pi * np.arange(n_frames) / n_frames)
    s[0] = 0.0
    return x0[None] + amplitude * s[:, None, None] * phi[None]


def frames_csv(frames: np.ndarray) -> str:
    buf = io.StringIO()
    buf.write("frame,vertex,x,y,z\n")
    for j, frame in enumerate(frames):
        for v, (x, y, z) in enumerate(frame, start=1):
            buf.write(f"{j},{v},{x:.9g},{y:.9g},{z:.9g}\n")
    return buf.getvalue()
