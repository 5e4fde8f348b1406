"""
Quadratic-element FEM for the Poisson problem on the unit square.

The parametrised problem is  Laplace(u) = f(s; x)  with u = 0 on the
boundary, whose exact solution is exp(x s1) sin(pi s1) sin(pi s2).
Element integrals use the symmetric 6-point rule (exact to degree 4).
"""
import logging
import warnings
from typing import Callable, Optional

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from src.core.exceptions import InvalidArgumentError, MeshValidityError
from src.fem.mesh import TriMesh
from src.fem.shape import shape_derivatives, shape_values

logger = logging.getLogger(__name__)

Field = Callable[[np.ndarray], np.ndarray]

_QA, _WA = 0.445948490915965, 0.223381589678011
_QB, _WB = 0.091576213509771, 0.109951743655322

QUAD_POINTS = np.array([
    [1.0 - 2.0 * _QA, _QA, _QA],
    [_QA, 1.0 - 2.0 * _QA, _QA],
    [_QA, _QA, 1.0 - 2.0 * _QA],
    [1.0 - 2.0 * _QB, _QB, _QB],
    [_QB, 1.0 - 2.0 * _QB, _QB],
    [_QB, _QB, 1.0 - 2.0 * _QB],
])
QUAD_WEIGHTS = np.array([_WA, _WA, _WA, _WB, _WB, _WB])   # Sum to 1; scaled by element area


def _refined_rule():
    """6-point rule applied on the four midpoint sub-triangles (24 points)."""
    e = np.eye(3)
    m12, m23, m13 = (e[0] + e[1]) / 2, (e[1] + e[2]) / 2, (e[0] + e[2]) / 2
    subs = [(e[0], m12, m13), (m12, e[1], m23), (m13, m23, e[2]), (m12, m23, m13)]
    points = np.concatenate([QUAD_POINTS @ np.array(sub) for sub in subs])
    return points, np.tile(QUAD_WEIGHTS / 4.0, 4)


_FINE_POINTS, _FINE_WEIGHTS = _refined_rule()


def quadrature_points(mesh: TriMesh, xi: np.ndarray = QUAD_POINTS) -> np.ndarray:
    """(E, Q, 2) physical coordinates of the barycentric points xi in every element."""
    vertices = mesh.nodes[mesh.elements[:, :3]]                  # (E, 3, 2)
    return np.einsum("qi,eid->eqd", xi, vertices)


def assemble_stiffness(mesh: TriMesh) -> csr_matrix:
    """Global stiffness matrix K_ij = integral of grad(v_i) . grad(v_j)."""
    _, b, c = mesh.coefficients
    grad_xi = np.stack([b, c], axis=-1)                          # (E, 3, 2)
    dv = shape_derivatives(QUAD_POINTS)                          # (Q, 6, 3)
    grads = np.einsum("qki,eid->eqkd", dv, grad_xi)              # (E, Q, 6, 2)
    local = np.einsum("q,eqkd,eqld->ekl", QUAD_WEIGHTS, grads, grads) * mesh.areas[:, None, None]
    rows = np.repeat(mesh.elements[:, :, None], 6, axis=2)
    cols = np.repeat(mesh.elements[:, None, :], 6, axis=1)
    K = coo_matrix((local.ravel(), (rows.ravel(), cols.ravel())), shape=(mesh.n_nodes, mesh.n_nodes))
    return K.tocsr()


def assemble_load(mesh: TriMesh, forcing: Field) -> np.ndarray:
    """Load vector F_i = integral of f v_i for a vectorized forcing f(points)."""
    points = quadrature_points(mesh)                             # (E, Q, 2)
    f = np.asarray(forcing(points), dtype=float).reshape(points.shape[:2])
    values = shape_values(QUAD_POINTS)                           # (Q, 6)
    local = np.einsum("q,eq,qk->ek", QUAD_WEIGHTS, f, values) * mesh.areas[:, None]
    return np.bincount(mesh.elements.ravel(), weights=local.ravel(), minlength=mesh.n_nodes)


def solve_dirichlet(mesh: TriMesh, laplacian: Field, boundary: Optional[Field] = None,
                    stiffness: Optional[csr_matrix] = None) -> np.ndarray:
    """
    Node values of the FEM solution of Laplace(u) = laplacian with Dirichlet data.

    Args:
        mesh: Quadratic mesh
        laplacian: Vectorized right-hand side, (..., 2) points -> (...) values
        boundary: Vectorized Dirichlet data; zero when omitted
        stiffness: Precomputed `assemble_stiffness(mesh)` to reuse across solves

    Returns:
        (N,) node values; boundary entries equal the Dirichlet data exactly

    Raises:
        MeshValidityError: If the reduced system is singular.
    """
    K = assemble_stiffness(mesh) if stiffness is None else stiffness
    # Weak form of -Laplace(u) = -laplacian
    rhs = -assemble_load(mesh, laplacian)
    on_boundary = mesh.boundary_mask
    interior = np.flatnonzero(~on_boundary)
    u = np.zeros(mesh.n_nodes)
    if boundary is not None:
        u[on_boundary] = np.asarray(boundary(mesh.nodes[on_boundary]), dtype=float)
        rhs = rhs - K @ u
    if interior.size == 0:
        return u
    K_ii = K[interior][:, interior].tocsc()
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            u_i = spsolve(K_ii, rhs[interior])
        except (MatrixRankWarning, RuntimeError) as e:
            raise MeshValidityError(f"singular FEM system: {e}") from e
    u_i = np.atleast_1d(u_i)
    if not np.all(np.isfinite(u_i)):
        raise MeshValidityError("singular FEM system: non-finite solution")
    u[interior] = u_i
    return u


def analytic_solution(s: np.ndarray, x: float) -> np.ndarray:
    """exp(x s1) sin(pi s1) sin(pi s2); s has shape (..., 2)."""
    s = np.asarray(s, dtype=float)
    s1, s2 = s[..., 0], s[..., 1]
    return np.exp(x * s1) * np.sin(np.pi * s1) * np.sin(np.pi * s2)


def poisson_rhs(s: np.ndarray, x: float) -> np.ndarray:
    """Laplacian of `analytic_solution` in s."""
    s = np.asarray(s, dtype=float)
    s1, s2 = s[..., 0], s[..., 1]
    e = np.exp(x * s1)
    return (x * x - 2.0 * np.pi ** 2) * e * np.sin(np.pi * s1) * np.sin(np.pi * s2) \
        + 2.0 * x * np.pi * e * np.cos(np.pi * s1) * np.sin(np.pi * s2)


def solve_poisson(mesh: TriMesh, x: float, stiffness: Optional[csr_matrix] = None) -> np.ndarray:
    """FEM node values of the Poisson problem at input x in [-1, 1]."""
    if not np.isfinite(x):
        raise InvalidArgumentError(f"input must be finite, got {x}")
    return solve_dirichlet(mesh, lambda s: poisson_rhs(s, x), stiffness=stiffness)


def interpolate(mesh: TriMesh, values: np.ndarray, elements: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Evaluates the quadratic interpolant of node values at located points."""
    local = np.asarray(values, dtype=float)[mesh.elements[elements]]     # (M, 6)
    return np.einsum("mk,mk->m", shape_values(xi), local)


def l2_error(mesh: TriMesh, values: np.ndarray, exact: Field) -> float:
    """L2 norm over the domain of (interpolant of `values`) - exact."""
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.n_nodes,):
        raise InvalidArgumentError(f"values must have {mesh.n_nodes} entries, got {values.shape}")
    points = quadrature_points(mesh, _FINE_POINTS)                       # (E, Q, 2)
    uh = np.einsum("qk,ek->eq", shape_values(_FINE_POINTS), values[mesh.elements])
    diff = uh - np.asarray(exact(points), dtype=float).reshape(uh.shape)
    return float(np.sqrt(np.sum(mesh.areas[:, None] * _FINE_WEIGHTS[None, :] * diff * diff)))
