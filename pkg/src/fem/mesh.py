"""
Quadratic (6-node) triangle meshes of the unit square and point location.

Element rows list the three vertices counter-clockwise, then the midside
nodes of edges (1,2), (2,3), (1,3).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from src.core.exceptions import InvalidArgumentError, MeshValidityError, OutOfDomainError
from src.utils.geometry import barycentric_at, barycentric_coefficients

logger = logging.getLogger(__name__)

# Barycentric tolerance for "inside" tests
_INSIDE_TOL = 1e-12


@dataclass(frozen=True)
class TriMesh:
    """
    Mesh nodes, 6-node connectivity and boundary flags.

    Construction validates indices and rejects zero-area or clockwise
    elements; the barycentric coefficients and element adjacency are
    precomputed for the point locator.
    """
    nodes: np.ndarray           # (N, 2)
    elements: np.ndarray        # (E, 6) int
    boundary_mask: np.ndarray   # (N,) bool
    mesh_size: float            # Target h
    _coeffs: Tuple[np.ndarray, np.ndarray, np.ndarray] = field(init=False, repr=False, compare=False)
    _areas: np.ndarray = field(init=False, repr=False, compare=False)
    _neighbors: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        elements = np.asarray(self.elements)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise MeshValidityError(f"nodes must be N x 2, got {nodes.shape}")
        if elements.ndim != 2 or elements.shape[1] != 6:
            raise MeshValidityError(f"elements must be E x 6, got {elements.shape}")
        if elements.size and (elements.min() < 0 or elements.max() >= nodes.shape[0]):
            raise MeshValidityError("element indices out of range")
        mask = np.asarray(self.boundary_mask, dtype=bool)
        if mask.shape != (nodes.shape[0],):
            raise MeshValidityError(f"boundary_mask must have {nodes.shape[0]} entries, got {mask.shape}")
        elements = elements.astype(np.int64)
        a, b, c, area = barycentric_coefficients(nodes[elements[:, :3]])
        if np.any(area < 0.0):
            raise MeshValidityError(f"element {int(np.argmin(area))} is clockwise")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "boundary_mask", mask)
        object.__setattr__(self, "_coeffs", (a, b, c))
        object.__setattr__(self, "_areas", area)
        object.__setattr__(self, "_neighbors", _build_neighbors(elements))

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def areas(self) -> np.ndarray:
        return self._areas

    @property
    def coefficients(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Barycentric coefficients (a, b, c), each (E, 3)."""
        return self._coeffs

    @property
    def pitch(self) -> float:
        """Largest shortest-edge length over the elements (the cell pitch on structured meshes)."""
        v = self.nodes[self.elements[:, :3]]
        edges = np.linalg.norm(v - np.roll(v, -1, axis=1), axis=2)
        return float(edges.min(axis=1).max())

    def barycentric(self, element: int, s: np.ndarray) -> np.ndarray:
        a, b, c = self._coeffs
        return barycentric_at(a[element], b[element], c[element], np.asarray(s, dtype=float))

    def locate(self, s: np.ndarray, start: int = 0) -> Tuple[int, np.ndarray]:
        """
        Finds an element containing s by walking through adjacent elements.

        Falls back to a brute-force scan when the walk leaves the mesh or
        exceeds E steps.

        Returns:
            Tuple of (element index, barycentric coordinates (3,))

        Raises:
            OutOfDomainError: If no element contains s; `nearest_element` is
                the element with the closest centroid.
        """
        s = np.asarray(s, dtype=float).reshape(2)
        if not np.all(np.isfinite(s)):
            raise InvalidArgumentError(f"query point must be finite, got {s}")
        element = int(start) if 0 <= start < self.n_elements else 0
        for _ in range(self.n_elements):
            xi = self.barycentric(element, s)
            worst = int(np.argmin(xi))
            if xi[worst] >= -_INSIDE_TOL:
                return element, xi
            nxt = self._neighbors[element, worst]
            if nxt < 0:
                break
            element = int(nxt)
        return self._locate_brute_force(s)

    def _locate_brute_force(self, s: np.ndarray) -> Tuple[int, np.ndarray]:
        a, b, c = self._coeffs
        xi = a + b * s[0] + c * s[1]
        inside = np.flatnonzero(xi.min(axis=1) >= -_INSIDE_TOL)
        if inside.size:
            element = int(inside[0])
            return element, xi[element]
        centroids = self.nodes[self.elements[:, :3]].mean(axis=1)
        nearest = int(np.argmin(np.linalg.norm(centroids - s, axis=1)))
        raise OutOfDomainError(f"point {s.tolist()} lies outside the mesh (nearest element {nearest})",
                               nearest_element=nearest)

    def locate_many(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Vectorized location: (M,) element indices and (M, 3) barycentric coordinates."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        elements = np.empty(points.shape[0], dtype=np.int64)
        xis = np.empty((points.shape[0], 3))
        previous = 0
        for i, s in enumerate(points):
            previous, xis[i] = self.locate(s, start=previous)
            elements[i] = previous
        return elements, xis


def _build_neighbors(elements: np.ndarray) -> np.ndarray:
    """(E, 3) element across the edge opposite each vertex, -1 on the boundary."""
    neighbors = np.full((elements.shape[0], 3), -1, dtype=np.int64)
    owners: Dict[Tuple[int, int], Tuple[int, int]] = {}
    for e, row in enumerate(elements[:, :3]):
        for i in range(3):
            key = tuple(sorted((int(row[(i + 1) % 3]), int(row[(i + 2) % 3]))))
            if key in owners:
                other, j = owners.pop(key)
                neighbors[e, i] = other
                neighbors[other, j] = e
            else:
                owners[key] = (e, i)
    return neighbors


def build_mesh(h: float) -> TriMesh:
    """
    Structured quadratic-triangle mesh of [0, 1]^2.

    m = ceil(1/h) squares per side, each split along its BL-TR diagonal into
    (BL, BR, TR) and (BL, TR, TL). Nodes form the full (2m+1)^2 lattice of
    vertices and midsides, node (ix, iy) at (ix/(2m), iy/(2m)) with index
    iy*(2m+1) + ix.

    Args:
        h: Target mesh size, 0 < h <= 0.5

    Returns:
        TriMesh with 2m^2 elements and (2m+1)^2 nodes
    """
    if not (np.isfinite(h) and 0.0 < h <= 0.5):
        raise InvalidArgumentError(f"mesh size must lie in (0, 0.5], got {h}")
    m = int(math.ceil(1.0 / h - 1e-9))
    side = 2 * m + 1
    iy, ix = np.divmod(np.arange(side * side), side)
    nodes = np.column_stack([ix / (2.0 * m), iy / (2.0 * m)])
    boundary = (ix == 0) | (ix == 2 * m) | (iy == 0) | (iy == 2 * m)

    def idx(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return y * side + x

    cj, ci = np.divmod(np.arange(m * m), m)
    x0, y0 = 2 * ci, 2 * cj
    lower = np.column_stack([
        idx(x0, y0), idx(x0 + 2, y0), idx(x0 + 2, y0 + 2),
        idx(x0 + 1, y0), idx(x0 + 2, y0 + 1), idx(x0 + 1, y0 + 1),
    ])
    upper = np.column_stack([
        idx(x0, y0), idx(x0 + 2, y0 + 2), idx(x0, y0 + 2),
        idx(x0 + 1, y0 + 1), idx(x0 + 1, y0 + 2), idx(x0, y0 + 1),
    ])
    elements = np.empty((2 * m * m, 6), dtype=np.int64)
    elements[0::2] = lower
    elements[1::2] = upper
    logger.debug("Built mesh h=%.4g: %d cells per side, %d nodes", h, m, side * side)
    return TriMesh(nodes=nodes, elements=elements, boundary_mask=boundary, mesh_size=float(h))
