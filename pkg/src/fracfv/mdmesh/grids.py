"""Cell/face/node grids for a single subdomain of the mixed-dimensional mesh.

A subdomain of dimension ``d`` lives in ``N``-dimensional ambient space.
Lower-dimensional measures carry the aperture weighting ``a**(N - d)``:
cell volumes are geometric d-measures times that factor, face areas are
geometric (d-1)-measures times the same factor. Point-shaped entities have
geometric measure one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from ..errors import MeshError


@dataclass
class SubdomainGrid:
    """Geometry and topology of one subdomain.

    Attributes:
        dim: Topological dimension of the subdomain (0..ambient_dim).
        ambient_dim: Dimension of the embedding space.
        nodes: Node coordinates, shape (n_nodes, ambient_dim).
        cell_centres: Shape (n_cells, ambient_dim).
        cell_volumes: Aperture-weighted volumes, shape (n_cells,).
        geometric_cell_measures: Unweighted d-measures, shape (n_cells,).
        face_centres: Shape (n_faces, ambient_dim).
        face_normals: Unit normals, shape (n_faces, ambient_dim). The sign
            convention is carried by ``cell_faces``: +1 means the normal
            points out of the cell.
        face_areas: Aperture-weighted areas, shape (n_faces,).
        geometric_face_measures: Unweighted (d-1)-measures, shape (n_faces,).
        cell_faces: Signed incidence, sparse (n_faces, n_cells) with +-1.
        face_nodes: Incidence, sparse (n_nodes, n_faces), boolean.
        cell_nodes: Incidence, sparse (n_nodes, n_cells), boolean.
        apertures: Per-cell aperture (length), shape (n_cells,). Constant
            within a subdomain; the top-dimensional subdomain has aperture 1.
        internal_boundary: Boolean mask of faces created by splitting along
            immersed lower-dimensional subdomains (or matched to them).
        kind: "cartesian" or "simplex"; steers discretization defaults.
        metadata: Free-form construction info (fracture names, parents, ...).
    """

    dim: int
    ambient_dim: int
    nodes: np.ndarray
    cell_centres: np.ndarray
    cell_volumes: np.ndarray
    geometric_cell_measures: np.ndarray
    face_centres: np.ndarray
    face_normals: np.ndarray
    face_areas: np.ndarray
    geometric_face_measures: np.ndarray
    cell_faces: sps.csc_matrix
    face_nodes: sps.csc_matrix
    cell_nodes: sps.csc_matrix
    apertures: np.ndarray
    internal_boundary: np.ndarray
    kind: str = "cartesian"
    metadata: dict = field(default_factory=dict)

    @property
    def n_cells(self) -> int:
        return self.cell_centres.shape[0]

    @property
    def n_faces(self) -> int:
        return self.face_centres.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def aperture(self) -> float:
        """The subdomain-constant aperture."""
        return float(self.apertures[0]) if self.apertures.size else 1.0

    def cells_of_face(self, face: int) -> np.ndarray:
        row = self.cell_faces_csr
        return row.indices[row.indptr[face] : row.indptr[face + 1]]

    def face_sign(self, face: int, cell: int) -> int:
        row = self.cell_faces_csr
        sl = slice(row.indptr[face], row.indptr[face + 1])
        for c, s in zip(row.indices[sl], row.data[sl]):
            if c == cell:
                return int(s)
        raise MeshError(f"face {face} is not adjacent to cell {cell}")

    @property
    def cell_faces_csr(self) -> sps.csr_matrix:
        if not hasattr(self, "_cell_faces_csr"):
            self._cell_faces_csr = self.cell_faces.tocsr()
        return self._cell_faces_csr

    @property
    def face_nodes_csr(self) -> sps.csr_matrix:
        """Node-to-face incidence in row form (rows are nodes)."""
        if not hasattr(self, "_face_nodes_csr"):
            self._face_nodes_csr = self.face_nodes.tocsr()
        return self._face_nodes_csr

    @property
    def boundary_faces(self) -> np.ndarray:
        """Mask of faces with exactly one adjacent cell."""
        counts = np.diff(self.cell_faces_csr.indptr)
        return counts == 1

    @property
    def external_boundary(self) -> np.ndarray:
        """Boundary faces that lie on the physical domain boundary."""
        return self.boundary_faces & ~self.internal_boundary

    def cell_node_lists(self) -> list[np.ndarray]:
        cn = self.cell_nodes.tocsc()
        return [cn.indices[cn.indptr[c] : cn.indptr[c + 1]] for c in range(self.n_cells)]

    def cell_diameters(self) -> np.ndarray:
        """Per-cell diameter: maximum pairwise node distance."""
        out = np.zeros(self.n_cells)
        for c, nodes in enumerate(self.cell_node_lists()):
            pts = self.nodes[nodes]
            if pts.shape[0] < 2:
                continue
            diff = pts[:, None, :] - pts[None, :, :]
            out[c] = np.sqrt((diff**2).sum(axis=2)).max()
        return out

    def diameter(self) -> float:
        """Extent of the subdomain's bounding box diagonal."""
        if self.n_nodes == 0:
            return 0.0
        span = self.nodes.max(axis=0) - self.nodes.min(axis=0)
        return float(np.sqrt((span**2).sum()))


def validate_grid(grid: SubdomainGrid) -> None:
    """Check the structural invariants of a subdomain grid.

    Raises:
        MeshError: If any invariant is violated.
    """
    n_cells, n_faces = grid.n_cells, grid.n_faces
    if grid.cell_faces.shape != (n_faces, n_cells):
        raise MeshError(f"cell_faces shape {grid.cell_faces.shape} != ({n_faces}, {n_cells})")
    if n_cells == 0:
        raise MeshError("subdomain has no cells")

    counts = np.diff(grid.cell_faces_csr.indptr)
    if n_faces and (counts.min() < 1 or counts.max() > 2):
        bad = int(np.flatnonzero((counts < 1) | (counts > 2))[0])
        raise MeshError(f"face {bad} has {counts[bad]} adjacent cells (must be 1 or 2)")

    if n_faces:
        norms = np.linalg.norm(grid.face_normals, axis=1)
        if not np.allclose(norms, 1.0, rtol=0.0, atol=1e-12):
            raise MeshError("face normals are not unit vectors")
        if grid.face_areas.min() <= 0.0 or grid.geometric_face_measures.min() <= 0.0:
            raise MeshError("non-positive face area")
    if grid.cell_volumes.min() <= 0.0 or grid.geometric_cell_measures.min() <= 0.0:
        raise MeshError("non-positive cell volume")

    if grid.apertures.shape != (n_cells,):
        raise MeshError("apertures must be per cell")
    if grid.apertures.size and not np.all(grid.apertures == grid.apertures[0]):
        raise MeshError("aperture must be constant within a subdomain")
    if grid.dim == grid.ambient_dim and grid.apertures.size and grid.apertures[0] != 1.0:
        raise MeshError("the highest-dimensional subdomain must have unit aperture")

    # Aperture scaling of measures.
    scale = grid.aperture ** (grid.ambient_dim - grid.dim)
    if not np.array_equal(grid.cell_volumes, grid.geometric_cell_measures * scale):
        raise MeshError("cell volumes are not geometric measures scaled by aperture^(N-d)")
    if n_faces and not np.array_equal(grid.face_areas, grid.geometric_face_measures * scale):
        raise MeshError("face areas are not geometric measures scaled by aperture^(N-d)")

    # Geometric closure: signed unweighted face areas sum to zero per cell.
    if grid.dim >= 1 and n_faces:
        cf = grid.cell_faces.tocsc()
        vec = grid.face_normals * grid.geometric_face_measures[:, None]
        closure = cf.T @ vec  # (n_cells, N) signed sums
        scale_area = np.abs(vec).max()
        if np.abs(closure).max() > 1e-12 * max(scale_area, 1e-300):
            raise MeshError("cells are not geometrically closed")
