"""Text-file exchange of conforming mixed-dimensional meshes.

Format (version 1), line oriented, ``#`` starts a comment::

    fracfv-mesh 1
    ambient <N>
    subdomains <count>
    subdomain <index>
    dim <d>
    aperture <a>
    nodes <n_nodes>
    <x> [<y> [<z>]]                   # one line per node, 17 significant digits
    cells <n_cells> simplex|explicit
    <node> <node> ...                 # one line per cell
    faces <n_faces>                   # mandatory for explicit, optional for simplex
    <cell_plus> <cell_minus> : <node> <node> ...
    end
    interfaces <count>
    interface <higher> <lower> <n_pairs>
    <face> <cell>                     # one line per pair
    end

Cells declared ``simplex`` must list exactly d+1 nodes; their facets are
derived automatically when no ``faces`` block is present. ``explicit`` cells
(boxes, general polytopes) require the ``faces`` block, where ``cell_minus``
is ``-1`` on one-sided faces and polygon nodes are listed in boundary order.
Geometry (centroids, measures, normals) is recomputed on load; face normals
point outward from ``cell_plus``.
"""

from __future__ import annotations

import itertools
from pathlib import Path

import numpy as np
import scipy.sparse as sps

from ..errors import MeshFormatError
from .grids import SubdomainGrid
from .mdmesh import InterfaceMap, MixedDimensionalMesh

FORMAT_NAME = "fracfv-mesh"
FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# Geometry of general cells described by nodes and faces
# ---------------------------------------------------------------------------


def _polygon_area_normal(pts: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Area, unit normal and centroid of a planar polygon in 3D (ordered nodes)."""
    ref = pts.mean(axis=0)
    total = np.zeros(3)
    centroid_acc = np.zeros(3)
    area_acc = 0.0
    n = pts.shape[0]
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        cross = np.cross(a - ref, b - ref)
        tri_area = 0.5 * np.linalg.norm(cross)
        total += 0.5 * cross
        centroid_acc += tri_area * (ref + a + b) / 3.0
        area_acc += tri_area
    if area_acc <= 0.0:
        raise MeshFormatError("degenerate polygon face")
    return area_acc, total / np.linalg.norm(total), centroid_acc / area_acc


def _face_geometry(face_pts: np.ndarray, sub_dim: int, ambient: int):
    """Centroid, geometric measure and an (unoriented) normal of one face."""
    if sub_dim == 1:
        centre = face_pts[0]
        return centre, 1.0, None  # direction fixed later from the adjacent cell
    if sub_dim == 2:
        if face_pts.shape[0] != 2:
            raise MeshFormatError("faces of 2D cells must have two nodes")
        centre = face_pts.mean(axis=0)
        edge = face_pts[1] - face_pts[0]
        length = np.linalg.norm(edge)
        if length <= 0:
            raise MeshFormatError("zero-length face")
        if ambient == 2:
            normal = np.array([edge[1], -edge[0]]) / length
        else:
            normal = None  # in-plane perpendicular fixed later from the cell
        return centre, length, normal
    area, normal, centre = _polygon_area_normal(face_pts)
    return centre, area, normal


def _build_grid_from_entities(
    dim: int,
    ambient: int,
    nodes: np.ndarray,
    cell_node_lists: list[list[int]],
    face_node_lists: list[list[int]],
    face_cells: list[tuple[int, int]],
    aperture: float,
    kind: str,
) -> SubdomainGrid:
    n_cells = len(cell_node_lists)
    n_faces = len(face_node_lists)
    n_nodes = nodes.shape[0]

    cell_centres = np.array([nodes[l].mean(axis=0) for l in cell_node_lists])

    face_centres = np.zeros((n_faces, ambient))
    face_measures = np.zeros(n_faces)
    face_normals = np.zeros((n_faces, ambient))
    rows, cols, signs = [], [], []
    for f, (node_list, (c_plus, c_minus)) in enumerate(zip(face_node_lists, face_cells)):
        pts = nodes[node_list]
        centre, measure, normal = _face_geometry(pts, dim, ambient)
        anchor = c_plus if c_plus >= 0 else c_minus
        outward = centre - cell_centres[anchor]
        if normal is None:
            if dim == 2:  # in-plane perpendicular of an edge of a 2D cell in 3D
                edge = pts[1] - pts[0]
                edge = edge / np.linalg.norm(edge)
                normal = outward - (outward @ edge) * edge
            else:  # point face of a 1D cell
                normal = outward
            norm = np.linalg.norm(normal)
            if norm <= 0:
                raise MeshFormatError(f"cannot orient face {f}")
            normal = normal / norm
        if (normal @ outward) < 0:
            normal = -normal
        if c_plus < 0:  # stored side is the minus side: normal points into it
            normal = -normal
        face_centres[f] = centre
        face_measures[f] = measure
        face_normals[f] = normal
        if c_plus >= 0:
            rows.append(f), cols.append(c_plus), signs.append(1.0)
        if c_minus >= 0:
            rows.append(f), cols.append(c_minus), signs.append(-1.0)

    cell_faces = sps.csc_matrix((signs, (rows, cols)), shape=(n_faces, n_cells))

    # Cell volumes by the divergence theorem over outward-oriented faces.
    cell_measures = np.zeros(n_cells)
    if dim == 0:
        cell_measures[:] = 1.0
    else:
        cf = cell_faces.tocoo()
        for f, c, s in zip(cf.row, cf.col, cf.data):
            contrib = face_measures[f] * (face_normals[f] @ (face_centres[f] - cell_centres[c]))
            cell_measures[c] += s * contrib / dim
    if dim > 0 and n_faces and cell_measures.min() <= 0:
        bad = int(np.argmin(cell_measures))
        raise MeshFormatError(f"cell {bad} has non-positive volume {cell_measures[bad]:.3e}")

    fn_rows = [n for l in face_node_lists for n in l]
    fn_cols = [f for f, l in enumerate(face_node_lists) for _ in l]
    face_nodes = sps.csc_matrix(
        (np.ones(len(fn_rows), dtype=bool), (fn_rows, fn_cols)), shape=(n_nodes, n_faces)
    )
    cn_rows = [n for l in cell_node_lists for n in l]
    cn_cols = [c for c, l in enumerate(cell_node_lists) for _ in l]
    cell_nodes = sps.csc_matrix(
        (np.ones(len(cn_rows), dtype=bool), (cn_rows, cn_cols)), shape=(n_nodes, n_cells)
    )

    scale = aperture ** (ambient - dim)
    return SubdomainGrid(
        dim=dim,
        ambient_dim=ambient,
        nodes=nodes,
        cell_centres=cell_centres,
        cell_volumes=cell_measures * scale,
        geometric_cell_measures=cell_measures,
        face_centres=face_centres,
        face_normals=face_normals,
        face_areas=face_measures * scale,
        geometric_face_measures=face_measures,
        cell_faces=cell_faces,
        face_nodes=face_nodes,
        cell_nodes=cell_nodes,
        apertures=np.full(n_cells, aperture),
        internal_boundary=np.zeros(n_faces, dtype=bool),
        kind=kind,
    )


def _derive_simplex_faces(dim: int, cell_node_lists: list[list[int]]):
    """Facets of a simplex mesh: all d-subsets of each cell's d+1 nodes."""
    face_index: dict[tuple, int] = {}
    face_node_lists: list[list[int]] = []
    face_cells: list[list[int]] = []
    for c, cell_nodes in enumerate(cell_node_lists):
        for facet in itertools.combinations(sorted(cell_nodes), dim):
            key = tuple(facet)
            f = face_index.get(key)
            if f is None:
                face_index[key] = f = len(face_node_lists)
                face_node_lists.append(list(facet))
                face_cells.append([c, -1])
            else:
                if face_cells[f][1] != -1:
                    raise MeshFormatError(f"facet {key} shared by more than two cells")
                face_cells[f][1] = c
    return face_node_lists, [tuple(fc) for fc in face_cells]


# ---------------------------------------------------------------------------
# Reader
# ---------------------------------------------------------------------------


class _Lines:
    def __init__(self, text: str):
        self.lines = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                self.lines.append(line)
        self.pos = 0

    def next(self) -> str:
        if self.pos >= len(self.lines):
            raise MeshFormatError("unexpected end of mesh document")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def expect(self, keyword: str) -> list[str]:
        parts = self.next().split()
        if parts[0] != keyword:
            raise MeshFormatError(f"expected {keyword!r}, found {parts[0]!r}")
        return parts[1:]

    def peek_keyword(self) -> str:
        if self.pos >= len(self.lines):
            return ""
        return self.lines[self.pos].split()[0]


def load_mesh(path) -> MixedDimensionalMesh:
    """Read a conforming mixed-dimensional mesh and validate all invariants.

    Raises:
        MeshFormatError: Structural problems in the document.
        ConformityError: Interface pairs that do not match geometrically.
    """
    text = Path(path).read_text()
    lines = _Lines(text)
    header = lines.next().split()
    if len(header) != 2 or header[0] != FORMAT_NAME or int(header[1]) != FORMAT_VERSION:
        raise MeshFormatError(f"unsupported mesh header {' '.join(header)!r}")
    ambient = int(lines.expect("ambient")[0])
    n_sub = int(lines.expect("subdomains")[0])

    subdomains: list[SubdomainGrid] = []
    for expected in range(n_sub):
        idx = int(lines.expect("subdomain")[0])
        if idx != expected:
            raise MeshFormatError(f"subdomain {expected} out of order (found {idx})")
        dim = int(lines.expect("dim")[0])
        aperture = float(lines.expect("aperture")[0])
        n_nodes = int(lines.expect("nodes")[0])
        nodes = np.empty((n_nodes, ambient))
        for i in range(n_nodes):
            vals = [float(v) for v in lines.next().split()]
            if len(vals) != ambient:
                raise MeshFormatError(f"node {i}: expected {ambient} coordinates")
            nodes[i] = vals
        cell_head = lines.expect("cells")
        n_cells, cell_type = int(cell_head[0]), cell_head[1]
        if cell_type not in ("simplex", "explicit"):
            raise MeshFormatError(f"unknown cell type {cell_type!r}")
        cell_node_lists = []
        for c in range(n_cells):
            node_list = [int(v) for v in lines.next().split()]
            if cell_type == "simplex" and dim > 0 and len(node_list) != dim + 1:
                raise MeshFormatError(
                    f"subdomain {idx} cell {c} is not a {dim}-simplex "
                    f"({len(node_list)} nodes, expected {dim + 1})"
                )
            cell_node_lists.append(node_list)

        if lines.peek_keyword() == "faces":
            n_faces = int(lines.expect("faces")[0])
            face_node_lists, face_cells = [], []
            for f in range(n_faces):
                left, right = lines.next().split(":")
                c_plus, c_minus = (int(v) for v in left.split())
                face_node_lists.append([int(v) for v in right.split()])
                face_cells.append((c_plus, c_minus))
        elif cell_type == "simplex" and dim > 0:
            face_node_lists, face_cells = _derive_simplex_faces(dim, cell_node_lists)
        elif dim == 0:
            face_node_lists, face_cells = [], []
        else:
            raise MeshFormatError(f"subdomain {idx}: explicit cells require a faces block")
        lines.expect("end")
        kind = "simplex" if cell_type == "simplex" else "cartesian"
        subdomains.append(
            _build_grid_from_entities(
                dim, ambient, nodes, cell_node_lists, face_node_lists, face_cells, aperture, kind
            )
        )

    n_intf = int(lines.expect("interfaces")[0])
    interfaces = []
    for _ in range(n_intf):
        head = lines.expect("interface")
        higher, lower, n_pairs = int(head[0]), int(head[1]), int(head[2])
        pairs = np.empty((n_pairs, 2), dtype=int)
        for i in range(n_pairs):
            pairs[i] = [int(v) for v in lines.next().split()]
        interfaces.append(InterfaceMap(higher, lower, pairs))
        subdomains[higher].internal_boundary[pairs[:, 0]] = True
    lines.expect("end")

    mesh = MixedDimensionalMesh(subdomains, interfaces)
    mesh.validate()
    return mesh


# ---------------------------------------------------------------------------
# Writer
# ---------------------------------------------------------------------------


def _ordered_face_nodes(grid: SubdomainGrid, face: int) -> list[int]:
    """Face nodes, ordered along the polygon boundary for 3D polygons."""
    fn = grid.face_nodes.tocsc()
    node_list = list(fn.indices[fn.indptr[face] : fn.indptr[face + 1]])
    if grid.dim < 3 or len(node_list) <= 3:
        return node_list
    pts = grid.nodes[node_list]
    centre = pts.mean(axis=0)
    shifted = pts - centre
    # Orthonormal basis of the face plane, then angular sort.
    _, _, vt = np.linalg.svd(shifted, full_matrices=False)
    angles = np.arctan2(shifted @ vt[1], shifted @ vt[0])
    order = np.argsort(angles)
    return [node_list[i] for i in order]


def save_mesh(mesh: MixedDimensionalMesh, path) -> None:
    """Write a mesh with explicit faces so split topologies round-trip."""
    out = [f"{FORMAT_NAME} {FORMAT_VERSION}"]
    out.append(f"ambient {mesh.ambient_dim}")
    out.append(f"subdomains {len(mesh.subdomains)}")
    for idx, grid in enumerate(mesh.subdomains):
        out.append(f"subdomain {idx}")
        out.append(f"dim {grid.dim}")
        out.append(f"aperture {grid.aperture:.17g}")
        out.append(f"nodes {grid.n_nodes}")
        for row in grid.nodes:
            out.append(" ".join(f"{v:.17g}" for v in row))
        cell_type = "simplex" if grid.kind == "simplex" else "explicit"
        out.append(f"cells {grid.n_cells} {cell_type}")
        for node_list in grid.cell_node_lists():
            out.append(" ".join(str(n) for n in node_list))
        if grid.n_faces or grid.dim > 0:
            out.append(f"faces {grid.n_faces}")
            csr = grid.cell_faces_csr
            for f in range(grid.n_faces):
                sl = slice(csr.indptr[f], csr.indptr[f + 1])
                c_plus, c_minus = -1, -1
                for c, s in zip(csr.indices[sl], csr.data[sl]):
                    if s > 0:
                        c_plus = int(c)
                    else:
                        c_minus = int(c)
                node_str = " ".join(str(n) for n in _ordered_face_nodes(grid, f))
                out.append(f"{c_plus} {c_minus} : {node_str}")
        out.append("end")
    out.append(f"interfaces {len(mesh.interfaces)}")
    for intf in mesh.interfaces:
        out.append(f"interface {intf.higher} {intf.lower} {intf.n_pairs}")
        for face, cell in intf.face_cell_pairs:
            out.append(f"{face} {cell}")
    out.append("end")
    Path(path).write_text("\n".join(out) + "\n")
