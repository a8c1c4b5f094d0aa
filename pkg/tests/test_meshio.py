"""Mesh document format: import, export, round-trips and error paths."""

import numpy as np
import pytest

from conftest import write_triangle_square_mesh
from fracfv.errors import ConformityError, MeshFormatError
from fracfv.mdmesh import (
    FractureNetworkSpec,
    FracturePatch,
    build_cartesian_with_fractures,
    load_mesh,
    min_cell_diameter,
    save_mesh,
)

TRIANGLE_PAIR = """fracfv-mesh 1
ambient 2
subdomains 1
subdomain 0
dim 2
aperture 1
nodes 4
0 0
1 0
0 1
1 1
cells 2 simplex
0 1 2
1 3 2
end
interfaces 0
end
"""


def test_triangle_pair_import(tmp_path):
    path = tmp_path / "pair.txt"
    path.write_text(TRIANGLE_PAIR)
    mesh = load_mesh(path)
    assert len(mesh.subdomains) == 1
    g = mesh.subdomains[0]
    assert g.n_cells == 2
    assert g.n_faces == 5
    assert np.allclose(g.geometric_cell_measures, 0.5)
    assert g.kind == "simplex"


def test_cartesian_fracture_round_trip(tmp_path):
    spec = FractureNetworkSpec(
        domain=((0.0, 1.0), (0.0, 1.0)),
        fractures=[FracturePatch(0, 0.5, ((0.0, 1.0),), 1e-2, 1.0, "v")],
    )
    mesh = build_cartesian_with_fractures(spec, (2, 1))
    path = tmp_path / "mesh.txt"
    save_mesh(mesh, path)
    loaded = load_mesh(path)
    assert len(loaded.subdomains) == len(mesh.subdomains)
    assert len(loaded.interfaces) == len(mesh.interfaces)
    for g1, g2 in zip(mesh.subdomains, loaded.subdomains):
        assert (g1.n_cells, g1.n_faces, g1.n_nodes) == (g2.n_cells, g2.n_faces, g2.n_nodes)
        assert np.array_equal(g1.nodes, g2.nodes)  # 17 digits round-trip exactly
        assert np.allclose(g1.cell_volumes, g2.cell_volumes, rtol=1e-14, atol=0)
        assert np.allclose(g1.face_areas, g2.face_areas, rtol=1e-14, atol=0)
        assert np.allclose(g1.face_centres, g2.face_centres, atol=1e-15)
        assert np.allclose(g1.face_normals, g2.face_normals, atol=1e-14)
        assert (g1.cell_faces != g2.cell_faces).nnz == 0
        assert np.array_equal(g1.internal_boundary, g2.internal_boundary)
    for i1, i2 in zip(mesh.interfaces, loaded.interfaces):
        assert (i1.higher, i1.lower) == (i2.higher, i2.lower)
        assert np.array_equal(i1.face_cell_pairs, i2.face_cell_pairs)


def test_three_dimensional_round_trip(tmp_path):
    spec = FractureNetworkSpec(
        domain=((0.0, 1.0),) * 3,
        fractures=[FracturePatch(2, 0.5, ((0.0, 1.0), (0.0, 1.0)), 1e-3, 1.0, "f")],
    )
    mesh = build_cartesian_with_fractures(spec, 2)
    path = tmp_path / "mesh3d.txt"
    save_mesh(mesh, path)
    loaded = load_mesh(path)
    for g1, g2 in zip(mesh.subdomains, loaded.subdomains):
        assert np.allclose(g1.cell_volumes, g2.cell_volumes, rtol=1e-13, atol=0)
        assert np.allclose(g1.face_areas, g2.face_areas, rtol=1e-13, atol=0)
        assert np.allclose(np.abs(g1.face_normals), np.abs(g2.face_normals), atol=1e-13)
    loaded.validate()


def test_conformity_error_names_pair(tmp_path):
    # A 1D fracture cell whose centroid does not match the paired faces.
    text = """fracfv-mesh 1
ambient 2
subdomains 2
subdomain 0
dim 2
aperture 1
nodes 6
0 0
0 1
0.5 0
0.5 1
1 0
1 1
cells 2 explicit
0 1 2 3
2 3 4 5
faces 8
-1 0 : 0 1
0 -1 : 2 3
1 -1 : 4 5
-1 0 : 0 2
0 -1 : 1 3
-1 1 : 2 4
1 -1 : 3 5
1 -1 : 2 3
end
subdomain 1
dim 1
aperture 0.01
nodes 2
0.5 0.2
0.5 1.2
cells 1 explicit
0 1
faces 2
-1 0 : 0
0 -1 : 1
end
interfaces 1
interface 0 1 2
1 0
7 0
end
"""
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(ConformityError, match="face 1"):
        load_mesh(path)


def test_non_simplex_cell_rejected(tmp_path):
    text = TRIANGLE_PAIR.replace("cells 2 simplex\n0 1 2\n1 3 2", "cells 1 simplex\n0 1 3 2")
    path = tmp_path / "quad.txt"
    path.write_text(text)
    with pytest.raises(MeshFormatError, match="simplex"):
        load_mesh(path)


def test_explicit_cells_require_faces(tmp_path):
    text = TRIANGLE_PAIR.replace("cells 2 simplex", "cells 2 explicit")
    path = tmp_path / "nofaces.txt"
    path.write_text(text)
    with pytest.raises(MeshFormatError, match="faces"):
        load_mesh(path)


def test_bad_header_rejected(tmp_path):
    path = tmp_path / "hdr.txt"
    path.write_text("some-other-format 3\n")
    with pytest.raises(MeshFormatError):
        load_mesh(path)


def test_simplex_min_cell_diameter_hand_check(tmp_path):
    path = tmp_path / "tri.txt"
    nodes, cells = write_triangle_square_mesh(path, perturb=0.5)
    mesh = load_mesh(path)
    # Independent oracle: smallest over cells of the largest node distance.
    diameters = []
    for cell in cells:
        pts = nodes[cell]
        d = max(
            np.linalg.norm(pts[a] - pts[b])
            for a in range(3)
            for b in range(a + 1, 3)
        )
        diameters.append(d)
    assert np.isclose(min_cell_diameter(mesh), min(diameters), rtol=1e-13)


def test_perturbed_triangle_mesh_validates(tmp_path):
    path = tmp_path / "tri2.txt"
    write_triangle_square_mesh(path, perturb=0.8)
    mesh = load_mesh(path)
    mesh.validate()
    g = mesh.subdomains[0]
    assert np.isclose(g.geometric_cell_measures.sum(), 1.0, rtol=1e-12)
