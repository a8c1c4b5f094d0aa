"""Mesh construction: entity counts, geometry invariants, error paths."""

import numpy as np
import pytest

from fracfv.errors import FractureAlignmentError, FractureOverlapError, MeshError
from fracfv.mdmesh import (
    FractureNetworkSpec,
    FracturePatch,
    build_cartesian_with_fractures,
    min_cell_diameter,
)
from fracfv.tensors import PermeabilityTensor


def _counts_by_dim(mesh):
    out = {}
    for g in mesh.subdomains:
        out.setdefault(g.dim, []).append(g.n_cells)
    return out


class TestCartesianBuilder:
    def test_single_vertical_fracture_2x1(self):
        spec = FractureNetworkSpec(
            domain=((0.0, 1.0), (0.0, 1.0)),
            fractures=[FracturePatch(0, 0.5, ((0.0, 1.0),), 1e-2, 1.0, "v")],
        )
        mesh = build_cartesian_with_fractures(spec, (2, 1))
        assert _counts_by_dim(mesh) == {2: [2], 1: [1]}
        assert len(mesh.interfaces) == 1
        assert mesh.interfaces[0].n_pairs == 2

    def test_two_crossing_fractures_2x2(self, crossing_mesh):
        counts = _counts_by_dim(crossing_mesh)
        assert counts[2] == [4]
        assert sorted(counts[1]) == [2, 2]
        assert counts[0] == [1]
        pair_counts = {
            (i.higher, i.lower): i.n_pairs for i in crossing_mesh.interfaces
        }
        # Four matrix-fracture pairs per fracture, two point pairs per fracture.
        dims = {i: g.dim for i, g in enumerate(crossing_mesh.subdomains)}
        frac_pairs = [n for (h, l), n in pair_counts.items() if dims[h] == 2]
        point_pairs = [n for (h, l), n in pair_counts.items() if dims[h] == 1]
        assert frac_pairs == [4, 4]
        assert point_pairs == [2, 2]

    def test_orthogonal_fractures_3d_line_intersection(self):
        spec = FractureNetworkSpec(
            domain=((0.0, 1.0),) * 3,
            fractures=[
                FracturePatch(2, 0.5, ((0.0, 1.0), (0.0, 1.0)), 1e-6, 1e6, "xy"),
                FracturePatch(0, 0.5, ((0.0, 1.0), (0.0, 1.0)), 1e-6, 1e-6, "yz"),
            ],
        )
        mesh = build_cartesian_with_fractures(spec, 2)
        counts = _counts_by_dim(mesh)
        assert counts[3] == [8]
        assert counts[2] == [4, 4]
        assert counts[1] == [2]
        assert 0 not in counts

    def test_t_intersection_ending_fracture(self):
        spec = FractureNetworkSpec(
            domain=((0.0, 1.0), (0.0, 1.0)),
            fractures=[
                FracturePatch(1, 0.5, ((0.0, 1.0),), 1e-2, 1.0, "through"),
                FracturePatch(0, 0.5, ((0.0, 0.5),), 1e-2, 1.0, "ending"),
            ],
        )
        mesh = build_cartesian_with_fractures(spec, 4)
        counts = _counts_by_dim(mesh)
        assert counts[0] == [1]
        # The ending fracture touches the point through its boundary face:
        # one pair from its side, two from the split through-going fracture.
        point_sd = [i for i, g in enumerate(mesh.subdomains) if g.dim == 0][0]
        pairs = [i.n_pairs for i in mesh.interfaces if i.lower == point_sd]
        assert sorted(pairs) == [1, 2]
        mesh.validate()

    def test_misaligned_fracture_rejected(self):
        spec = FractureNetworkSpec(
            domain=((0.0, 1.0), (0.0, 1.0)),
            fractures=[FracturePatch(0, 0.3, ((0.0, 1.0),), 1e-2, 1.0, "odd")],
        )
        with pytest.raises(FractureAlignmentError, match="odd"):
            build_cartesian_with_fractures(spec, 2)

    def test_overlapping_same_plane_rejected(self):
        spec = FractureNetworkSpec(
            domain=((0.0, 1.0), (0.0, 1.0)),
            fractures=[
                FracturePatch(0, 0.5, ((0.0, 0.5),), 1e-2, 1.0, "a"),
                FracturePatch(0, 0.5, ((0.5, 1.0),), 1e-2, 1.0, "b"),
            ],
        )
        with pytest.raises(FractureOverlapError):
            build_cartesian_with_fractures(spec, 4)

    def test_fracture_on_domain_boundary_rejected(self):
        spec = FractureNetworkSpec(
            domain=((0.0, 1.0), (0.0, 1.0)),
            fractures=[FracturePatch(0, 0.0, ((0.0, 1.0),), 1e-2, 1.0, "edge")],
        )
        with pytest.raises(FractureAlignmentError):
            build_cartesian_with_fractures(spec, 2)


def _example_meshes():
    yield build_cartesian_with_fractures(
        FractureNetworkSpec(domain=((0.0, 1.0), (0.0, 1.0))), 4
    )
    yield build_cartesian_with_fractures(
        FractureNetworkSpec(
            domain=((0.0, 1.0), (0.0, 1.0)),
            fractures=[
                FracturePatch(0, 0.5, ((0.0, 1.0),), 1e-2, 1.0, "v"),
                FracturePatch(1, 0.5, ((0.0, 1.0),), 1e-2, 1.0, "h"),
            ],
        ),
        4,
    )
    yield build_cartesian_with_fractures(
        FractureNetworkSpec(
            domain=((0.0, 1.0),) * 3,
            fractures=[
                FracturePatch(2, 0.5, ((0.0, 1.0), (0.0, 1.0)), 1e-6, 1e6, "xy"),
                FracturePatch(0, 0.5, ((0.0, 1.0), (0.0, 1.0)), 1e-6, 1e-6, "yz"),
            ],
        ),
        4,
    )
    # Non-uniform axis spacing with a thin interior row.
    a = 1e-3
    y_nodes = np.concatenate(
        [np.linspace(0.0, 0.5 - a / 2, 3), np.linspace(0.5 + a / 2, 1.0, 3)]
    )
    yield build_cartesian_with_fractures(
        FractureNetworkSpec(domain=((0.0, 1.0), (0.0, 1.0))), (4, y_nodes)
    )


_EXAMPLE_MESHES = list(_example_meshes())


@pytest.mark.parametrize(
    "mesh", _EXAMPLE_MESHES, ids=["square", "crossing", "cube", "strip"]
)
class TestMeshInvariants:
    def test_interface_centres_match(self, mesh):
        tol = 1e-10 * mesh.domain_diameter()
        for intf in mesh.interfaces:
            hi = mesh.subdomains[intf.higher]
            lo = mesh.subdomains[intf.lower]
            pairs = intf.face_cell_pairs
            dist = np.linalg.norm(
                hi.face_centres[pairs[:, 0]] - lo.cell_centres[pairs[:, 1]], axis=1
            )
            assert dist.max() < tol

    def test_geometric_closure(self, mesh):
        for g in mesh.subdomains:
            if g.n_faces == 0:
                continue
            vec = g.face_normals * g.geometric_face_measures[:, None]
            closure = g.cell_faces.T @ vec
            assert np.abs(closure).max() <= 1e-12 * np.abs(vec).max()

    def test_volume_scaling_exact(self, mesh):
        for g in mesh.subdomains:
            scale = g.aperture ** (g.ambient_dim - g.dim)
            assert np.array_equal(g.cell_volumes, g.geometric_cell_measures * scale)
            assert np.array_equal(g.face_areas, g.geometric_face_measures * scale)

    def test_matrix_volume_preserved(self, mesh):
        matrix = mesh.highest_dim_subdomain()
        box = np.prod(matrix.nodes.max(axis=0) - matrix.nodes.min(axis=0))
        assert np.isclose(matrix.geometric_cell_measures.sum(), box, rtol=1e-13)

    def test_faces_have_one_or_two_cells(self, mesh):
        for g in mesh.subdomains:
            if g.n_faces == 0:
                continue
            counts = np.diff(g.cell_faces_csr.indptr)
            assert counts.min() >= 1 and counts.max() <= 2
            single = counts == 1
            assert np.all(g.boundary_faces == single)

    def test_unit_normals(self, mesh):
        for g in mesh.subdomains:
            if g.n_faces:
                assert np.allclose(np.linalg.norm(g.face_normals, axis=1), 1.0, atol=1e-13)

    def test_validate_passes(self, mesh):
        mesh.validate()


class TestMinCellDiameter:
    def test_square(self, unit_square_4):
        assert np.isclose(min_cell_diameter(unit_square_4), 0.25 * np.sqrt(2), rtol=1e-14)

    def test_cube(self):
        mesh = build_cartesian_with_fractures(FractureNetworkSpec(domain=((0.0, 1.0),) * 3), 2)
        assert np.isclose(min_cell_diameter(mesh), 0.5 * np.sqrt(3), rtol=1e-14)

    def test_nonuniform_takes_smallest(self):
        nodes = np.array([0.0, 0.1, 1.0])
        mesh = build_cartesian_with_fractures(
            FractureNetworkSpec(domain=((0.0, 1.0), (0.0, 1.0))), (nodes, nodes)
        )
        assert np.isclose(min_cell_diameter(mesh), 0.1 * np.sqrt(2), rtol=1e-13)


class TestIntersectionRules:
    def _mesh(self, rule):
        spec = FractureNetworkSpec(
            domain=((0.0, 1.0), (0.0, 1.0)),
            fractures=[
                FracturePatch(0, 0.5, ((0.0, 1.0),), 1e-2, 4.0, "v"),
                FracturePatch(1, 0.5, ((0.0, 1.0),), 3e-2, 1.0, "h"),
            ],
            intersection_permeability=rule,
        )
        return build_cartesian_with_fractures(spec, 2)

    def _point_grid(self, mesh):
        return [g for g in mesh.subdomains if g.dim == 0][0]

    def test_min_rule(self):
        g = self._point_grid(self._mesh("min"))
        assert np.allclose(g.metadata["permeability"].matrix, np.eye(2))

    def test_harmonic_rule(self):
        g = self._point_grid(self._mesh("harmonic"))
        assert np.allclose(g.metadata["permeability"].matrix, 1.6 * np.eye(2))

    def test_named_patch_rule(self):
        g = self._point_grid(self._mesh(("patch", "v")))
        assert np.allclose(g.metadata["permeability"].matrix, 4.0 * np.eye(2))

    def test_explicit_value(self):
        g = self._point_grid(self._mesh(1e10))
        assert np.allclose(g.metadata["permeability"].matrix, 1e10 * np.eye(2))

    def test_explicit_tensor(self):
        tensor = PermeabilityTensor.diagonal(2.0, 5.0)
        g = self._point_grid(self._mesh(tensor))
        assert np.allclose(g.metadata["permeability"].matrix, tensor.matrix)

    def test_aperture_inherits_minimum(self):
        g = self._point_grid(self._mesh("min"))
        assert g.aperture == 1e-2

    def test_unknown_rule_rejected(self):
        with pytest.raises(MeshError):
            self._mesh("geometric-mean")
