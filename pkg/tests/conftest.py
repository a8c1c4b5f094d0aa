import numpy as np
import pytest

from fracfv.mdmesh import FractureNetworkSpec, FracturePatch, build_cartesian_with_fractures


@pytest.fixture()
def unit_square_4():
    """Plain 4x4 Cartesian grid on the unit square."""
    return build_cartesian_with_fractures(FractureNetworkSpec(domain=((0.0, 1.0), (0.0, 1.0))), 4)


@pytest.fixture()
def crossing_mesh():
    """2x2 square with two crossing unit fractures."""
    spec = FractureNetworkSpec(
        domain=((0.0, 1.0), (0.0, 1.0)),
        fractures=[
            FracturePatch(0, 0.5, ((0.0, 1.0),), 1e-2, 1.0, "vertical"),
            FracturePatch(1, 0.5, ((0.0, 1.0),), 1e-2, 1.0, "horizontal"),
        ],
    )
    return build_cartesian_with_fractures(spec, 2)


def write_triangle_square_mesh(path, perturb: float = 0.0):
    """Structured triangulation of the unit square (two triangles per cell).

    ``perturb`` shifts interior nodes to break grid orthogonality.
    """
    n = 4
    coords = np.linspace(0.0, 1.0, n + 1)
    nodes = np.array([[x, y] for y in coords for x in coords])
    if perturb:
        rng = np.random.default_rng(7)
        for i, (x, y) in enumerate(nodes):
            if 0.0 < x < 1.0 and 0.0 < y < 1.0:
                nodes[i] += perturb * (rng.random(2) - 0.5) / n
    cells = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10 = v00 + 1
            v01 = v00 + (n + 1)
            v11 = v01 + 1
            cells.append([v00, v10, v01])
            cells.append([v10, v11, v01])
    lines = ["fracfv-mesh 1", "ambient 2", "subdomains 1", "subdomain 0", "dim 2",
             "aperture 1", f"nodes {len(nodes)}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in nodes]
    lines.append(f"cells {len(cells)} simplex")
    lines += [" ".join(str(v) for v in c) for c in cells]
    lines += ["end", "interfaces 0", "end"]
    path.write_text("\n".join(lines) + "\n")
    return nodes, cells
