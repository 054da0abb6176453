import numpy as np
import pytest

from teig.material import make_material, material_preset
from teig.mesh import DomainSpec, Mesh, generate


@pytest.fixture(scope="session")
def square_h4():
    """Unit square at h=1/4: 25 vertices, 32 triangles."""
    return generate(DomainSpec("square"), -1)


@pytest.fixture(scope="session")
def square_h8():
    return generate(DomainSpec("square"), 0)


@pytest.fixture(scope="session")
def square_h16():
    return generate(DomainSpec("square"), 1)


@pytest.fixture(scope="session")
def mat_a1():
    return material_preset("A1")


@pytest.fixture(scope="session")
def mat_2d_regime2():
    return make_material(11.0 * np.eye(2))


def perturbed_mesh(base: Mesh, seed: int, amplitude: float = 0.25) -> Mesh:
    """Randomly shift interior vertices by a fraction of the mesh size."""
    rng = np.random.default_rng(seed)
    h = base.max_edge_length()
    verts = base.vertices.copy()
    interior = ~base.boundary_vertex
    verts[interior] += amplitude * h * rng.uniform(-1, 1, size=(interior.sum(), base.dim))
    return Mesh.from_arrays(
        base.dim,
        verts,
        base.cells,
        projector_group=base.projector_group,
        projectors=base.projectors,
    )


def random_spd(dim: int, lo: float, hi: float, seed: int) -> np.ndarray:
    """Random SPD matrix with eigenvalues drawn from [lo, hi]."""
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    eigs = rng.uniform(lo, hi, size=dim)
    return (q * eigs) @ q.T
