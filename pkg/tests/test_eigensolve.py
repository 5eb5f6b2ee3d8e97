import numpy as np
import pytest
from scipy.linalg import eigh

from symmspec.assembly import BoundaryCondition, reduce
from symmspec.eigensolve import smallest_eigenpairs
from symmspec.errors import NoConvergence
from symmspec.geometry import DomainSpec, build_mesh


def _dense_smallest(ops, k):
    return eigh(ops.stiffness.toarray(), ops.mass.toarray(), eigvals_only=True)[:k]


def _rel(a, b):
    return np.abs(a - b) / np.maximum(np.abs(b), 1.0)


@pytest.fixture(scope="module")
def small_systems():
    specs = [DomainSpec.disk(1.0), DomainSpec.rectangle(1.0, 1.5), DomainSpec.ellipse(1.2, 0.8)]
    out = []
    for spec in specs:
        mesh = build_mesh(spec, 0.2 if spec.kind.value != "rectangle" else 0.14)
        for bc in BoundaryCondition:
            ops = reduce(mesh, bc)
            assert ops.n_dofs <= 200
            out.append(ops)
    return out


def test_matches_dense_oracle(small_systems):
    for ops in small_systems:
        got = smallest_eigenpairs(ops, 8)
        assert np.all(_rel(got.eigenvalues, _dense_smallest(ops, 8)) <= 1e-8), ops.bc


def test_vectors_m_orthonormal_and_residuals(small_systems):
    ops = small_systems[2]
    sp = smallest_eigenpairs(ops, 6)
    V = sp.eigenvectors
    np.testing.assert_allclose(V.T @ (ops.mass @ V), np.eye(6), atol=1e-10)
    assert np.all(sp.residuals <= 1e-8)
    R = ops.stiffness @ V - (ops.mass @ V) * sp.eigenvalues
    assert np.linalg.norm(R, axis=0).max() <= 1e-8 * np.linalg.norm(V, axis=0).max() * 10


def test_seed_invariance(disk_mesh):
    ops = reduce(disk_mesh, "nonlocal_p")
    a = smallest_eigenpairs(ops, 6, seed=0).eigenvalues
    b = smallest_eigenpairs(ops, 6, seed=12345).eigenvalues
    assert np.all(np.abs(a - b) / a <= 10 * 1e-8)


def test_reproducible(disk_mesh):
    ops = reduce(disk_mesh, "dirichlet")
    a = smallest_eigenpairs(ops, 4)
    b = smallest_eigenpairs(ops, 4)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)


def test_shift_invariance(small_systems):
    ops = small_systems[1]
    a = smallest_eigenpairs(ops, 5).eigenvalues
    b = smallest_eigenpairs(ops, 5, shift=-1.0).eigenvalues
    np.testing.assert_allclose(a, b, rtol=1e-8)


def test_neumann_zero_mode(disk_mesh):
    sp = smallest_eigenpairs(reduce(disk_mesh, "free_neumann"), 3)
    assert abs(sp.eigenvalues[0]) < 1e-8
    v = sp.eigenvectors[:, 0]
    assert np.ptp(v) < 1e-6 * np.abs(v).max()


def test_disk_values(disk_mesh):
    p = smallest_eigenpairs(reduce(disk_mesh, "nonlocal_p"), 3).eigenvalues
    d = smallest_eigenpairs(reduce(disk_mesh, "dirichlet"), 1).eigenvalues
    assert p[0] == pytest.approx(3.38996, rel=5e-3)
    assert p[2] == pytest.approx(5.78319, rel=5e-3)
    assert d[0] == pytest.approx(5.78319, rel=5e-3)


def test_full_vectors_satisfy_constraint(disk_mesh):
    sp = smallest_eigenpairs(reduce(disk_mesh, "nonlocal_p"), 2)
    full = sp.full_vectors()
    m, s = disk_mesh.boundary_pairs.T
    np.testing.assert_array_equal(full[s], -full[m])


def test_no_convergence(small_systems):
    ops = small_systems[0]
    with pytest.raises(NoConvergence):
        smallest_eigenpairs(ops, 6, tol=1e-30, max_restarts=2, basis_size=12)


def test_bad_arguments(small_systems):
    ops = small_systems[0]
    with pytest.raises(ValueError):
        smallest_eigenpairs(ops, 0)
    with pytest.raises(ValueError):
        smallest_eigenpairs(ops, 3, tol=0.0)
