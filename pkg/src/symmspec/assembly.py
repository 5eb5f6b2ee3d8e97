"""P1 finite element matrices for -Laplace and their boundary-condition reductions.

Three systems are produced from one mesh:

* free (natural Neumann) -- the plain assembled pair ``(K, M)``;
* Dirichlet -- boundary rows and columns removed;
* nonlocal -- for every antipodal boundary pair the slave value is tied to
  ``-u(master)``; the reduced pencil is ``(P^T K P, P^T M P)``.  The matching
  condition on normal derivatives is natural for this constrained weak form
  and is not imposed algebraically.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import _backend
from .errors import AlreadyReduced, PairingIncomplete
from .geometry import SymmetricMesh


class BoundaryCondition(str, enum.Enum):
    FREE_NEUMANN = "free_neumann"
    DIRICHLET = "dirichlet"
    NONLOCAL_P = "nonlocal_p"


@dataclass
class DofMap:
    """Node -> reduced DOF map.

    ``index[i]`` is the reduced DOF carrying node ``i`` (``-1`` if eliminated)
    and ``sign[i]`` the factor applied, ``-1`` for nonlocal slaves.
    """

    index: np.ndarray
    sign: np.ndarray
    n_reduced: int

    @classmethod
    def identity(cls, n: int) -> "DofMap":
        return cls(np.arange(n, dtype=np.int64), np.ones(n, dtype=np.int8), n)

    def prolongation(self) -> sp.csr_matrix:
        """Sparse ``(n_nodes, n_reduced)`` matrix mapping reduced to nodal values."""
        n = len(self.index)
        kept = np.flatnonzero(self.index >= 0)
        return sp.csr_matrix(
            (self.sign[kept].astype(float), (kept, self.index[kept])),
            shape=(n, self.n_reduced),
        )

    def expand(self, u: np.ndarray) -> np.ndarray:
        """Nodal values from reduced coefficients (vector or column stack)."""
        u = np.asarray(u)
        out = np.zeros((len(self.index),) + u.shape[1:], dtype=u.dtype)
        kept = self.index >= 0
        s = self.sign[kept].astype(u.dtype)
        out[kept] = u[self.index[kept]] * (s if u.ndim == 1 else s[:, None])
        return out


@dataclass
class OperatorMatrices:
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    bc: BoundaryCondition
    dof_map: DofMap
    full_mass: Optional[sp.csr_matrix] = None

    @property
    def n_dofs(self) -> int:
        return self.stiffness.shape[0]


def _accumulate(rows, cols, vals, n) -> sp.csr_matrix:
    # stable sort keeps triangle order inside each (row, col) bucket
    key = rows * n + cols
    order = np.argsort(key, kind="stable")
    key = key[order]
    starts = np.flatnonzero(np.concatenate([[True], key[1:] != key[:-1]]))
    data = np.add.reduceat(vals[order], starts)
    ukey = key[starts]
    r, c = np.divmod(ukey, n)
    indptr = np.concatenate([[0], np.cumsum(np.bincount(r, minlength=n))])
    return sp.csr_matrix((data, c, indptr), shape=(n, n))


def _exact_symmetric(a: sp.spmatrix) -> sp.csr_matrix:
    # fl(x + y) == fl(y + x), so this is bitwise symmetric
    a = sp.csr_matrix(a)
    s = (a + a.T.tocsr()) * 0.5
    s = sp.csr_matrix(s)
    s.sum_duplicates()
    s.sort_indices()
    return s


def assemble_free(mesh: SymmetricMesh) -> OperatorMatrices:
    """Stiffness and consistent mass matrices with natural boundary conditions."""
    nodes = np.ascontiguousarray(mesh.nodes, dtype=np.float64)
    tris = np.ascontiguousarray(mesh.triangles, dtype=np.int64)
    rows, cols, kv, mv = _backend.p1_triplets(nodes, tris)
    n = mesh.n_nodes
    K = _accumulate(rows, cols, kv, n)
    M = _accumulate(rows, cols, mv, n)
    return OperatorMatrices(K, M, BoundaryCondition.FREE_NEUMANN, DofMap.identity(n), full_mass=M)


def _require_free(ops: OperatorMatrices) -> None:
    if ops.bc is not BoundaryCondition.FREE_NEUMANN:
        raise AlreadyReduced(f"matrices already reduced for {ops.bc.value}")


def apply_dirichlet(ops: OperatorMatrices, mesh: SymmetricMesh) -> OperatorMatrices:
    _require_free(ops)
    n = mesh.n_nodes
    index = np.arange(n, dtype=np.int64)
    sign = np.ones(n, dtype=np.int8)
    index[mesh.boundary_nodes] = -1
    sign[mesh.boundary_nodes] = 0
    keep = np.flatnonzero(index >= 0)
    index[keep] = np.arange(len(keep))
    K = ops.stiffness[keep][:, keep].tocsr()
    M = ops.mass[keep][:, keep].tocsr()
    return OperatorMatrices(K, M, BoundaryCondition.DIRICHLET, DofMap(index, sign, len(keep)),
                            full_mass=ops.mass)


def apply_nonlocal(ops: OperatorMatrices, mesh: SymmetricMesh) -> OperatorMatrices:
    """Signed master-slave reduction enforcing ``u(x) = -u(-x)`` on the boundary."""
    _require_free(ops)
    pairs = np.asarray(mesh.boundary_pairs, dtype=np.int64).reshape(-1, 2)
    paired = np.zeros(mesh.n_nodes, dtype=np.int64)
    np.add.at(paired, pairs.reshape(-1), 1)
    bnd = np.asarray(mesh.boundary_nodes)
    if np.any(paired[bnd] != 1) or np.count_nonzero(paired) != len(bnd):
        raise PairingIncomplete("every boundary node must appear in exactly one pair")

    n = mesh.n_nodes
    masters, slaves = pairs[:, 0], pairs[:, 1]
    is_slave = np.zeros(n, dtype=bool)
    is_slave[slaves] = True
    index = np.full(n, -1, dtype=np.int64)
    free = np.flatnonzero(~is_slave)
    index[free] = np.arange(len(free))
    index[slaves] = index[masters]
    sign = np.ones(n, dtype=np.int8)
    sign[slaves] = -1
    dof_map = DofMap(index, sign, len(free))

    P = dof_map.prolongation()
    PT = P.T.tocsr()
    K = _exact_symmetric(PT @ ops.stiffness @ P)
    M = _exact_symmetric(PT @ ops.mass @ P)
    return OperatorMatrices(K, M, BoundaryCondition.NONLOCAL_P, dof_map, full_mass=ops.mass)


def reduce(mesh: SymmetricMesh, bc) -> OperatorMatrices:
    """Assemble and reduce in one call."""
    bc = BoundaryCondition(bc)
    ops = assemble_free(mesh)
    if bc is BoundaryCondition.DIRICHLET:
        return apply_dirichlet(ops, mesh)
    if bc is BoundaryCondition.NONLOCAL_P:
        return apply_nonlocal(ops, mesh)
    return ops


def solve_load(ops: OperatorMatrices, f_nodal: np.ndarray) -> np.ndarray:
    """Nodal values of the Galerkin solution of ``-Lap u = f``.

    ``f`` is interpolated at the nodes and integrated with the consistent mass
    matrix.  Only the Dirichlet and nonlocal systems are invertible.
    """
    if ops.bc is BoundaryCondition.FREE_NEUMANN:
        raise ValueError("the free Neumann system is singular")
    P = ops.dof_map.prolongation()
    load = P.T @ (ops.full_mass @ np.asarray(f_nodal, dtype=float))
    u = splu(ops.stiffness.tocsc()).solve(load)
    return ops.dof_map.expand(u)


def antipodal_permutation(mesh: SymmetricMesh, dof_map: DofMap) -> sp.csr_matrix:
    """Signed permutation induced by ``x -> -x`` on reduced DOFs.

    Defined for the free and Dirichlet systems, whose DOF sets are closed
    under the involution.
    """
    kept = np.flatnonzero(dof_map.index >= 0)
    img = dof_map.index[mesh.involution[kept]]
    if np.any(img < 0):
        raise ValueError("DOF set is not closed under the involution")
    rows = dof_map.index[kept]
    return sp.csr_matrix((np.ones(len(kept)), (rows, img)),
                         shape=(dof_map.n_reduced, dof_map.n_reduced))


def write_coo(matrix: sp.spmatrix, path) -> None:
    """Dump ``matrix`` as ``row col value`` lines (0-based, 17 significant digits)."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    lines = [f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}"]
    lines += [f"{r} {c} {v:.17g}" for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order])]
    Path(path).write_text("\n".join(lines) + "\n")


def read_coo(path) -> sp.csr_matrix:
    text = Path(path).read_text().splitlines()
    nr, nc, _ = (int(v) for v in text[0][1:].split())
    data = np.loadtxt(text[1:], ndmin=2) if len(text) > 1 else np.empty((0, 3))
    return sp.csr_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(nr, nc))
