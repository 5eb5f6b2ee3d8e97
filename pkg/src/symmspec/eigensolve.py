"""Smallest eigenpairs of the symmetric pencil ``K u = lam M u``.

Method: block shift-invert Lanczos with full M-reorthogonalization and thick
restarts.  The operator ``T = (K - s M)^{-1} M`` is self-adjoint in the
M-inner product and maps the wanted (smallest) eigenvalues to its largest
ones, ``theta = 1 / (lam - s)``.  Each cycle grows an M-orthonormal block
Krylov basis, runs Rayleigh-Ritz on it, and restarts from the best Ritz
vectors plus the Krylov residual block.  The start block comes from a seeded
generator, so results are reproducible for fixed inputs.  Blocks (default 3)
let exactly repeated eigenvalues be resolved with their full multiplicity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import norm as spnorm
from scipy.sparse.linalg import splu

from .assembly import BoundaryCondition, DofMap, OperatorMatrices
from .errors import NoConvergence, SingularShift

DEFAULT_TOL = 1e-8
MAX_RESTARTS = 500


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray]
    residuals: np.ndarray
    bc: BoundaryCondition
    dof_map: Optional[DofMap] = None
    restarts: int = 0
    shift: float = 0.0

    def __len__(self):
        return len(self.eigenvalues)

    def full_vectors(self) -> np.ndarray:
        """Eigenvectors expanded to nodal numbering (one column per pair)."""
        if self.eigenvectors is None:
            raise ValueError("spectrum carries no eigenvectors")
        if self.dof_map is None:
            return self.eigenvectors
        return self.dof_map.expand(self.eigenvectors)


def default_shift(ops: OperatorMatrices) -> float:
    if ops.bc is BoundaryCondition.FREE_NEUMANN:
        return -1e-6 * spnorm(ops.stiffness, 1) / spnorm(ops.mass, 1)
    return 0.0


def _factorize(A: sp.spmatrix, M: sp.spmatrix, shift: float, scale: float):
    tried = []
    for attempt in range(4):
        s = shift if attempt == 0 else shift - scale * 10.0 ** (attempt - 4)
        tried.append(s)
        try:
            lu = splu((A - s * M).tocsc())
        except RuntimeError:
            continue
        diag = np.abs(lu.U.diagonal())
        if np.all(np.isfinite(diag)) and diag.min() > 1e-14 * diag.max():
            return lu, s
    raise SingularShift(f"factorization failed at shifts {tried}")


def _m_orthonormalize(Z, M, Q=None, MQ=None, drop=1e-10):
    """M-orthonormal basis of ``Z`` after projecting out the M-orthonormal ``Q``.

    Directions whose norm falls below ``drop`` times the original column norm
    (i.e. already inside ``span(Q)``) are discarded.
    """
    has_q = Q is not None and Q.shape[1] > 0
    ref = np.einsum("ij,ij->j", Z, M @ Z).max(initial=0.0)
    for _ in range(2):
        if has_q:
            Z = Z - Q @ (MQ.T @ Z)
            Z = Z - Q @ (MQ.T @ Z)
        G = Z.T @ (M @ Z)
        w, U = np.linalg.eigh(0.5 * (G + G.T))
        keep = w > drop * drop * ref
        if not np.any(keep):
            return Z[:, :0]
        Z = Z @ (U[:, keep] / np.sqrt(w[keep]))
        ref = 1.0
    return Z


def smallest_eigenpairs(
    ops: OperatorMatrices,
    k: int,
    tol: float = DEFAULT_TOL,
    *,
    seed: int = 0,
    block_size: int = 3,
    max_restarts: int = MAX_RESTARTS,
    shift: Optional[float] = None,
    basis_size: Optional[int] = None,
) -> Spectrum:
    """Return the ``k`` algebraically smallest eigenpairs of ``(K, M)``.

    Residuals are ``||K u - lam M u||_2 / ||u||_2`` with ``u`` M-normalized;
    every returned pair satisfies ``residual <= tol``.  Eigenvalues are the
    Rayleigh quotients of the converged Ritz vectors.
    """
    K, M = ops.stiffness.tocsr(), ops.mass.tocsr()
    n = K.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    if not tol > 0:
        raise ValueError("tol must be positive")
    s = default_shift(ops) if shift is None else float(shift)
    scale = spnorm(K, 1) / spnorm(M, 1)
    lu, s = _factorize(K, M, s, scale)

    def apply_t(X):
        return lu.solve(np.asarray(M @ X))

    b = min(block_size, n)
    m = min(n, basis_size or max(2 * k + 4 * b, 30))
    rng = np.random.default_rng(seed)

    Q = _m_orthonormalize(rng.standard_normal((n, b)), M)
    TQ = np.empty((n, 0))
    restarts = 0
    while True:
        # expand the block Krylov basis
        while True:
            blk = Q[:, TQ.shape[1]:]
            Z = apply_t(blk)
            TQ = np.hstack([TQ, Z])
            if Q.shape[1] >= m:
                break
            MQ = M @ Q
            new = _m_orthonormalize(Z, M, Q, MQ)
            if new.shape[1] == 0:
                if Q.shape[1] >= n:
                    break
                new = _m_orthonormalize(rng.standard_normal((n, b)), M, Q, MQ)
                if new.shape[1] == 0:
                    break
            Q = np.hstack([Q, new[:, : m - Q.shape[1]]])

        MQ = M @ Q
        H = MQ.T @ TQ
        H = 0.5 * (H + H.T)
        theta, Y = np.linalg.eigh(H)
        order = np.argsort(-theta)
        theta, Y = theta[order], Y[:, order]

        X = Q @ Y[:, :k]
        MX = M @ X
        lam = np.einsum("ij,ij->j", X, K @ X) / np.einsum("ij,ij->j", X, MX)
        R = K @ X - MX * lam
        res = np.linalg.norm(R, axis=0) / np.linalg.norm(X, axis=0)
        if np.all(res <= tol) or Q.shape[1] >= n:
            srt = np.argsort(lam, kind="stable")
            return Spectrum(
                eigenvalues=lam[srt],
                eigenvectors=X[:, srt],
                residuals=res[srt],
                bc=ops.bc,
                dof_map=ops.dof_map,
                restarts=restarts,
                shift=s,
            )
        restarts += 1
        if restarts > max_restarts:
            raise NoConvergence(restarts - 1)

        # thick restart: keep the leading Ritz vectors, continue from the residual block
        keep = min(Q.shape[1] - b, k + 2 * b)
        resid = TQ - Q @ H
        Qk = Q @ Y[:, :keep]
        TQk = TQ @ Y[:, :keep]
        cont = _m_orthonormalize(resid[:, -b:], M, Qk, M @ Qk)
        if cont.shape[1] == 0:
            cont = _m_orthonormalize(rng.standard_normal((n, b)), M, Qk, M @ Qk)
        Q = np.hstack([Qk, cont])
        TQ = TQk

