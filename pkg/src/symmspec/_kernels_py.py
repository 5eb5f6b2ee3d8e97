"""NumPy implementations of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def p1_triplets(nodes, tris):
    """Per-triangle P1 stiffness and consistent-mass entries as COO triplets.

    Entries are emitted in triangle order, then row-major over the 3x3 local
    block, which fixes the summation order of the assembled matrices.
    """
    p = nodes[tris]
    b = np.stack([p[:, 1, 1] - p[:, 2, 1], p[:, 2, 1] - p[:, 0, 1], p[:, 0, 1] - p[:, 1, 1]], axis=1)
    c = np.stack([p[:, 2, 0] - p[:, 1, 0], p[:, 0, 0] - p[:, 2, 0], p[:, 1, 0] - p[:, 0, 0]], axis=1)
    det = c[:, 2] * b[:, 1] - c[:, 1] * b[:, 2]
    k = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (2.0 * det)[:, None, None]
    m = np.broadcast_to((det / 24.0)[:, None, None], k.shape).copy()
    idx = np.arange(3)
    m[:, idx, idx] = (det / 12.0)[:, None]
    rows = np.repeat(tris, 3, axis=1).reshape(-1)
    cols = np.tile(tris, (1, 3)).reshape(-1)
    return rows.astype(np.int64), cols.astype(np.int64), k.reshape(-1), m.reshape(-1)


def green_p_sum(x, y, w, block=256):
    """``out[i] = sum_q w[q] * G_P(x[i], y[q])`` for the unit-disk kernel."""
    out = np.empty(len(x))
    yy = np.einsum("qj,qj->q", y, y)
    for s in range(0, len(x), block):
        xb = x[s:s + block]
        xx = np.einsum("ij,ij->i", xb, xb)
        d2 = ((xb[:, None, :] - y[None, :, :]) ** 2).sum(axis=2)
        dot = xb @ y.T
        g = np.log(d2 / (1.0 + 2.0 * dot + xx[:, None] * yy[None, :]))
        out[s:s + block] = (-1.0 / (4.0 * np.pi)) * (g @ w)
    return out
