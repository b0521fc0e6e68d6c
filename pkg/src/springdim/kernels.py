"""Integer kernels for the alcove walk.

Alcoves are affine maps ``X -> W X + T`` on integer-scaled coordinates.
``expand`` evaluates, for a batch of alcoves, every neighbouring alcove
across the r+1 facets: its barycenter, its linear part, its translation, the
number of nu-walls separating it from the base point and whether it lies in
the dominant cone of the wall group.

Two implementations share one signature: a numba ``@njit`` loop nest and a
vectorised numpy path.  ``SPRINGDIM_KERNELS=numpy`` forces the fallback;
the default uses numba when it imports.
"""
from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    HAVE_NUMBA = True
except Exception:  # pragma: no cover
    HAVE_NUMBA = False


def _expand_numpy(W, T, SB, C, A, n0, nu_lin, nu_off, wall_lin, wall_off):
    """Reference implementation.

    W: (k, r, r), T: (k, r) current alcoves.
    SB: (r+1, r) scaled images s_i(b0); C: (r+1, r) coroot columns c_i;
    A: (r+1, r) linear parts a_i; n0: (r+1,) scaled offsets D*n_i.
    """
    # barycenters of neighbours: W @ SB_i + T
    B = np.einsum("kab,ib->kia", W, SB) + T[:, None, :]
    # new linear part: W - (W c_i) a_i^T
    Wc = np.einsum("kab,ib->kia", W, C)
    Wn = W[:, None, :, :] - Wc[:, :, :, None] * A[None, :, None, :]
    Tn = T[:, None, :] - n0[None, :, None] * Wc
    vals = np.einsum("kia,ja->kij", B, nu_lin) + nu_off[None, None, :]
    sep = (vals < 0).sum(axis=2)
    if wall_lin.shape[0]:
        wv = np.einsum("kia,ja->kij", B, wall_lin) + wall_off[None, None, :]
        dom = (wv > 0).all(axis=2)
    else:
        dom = np.ones(sep.shape, dtype=np.bool_)
    return B, Wn, Tn, sep.astype(np.int64), dom


if HAVE_NUMBA:

    @njit(cache=True)
    def _expand_numba(W, T, SB, C, A, n0, nu_lin, nu_off, wall_lin, wall_off):
        k, r, _ = W.shape
        f = SB.shape[0]
        K = nu_lin.shape[0]
        P = wall_lin.shape[0]
        B = np.empty((k, f, r), dtype=np.int64)
        Wn = np.empty((k, f, r, r), dtype=np.int64)
        Tn = np.empty((k, f, r), dtype=np.int64)
        sep = np.zeros((k, f), dtype=np.int64)
        dom = np.ones((k, f), dtype=np.bool_)
        wc = np.empty(r, dtype=np.int64)
        for q in range(k):
            for i in range(f):
                for a in range(r):
                    s = T[q, a]
                    t = 0
                    for b in range(r):
                        s += W[q, a, b] * SB[i, b]
                        t += W[q, a, b] * C[i, b]
                    B[q, i, a] = s
                    wc[a] = t
                    Tn[q, i, a] = T[q, a] - n0[i] * t
                for a in range(r):
                    for b in range(r):
                        Wn[q, i, a, b] = W[q, a, b] - wc[a] * A[i, b]
                cnt = 0
                for j in range(K):
                    v = nu_off[j]
                    for a in range(r):
                        v += nu_lin[j, a] * B[q, i, a]
                    if v < 0:
                        cnt += 1
                sep[q, i] = cnt
                for j in range(P):
                    v = wall_off[j]
                    for a in range(r):
                        v += wall_lin[j, a] * B[q, i, a]
                    if v <= 0:
                        dom[q, i] = False
                        break
        return B, Wn, Tn, sep, dom


def backend() -> str:
    choice = os.environ.get("SPRINGDIM_KERNELS", "").strip().lower()
    if choice == "numpy" or not HAVE_NUMBA:
        return "numpy"
    return "numba"


def expand(W, T, SB, C, A, n0, nu_lin, nu_off, wall_lin, wall_off, which: str | None = None):
    which = which or backend()
    args = [np.ascontiguousarray(x, dtype=np.int64) for x in (W, T, SB, C, A, n0, nu_lin, nu_off, wall_lin, wall_off)]
    if which == "numba" and HAVE_NUMBA:
        return _expand_numba(*args)
    return _expand_numpy(*args)


def evaluate(points, lin, off):
    """Values of affine functionals (rows of ``lin`` + ``off``) at points."""
    points = np.asarray(points, dtype=np.int64)
    return points @ np.asarray(lin, dtype=np.int64).T + np.asarray(off, dtype=np.int64)[None, :]
