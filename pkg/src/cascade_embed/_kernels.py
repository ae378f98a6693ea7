"""Compiled inner loop shared by the sequential and parallel trainers.

Both engines call the same kernel so that a single-worker parallel run
performs the identical sequence of floating-point operations.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def ascend_rows(target, other, indptr, indices, times, w, alpha, clip):
    """In-place gradient ascent on every row of ``target``.

    Row ``i`` is updated once per CSR edge ``k`` in ``indptr[i]:indptr[i+1]``
    against ``other[indices[k]]`` at response time ``times[k]``, always using
    its freshest value.  ``clip <= 0`` disables gradient-norm clipping.
    """
    m = target.shape[1]
    for i in range(target.shape[0]):
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            x = 0.0
            for q in range(m):
                x += target[i, q] * other[j, q]
            if x >= 0.0:
                sig = 1.0 / (1.0 + math.exp(-x))
            else:
                e = math.exp(x)
                sig = e / (1.0 + e)
            s = (1.0 - sig * w * times[k]) * (1.0 - sig)
            step = alpha * s
            if clip > 0.0:
                nrm = 0.0
                for q in range(m):
                    nrm += other[j, q] * other[j, q]
                nrm = math.sqrt(nrm) * abs(s)
                if nrm > clip:
                    step = step * (clip / nrm)
            for q in range(m):
                target[i, q] += step * other[j, q]


def empty_csr(n_rows):
    return (np.zeros(n_rows + 1, dtype=np.int64), np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=np.float64))


def build_csr(rows, cols, vals, n_rows):
    """CSR with columns ascending inside each row."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    order = np.lexsort((cols, rows))
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    if len(rows):
        np.cumsum(np.bincount(rows, minlength=n_rows), out=indptr[1:])
    return indptr, cols[order].copy(), vals[order].copy()
