"""Pure-Python versions of the kernels in ``_core.pyx``.

Results are bit-identical to the compiled ones: each candidate path length is
formed as ``d[i, v] + d[v, j]`` and kept only when strictly shorter.
"""
import numpy as np


def floyd_warshall_inplace(d):
    n = d.shape[0]
    for k in range(n):
        rowk = d[k].copy()
        for i in range(n):
            dik = d[i, k]
            if dik == np.inf:
                continue
            np.minimum(d[i], dik + rowk, out=d[i])


def relax_through_inplace(d, intermediates):
    for v in intermediates:
        np.minimum(d, d[:, v, None] + d[None, v, :], out=d)
