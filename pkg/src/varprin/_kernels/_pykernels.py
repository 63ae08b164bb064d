"""NumPy implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and bit-identical results; the package picks one at import.
"""
import numpy as np


def filter_leq(base, col, active, weight, threshold, out):
    """Write ``base + weight * col`` into ``out`` on ``active`` and keep the
    active indices whose new value is ``<= threshold``."""
    vals = base[active] + weight * col[active]
    out[active] = vals
    return active[vals <= threshold]


def argmin_active(values, active):
    # np.argmin returns the first minimum; ``active`` is ascending
    return int(active[np.argmin(values[active])])


def within_slack(values, active, slack):
    vals = values[active]
    return active[vals <= vals.min() + slack]


def symmetry_scan(D, tol):
    n = D.shape[0]
    i, j = np.triu_indices(n, k=1)
    keep = np.abs(D[i, j] - D[j, i]) > tol
    return np.stack([i[keep], j[keep]], axis=1).astype(np.int64)


def triangle_scan(D, tol, limit):
    """Count triples with ``D[x, z] > D[x, y] + D[y, z] + tol``.

    Returns ``(count, witnesses)`` where ``witnesses`` holds at most ``limit``
    rows ``(x, y, z)`` in lexicographic order (all of them when ``limit < 0``).
    """
    n = D.shape[0]
    count = 0
    found = []
    stored = 0
    for x in range(n):
        # rows indexed by y, columns by z
        hit = D[x][None, :] > D[x][:, None] + D + tol
        ys, zs = np.nonzero(hit)
        count += ys.size
        if limit < 0 or stored < limit:
            take = ys.size if limit < 0 else min(ys.size, limit - stored)
            if take:
                order = np.lexsort((zs, ys))[:take]
                block = np.empty((take, 3), dtype=np.int64)
                block[:, 0] = x
                block[:, 1] = ys[order]
                block[:, 2] = zs[order]
                found.append(block)
                stored += take
    if found:
        return count, np.concatenate(found)
    return count, np.empty((0, 3), dtype=np.int64)


def triangle_sample(D, triples, tol):
    x, y, z = triples[:, 0], triples[:, 1], triples[:, 2]
    return np.nonzero(D[x, z] > D[x, y] + D[y, z] + tol)[0].astype(np.int64)
