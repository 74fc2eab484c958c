"""Numba kernels for arithmetic modulo the Mersenne prime 2**61 - 1.

Residues are stored as ``uint64``. Products are formed from 31/30-bit limbs so
that no intermediate exceeds 64 bits.
"""
import numba as nb
import numpy as np

MOD_INT = (1 << 61) - 1
MOD = np.uint64(MOD_INT)
_M31 = np.uint64((1 << 31) - 1)
_M30 = np.uint64((1 << 30) - 1)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
_S61 = np.uint64(61)
_TWO = np.uint64(2)
_ZERO = np.uint64(0)
_ONE = np.uint64(1)


@nb.njit(inline="always", cache=True)
def mulmod(a, b):
    au = a >> _S31
    ad = a & _M31
    bu = b >> _S31
    bd = b & _M31
    mid = ad * bu + au * bd
    x = au * bu * _TWO + (mid >> _S30) + ((mid & _M30) << _S31) + ad * bd
    x = (x & MOD) + (x >> _S61)
    if x >= MOD:
        x -= MOD
    return x


@nb.njit(inline="always", cache=True)
def addmod(a, b):
    x = a + b
    if x >= MOD:
        x -= MOD
    return x


@nb.njit(inline="always", cache=True)
def submod(a, b):
    if a >= b:
        return a - b
    return a + (MOD - b)


@nb.njit(cache=True)
def invmod(a):
    # Fermat: a^(q-2)
    e = MOD - _TWO
    r = _ONE
    while e:
        if e & _ONE:
            r = mulmod(r, a)
        a = mulmod(a, a)
        e >>= _ONE
    return r


# ---------------------------------------------------------------------------
# Reduced row basis.  State: rows (cap x width), piv_row (width,), free
# (width,), meta = [rank, nfree].  free[:nfree] lists the non-pivot columns in
# arbitrary order; stored rows are zero on every pivot column except their own.
# ---------------------------------------------------------------------------


@nb.njit(cache=True)
def _load(work, cols, vals):
    for k in range(cols.shape[0]):
        c = cols[k]
        work[c] = addmod(work[c], vals[k])


@nb.njit(cache=True)
def _reduce(rows, piv_row, free, nfree, work, cols):
    for k in range(cols.shape[0]):
        c = cols[k]
        pr = piv_row[c]
        if pr >= 0:
            f = work[c]
            if f != 0:
                row = rows[pr]
                for t in range(nfree):
                    j = free[t]
                    rj = row[j]
                    if rj != 0:
                        work[j] = submod(work[j], mulmod(f, rj))
                work[c] = 0


@nb.njit(cache=True)
def _find_pivot(work, free, nfree):
    p = -1
    pt = -1
    for t in range(nfree):
        j = free[t]
        if work[j] != 0 and (p < 0 or j < p):
            p = j
            pt = t
    return p, pt


@nb.njit(cache=True)
def _clear(work, free, nfree):
    for t in range(nfree):
        work[free[t]] = 0


@nb.njit(cache=True)
def _commit(rows, piv_row, free, meta, work, p, pt):
    rank = meta[0]
    nfree = meta[1]
    inv = invmod(work[p])
    work[p] = 0
    free[pt] = free[nfree - 1]
    free[nfree - 1] = p
    nfree -= 1
    new = rows[rank]
    for t in range(nfree):
        j = free[t]
        wj = work[j]
        if wj != 0:
            new[j] = mulmod(wj, inv)
            work[j] = 0
    new[p] = _ONE
    for i in range(rank):
        row = rows[i]
        f = row[p]
        if f != 0:
            for t in range(nfree):
                j = free[t]
                nj = new[j]
                if nj != 0:
                    row[j] = submod(row[j], mulmod(f, nj))
            row[p] = 0
    piv_row[p] = rank
    meta[0] = rank + 1
    meta[1] = nfree


@nb.njit(cache=True)
def basis_insert(rows, piv_row, free, meta, work, cols, vals):
    """Return 1 if the rank grew, 0 if dependent, -1 if capacity is exhausted."""
    nfree = meta[1]
    _load(work, cols, vals)
    _reduce(rows, piv_row, free, nfree, work, cols)
    p, pt = _find_pivot(work, free, nfree)
    if p < 0:
        return 0
    if meta[0] >= rows.shape[0]:
        _clear(work, free, nfree)
        return -1
    _commit(rows, piv_row, free, meta, work, p, pt)
    return 1


@nb.njit(cache=True)
def basis_in_span(rows, piv_row, free, meta, cols, vals):
    work = np.zeros(piv_row.shape[0], dtype=np.uint64)
    _load(work, cols, vals)
    _reduce(rows, piv_row, free, meta[1], work, cols)
    p, _ = _find_pivot(work, free, meta[1])
    return p < 0


@nb.njit(cache=True)
def _edge_row(coords, u, v, cols, vals):
    d = coords.shape[1]
    for k in range(d):
        diff = submod(coords[u, k], coords[v, k])
        cols[k] = u * d + k
        vals[k] = diff
        cols[d + k] = v * d + k
        vals[d + k] = submod(_ZERO, diff)


@nb.njit(cache=True)
def edges_insert(rows, piv_row, free, meta, work, coords, us, vs, stop_rank, flags):
    """Insert rigidity rows of edges in order; stop after reaching ``stop_rank``.

    ``flags[i]`` receives the insert status of edge ``i``. Returns the number
    of edges consumed.
    """
    d = coords.shape[1]
    cols = np.empty(2 * d, dtype=np.int64)
    vals = np.empty(2 * d, dtype=np.uint64)
    m = us.shape[0]
    for i in range(m):
        if stop_rank >= 0 and meta[0] >= stop_rank:
            return i
        _edge_row(coords, us[i], vs[i], cols, vals)
        status = basis_insert(rows, piv_row, free, meta, work, cols, vals)
        flags[i] = status
        if status < 0:
            return i + 1
    return m


@nb.njit(cache=True)
def edges_in_span(rows, piv_row, free, meta, coords, us, vs, out):
    d = coords.shape[1]
    cols = np.empty(2 * d, dtype=np.int64)
    vals = np.empty(2 * d, dtype=np.uint64)
    work = np.zeros(piv_row.shape[0], dtype=np.uint64)
    nfree = meta[1]
    for i in range(us.shape[0]):
        _edge_row(coords, us[i], vs[i], cols, vals)
        _load(work, cols, vals)
        _reduce(rows, piv_row, free, nfree, work, cols)
        p, _ = _find_pivot(work, free, nfree)
        out[i] = p < 0
        _clear(work, free, nfree)


# ---------------------------------------------------------------------------
# Dense elimination on whole matrices (stress computations).
# ---------------------------------------------------------------------------


@nb.njit(cache=True)
def rref_inplace(a):
    """Reduced row-echelon form of ``a`` in place; returns the pivot columns."""
    m, w = a.shape
    pivots = np.empty(min(m, w), dtype=np.int64)
    r = 0
    for c in range(w):
        if r == m:
            break
        sel = -1
        for i in range(r, m):
            if a[i, c] != 0:
                sel = i
                break
        if sel < 0:
            continue
        if sel != r:
            for j in range(c, w):
                tmp = a[r, j]
                a[r, j] = a[sel, j]
                a[sel, j] = tmp
        inv = invmod(a[r, c])
        for j in range(c, w):
            if a[r, j] != 0:
                a[r, j] = mulmod(a[r, j], inv)
        for i in range(m):
            if i != r:
                f = a[i, c]
                if f != 0:
                    for j in range(c, w):
                        arj = a[r, j]
                        if arj != 0:
                            a[i, j] = submod(a[i, j], mulmod(f, arj))
        pivots[r] = c
        r += 1
    return pivots[:r]


@nb.njit(cache=True)
def kernel_vector(reduced, pivots, free_vals):
    """Right-kernel vector of a matrix in RREF with given free-variable values.

    ``free_vals`` is indexed by column; entries at pivot columns are ignored.
    """
    w = reduced.shape[1]
    x = np.zeros(w, dtype=np.uint64)
    is_piv = np.zeros(w, dtype=np.bool_)
    for i in range(pivots.shape[0]):
        is_piv[pivots[i]] = True
    for j in range(w):
        if not is_piv[j]:
            x[j] = free_vals[j]
    for i in range(pivots.shape[0]):
        s = _ZERO
        for j in range(w):
            if not is_piv[j]:
                aij = reduced[i, j]
                if aij != 0 and x[j] != 0:
                    s = addmod(s, mulmod(aij, x[j]))
        x[pivots[i]] = submod(_ZERO, s)
    return x


@nb.njit(cache=True)
def rigidity_matrix_t(coords, us, vs):
    """Transpose of the rigidity matrix: shape (d*n, m)."""
    n, d = coords.shape
    m = us.shape[0]
    out = np.zeros((n * d, m), dtype=np.uint64)
    for e in range(m):
        u = us[e]
        v = vs[e]
        for k in range(d):
            diff = submod(coords[u, k], coords[v, k])
            out[u * d + k, e] = diff
            out[v * d + k, e] = submod(_ZERO, diff)
    return out


@nb.njit(cache=True)
def stress_matrix(n, us, vs, omega):
    out = np.zeros((n, n), dtype=np.uint64)
    for e in range(us.shape[0]):
        u = us[e]
        v = vs[e]
        w = omega[e]
        neg = submod(_ZERO, w)
        out[u, v] = addmod(out[u, v], neg)
        out[v, u] = addmod(out[v, u], neg)
        out[u, u] = addmod(out[u, u], w)
        out[v, v] = addmod(out[v, v], w)
    return out


@nb.njit(cache=True)
def matvec_t(a, x):
    """x^T a for a (m, w) matrix."""
    m, w = a.shape
    out = np.zeros(w, dtype=np.uint64)
    for i in range(m):
        xi = x[i]
        if xi != 0:
            for j in range(w):
                aij = a[i, j]
                if aij != 0:
                    out[j] = addmod(out[j], mulmod(xi, aij))
    return out
