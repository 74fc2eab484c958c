"""Prime-field arithmetic and an incrementally maintained reduced row basis.

All rank computations in this package happen modulo ``MODULUS = 2**61 - 1``.
Random field coordinates stand in for a generic real embedding: a rank query
over ``n`` vertices in dimension ``d`` undercounts the generic rank with
probability at most ``d*n / MODULUS``.
"""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels as K
from .exceptions import FieldError

MODULUS: int = K.MOD_INT

__all__ = [
    "MODULUS",
    "FieldError",
    "SparseRow",
    "RowBasis",
    "SparseRowBasis",
    "dense_rank",
    "field_arith",
    "add",
    "sub",
    "mul",
    "neg",
    "inv",
    "random_elements",
]


def add(a: int, b: int) -> int:
    return (a + b) % MODULUS


def sub(a: int, b: int) -> int:
    return (a - b) % MODULUS


def mul(a: int, b: int) -> int:
    return (a * b) % MODULUS


def neg(a: int) -> int:
    return (-a) % MODULUS


def inv(a: int) -> int:
    a %= MODULUS
    if a == 0:
        raise FieldError("inverse of zero (degenerate random draw?)")
    return pow(a, -1, MODULUS)


_OPS = {"add": add, "sub": sub, "mul": mul}


def field_arith(a: int, b: int | None, op: str) -> int:
    """Apply ``op`` in {add, sub, mul, inv, neg}; unary ops ignore ``b``."""
    if op == "inv":
        return inv(a)
    if op == "neg":
        return neg(a)
    try:
        fn = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown field operation {op!r}") from None
    return fn(a, b)


def random_elements(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform residues as a ``uint64`` array."""
    return rng.integers(0, MODULUS, size=size, dtype=np.uint64)


class SparseRow(NamedTuple):
    """A row given by its nonzero positions and values."""

    cols: np.ndarray
    vals: np.ndarray


def _as_sparse(row, width: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(row, SparseRow):
        cols = np.asarray(row.cols, dtype=np.int64)
        vals = np.asarray([int(v) % MODULUS for v in row.vals], dtype=np.uint64)
        if cols.shape != vals.shape:
            raise ValueError("sparse row: cols and vals differ in length")
        if cols.size and (cols.min() < 0 or cols.max() >= width):
            raise ValueError(f"sparse row has a column outside [0, {width})")
        return cols, vals
    if isinstance(row, dict):
        return _as_sparse(SparseRow(list(row), list(row.values())), width)
    dense = list(row)
    if len(dense) != width:
        raise ValueError(f"row has length {len(dense)}, basis width is {width}")
    cols = [j for j, v in enumerate(dense) if int(v) % MODULUS]
    return np.asarray(cols, dtype=np.int64), np.asarray(
        [int(dense[j]) % MODULUS for j in cols], dtype=np.uint64
    )


class RowBasis:
    """Reduced row-echelon basis of a growing set of rows.

    Every stored row has a leading 1 in its pivot column and every other
    stored row is zero there. Rows are supplied as dense sequences of length
    ``width``, as ``{col: value}`` dicts or as :class:`SparseRow`.

    Parameters
    ----------
    width : int
        Number of columns.
    capacity : int, optional
        Maximum number of stored rows; defaults to ``width``. Inserting an
        independent row into a full basis raises :class:`FieldError`.
    """

    def __init__(self, width: int, capacity: int | None = None):
        if width < 1:
            raise ValueError("width must be positive")
        capacity = width if capacity is None else min(int(capacity), width)
        self.width = int(width)
        self._rows = np.zeros((max(capacity, 1), width), dtype=np.uint64)
        self._piv_row = np.full(width, -1, dtype=np.int64)
        self._free = np.arange(width, dtype=np.int64)
        self._meta = np.array([0, width], dtype=np.int64)
        self._work = np.zeros(width, dtype=np.uint64)

    @property
    def rank(self) -> int:
        return int(self._meta[0])

    @property
    def capacity(self) -> int:
        return self._rows.shape[0]

    @property
    def pivots(self) -> list[int]:
        """Pivot column of each stored row, in storage order."""
        piv = np.flatnonzero(self._piv_row >= 0)
        return sorted(piv.tolist(), key=lambda c: self._piv_row[c])

    def rows(self) -> np.ndarray:
        """Copy of the stored rows (``rank x width``)."""
        return self._rows[: self.rank].copy()

    def copy(self) -> "RowBasis":
        other = RowBasis.__new__(RowBasis)
        other.width = self.width
        other._rows = self._rows.copy()
        other._piv_row = self._piv_row.copy()
        other._free = self._free.copy()
        other._meta = self._meta.copy()
        other._work = np.zeros(self.width, dtype=np.uint64)
        return other

    def try_insert(self, row) -> bool:
        """Add ``row`` if it is outside the span; return True iff rank grew."""
        cols, vals = _as_sparse(row, self.width)
        status = K.basis_insert(
            self._rows, self._piv_row, self._free, self._meta, self._work, cols, vals
        )
        if status < 0:
            raise FieldError(f"row basis capacity {self.capacity} exhausted")
        return bool(status)

    def in_span(self, row) -> bool:
        """True iff ``row`` reduces to zero; never mutates the basis."""
        cols, vals = _as_sparse(row, self.width)
        return bool(K.basis_in_span(self._rows, self._piv_row, self._free, self._meta, cols, vals))

    # Batched edge-row entry points used by the rigidity engine.

    def insert_edges(
        self, coords: np.ndarray, us: np.ndarray, vs: np.ndarray, stop_rank: int = -1
    ) -> np.ndarray:
        """Insert rigidity rows for edges ``(us[i], vs[i])`` in order.

        Stops early once the rank reaches ``stop_rank`` (if non-negative).
        Returns a boolean array, one entry per consumed edge, marking the
        edges that increased the rank.
        """
        us = np.ascontiguousarray(us, dtype=np.int64)
        vs = np.ascontiguousarray(vs, dtype=np.int64)
        if coords.shape[0] * coords.shape[1] != self.width:
            raise ValueError("embedding size does not match basis width")
        flags = np.zeros(us.shape[0], dtype=np.int64)
        used = K.edges_insert(
            self._rows, self._piv_row, self._free, self._meta, self._work,
            coords, us, vs, stop_rank, flags,
        )
        if used and flags[used - 1] < 0:
            raise FieldError(f"row basis capacity {self.capacity} exhausted")
        return flags[:used] > 0

    def edges_in_span(self, coords: np.ndarray, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        us = np.ascontiguousarray(us, dtype=np.int64)
        vs = np.ascontiguousarray(vs, dtype=np.int64)
        if coords.shape[0] * coords.shape[1] != self.width:
            raise ValueError("embedding size does not match basis width")
        out = np.zeros(us.shape[0], dtype=np.bool_)
        K.edges_in_span(self._rows, self._piv_row, self._free, self._meta, coords, us, vs, out)
        return out

    def __repr__(self) -> str:
        return f"RowBasis(width={self.width}, rank={self.rank})"


class SparseRowBasis:
    """Same contract as :class:`RowBasis`, with rows kept as ``{col: value}`` dicts.

    Worth it when reduced rows stay sparse, as they do for incidence-like
    rows (rigidity in dimension 1, where each reduced row has two entries).
    """

    def __init__(self, width: int, capacity: int | None = None):
        if width < 1:
            raise ValueError("width must be positive")
        self.width = int(width)
        self._capacity = width if capacity is None else min(int(capacity), width)
        self._rows: dict[int, dict[int, int]] = {}
        self._order: list[int] = []
        self._colrows: dict[int, set[int]] = {}

    @property
    def rank(self) -> int:
        return len(self._rows)

    @property
    def capacity(self) -> int:
        return self._capacity

    @property
    def pivots(self) -> list[int]:
        return list(self._order)

    def rows(self) -> np.ndarray:
        out = np.zeros((self.rank, self.width), dtype=np.uint64)
        for i, p in enumerate(self._order):
            for j, x in self._rows[p].items():
                out[i, j] = x
        return out

    def copy(self) -> "SparseRowBasis":
        other = SparseRowBasis(self.width, self._capacity)
        other._rows = {p: dict(r) for p, r in self._rows.items()}
        other._order = list(self._order)
        other._colrows = {c: set(s) for c, s in self._colrows.items()}
        return other

    def _reduce(self, vec: dict[int, int]) -> dict[int, int]:
        q = MODULUS
        rows = self._rows
        for c in [c for c in vec if c in rows]:
            f = vec.pop(c)
            for j, x in rows[c].items():
                if j != c:
                    nv = (vec.get(j, 0) - f * x) % q
                    if nv:
                        vec[j] = nv
                    else:
                        vec.pop(j, None)
        return vec

    def _insert_dict(self, vec: dict[int, int]) -> bool:
        vec = self._reduce(vec)
        if not vec:
            return False
        if self.rank >= self._capacity:
            raise FieldError(f"row basis capacity {self._capacity} exhausted")
        q = MODULUS
        p = min(vec)
        scale = pow(vec[p], -1, q)
        new = {j: x * scale % q for j, x in vec.items()}
        colrows = self._colrows
        for r in colrows.pop(p, ()):
            row = self._rows[r]
            f = row.pop(p)
            for j, x in new.items():
                if j == p:
                    continue
                nv = (row.get(j, 0) - f * x) % q
                if nv:
                    row[j] = nv
                    colrows.setdefault(j, set()).add(r)
                elif j in row:
                    del row[j]
                    colrows[j].discard(r)
        self._rows[p] = new
        self._order.append(p)
        for j in new:
            if j != p:
                colrows.setdefault(j, set()).add(p)
        return True

    @staticmethod
    def _to_dict(cols, vals) -> dict[int, int]:
        vec: dict[int, int] = {}
        for c, x in zip(cols.tolist(), vals.tolist()):
            nv = (vec.get(c, 0) + x) % MODULUS
            if nv:
                vec[c] = nv
            else:
                vec.pop(c, None)
        return vec

    def try_insert(self, row) -> bool:
        return self._insert_dict(self._to_dict(*_as_sparse(row, self.width)))

    def in_span(self, row) -> bool:
        return not self._reduce(self._to_dict(*_as_sparse(row, self.width)))

    def _edge_dict(self, coords, d, u, v) -> dict[int, int]:
        vec = {}
        for k in range(d):
            diff = (coords[u][k] - coords[v][k]) % MODULUS
            if diff:
                vec[u * d + k] = diff
                vec[v * d + k] = MODULUS - diff
        return vec

    def insert_edges(self, coords, us, vs, stop_rank: int = -1) -> np.ndarray:
        if coords.shape[0] * coords.shape[1] != self.width:
            raise ValueError("embedding size does not match basis width")
        d = coords.shape[1]
        pts = coords.tolist()
        flags = []
        for u, v in zip(np.asarray(us).tolist(), np.asarray(vs).tolist()):
            if 0 <= stop_rank <= self.rank:
                break
            flags.append(self._insert_dict(self._edge_dict(pts, d, u, v)))
        return np.array(flags, dtype=bool)

    def edges_in_span(self, coords, us, vs) -> np.ndarray:
        if coords.shape[0] * coords.shape[1] != self.width:
            raise ValueError("embedding size does not match basis width")
        d = coords.shape[1]
        pts = coords.tolist()
        return np.array(
            [not self._reduce(self._edge_dict(pts, d, u, v))
             for u, v in zip(np.asarray(us).tolist(), np.asarray(vs).tolist())],
            dtype=bool,
        )

    def __repr__(self) -> str:
        return f"SparseRowBasis(width={self.width}, rank={self.rank})"


def dense_rank(matrix: Sequence[Sequence[int]] | np.ndarray) -> int:
    """Rank of a dense matrix by one-shot elimination."""
    a = np.array([[int(x) % MODULUS for x in r] for r in matrix], dtype=np.uint64)
    if a.size == 0:
        return 0
    return int(K.rref_inplace(a).shape[0])
