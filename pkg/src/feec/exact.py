"""Sparse linear algebra over the rationals.

Matrices are stored row-wise as ``{column: value}`` dictionaries.  Every
elimination routine converts rows to primitive integer vectors first and
works fraction-free, dividing out the row content after each update, so no
tolerance enters anywhere.
"""

from __future__ import annotations

import heapq
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Optional, Sequence

import numpy as np

Row = dict


class QMatrix:
    """Sparse exact matrix with rational (or integer) entries."""

    __slots__ = ("nrows", "ncols", "rows")

    def __init__(self, nrows: int, ncols: int, rows: Optional[Sequence[Row]] = None):
        self.nrows = nrows
        self.ncols = ncols
        if rows is None:
            rows = [{} for _ in range(nrows)]
        if len(rows) != nrows:
            raise ValueError("row count does not match shape")
        self.rows = [{j: v for j, v in r.items() if v != 0} for r in rows]

    # construction -----------------------------------------------------------
    @classmethod
    def from_dense(cls, data) -> "QMatrix":
        data = [list(r) for r in data]
        ncols = len(data[0]) if data else 0
        return cls(len(data), ncols, [{j: v for j, v in enumerate(r) if v != 0} for r in data])

    @classmethod
    def from_columns(cls, nrows: int, columns: Sequence[Row | Sequence]) -> "QMatrix":
        rows: list[Row] = [{} for _ in range(nrows)]
        for j, col in enumerate(columns):
            items = col.items() if isinstance(col, dict) else enumerate(col)
            for i, v in items:
                if v != 0:
                    rows[i][j] = v
        return cls(nrows, len(columns), rows)

    @classmethod
    def from_scipy(cls, m) -> "QMatrix":
        m = m.tocsr()
        rows = []
        for i in range(m.shape[0]):
            lo, hi = m.indptr[i], m.indptr[i + 1]
            rows.append({int(j): int(v) for j, v in zip(m.indices[lo:hi], m.data[lo:hi])})
        return cls(m.shape[0], m.shape[1], rows)

    @classmethod
    def identity(cls, n: int) -> "QMatrix":
        return cls(n, n, [{i: 1} for i in range(n)])

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "QMatrix":
        return cls(nrows, ncols)

    # views ------------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def columns(self) -> list[Row]:
        cols: list[Row] = [{} for _ in range(self.ncols)]
        for i, r in enumerate(self.rows):
            for j, v in r.items():
                cols[j][i] = v
        return cols

    def column(self, j: int) -> list:
        return [r.get(j, 0) for r in self.rows]

    def to_dense(self) -> list[list]:
        out = [[Fraction(0)] * self.ncols for _ in range(self.nrows)]
        for i, r in enumerate(self.rows):
            for j, v in r.items():
                out[i][j] = Fraction(v)
        return out

    def to_float(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols))
        for i, r in enumerate(self.rows):
            for j, v in r.items():
                out[i, j] = float(v)
        return out

    def nnz(self) -> int:
        return sum(len(r) for r in self.rows)

    def is_zero(self) -> bool:
        return all(not r for r in self.rows)

    def transpose(self) -> "QMatrix":
        return QMatrix(self.ncols, self.nrows, self.columns())

    @property
    def T(self) -> "QMatrix":
        return self.transpose()

    def select(self, rows: Sequence[int], cols: Sequence[int]) -> "QMatrix":
        colmap = {c: n for n, c in enumerate(cols)}
        out = []
        for i in rows:
            out.append({colmap[j]: v for j, v in self.rows[i].items() if j in colmap})
        return QMatrix(len(rows), len(cols), out)

    def hstack(self, other: "QMatrix") -> "QMatrix":
        if self.nrows != other.nrows:
            raise ValueError("row mismatch in hstack")
        off = self.ncols
        rows = [dict(a) for a in self.rows]
        for r, b in zip(rows, other.rows):
            for j, v in b.items():
                r[j + off] = v
        return QMatrix(self.nrows, self.ncols + other.ncols, rows)

    def vstack(self, other: "QMatrix") -> "QMatrix":
        if self.ncols != other.ncols:
            raise ValueError("column mismatch in vstack")
        return QMatrix(self.nrows + other.nrows, self.ncols,
                       [dict(r) for r in self.rows] + [dict(r) for r in other.rows])

    # arithmetic -------------------------------------------------------------
    def apply(self, vec: Sequence) -> list:
        if len(vec) != self.ncols:
            raise ValueError("vector length does not match matrix")
        return [sum((v * vec[j] for j, v in r.items()), Fraction(0)) for r in self.rows]

    def __matmul__(self, other):
        if not isinstance(other, QMatrix):
            return self.apply(other)
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        out = []
        for r in self.rows:
            acc: Row = {}
            for k, a in r.items():
                for j, b in other.rows[k].items():
                    acc[j] = acc.get(j, 0) + a * b
            out.append(acc)
        return QMatrix(self.nrows, other.ncols, out)

    def __add__(self, other: "QMatrix") -> "QMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        out = []
        for a, b in zip(self.rows, other.rows):
            r = dict(a)
            for j, v in b.items():
                r[j] = r.get(j, 0) + v
            out.append(r)
        return QMatrix(self.nrows, self.ncols, out)

    def __neg__(self) -> "QMatrix":
        return QMatrix(self.nrows, self.ncols, [{j: -v for j, v in r.items()} for r in self.rows])

    def __sub__(self, other: "QMatrix") -> "QMatrix":
        return self + (-other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QMatrix):
            return NotImplemented
        return self.shape == other.shape and all(a == b for a, b in zip(self.rows, other.rows))

    def __repr__(self) -> str:
        return f"QMatrix({self.nrows}x{self.ncols}, nnz={self.nnz()})"


# integer row helpers ----------------------------------------------------------

def _primitive(row: Row) -> dict[int, int]:
    """Scale a rational row to a primitive integer row (content 1)."""
    den = 1
    for v in row.values():
        if isinstance(v, Fraction):
            den = lcm(den, v.denominator)
    irow = {j: int(v * den) for j, v in row.items() if v != 0}
    g = 0
    for v in irow.values():
        g = gcd(g, v)
        if g == 1:
            return irow
    if g > 1:
        irow = {j: v // g for j, v in irow.items()}
    return irow


def _combine(a: int, r: dict[int, int], b: int, p: dict[int, int]) -> dict[int, int]:
    """Return the primitive form of ``a*r - b*p``."""
    g = gcd(a, b)
    a //= g
    b //= g
    out = {j: a * v for j, v in r.items()} if a != 1 else dict(r)
    for j, v in p.items():
        w = out.get(j, 0) - b * v
        if w:
            out[j] = w
        else:
            out.pop(j, None)
    c = 0
    for v in out.values():
        c = gcd(c, v)
        if c == 1:
            return out
    if c > 1:
        out = {j: v // c for j, v in out.items()}
    return out


def rank(M: QMatrix) -> int:
    """Exact rank by sparse fraction-free elimination.

    Pivots are chosen Markowitz-style: the column with the fewest live rows
    first, and within it the shortest row, preferring unit entries.
    """
    rows: dict[int, dict[int, int]] = {}
    col_rows: dict[int, set[int]] = {}
    for i, r in enumerate(M.rows):
        if r:
            ir = _primitive(r)
            rows[i] = ir
            for j in ir:
                col_rows.setdefault(j, set()).add(i)
    heap = [(len(s), j) for j, s in col_rows.items()]
    heapq.heapify(heap)
    rk = 0
    while heap:
        cnt, c = heapq.heappop(heap)
        live = col_rows.get(c)
        if not live:
            col_rows.pop(c, None)
            continue
        if len(live) != cnt:
            heapq.heappush(heap, (len(live), c))
            continue
        pid = min(live, key=lambda i: (abs(rows[i][c]) != 1, len(rows[i]), i))
        prow = rows.pop(pid)
        for j in prow:
            col_rows[j].discard(pid)
        a = prow[c]
        others = sorted(live)
        for oid in others:
            orow = rows[oid]
            new = _combine(a, orow, orow[c], prow)
            for j in orow:
                if j not in new:
                    col_rows[j].discard(oid)
            for j in new:
                if j not in orow:
                    col_rows.setdefault(j, set()).add(oid)
            rows[oid] = new
        del col_rows[c]
        rk += 1
        for j in prow:
            if j in col_rows:
                heapq.heappush(heap, (len(col_rows[j]), j))
        for oid in others:
            for j in rows[oid]:
                heapq.heappush(heap, (len(col_rows[j]), j))
    return rk


def echelon(rows: Iterable[Row]) -> dict[int, dict[int, int]]:
    """Row echelon form keyed by leading (smallest) column.

    Rows are inserted one at a time and reduced against existing pivots; the
    resulting set of leading columns is the set of RREF pivot columns.
    """
    piv: dict[int, dict[int, int]] = {}
    for r in rows:
        if not r:
            continue
        cur = _primitive(r)
        while cur:
            lead = min(cur)
            p = piv.get(lead)
            if p is None:
                if cur[lead] < 0:
                    cur = {j: -v for j, v in cur.items()}
                piv[lead] = cur
                break
            cur = _combine(p[lead], cur, cur[lead], p)
    return piv


def pivot_columns(M: QMatrix) -> list[int]:
    """Pivot columns of the reduced row echelon form, in increasing order."""
    return sorted(echelon(M.rows))


def kernel_basis(M: QMatrix) -> list[list[Fraction]]:
    """Canonical basis of the right kernel.

    One vector per free column ``f`` of the RREF, with a 1 at ``f``, zeros at
    the other free columns, which makes the basis unique and reproducible.
    """
    piv = echelon(M.rows)
    leads = sorted(piv, reverse=True)
    free = [j for j in range(M.ncols) if j not in piv]
    basis = []
    for f in free:
        x: dict[int, Fraction] = {f: Fraction(1)}
        for c in leads:
            if c > f:
                continue
            row = piv[c]
            s = Fraction(0)
            for j, v in row.items():
                if j != c and j in x:
                    s += v * x[j]
            if s:
                x[c] = -s / row[c]
        vec = [Fraction(0)] * M.ncols
        for j, v in x.items():
            vec[j] = v
        basis.append(vec)
    return basis


def solve(A: QMatrix, B: QMatrix) -> list[Optional[list[Fraction]]]:
    """Solve ``A x = b`` for every column ``b`` of ``B``.

    Returns one particular solution per column (free variables set to zero),
    or ``None`` for an inconsistent column.
    """
    if A.nrows != B.nrows:
        raise ValueError("A and B must have the same number of rows")
    n, m = A.ncols, B.ncols
    aug = []
    for ra, rb in zip(A.rows, B.rows):
        r = dict(ra)
        for j, v in rb.items():
            r[n + j] = v
        aug.append(r)
    piv = echelon(aug)
    bad = set()
    for lead, row in piv.items():
        if lead >= n:
            bad.update(j - n for j in row)
    leads = sorted((c for c in piv if c < n), reverse=True)
    out: list[Optional[list[Fraction]]] = []
    for j in range(m):
        if j in bad:
            out.append(None)
            continue
        x: dict[int, Fraction] = {}
        for c in leads:
            row = piv[c]
            s = Fraction(row.get(n + j, 0))
            for col, v in row.items():
                if col != c and col < n and col in x:
                    s -= v * x[col]
            if s:
                x[c] = s / row[c]
        vec = [Fraction(0)] * n
        for col, v in x.items():
            vec[col] = v
        out.append(vec)
    return out


def solve_vector(A: QMatrix, b: Sequence) -> Optional[list[Fraction]]:
    return solve(A, QMatrix.from_columns(A.nrows, [list(b)]))[0]


def rank_dense(rows: Sequence[Sequence]) -> int:
    """Rank of a small dense rational matrix."""
    if not rows:
        return 0
    return len(echelon({j: v for j, v in enumerate(r) if v != 0} for r in rows))
