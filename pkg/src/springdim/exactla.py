"""Exact rational linear algebra.

Matrices hold exact rationals (``gmpy2.mpq``).  Rank uses fraction-free
Bareiss elimination on integer-scaled rows; for sparse inputs the same
division-controlled scheme runs on dict rows with content removal.
Echelon forms are reduced over Q and keyed by pivot column, which is what the
coinvariant code needs for normal-form reduction.
"""
from __future__ import annotations

from math import gcd
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from gmpy2 import mpq, mpz

Q = mpq
SPARSE_THRESHOLD = 0.05

Row = Dict[int, mpq]


def to_q(x) -> mpq:
    if isinstance(x, str):
        return mpq(x)
    return mpq(x)


class QMatrix:
    """Rational matrix stored as sparse rows ``{col: value}``.

    Dense inputs are accepted; the storage is always the dict-row form, and
    :attr:`is_sparse` reports whether the entry density is under the
    threshold, which selects the elimination routine.
    """

    __slots__ = ("nrows", "ncols", "rows")

    def __init__(self, nrows: int, ncols: int, rows: Optional[List[Row]] = None):
        self.nrows = nrows
        self.ncols = ncols
        self.rows: List[Row] = rows if rows is not None else [dict() for _ in range(nrows)]

    @classmethod
    def from_dense(cls, data: Sequence[Sequence], ncols: Optional[int] = None) -> "QMatrix":
        data = [list(r) for r in data]
        nc = ncols if ncols is not None else (len(data[0]) if data else 0)
        rows = []
        for r in data:
            if len(r) != nc:
                raise ValueError("ragged matrix")
            rows.append({j: to_q(v) for j, v in enumerate(r) if v != 0})
        return cls(len(rows), nc, rows)

    @classmethod
    def identity(cls, n: int) -> "QMatrix":
        return cls(n, n, [{i: mpq(1)} for i in range(n)])

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "QMatrix":
        return cls(nrows, ncols)

    def __getitem__(self, ij: Tuple[int, int]) -> mpq:
        i, j = ij
        return self.rows[i].get(j, mpq(0))

    def __setitem__(self, ij: Tuple[int, int], value) -> None:
        i, j = ij
        v = to_q(value)
        if v:
            self.rows[i][j] = v
        else:
            self.rows[i].pop(j, None)

    def nnz(self) -> int:
        return sum(len(r) for r in self.rows)

    def density(self) -> float:
        cells = self.nrows * self.ncols
        return self.nnz() / cells if cells else 0.0

    @property
    def is_sparse(self) -> bool:
        return self.density() < SPARSE_THRESHOLD

    def to_dense(self) -> List[List[mpq]]:
        out = [[mpq(0)] * self.ncols for _ in range(self.nrows)]
        for i, r in enumerate(self.rows):
            for j, v in r.items():
                out[i][j] = v
        return out

    def transpose(self) -> "QMatrix":
        t = QMatrix(self.ncols, self.nrows)
        for i, r in enumerate(self.rows):
            for j, v in r.items():
                t.rows[j][i] = v
        return t

    def __matmul__(self, other: "QMatrix") -> "QMatrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        out = QMatrix(self.nrows, other.ncols)
        for i, r in enumerate(self.rows):
            acc: Row = {}
            for k, v in r.items():
                for j, w in other.rows[k].items():
                    acc[j] = acc.get(j, 0) + v * w
            out.rows[i] = {j: x for j, x in acc.items() if x}
        return out

    def apply(self, vec: Sequence) -> List[mpq]:
        return [sum((v * vec[j] for j, v in r.items()), mpq(0)) for r in self.rows]

    def __sub__(self, other: "QMatrix") -> "QMatrix":
        out = QMatrix(self.nrows, self.ncols)
        for i in range(self.nrows):
            acc = dict(self.rows[i])
            for j, v in other.rows[i].items():
                acc[j] = acc.get(j, 0) - v
            out.rows[i] = {j: x for j, x in acc.items() if x}
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, QMatrix)
            and self.nrows == other.nrows
            and self.ncols == other.ncols
            and self.rows == other.rows
        )

    def __repr__(self) -> str:
        return f"QMatrix({self.nrows}x{self.ncols}, nnz={self.nnz()})"


def _as_qmatrix(M) -> QMatrix:
    return M if isinstance(M, QMatrix) else QMatrix.from_dense(M)


def _integer_row(row: Row) -> Dict[int, mpz]:
    """Scale a rational row to a primitive integer row (same span)."""
    if not row:
        return {}
    den = mpz(1)
    for v in row.values():
        d = v.denominator
        den = den * d // gcd(den, d)
    ints = {j: (v * den).numerator for j, v in row.items()}
    g = 0
    for v in ints.values():
        g = gcd(g, int(v))
    if g > 1:
        ints = {j: v // g for j, v in ints.items()}
    return ints


def bareiss_rank(dense: List[List[int]]) -> int:
    """Rank of an integer matrix by one-step fraction-free Bareiss elimination."""
    a = [list(map(mpz, r)) for r in dense]
    m = len(a)
    if m == 0:
        return 0
    n = len(a[0])
    prev = mpz(1)
    rank = 0
    col = 0
    while rank < m and col < n:
        piv = next((i for i in range(rank, m) if a[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        if piv != rank:
            a[rank], a[piv] = a[piv], a[rank]
        p = a[rank][col]
        prow = a[rank]
        for i in range(rank + 1, m):
            ri = a[i]
            f = ri[col]
            for j in range(col + 1, n):
                # exact division is the Bareiss invariant
                ri[j] = (p * ri[j] - f * prow[j]) // prev
            ri[col] = mpz(0)
        prev = p
        rank += 1
        col += 1
    return rank


def _sparse_rank(rows: Iterable[Row]) -> int:
    """Rank by integer elimination on dict rows with content removal."""
    pivots: Dict[int, Dict[int, mpz]] = {}
    for row in rows:
        r = _integer_row(row)
        while r:
            lead = min(r)
            prow = pivots.get(lead)
            if prow is None:
                pivots[lead] = r
                break
            a, b = prow[lead], r[lead]
            g = gcd(int(a), int(b))
            ca, cb = a // g, b // g
            new = {j: v * ca for j, v in r.items()}
            for j, v in prow.items():
                x = new.get(j, 0) - cb * v
                if x:
                    new[j] = x
                else:
                    new.pop(j, None)
            r = _primitive(new)
    return len(pivots)


def _primitive(r: Dict[int, mpz]) -> Dict[int, mpz]:
    g = 0
    for v in r.values():
        g = gcd(g, int(v))
        if g == 1:
            return r
    if g > 1:
        return {j: v // g for j, v in r.items()}
    return r


def rank(M) -> int:
    """Rank over Q."""
    M = _as_qmatrix(M)
    if M.nrows == 0 or M.ncols == 0:
        return 0
    if M.is_sparse:
        return _sparse_rank(M.rows)
    dense = []
    for r in M.rows:
        ir = _integer_row(r)
        dense.append([ir.get(j, 0) for j in range(M.ncols)])
    return bareiss_rank(dense)


class Echelon:
    """Incrementally built reduced row-echelon basis of a subspace of Q^n.

    Rows are stored by pivot column with pivot entry 1 and zeros in every
    other pivot column, so one pass over the pivots reduces a vector to its
    normal form (support on non-pivot columns only).
    """

    __slots__ = ("rows",)

    def __init__(self):
        self.rows: Dict[int, Row] = {}

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def pivots(self) -> List[int]:
        return sorted(self.rows)

    def reduce(self, vec: Row) -> Row:
        v = dict(vec)
        for p in sorted(set(v) & self.rows.keys()):
            c = v.get(p)
            if not c:
                continue
            for j, w in self.rows[p].items():
                x = v.get(j, 0) - c * w
                if x:
                    v[j] = x
                else:
                    v.pop(j, None)
        return v

    def contains(self, vec: Row) -> bool:
        return not self.reduce(vec)

    def add(self, vec: Row) -> bool:
        """Insert ``vec``; returns False when it already lies in the span."""
        v = self.reduce(vec)
        if not v:
            return False
        p = min(v)
        inv = 1 / v[p]
        v = {j: x * inv for j, x in v.items()}
        for q, row in self.rows.items():
            c = row.get(p)
            if c:
                for j, w in v.items():
                    x = row.get(j, 0) - c * w
                    if x:
                        row[j] = x
                    else:
                        row.pop(j, None)
        self.rows[p] = v
        return True

    def complement(self, ncols: int) -> List[int]:
        return [j for j in range(ncols) if j not in self.rows]


def echelonize(M) -> Tuple[List[int], List[Row]]:
    """Reduced row-echelon data: ascending pivot columns and matching rows."""
    M = _as_qmatrix(M)
    E = Echelon()
    for r in M.rows:
        if r:
            E.add(r)
    piv = E.pivots
    return piv, [E.rows[p] for p in piv]


def kernel(M) -> List[List[mpq]]:
    """Basis of {v : M v = 0}, one vector per free column."""
    M = _as_qmatrix(M)
    piv, rows = echelonize(M)
    pset = set(piv)
    basis = []
    for f in range(M.ncols):
        if f in pset:
            continue
        v = [mpq(0)] * M.ncols
        v[f] = mpq(1)
        for p, r in zip(piv, rows):
            c = r.get(f)
            if c:
                v[p] = -c
        basis.append(v)
    return basis


def fixed_space(generator_mats: Sequence, dim: int) -> List[List[mpq]]:
    """Basis of the common fixed space of the generators acting on Q^dim.

    A vector fixed by each generator is fixed by the group they generate,
    so no group enumeration is needed.
    """
    if not generator_mats:
        return [[mpq(int(i == j)) for j in range(dim)] for i in range(dim)]
    stacked = QMatrix(0, dim)
    ident = QMatrix.identity(dim)
    for g in generator_mats:
        g = _as_qmatrix(g)
        if g.nrows != dim or g.ncols != dim:
            raise ValueError("generator has wrong shape")
        d = g - ident
        stacked.rows.extend(d.rows)
        stacked.nrows += d.nrows
    return kernel(stacked)


def inverse(M) -> QMatrix:
    """Inverse of a square invertible matrix (Gauss-Jordan over Q)."""
    M = _as_qmatrix(M)
    n = M.nrows
    if n != M.ncols:
        raise ValueError("not square")
    aug = QMatrix(n, 2 * n, [dict(r) | {n + i: mpq(1)} for i, r in enumerate(M.rows)])
    piv, rows = echelonize(aug)
    if piv[:n] != list(range(n)) or len(piv) < n:
        raise ZeroDivisionError("matrix is singular")
    out = QMatrix(n, n)
    for i in range(n):
        out.rows[i] = {j - n: v for j, v in rows[i].items() if j >= n}
    return out


def solve(M, b: Sequence) -> List[mpq]:
    """Unique solution of M x = b for square invertible M."""
    inv = inverse(M)
    return inv.apply([to_q(x) for x in b])
