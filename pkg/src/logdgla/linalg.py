"""Exact sparse linear algebra over the rationals.

Vectors are ``dict[int, Fraction]`` with zero entries omitted.  Matrices
are stored column-major as a list of such vectors, which is the natural
shape for the matrix of a linear map assembled basis element by basis
element.  Elimination keeps a fully reduced row-echelon basis, so spans,
membership tests, kernels and solves all go through :class:`Span`.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

Vector = dict[int, Fraction]


def vec_add(x: Mapping[int, Fraction], y: Mapping[int, Fraction], scale: Fraction = Fraction(1)) -> Vector:
    """Return ``x + scale * y``."""
    out = dict(x)
    for k, v in y.items():
        s = out.get(k, 0) + scale * v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def vec_scale(x: Mapping[int, Fraction], scale: Fraction) -> Vector:
    if not scale:
        return {}
    return {k: v * scale for k, v in x.items()}


class SparseMatrix:
    """Exact matrix with ``nrows`` rows, stored as sparse columns."""

    __slots__ = ("nrows", "ncols", "columns")

    def __init__(self, nrows: int, ncols: int, columns: Sequence[Mapping[int, Fraction]] | None = None):
        self.nrows = nrows
        self.ncols = ncols
        if columns is None:
            columns = [{} for _ in range(ncols)]
        if len(columns) != ncols:
            raise ValueError(f"expected {ncols} columns, got {len(columns)}")
        self.columns = [{r: Fraction(v) for r, v in col.items() if v} for col in columns]
        for col in self.columns:
            for r in col:
                if not 0 <= r < nrows:
                    raise ValueError(f"row index {r} out of range for {nrows} rows")

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence[object]]) -> SparseMatrix:
        nrows = len(rows)
        ncols = len(rows[0]) if nrows else 0
        cols = [{i: Fraction(rows[i][j]) for i in range(nrows) if rows[i][j]} for j in range(ncols)]
        return cls(nrows, ncols, cols)

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> SparseMatrix:
        return cls(nrows, ncols)

    @classmethod
    def identity(cls, n: int) -> SparseMatrix:
        return cls(n, n, [{i: Fraction(1)} for i in range(n)])

    def to_dense(self) -> list[list[Fraction]]:
        out = [[Fraction(0)] * self.ncols for _ in range(self.nrows)]
        for j, col in enumerate(self.columns):
            for i, v in col.items():
                out[i][j] = v
        return out

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    def rows(self) -> list[Vector]:
        out: list[Vector] = [{} for _ in range(self.nrows)]
        for j, col in enumerate(self.columns):
            for i, v in col.items():
                out[i][j] = v
        return out

    def apply(self, x: Mapping[int, Fraction]) -> Vector:
        out: Vector = {}
        for j, xj in x.items():
            if xj:
                out = vec_add(out, self.columns[j], xj)
        return out

    def __matmul__(self, other: SparseMatrix) -> SparseMatrix:
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        return SparseMatrix(self.nrows, other.ncols, [self.apply(col) for col in other.columns])

    def __add__(self, other: SparseMatrix) -> SparseMatrix:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} + {other.shape}")
        return SparseMatrix(self.nrows, self.ncols, [vec_add(a, b) for a, b in zip(self.columns, other.columns)])

    def __neg__(self) -> SparseMatrix:
        return SparseMatrix(self.nrows, self.ncols, [vec_scale(c, Fraction(-1)) for c in self.columns])

    def __sub__(self, other: SparseMatrix) -> SparseMatrix:
        return self + (-other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return self.shape == other.shape and self.columns == other.columns

    def is_zero(self) -> bool:
        return not any(self.columns)

    def transpose(self) -> SparseMatrix:
        return SparseMatrix(self.ncols, self.nrows, self.rows())

    def nnz(self) -> int:
        return sum(len(c) for c in self.columns)

    def __repr__(self) -> str:
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz()})"


class Span:
    """Subspace spanned by added vectors, kept in reduced row-echelon form.

    ``pivots`` maps each pivot coordinate to a basis vector whose entry at
    the pivot is 1 and which vanishes at every other pivot.  With
    ``track=True`` every basis vector also remembers which combination of
    the tagged inputs produced it, and inputs that reduce to zero are kept
    as linear relations in ``relations``; :func:`solve` and
    :func:`nullspace` read those back.
    """

    __slots__ = ("pivots", "relations", "_track", "_combos")

    def __init__(self, vectors: Iterable[Mapping[int, Fraction]] = (), track: bool = False):
        self.pivots: dict[int, Vector] = {}
        self.relations: list[Vector] = []
        self._track = track
        self._combos: dict[int, Vector] = {}
        for v in vectors:
            self.add(v)

    def __len__(self) -> int:
        return len(self.pivots)

    @property
    def dim(self) -> int:
        return len(self.pivots)

    def reduce(self, v: Mapping[int, Fraction]) -> tuple[Vector, Vector]:
        """Reduce ``v`` modulo the span; returns (remainder, combination subtracted)."""
        r = dict(v)
        combo: Vector = {}
        for p in [p for p in r if p in self.pivots]:
            c = r.get(p)
            if not c:
                continue
            r = vec_add(r, self.pivots[p], -c)
            if self._track:
                combo = vec_add(combo, self._combos[p], c)
        return r, combo

    def add(self, v: Mapping[int, Fraction], tag: int | None = None) -> bool:
        """Add ``v``; returns True when the dimension grew."""
        r, combo = self.reduce(v)
        if self._track:
            # r == v - sum(combo_j * input_j), written in terms of inputs
            combo = vec_scale(combo, Fraction(-1))
            if tag is not None:
                combo = vec_add(combo, {tag: Fraction(1)})
        if not r:
            if self._track and combo:
                self.relations.append(combo)
            return False
        p = min(r)
        inv = 1 / r[p]
        r = vec_scale(r, inv)
        if self._track:
            combo = vec_scale(combo, inv)
        for q, b in self.pivots.items():
            c = b.get(p)
            if c:
                self.pivots[q] = vec_add(b, r, -c)
                if self._track:
                    self._combos[q] = vec_add(self._combos[q], combo, -c)
        self.pivots[p] = r
        if self._track:
            self._combos[p] = combo
        return True

    def __contains__(self, v: Mapping[int, Fraction]) -> bool:
        return not self.reduce(v)[0]

    def basis(self) -> list[Vector]:
        return [self.pivots[p] for p in sorted(self.pivots)]

    def contains_span(self, other: Span) -> bool:
        return all(b in self for b in other.basis())


def _column_span(m: SparseMatrix) -> Span:
    span = Span(track=True)
    for j, col in enumerate(m.columns):
        span.add(col, tag=j)
    return span


def rank(m: SparseMatrix) -> int:
    return Span(m.columns).dim


def nullspace(m: SparseMatrix) -> list[Vector]:
    """Basis of ``{x : m x = 0}`` as sparse vectors indexed by column."""
    return _column_span(m).relations


def solve(m: SparseMatrix, b: Mapping[int, Fraction]) -> Vector | None:
    """Some ``x`` with ``m x = b``, or None when ``b`` is not in the image."""
    span = _column_span(m)
    r, combo = span.reduce(b)
    if r:
        return None
    return combo


def image(m: SparseMatrix) -> Span:
    return Span(m.columns)


def kernel_span(m: SparseMatrix) -> Span:
    return Span(nullspace(m))


def restrict_rows(v: Mapping[int, Fraction], keep: Iterable[int]) -> Vector:
    keep = set(keep)
    return {k: x for k, x in v.items() if k in keep}


def span_sum(*spans: Span) -> Span:
    out = Span()
    for s in spans:
        for b in s.basis():
            out.add(b)
    return out


def span_intersection(a: Span, b: Span) -> Span:
    """Intersection via the kernel of ``[A | -B]``."""
    A, B = a.basis(), b.basis()
    if not A or not B:
        return Span()
    nrows = 1 + max(max((max(v) for v in A if v), default=0), max((max(v) for v in B if v), default=0))
    cols = A + [vec_scale(v, Fraction(-1)) for v in B]
    out = Span()
    for x in nullspace(SparseMatrix(nrows, len(cols), cols)):
        w: Vector = {}
        for j, c in x.items():
            if j < len(A):
                w = vec_add(w, A[j], c)
        out.add(w)
    return out


def inverse(m: SparseMatrix) -> SparseMatrix:
    if m.nrows != m.ncols:
        raise ValueError(f"cannot invert a {m.nrows}x{m.ncols} matrix")
    cols = []
    for i in range(m.nrows):
        x = solve(m, {i: Fraction(1)})
        if x is None:
            raise ZeroDivisionError("matrix is singular")
        cols.append(x)
    return SparseMatrix(m.nrows, m.ncols, cols)
