"""Koszul complex of the commuting operators ``P_i = z_i d/dz_i + kappa_i``.

``E^j`` is spanned by ``z^a zbar^b dz_I/z_I`` with ``|I| = j`` and the
monomial inside a truncation; each ``P_i`` is diagonal on monomials.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .core import ModelConfig, PreconditionError, Truncation
from .linalg import SparseMatrix, rank
from .logforms import exponent_vectors


@dataclass(frozen=True)
class KoszulComplex:
    l: int
    truncation: Truncation
    value: int
    kappa: tuple[Fraction, ...]
    monomials: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    # bases[j] lists (monomial index, I) pairs
    bases: tuple[tuple[tuple[int, tuple[int, ...]], ...], ...]
    # differentials[j]: E^j -> E^(j+1)
    differentials: tuple[SparseMatrix, ...]

    def dims(self) -> list[int]:
        return [len(b) for b in self.bases]


def build_koszul(model: ModelConfig, v: int, trunc: Truncation) -> KoszulComplex:
    l = model.l
    if l < 1:
        raise PreconditionError("the Koszul complex needs at least one log branch")
    kappa = model.values.characters[v].kappa
    monomials = tuple(
        (a, b) for a in exponent_vectors(model.d, trunc.max_z_deg) for b in exponent_vectors(model.d, trunc.max_zbar_deg)
    )
    bases = tuple(
        tuple((m, I) for I in itertools.combinations(range(l), j) for m in range(len(monomials)))
        for j in range(l + 1)
    )
    index = [{elem: n for n, elem in enumerate(basis)} for basis in bases]
    diffs = []
    for j in range(l):
        cols = []
        for m, I in bases[j]:
            a = monomials[m][0]
            col = {}
            for i in range(l):
                if i in I:
                    continue
                eig = a[i] + kappa[i]
                if eig:
                    pos = sum(1 for x in I if x < i)
                    newI = tuple(sorted(I + (i,)))
                    col[index[j + 1][(m, newI)]] = (-1) ** pos * eig
            cols.append(col)
        diffs.append(SparseMatrix(len(bases[j + 1]), len(bases[j]), cols))
    return KoszulComplex(l, trunc, v, tuple(kappa), monomials, bases, tuple(diffs))


def koszul_homology(kc: KoszulComplex) -> list[int]:
    """Homology dimension in each degree ``0..l`` by exact rank computation."""
    ranks = [rank(m) for m in kc.differentials]
    dims = kc.dims()
    out = []
    for j in range(kc.l + 1):
        incoming = ranks[j - 1] if j > 0 else 0
        outgoing = ranks[j] if j < kc.l else 0
        out.append(dims[j] - outgoing - incoming)
    return out


def diagonal_oracle(kc: KoszulComplex) -> list[int]:
    """Homology predicted by counting monomials on which every ``P_i`` vanishes.

    The Koszul complex of commuting diagonal operators splits over
    monomials; a monomial contributes ``C(l, j)`` in degree ``j`` when all
    its eigenvalues are zero and nothing otherwise.
    """
    kernel = sum(
        1 for a, _b in kc.monomials if all(a[i] + kc.kappa[i] == 0 for i in range(kc.l))
    )
    return [kernel * comb(kc.l, j) for j in range(kc.l + 1)]
