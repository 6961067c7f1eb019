"""Spectral sequences of finite double complexes over the rationals.

A :class:`DoubleComplex` carries ``d1: (p, q) -> (p+1, q)`` and
``d2: (p, q) -> (p, q+1)``, already anticommuting, so the total
differential is plain ``d1 + d2``.  Pages come from the filtration by the
second index ``q`` (the antiholomorphic degree for model complexes).  Its
``E_0`` differential is ``d1``, and ``d_r`` maps ``E_r^{p,q}`` to
``E_r^{p-r+1, q+r}``.

Pages are computed directly as subquotients of the total complex,
``E_r = Z_r / (Z_{r-1}^{+1} + D Z_{r-1}^{-(r-1)})`` with
``Z_r^s = {x in F^s : Dx in F^{s+r}}``, rather than by iterating homology,
so that the page law ``E_{r+1} = H(E_r, d_r)`` is an honest check.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .core import ModelConfig, Truncation, format_rational
from .linalg import SparseMatrix, Span, Vector, inverse, nullspace, rank, vec_add
from .logforms import Key, LogForm, basis_keys, dprime, dsecond
from .primitives import dprime_matrix

Slot = tuple[int, int]


@dataclass
class DoubleComplex:
    dims: dict[Slot, int]
    d1: dict[Slot, SparseMatrix] = field(default_factory=dict)
    d2: dict[Slot, SparseMatrix] = field(default_factory=dict)
    labels: dict[Slot, tuple] | None = None

    def __post_init__(self) -> None:
        self.dims = {s: n for s, n in self.dims.items() if n}
        for name, maps, step in (("d1", self.d1, (1, 0)), ("d2", self.d2, (0, 1))):
            for (p, q), m in list(maps.items()):
                tgt = (p + step[0], q + step[1])
                if m.shape != (self.dim(tgt), self.dim((p, q))):
                    raise ValueError(f"{name} at {(p, q)} has shape {m.shape}")
                if m.is_zero():
                    del maps[(p, q)]

    def dim(self, slot: Slot) -> int:
        return self.dims.get(slot, 0)

    def slots(self) -> list[Slot]:
        return sorted(self.dims)

    def map1(self, slot: Slot) -> SparseMatrix:
        p, q = slot
        return self.d1.get(slot) or SparseMatrix(self.dim((p + 1, q)), self.dim(slot))

    def map2(self, slot: Slot) -> SparseMatrix:
        p, q = slot
        return self.d2.get(slot) or SparseMatrix(self.dim((p, q + 1)), self.dim(slot))

    @property
    def q_range(self) -> tuple[int, int]:
        qs = [q for _, q in self.dims] or [0]
        return min(qs), max(qs)

    @property
    def degree_range(self) -> tuple[int, int]:
        ns = [p + q for p, q in self.dims] or [0]
        return min(ns), max(ns)

    def check(self) -> dict[str, bool]:
        """The three anticommutation invariants, checked on every slot."""
        ok11 = ok22 = ok12 = True
        for p, q in self.slots():
            s = (p, q)
            ok11 &= (self.map1((p + 1, q)) @ self.map1(s)).is_zero()
            ok22 &= (self.map2((p, q + 1)) @ self.map2(s)).is_zero()
            ok12 &= (self.map1((p, q + 1)) @ self.map2(s) + self.map2((p + 1, q)) @ self.map1(s)).is_zero()
        return {"d1d1": ok11, "d2d2": ok22, "anticommute": ok12}

    # total complex --------------------------------------------------------

    def tot_slots(self, n: int) -> list[Slot]:
        """Slots of total degree ``n`` ordered by increasing ``q``."""
        return sorted(((p, q) for p, q in self.dims if p + q == n), key=lambda s: s[1])

    def tot_offsets(self, n: int) -> dict[Slot, int]:
        out, off = {}, 0
        for s in self.tot_slots(n):
            out[s] = off
            off += self.dims[s]
        return out

    def tot_dim(self, n: int) -> int:
        return sum(self.dims[s] for s in self.tot_slots(n))

    def tot_differential(self, n: int) -> SparseMatrix:
        src, dst = self.tot_offsets(n), self.tot_offsets(n + 1)
        cols: list[Vector] = []
        for (p, q), off in src.items():
            for j in range(self.dims[(p, q)]):
                col: Vector = {}
                for tgt, m in (((p + 1, q), self.d1.get((p, q))), ((p, q + 1), self.d2.get((p, q)))):
                    if m is not None and tgt in dst:
                        col = vec_add(col, {dst[tgt] + i: c for i, c in m.columns[j].items()})
                cols.append(col)
        return SparseMatrix(self.tot_dim(n + 1), self.tot_dim(n), cols)

    def filtration_coords(self, n: int, s: int) -> list[int]:
        """Coordinates of ``F^s Tot^n``: slots with ``q >= s``."""
        offs = self.tot_offsets(n)
        return [off + i for (p, q), off in offs.items() if q >= s for i in range(self.dims[(p, q)])]

    def split(self, n: int, vec: Vector) -> dict[Slot, Vector]:
        """Break a total-degree vector into per-slot components."""
        out: dict[Slot, Vector] = {}
        for (p, q), off in self.tot_offsets(n).items():
            part = {i - off: c for i, c in vec.items() if off <= i < off + self.dims[(p, q)]}
            if part:
                out[(p, q)] = part
        return out


@dataclass
class Page:
    r: int
    dims: dict[Slot, int]
    # d_r: E_r^{p,q} -> E_r^{p-r+1, q+r}, in representative coordinates
    differentials: dict[Slot, SparseMatrix]
    representatives: dict[Slot, list[dict[Slot, Vector]]]

    def dim(self, slot: Slot) -> int:
        return self.dims.get(slot, 0)

    def target(self, slot: Slot) -> Slot:
        p, q = slot
        return (p - self.r + 1, q + self.r)

    def is_degenerate(self) -> bool:
        return all(m.is_zero() for m in self.differentials.values())

    def homology_dims(self) -> dict[Slot, int]:
        ranks = {s: rank(m) for s, m in self.differentials.items()}
        out = {}
        for s, n in self.dims.items():
            p, q = s
            source = (p + self.r - 1, q - self.r)
            out[s] = n - ranks.get(s, 0) - ranks.get(source, 0)
        return {s: n for s, n in out.items() if n}

    def check(self) -> bool:
        """``d_r`` squares to zero."""
        for s, m in self.differentials.items():
            nxt = self.differentials.get(self.target(s))
            if nxt is not None and not (nxt @ m).is_zero():
                return False
        return True


class _Engine:
    """Caches filtration subspaces of one double complex."""

    def __init__(self, dc: DoubleComplex):
        self.dc = dc
        self.qmin, self.qmax = dc.q_range
        self._D: dict[int, SparseMatrix] = {}
        self._Z: dict[tuple[int, int, int], list[Vector]] = {}

    def D(self, n: int) -> SparseMatrix:
        if n not in self._D:
            self._D[n] = self.dc.tot_differential(n)
        return self._D[n]

    def Z(self, r: int, s: int, n: int) -> list[Vector]:
        """Basis of ``{x in F^s Tot^n : D x in F^{s+r} Tot^{n+1}}``."""
        key = (r, s, n)
        if key not in self._Z:
            coords = self.dc.filtration_coords(n, s)
            if r <= 0:
                basis = [{c: Fraction(1)} for c in coords]
            else:
                keep = set(self.dc.filtration_coords(n + 1, s + r))
                D = self.D(n)
                cols = [{i: x for i, x in D.columns[c].items() if i not in keep} for c in coords]
                basis = []
                for vec in nullspace(SparseMatrix(D.nrows, len(coords), cols)):
                    basis.append({coords[j]: x for j, x in vec.items()})
            self._Z[key] = basis
        return self._Z[key]

    def B(self, r: int, s: int, n: int) -> list[Vector]:
        """Spanning set of ``Z_{r-1}^{s+1} + D Z_{r-1}^{s-r+1}`` in degree ``n``."""
        out = list(self.Z(r - 1, s + 1, n))
        D = self.D(n - 1)
        out += [D.apply(x) for x in self.Z(r - 1, s - r + 1, n - 1)]
        return out

    def quotient(self, r: int, s: int, n: int) -> tuple[list[Vector], Span]:
        """Representatives of ``E_r`` at filtration ``s`` and a span to read coordinates."""
        B = self.B(r, s, n)
        span = Span(track=True)
        tag = 0
        for b in B:
            span.add(b, tag=-1 - tag)
            tag += 1
        reps: list[Vector] = []
        for z in self.Z(r, s, n):
            if span.add(z, tag=len(reps)):
                reps.append(z)
        return reps, span


def e_page(dc: DoubleComplex, r: int, _engine: _Engine | None = None) -> Page:
    """Page ``E_r`` of the filtration by ``q``."""
    if r < 0:
        raise ValueError("page index must be nonnegative")
    eng = _engine or _Engine(dc)
    dims: dict[Slot, int] = {}
    reps: dict[Slot, list[Vector]] = {}
    spans: dict[Slot, Span] = {}
    lo, hi = dc.degree_range
    for n in range(lo, hi + 1):
        for p, q in dc.tot_slots(n):
            rr, span = eng.quotient(r, q, n)
            if rr:
                dims[(p, q)] = len(rr)
                reps[(p, q)] = rr
                spans[(p, q)] = span
    diffs: dict[Slot, SparseMatrix] = {}
    for (p, q), rr in reps.items():
        n = p + q
        tgt = (p - r + 1, q + r)
        if tgt not in reps:
            continue
        D = eng.D(n)
        cols = []
        for x in rr:
            rem, combo = spans[tgt].reduce(D.apply(x))
            if rem:
                raise ArithmeticError(f"image of E_{r}{(p, q)} left its target filtration")
            cols.append({j: c for j, c in combo.items() if j >= 0})
        m = SparseMatrix(len(reps[tgt]), len(rr), cols)
        if not m.is_zero():
            diffs[(p, q)] = m
    return Page(r, dims, diffs, {s: [dc.split(s[0] + s[1], x) for x in rr] for s, rr in reps.items()})


def filtration_length(dc: DoubleComplex) -> int:
    """First ``r`` from which every ``d_r`` is forced to vanish."""
    qmin, qmax = dc.q_range
    return qmax - qmin + 1


def spectral_sequence(dc: DoubleComplex, r_max: int | None = None) -> list[Page]:
    """Pages ``E_0 .. E_{r_max}``; default runs to the page where everything has settled."""
    last = filtration_length(dc) if r_max is None else r_max
    eng = _Engine(dc)
    return [e_page(dc, r, eng) for r in range(last + 1)]


def total_cohomology(dc: DoubleComplex) -> dict[int, int]:
    lo, hi = dc.degree_range
    out = {}
    ranks = {n: rank(dc.tot_differential(n)) for n in range(lo - 1, hi + 1)}
    for n in range(lo, hi + 1):
        out[n] = dc.tot_dim(n) - ranks[n] - ranks[n - 1]
    return out


@dataclass
class ConvergenceReport:
    r_max: int
    stabilized: bool
    page_laws: bool
    d_squared: bool
    e_infinity: dict[Slot, int]
    total: dict[int, int]
    abutment: dict[int, int]
    nonzero_differentials: list[int]

    @property
    def converges(self) -> bool:
        return self.stabilized and all(self.abutment.get(n, 0) == self.total.get(n, 0) for n in set(self.total) | set(self.abutment))

    @property
    def ok(self) -> bool:
        return self.converges and self.page_laws and self.d_squared


def check_convergence(dc: DoubleComplex, r_max: int | None = None) -> ConvergenceReport:
    """Compare ``E_{r_max}`` with total cohomology and check the page law at every step.

    Pages are computed up to the filtration length regardless of ``r_max`` so
    that a nonzero ``d_s`` with ``s >= r_max`` is detected and reported as a
    failure to stabilize.
    """
    length = filtration_length(dc)
    if r_max is None:
        r_max = length
    pages = spectral_sequence(dc, max(r_max, length))
    laws = all(pages[r].homology_dims() == {s: n for s, n in pages[r + 1].dims.items() if n} for r in range(len(pages) - 1))
    squares = all(p.check() for p in pages)
    stabilized = all(p.is_degenerate() for p in pages[r_max:])
    e_inf = pages[r_max].dims
    abut: dict[int, int] = {}
    for (p, q), n in e_inf.items():
        abut[p + q] = abut.get(p + q, 0) + n
    total = {n: h for n, h in total_cohomology(dc).items() if h}
    return ConvergenceReport(
        r_max, stabilized, laws, squares, dict(e_inf), total, abut,
        [p.r for p in pages if not p.is_degenerate()],
    )


def check_degeneration(dc: DoubleComplex, r: int) -> bool:
    """True when every ``d_s`` with ``s >= r`` vanishes."""
    pages = spectral_sequence(dc, max(r, filtration_length(dc)))
    return all(p.is_degenerate() for p in pages[r:])


# builders ----------------------------------------------------------------


def from_model(
    model: ModelConfig,
    trunc: Truncation,
    p_range: Iterable[int] | None = None,
    q_range: Iterable[int] | None = None,
) -> DoubleComplex:
    """Truncated admissible double complex with ``d1 = d'`` and ``d2 = d''``."""
    ps = list(range(model.d + 1) if p_range is None else p_range)
    qs = list(range(model.d + 1) if q_range is None else q_range)
    labels = {(p, q): basis_keys(model, p, q, trunc, True) for p in ps for q in qs}
    dims = {s: len(k) for s, k in labels.items()}
    index = {s: {k: i for i, k in enumerate(keys)} for s, keys in labels.items()}
    d1: dict[Slot, SparseMatrix] = {}
    d2: dict[Slot, SparseMatrix] = {}
    for (p, q), keys in labels.items():
        for op, tgt, store in ((dprime, (p + 1, q), d1), (dsecond, (p, q + 1), d2)):
            if tgt not in labels or not keys:
                continue
            rows = index[tgt]
            cols = []
            for key in keys:
                image = op(LogForm._trusted(model, {key: Fraction(1)}))
                try:
                    cols.append({rows[k]: c for k, c in image.items()})
                except KeyError as exc:
                    raise ArithmeticError(f"truncation not stable: {exc.args[0]}") from None
            store[(p, q)] = SparseMatrix(len(labels[tgt]), len(keys), cols)
    return DoubleComplex(dims, d1, d2, labels)


@dataclass
class KernelDescription:
    q: int
    kernel: list[LogForm]
    predicted: list[LogForm]
    match: bool

    @property
    def dim(self) -> int:
        return len(self.kernel)


def kernel_dprime_description(model: ModelConfig, q: int, trunc: Truncation) -> KernelDescription:
    """Kernel of ``d'`` on admissible ``(0, q)``-forms versus the antiholomorphic prediction.

    The prediction is spanned by ``zbar^b dzbar_K (x) mu_v`` with no ``z``
    dependence and ``mu_v`` of trivial character.
    """
    mat, src, _ = dprime_matrix(model, 0, q, trunc)
    kernel = nullspace(mat)
    chars = model.values.characters
    predicted = [
        j for j, (v, I, J, K, a, b) in enumerate(src)
        if not any(a) and chars[v].is_trivial()
    ]
    ker_span = Span(kernel)
    match = len(kernel) == len(predicted) and all({j: Fraction(1)} in ker_span for j in predicted)

    def form(vec: Vector) -> LogForm:
        return LogForm._trusted(model, {src[j]: c for j, c in vec.items()})

    return KernelDescription(
        q,
        [form(v) for v in ker_span.basis()],
        [form({j: Fraction(1)}) for j in predicted],
        match,
    )


def staircase(length: int, origin: Slot = (1, 0)) -> DoubleComplex:
    """Zig-zag whose two end classes survive to ``E_length`` and cancel by ``d_length``.

    With ``x`` at ``origin = (p, q)``, ``d2 x = y_1``, and for
    ``k = 1..length-1`` the element ``w_k`` at ``(p-k, q+k)`` has
    ``d1 w_k = y_k`` and ``d2 w_k = y_{k+1}``; the last ``y`` is the class
    at ``(p-length+1, q+length)``.  ``length = 1`` is a single ``d2`` arrow.
    """
    p, q = origin
    dims: dict[Slot, int] = {}
    d1: dict[Slot, SparseMatrix] = {}
    d2: dict[Slot, SparseMatrix] = {}
    one = SparseMatrix(1, 1, [{0: Fraction(1)}])
    dims[(p, q)] = 1
    for k in range(1, length + 1):
        dims[(p - k + 1, q + k)] = 1  # y_k
    for k in range(1, length):
        dims[(p - k, q + k)] = 1  # w_k
    d2[(p, q)] = one
    for k in range(1, length):
        d1[(p - k, q + k)] = one
        d2[(p - k, q + k)] = one
    return DoubleComplex(dims, d1, d2)


def direct_sum(parts: Sequence[DoubleComplex]) -> DoubleComplex:
    dims: dict[Slot, int] = {}
    offsets: list[dict[Slot, int]] = []
    for part in parts:
        off = {}
        for s, n in part.dims.items():
            off[s] = dims.get(s, 0)
            dims[s] = dims.get(s, 0) + n
        offsets.append(off)

    def assemble(which: str, step: Slot) -> dict[Slot, SparseMatrix]:
        cols: dict[Slot, list[Vector]] = {s: [{} for _ in range(n)] for s, n in dims.items()}
        for part, off in zip(parts, offsets):
            for s, m in getattr(part, which).items():
                tgt = (s[0] + step[0], s[1] + step[1])
                for j, col in enumerate(m.columns):
                    cols[s][off[s] + j] = {off[tgt] + i: c for i, c in col.items()}
        out = {}
        for s, cs in cols.items():
            tgt = (s[0] + step[0], s[1] + step[1])
            if any(cs) and tgt in dims:
                out[s] = SparseMatrix(dims[tgt], dims[s], cs)
        return out

    return DoubleComplex(dims, assemble("d1", (1, 0)), assemble("d2", (0, 1)))


def _random_unimodular(n: int, rng: random.Random) -> SparseMatrix:
    """Product of random unit lower and upper triangular integer matrices."""
    lower = [[1 if i == j else (rng.randint(-2, 2) if i > j else 0) for j in range(n)] for i in range(n)]
    upper = [[1 if i == j else (rng.randint(-2, 2) if i < j else 0) for j in range(n)] for i in range(n)]
    return SparseMatrix.from_dense(lower) @ SparseMatrix.from_dense(upper)


def change_basis(dc: DoubleComplex, rng: random.Random) -> DoubleComplex:
    gs = {s: _random_unimodular(n, rng) for s, n in dc.dims.items()}
    inv = {s: inverse(g) for s, g in gs.items()}
    d1 = {s: gs[(s[0] + 1, s[1])] @ m @ inv[s] for s, m in dc.d1.items()}
    d2 = {s: gs[(s[0], s[1] + 1)] @ m @ inv[s] for s, m in dc.d2.items()}
    return DoubleComplex(dict(dc.dims), d1, d2)


def random_double_complex(seed: int, size: tuple[int, int] = (4, 4), max_dim: int = 6) -> DoubleComplex:
    """Anticommuting double complex on a ``size`` grid assembled from elementary pieces.

    Pieces are single classes, ``d1`` and ``d2`` arrows, anticommuting
    squares and zig-zags of length 2 or 3; the sum is then conjugated by a
    random unimodular change of basis in every slot.
    """
    rng = random.Random(seed)
    P, Q = size
    load: dict[Slot, int] = {}
    parts: list[DoubleComplex] = []
    one = SparseMatrix(1, 1, [{0: Fraction(1)}])
    for _ in range(rng.randint(4, 14)):
        kind = rng.choice(["dot", "h", "v", "square", "zigzag"])
        p, q = rng.randrange(P), rng.randrange(Q)
        if kind == "dot":
            piece = DoubleComplex({(p, q): 1})
        elif kind == "h":
            piece = DoubleComplex({(p, q): 1, (p + 1, q): 1}, {(p, q): one})
        elif kind == "v":
            piece = DoubleComplex({(p, q): 1, (p, q + 1): 1}, {}, {(p, q): one})
        elif kind == "square":
            neg = SparseMatrix(1, 1, [{0: Fraction(-1)}])
            piece = DoubleComplex(
                {(p, q): 1, (p + 1, q): 1, (p, q + 1): 1, (p + 1, q + 1): 1},
                {(p, q): one, (p, q + 1): neg},
                {(p, q): one, (p + 1, q): one},
            )
        else:
            piece = staircase(rng.choice([2, 3]), (p, q))
        if any(not (0 <= s[0] < P and 0 <= s[1] < Q) for s in piece.dims):
            continue
        if any(load.get(s, 0) + n > max_dim for s, n in piece.dims.items()):
            continue
        for s, n in piece.dims.items():
            load[s] = load.get(s, 0) + n
        parts.append(piece)
    if not parts:
        parts.append(DoubleComplex({(0, 0): 1}))
    return change_basis(direct_sum(parts), rng)


def page_to_json(page: Page) -> dict[str, object]:
    return {
        "r": page.r,
        "dims": [[p, q, n] for (p, q), n in sorted(page.dims.items())],
        "differentials": [
            {"source": [p, q], "target": list(page.target((p, q))),
             "matrix": [[format_rational(x) for x in row] for row in m.to_dense()]}
            for (p, q), m in sorted(page.differentials.items())
        ],
    }
