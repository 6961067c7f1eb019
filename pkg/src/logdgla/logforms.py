"""Polynomial-coefficient logarithmic forms with values in a character-graded module.

A term is ``coeff * z^a zbar^b * dz_I/z_I ^ dz_J ^ dzbar_K (x) mu_v``.  For a
log branch ``i < l`` every holomorphic one-form factor is stored in the log
frame ``dz_i/z_i``; the smooth form ``dz_i`` is ``z_i * dz_i/z_i``, i.e. it
shows up as ``a_i >= 1``.  Smooth coordinates ``j >= l`` use ``dz_j``.

One-form factors are ordered as ``I`` ascending, then ``J`` ascending, then
``K`` ascending.  Both differentials prepend their new factor and sort it
into place, so ``dsecond`` picks up ``(-1)**(|I| + |J|)`` for passing the
holomorphic factors.  With this convention ``dprime`` and ``dsecond``
anticommute.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

from .core import (
    ConfigurationError,
    ModelConfig,
    PreconditionError,
    Truncation,
    char_sum,
    format_rational,
    stratum_maps,
    to_rational,
)

# (v, I, J, K, a, b)
Key = tuple[int, tuple[int, ...], tuple[int, ...], tuple[int, ...], tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True)
class Term:
    coeff: Fraction
    a: tuple[int, ...]
    b: tuple[int, ...]
    I: tuple[int, ...] = ()
    J: tuple[int, ...] = ()
    K: tuple[int, ...] = ()
    v: int = 0

    @property
    def key(self) -> Key:
        return (self.v, self.I, self.J, self.K, self.a, self.b)

    @property
    def bidegree(self) -> tuple[int, int]:
        return len(self.I) + len(self.J), len(self.K)


def _check_key(model: ModelConfig, key: Key) -> None:
    v, I, J, K, a, b = key
    d, l = model.d, model.l
    if not 0 <= v < len(model.values):
        raise ConfigurationError(f"value index {v} out of range")
    if len(a) != d or len(b) != d or min(a + b, default=0) < 0:
        raise ConfigurationError(f"bad exponent vectors {a}, {b} for d={d}")
    for name, idx, lo, hi in (("I", I, 0, l), ("J", J, l, d), ("K", K, 0, d)):
        if list(idx) != sorted(set(idx)) or any(not lo <= i < hi for i in idx):
            raise ConfigurationError(f"bad factor set {name}={idx} (allowed {lo}..{hi - 1})")


class LogForm:
    """Finite rational combination of terms over a fixed model.

    Terms are held merged, zero-pruned and sorted by ``(v, I, J, K, a, b)``;
    every constructor path normalizes, so two equal forms compare equal.
    """

    __slots__ = ("model", "_items")

    def __init__(self, model: ModelConfig, terms: Mapping[Key, Fraction] | Iterable[Term] = ()):
        self.model = model
        acc: dict[Key, Fraction] = {}
        items = terms.items() if isinstance(terms, Mapping) else ((t.key, t.coeff) for t in terms)
        for key, c in items:
            c = to_rational(c)
            if c:
                _check_key(model, key)
                acc[key] = acc.get(key, Fraction(0)) + c
        self._items: tuple[tuple[Key, Fraction], ...] = tuple(
            sorted((k, c) for k, c in acc.items() if c)
        )

    @classmethod
    def _trusted(cls, model: ModelConfig, acc: Mapping[Key, Fraction]) -> LogForm:
        out = cls.__new__(cls)
        out.model = model
        out._items = tuple(sorted((k, c) for k, c in acc.items() if c))
        return out

    @classmethod
    def term(
        cls,
        model: ModelConfig,
        coeff: object = 1,
        a: Sequence[int] | None = None,
        b: Sequence[int] | None = None,
        I: Iterable[int] = (),
        J: Iterable[int] = (),
        K: Iterable[int] = (),
        v: int | str = 0,
    ) -> LogForm:
        """Single-term form; ``v`` may be a basis name."""
        if isinstance(v, str):
            v = model.values.index(v)
        zero = (0,) * model.d
        key = (v, tuple(sorted(I)), tuple(sorted(J)), tuple(sorted(K)),
               tuple(a) if a is not None else zero, tuple(b) if b is not None else zero)
        return cls(model, {key: to_rational(coeff)})

    @classmethod
    def zero(cls, model: ModelConfig) -> LogForm:
        return cls(model)

    @property
    def terms(self) -> list[Term]:
        return [Term(c, k[4], k[5], k[1], k[2], k[3], k[0]) for k, c in self._items]

    def items(self) -> tuple[tuple[Key, Fraction], ...]:
        return self._items

    def as_dict(self) -> dict[Key, Fraction]:
        return dict(self._items)

    def __iter__(self) -> Iterator[Term]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self._items)

    def __bool__(self) -> bool:
        return bool(self._items)

    def is_zero(self) -> bool:
        return not self._items

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LogForm):
            return NotImplemented
        return self.model == other.model and self._items == other._items

    def __hash__(self) -> int:
        return hash(self._items)

    def _same_model(self, other: LogForm) -> None:
        if self.model != other.model:
            raise ConfigurationError("forms live over different models")

    def __add__(self, other: LogForm) -> LogForm:
        self._same_model(other)
        acc = dict(self._items)
        for k, c in other._items:
            acc[k] = acc.get(k, Fraction(0)) + c
        return LogForm._trusted(self.model, acc)

    def __neg__(self) -> LogForm:
        return LogForm._trusted(self.model, {k: -c for k, c in self._items})

    def __sub__(self, other: LogForm) -> LogForm:
        return self + (-other)

    def __mul__(self, scalar: object) -> LogForm:
        s = to_rational(scalar)
        return LogForm._trusted(self.model, {k: s * c for k, c in self._items})

    __rmul__ = __mul__

    def bidegrees(self) -> set[tuple[int, int]]:
        return {(len(k[1]) + len(k[2]), len(k[3])) for k, _ in self._items}

    def bidegree(self) -> tuple[int, int] | None:
        """``(p, q)`` when homogeneous, else None (also None for zero)."""
        degs = self.bidegrees()
        return degs.pop() if len(degs) == 1 else None

    def total_degree(self) -> int | None:
        degs = {p + q for p, q in self.bidegrees()}
        return degs.pop() if len(degs) == 1 else None

    def within(self, trunc: Truncation) -> bool:
        return all(trunc.admits(k[4], k[5]) for k, _ in self._items)

    def to_json(self) -> list[dict[str, object]]:
        names = self.model.values.names
        return [
            {"coeff": format_rational(c), "a": list(a), "b": list(b),
             "I": list(I), "J": list(J), "K": list(K), "v": names[v]}
            for (v, I, J, K, a, b), c in self._items
        ]

    @classmethod
    def from_json(cls, model: ModelConfig, data: Iterable[Mapping[str, object]]) -> LogForm:
        terms = []
        for t in data:
            v = t.get("v", 0)
            terms.append(Term(
                to_rational(t["coeff"]), tuple(t["a"]), tuple(t["b"]),
                tuple(t.get("I", ())), tuple(t.get("J", ())), tuple(t.get("K", ())),
                model.values.index(v) if isinstance(v, str) else int(v),
            ))
        return cls(model, terms)

    def __repr__(self) -> str:
        if not self._items:
            return "LogForm(0)"
        return "LogForm(" + " + ".join(_term_str(self.model, k, c) for k, c in self._items) + ")"


def _term_str(model: ModelConfig, key: Key, c: Fraction) -> str:
    v, I, J, K, a, b = key
    parts = [str(c)]
    parts += [f"z{i}^{e}" if e > 1 else f"z{i}" for i, e in enumerate(a) if e]
    parts += [f"zb{i}^{e}" if e > 1 else f"zb{i}" for i, e in enumerate(b) if e]
    forms = [f"dz{i}/z{i}" for i in I] + [f"dz{j}" for j in J] + [f"dzb{k}" for k in K]
    s = "*".join(parts)
    if forms:
        s += " " + "^".join(forms)
    return s + f" (x) {model.values.names[v]}"


def normal_form(f: LogForm) -> LogForm:
    """Canonical order, merged duplicates, zeros pruned.

    Forms are normalized on construction, so this rebuilds from the term list
    and is idempotent.
    """
    return LogForm(f.model, f.terms)


def _parity(n: int) -> int:
    return -1 if n & 1 else 1


def _bump(t: tuple[int, ...], i: int, delta: int) -> tuple[int, ...]:
    return t[:i] + (t[i] + delta,) + t[i + 1:]


def _insert(t: tuple[int, ...], i: int) -> tuple[tuple[int, ...], int]:
    """Insert ``i`` into sorted ``t``; returns new tuple and count of smaller entries."""
    pos = sum(1 for x in t if x < i)
    return t[:pos] + (i,) + t[pos:], pos


def dprime(f: LogForm) -> LogForm:
    """Holomorphic part of the connection.

    Log directions act by ``P_i = z_i d/dz_i + kappa_i`` in the frame
    ``dz_i/z_i``; smooth directions are ordinary ``d/dz_j`` with ``dz_j``.
    """
    model = f.model
    d, l = model.d, model.l
    chars = model.values.characters
    acc: dict[Key, Fraction] = {}
    for (v, I, J, K, a, b), c in f.items():
        for i in range(l):
            if i in I:
                continue
            eig = a[i] + chars[v].kappa[i]
            if not eig:
                continue
            newI, pos = _insert(I, i)
            key = (v, newI, J, K, a, b)
            acc[key] = acc.get(key, Fraction(0)) + _parity(pos) * eig * c
        for j in range(l, d):
            if j in J or not a[j]:
                continue
            newJ, pos = _insert(J, j)
            key = (v, I, newJ, K, _bump(a, j, -1), b)
            acc[key] = acc.get(key, Fraction(0)) + _parity(len(I) + pos) * a[j] * c
    return LogForm._trusted(model, acc)


def dsecond(f: LogForm) -> LogForm:
    """Antiholomorphic differential ``d''``, acting on the ``zbar`` exponents."""
    model = f.model
    acc: dict[Key, Fraction] = {}
    for (v, I, J, K, a, b), c in f.items():
        hol = len(I) + len(J)
        for k in range(model.d):
            if k in K or not b[k]:
                continue
            newK, pos = _insert(K, k)
            key = (v, I, J, newK, a, _bump(b, k, -1))
            acc[key] = acc.get(key, Fraction(0)) + _parity(hol + pos) * b[k] * c
    return LogForm._trusted(model, acc)


def dtotal(f: LogForm) -> LogForm:
    return dprime(f) + dsecond(f)


def _wedge_sign(seq1: Sequence[int], seq2: Sequence[int]) -> int:
    """Sign of sorting ``seq1 + seq2`` (both sorted); 0 on a repeated factor."""
    if set(seq1) & set(seq2):
        return 0
    inversions = sum(1 for x in seq1 for y in seq2 if y < x)
    return _parity(inversions)


def _merge(x: tuple[int, ...], y: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(sorted(x + y))


def bracket(f: LogForm, g: LogForm) -> LogForm:
    """Graded bracket: wedge the forms, multiply coefficients and carry monomials, bracket values."""
    f._same_model(g)
    model = f.model
    vm = model.values
    if vm.structure is None:
        raise ConfigurationError("bracket needs a value module with structure constants")
    d, l = model.d, model.l
    acc: dict[Key, Fraction] = {}
    for (v1, I1, J1, K1, a1, b1), c1 in f.items():
        seq1 = I1 + J1 + tuple(d + k for k in K1)
        for (v2, I2, J2, K2, a2, b2), c2 in g.items():
            consts = vm.bracket_coeffs(v1, v2)
            if not consts:
                continue
            seq2 = I2 + J2 + tuple(d + k for k in K2)
            sign = _wedge_sign(seq1, seq2)
            if not sign:
                continue
            _, carry = char_sum(vm.characters[v1], vm.characters[v2])
            a = tuple(x + y + (carry[i] if i < l else 0) for i, (x, y) in enumerate(zip(a1, a2)))
            b = tuple(x + y for x, y in zip(b1, b2))
            I, J, K = _merge(I1, I2), _merge(J1, J2), _merge(K1, K2)
            for v, fc in consts.items():
                key = (v, I, J, K, a, b)
                acc[key] = acc.get(key, Fraction(0)) + sign * c1 * c2 * fc
    return LogForm._trusted(model, acc)


def residue(f: LogForm, i: int) -> LogForm:
    """Residue along ``z_i = 0``, landing in forms over the stratum model.

    Only terms whose value is invariant under the monodromy around branch
    ``i`` contribute.  The surviving terms are restricted to ``z_i = 0``,
    which kills any ``z_i``, ``zbar_i`` or ``dzbar_i`` factor.  Moving
    ``dz_i/z_i`` to the front before removing it fixes the sign.
    """
    model = f.model
    if not 0 <= i < model.l:
        raise PreconditionError(f"branch index {i} outside 0..{model.l - 1}")
    stratum, coord_map, value_map = stratum_maps(model, [i])
    chars = model.values.characters

    def remap(idx: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(coord_map[x] for x in idx)

    acc: dict[Key, Fraction] = {}
    for (v, I, J, K, a, b), c in f.items():
        if i not in I or chars[v].kappa[i] or a[i] or b[i] or i in K:
            continue
        pos = I.index(i)
        newI = remap(tuple(x for x in I if x != i))
        key = (value_map[v], newI, remap(J), remap(K), a[:i] + a[i + 1:], b[:i] + b[i + 1:])
        acc[key] = acc.get(key, Fraction(0)) + _parity(pos) * c
    return LogForm._trusted(stratum, acc)


def residue_m(f: LogForm, S: Iterable[int]) -> LogForm:
    """Iterated residue over the branches in ``S``, taken in ascending order."""
    S = sorted(set(S))
    if not S:
        raise PreconditionError("residue_m needs a nonempty branch set")
    for i in S:
        if not 0 <= i < f.model.l:
            raise PreconditionError(f"branch index {i} outside 0..{f.model.l - 1}")
    out = f
    for removed, i in enumerate(S):
        out = residue(out, i - removed)
    return out


def is_admissible(f: LogForm) -> bool:
    """True when every log factor sits on a nontrivial character or is really smooth."""
    chars = f.model.values.characters
    return all(
        chars[v].kappa[i] or a[i] >= 1
        for (v, I, _J, _K, a, _b), _c in f.items()
        for i in I
    )


def _compositions(n: int, total: int) -> list[tuple[int, ...]]:
    """Exponent vectors of length ``n`` with entry sum at most ``total``."""
    if n == 0:
        return [()]
    out = []
    for first in range(total + 1):
        out.extend((first,) + rest for rest in _compositions(n - 1, total - first))
    return out


@lru_cache(maxsize=None)
def exponent_vectors(n: int, total: int) -> tuple[tuple[int, ...], ...]:
    return tuple(sorted(_compositions(n, total)))


@lru_cache(maxsize=None)
def basis_keys(model: ModelConfig, p: int, q: int, trunc: Truncation, admissible: bool = True) -> tuple[Key, ...]:
    """All term keys of bidegree ``(p, q)`` within ``trunc``, in canonical order.

    With ``admissible=True`` only keys whose log factors have a nontrivial
    character or ``a_i >= 1`` are kept, which spans the truncated admissible
    space since admissibility is a per-term condition.
    """
    d, l = model.d, model.l
    chars = model.values.characters
    zs = exponent_vectors(d, trunc.max_z_deg)
    zbs = exponent_vectors(d, trunc.max_zbar_deg)
    keys: list[Key] = []
    for v in range(len(model.values)):
        for hol in itertools.combinations(range(d), p):
            I = tuple(i for i in hol if i < l)
            J = tuple(j for j in hol if j >= l)
            for K in itertools.combinations(range(d), q):
                for a in zs:
                    if admissible and any(not chars[v].kappa[i] and not a[i] for i in I):
                        continue
                    for b in zbs:
                        keys.append((v, I, J, K, a, b))
    keys.sort()
    return tuple(keys)


def random_form(
    model: ModelConfig,
    p: int,
    q: int,
    max_deg: int,
    seed: int,
    admissible: bool = True,
    max_terms: int = 3,
) -> LogForm:
    """Deterministic pseudorandom ``(p, q)``-form with monomial degrees at most ``max_deg``.

    Returns the zero form when the requested space is empty.
    """
    if not (0 <= p <= model.d and 0 <= q <= model.d):
        raise PreconditionError(f"bidegree ({p}, {q}) outside 0..{model.d}")
    keys = basis_keys(model, p, q, Truncation(max_deg, max_deg), admissible)
    if not keys:
        return LogForm.zero(model)
    rng = random.Random(seed)
    acc: dict[Key, Fraction] = {}
    for _ in range(rng.randint(1, max_terms)):
        key = keys[rng.randrange(len(keys))]
        num = rng.choice([-3, -2, -1, 1, 2, 3])
        acc[key] = acc.get(key, Fraction(0)) + Fraction(num, rng.randint(1, 3))
    out = LogForm._trusted(model, acc)
    return out if out else random_form(model, p, q, max_deg, seed + 7919, admissible, max_terms)
