"""Exact scalars, monodromy characters and value modules.

A character is the vector of monodromy exponents ``kappa_i`` in ``[0, 1)``,
one per divisor branch.  A value module is a finite basis of rank-one
local-system fibers, each carrying a character, optionally equipped with
Lie structure constants compatible with the character grading.

Indices are 0-based throughout: branch ``i`` is coordinate ``z_i`` for
``0 <= i < l``, and coordinates ``l <= j < d`` are smooth directions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


class ConfigurationError(ValueError):
    """Inconsistent model data (lengths, ranges, missing structure)."""


class PreconditionError(ValueError):
    """An operation was called outside its domain."""


def to_rational(x: object) -> Fraction:
    """Parse ``x`` into a :class:`Fraction`.

    Accepts ints, Fractions and strings ``"n/d"`` or ``"n"``.  Floats are
    rejected so that no binary rounding leaks into exact arithmetic.
    """
    if isinstance(x, bool):
        raise ConfigurationError(f"not a rational: {x!r}")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        text = x.strip()
        num, sep, den = text.partition("/")
        try:
            n = int(num)
            m = int(den) if sep else 1
        except ValueError:
            raise ConfigurationError(f"not a rational: {x!r}") from None
        if m == 0:
            raise ConfigurationError(f"zero denominator: {x!r}")
        return Fraction(n, m)
    raise ConfigurationError(f"not a rational: {x!r}")


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Character:
    """Monodromy exponents of a rank-one summand, one per log branch."""

    kappa: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        kappa = tuple(to_rational(k) for k in self.kappa)
        for k in kappa:
            if not 0 <= k < 1:
                raise ConfigurationError(f"character component {k} outside [0, 1)")
        object.__setattr__(self, "kappa", kappa)

    @classmethod
    def of(cls, *values: object) -> Character:
        return cls(tuple(to_rational(v) for v in values))

    @classmethod
    def trivial(cls, length: int) -> Character:
        return cls((Fraction(0),) * length)

    def __len__(self) -> int:
        return len(self.kappa)

    def __getitem__(self, i: int) -> Fraction:
        return self.kappa[i]

    def is_trivial(self) -> bool:
        return all(k == 0 for k in self.kappa)

    def drop(self, indices: Iterable[int]) -> Character:
        gone = set(indices)
        return Character(tuple(k for i, k in enumerate(self.kappa) if i not in gone))

    def __str__(self) -> str:
        return "(" + ", ".join(format_rational(k) for k in self.kappa) + ")"


def char_sum(c1: Character, c2: Character) -> tuple[Character, tuple[int, ...]]:
    """Add two characters mod 1, returning the sum and the integer carry.

    The carry records the monomial produced when multiplying canonical
    frames: ``mu_c1 * mu_c2 = prod z_i**carry_i * mu_(c1+c2)``.
    """
    if len(c1) != len(c2):
        raise ConfigurationError(
            f"character length mismatch: {len(c1)} vs {len(c2)}"
        )
    total = [x + y for x, y in zip(c1.kappa, c2.kappa)]
    carry = tuple(int(t >= 1) for t in total)
    return Character(tuple(t - c for t, c in zip(total, carry))), carry


# (a, b) -> {c: f_ab^c}
StructureTable = Mapping[tuple[int, int], Mapping[int, Fraction]]


@dataclass(frozen=True, eq=True)
class ValueModule:
    """Finite basis of characters with optional Lie structure constants.

    ``structure[(a, b)]`` maps ``c`` to the structure constant ``f_ab^c``
    so that ``[x_a, x_b] = z**carry(a, b) * sum_c f_ab^c x_c``.  Only nonzero
    entries are stored.
    """

    names: tuple[str, ...]
    characters: tuple[Character, ...]
    structure: StructureTable | None = field(default=None, compare=True)

    def __post_init__(self) -> None:
        if len(self.names) != len(self.characters):
            raise ConfigurationError("names and characters differ in length")
        if len(set(self.names)) != len(self.names):
            raise ConfigurationError("duplicate basis names")
        lengths = {len(c) for c in self.characters}
        if len(lengths) > 1:
            raise ConfigurationError(f"characters of different lengths: {sorted(lengths)}")
        if self.structure is not None:
            n = len(self.names)
            table: dict[tuple[int, int], dict[int, Fraction]] = {}
            for (a, b), row in self.structure.items():
                for c, coeff in row.items():
                    if not (0 <= a < n and 0 <= b < n and 0 <= c < n):
                        raise ConfigurationError(f"structure index out of range: {(a, b, c)}")
                    coeff = to_rational(coeff)
                    if coeff:
                        table.setdefault((a, b), {})[c] = coeff
            object.__setattr__(self, "structure", table)

    @classmethod
    def build(
        cls,
        basis: Sequence[tuple[str, Character]],
        brackets: Mapping[tuple[str, str], Mapping[str, object]] | None = None,
    ) -> ValueModule:
        """Construct from names; ``brackets`` is keyed by basis names."""
        names = tuple(name for name, _ in basis)
        chars = tuple(ch for _, ch in basis)
        if brackets is None:
            return cls(names, chars)
        index = {name: i for i, name in enumerate(names)}
        try:
            table = {
                (index[a], index[b]): {index[c]: to_rational(v) for c, v in row.items()}
                for (a, b), row in brackets.items()
            }
        except KeyError as exc:
            raise ConfigurationError(f"unknown basis name {exc.args[0]!r}") from None
        return cls(names, chars, table)

    def __hash__(self) -> int:
        table = None
        if self.structure is not None:
            table = tuple(sorted((k, tuple(sorted(row.items()))) for k, row in self.structure.items()))
        return hash((self.names, self.characters, table))

    def __len__(self) -> int:
        return len(self.names)

    @property
    def rank(self) -> int:
        """Number of log branches the characters are defined over."""
        return len(self.characters[0]) if self.characters else -1

    def index(self, name: str) -> int:
        return self.names.index(name)

    def bracket_coeffs(self, a: int, b: int) -> Mapping[int, Fraction]:
        if self.structure is None:
            raise ConfigurationError("value module has no structure constants")
        return self.structure.get((a, b), {})


@dataclass(frozen=True)
class ModelConfig:
    """Polydisc of dimension ``d`` with log divisor ``z_0 ... z_{l-1} = 0``."""

    d: int
    l: int
    values: ValueModule

    def __post_init__(self) -> None:
        if not 0 <= self.l <= self.d:
            raise ConfigurationError(f"need 0 <= l <= d, got l={self.l}, d={self.d}")
        for ch in self.values.characters:
            if len(ch) != self.l:
                raise ConfigurationError(
                    f"character {ch} has length {len(ch)}, expected l={self.l}"
                )

    def kappa(self, v: int, i: int) -> Fraction:
        return self.values.characters[v].kappa[i]


@dataclass
class ValidationReport:
    antisymmetry: list[tuple[int, int, int]] = field(default_factory=list)
    grading: list[tuple[int, int, int]] = field(default_factory=list)
    jacobi: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not (self.antisymmetry or self.grading or self.jacobi)

    def as_dict(self) -> dict[str, object]:
        return {
            "valid": self.valid,
            "antisymmetry": not self.antisymmetry,
            "grading": not self.grading,
            "jacobi": not self.jacobi,
            "failures": {
                "antisymmetry": [list(t) for t in self.antisymmetry],
                "grading": [list(t) for t in self.grading],
                "jacobi": [list(t) for t in self.jacobi],
            },
        }


def _bracket_with_carry(
    vm: ValueModule, x: Mapping[tuple[tuple[int, ...], int], Fraction], b: int
) -> dict[tuple[tuple[int, ...], int], Fraction]:
    """``[x, x_b]`` for ``x`` a combination of ``z**m x_c`` keyed by ``(m, c)``."""
    out: dict[tuple[tuple[int, ...], int], Fraction] = {}
    for (mono, a), coeff in x.items():
        _, carry = char_sum(vm.characters[a], vm.characters[b])
        shifted = tuple(m + c for m, c in zip(mono, carry))
        for c, f in vm.bracket_coeffs(a, b).items():
            key = (shifted, c)
            out[key] = out.get(key, Fraction(0)) + coeff * f
    return {k: v for k, v in out.items() if v}


def validate_value_module(vm: ValueModule) -> ValidationReport:
    """Check antisymmetry, character grading and the carry-adjusted Jacobi identity.

    Each Jacobi term is computed with its own accumulated carry monomial, so
    the identity is checked as an equality of polynomials in ``z``.
    """
    report = ValidationReport()
    if vm.structure is None:
        return report
    n = len(vm)
    zero = Fraction(0)
    for a, b in itertools.product(range(n), repeat=2):
        fab, fba = vm.structure.get((a, b), {}), vm.structure.get((b, a), {})
        for c in range(n):
            if fab.get(c, zero) != -fba.get(c, zero):
                report.antisymmetry.append((a, b, c))
            if fab.get(c, zero) and char_sum(vm.characters[a], vm.characters[b])[0] != vm.characters[c]:
                report.grading.append((a, b, c))
    if report.grading:
        return report
    unit = (0,) * vm.rank
    for a, b, c in itertools.combinations_with_replacement(range(n), 3):
        total: dict[tuple[tuple[int, ...], int], Fraction] = {}
        # [x_a, [x_b, x_c]] = -[[x_b, x_c], x_a], and cyclically
        for x, y, w in ((a, b, c), (b, c, a), (c, a, b)):
            inner = _bracket_with_carry(vm, {(unit, y): Fraction(1)}, w)
            outer = _bracket_with_carry(vm, inner, x)
            for k, v in outer.items():
                total[k] = total.get(k, zero) - v
        if any(total.values()):
            report.jacobi.append((a, b, c))
    return report


def stratum_maps(
    config: ModelConfig, S: Iterable[int]
) -> tuple[ModelConfig, dict[int, int], dict[int, int]]:
    """Restrict to the stratum ``z_i = 0, i in S`` and return index maps.

    Returns the stratum model together with the coordinate map and the
    value-basis map from old to new indices (only surviving entries).
    """
    S = sorted(set(S))
    if not S:
        raise PreconditionError("stratum index set must be nonempty")
    for i in S:
        if not 0 <= i < config.l:
            raise PreconditionError(f"branch index {i} outside 0..{config.l - 1}")
    coords = [j for j in range(config.d) if j not in S]
    coord_map = {old: new for new, old in enumerate(coords)}
    vm = config.values
    keep = [v for v, ch in enumerate(vm.characters) if all(ch[i] == 0 for i in S)]
    value_map = {old: new for new, old in enumerate(keep)}
    chars = tuple(vm.characters[v].drop(S) for v in keep)
    structure = None
    if vm.structure is not None:
        structure = {}
        for (a, b), row in vm.structure.items():
            if a in value_map and b in value_map:
                kept = {value_map[c]: f for c, f in row.items() if c in value_map}
                if kept:
                    structure[(value_map[a], value_map[b])] = kept
    values = ValueModule(tuple(vm.names[v] for v in keep), chars, structure)
    return ModelConfig(config.d - len(S), config.l - len(S), values), coord_map, value_map


def restrict_to_stratum(config: ModelConfig, S: Iterable[int]) -> ModelConfig:
    """Model on the stratum ``{z_i = 0 : i in S}`` with monodromy-invariant values."""
    return stratum_maps(config, S)[0]


@dataclass(frozen=True)
class Truncation:
    """Bounds on the total degree in ``z`` and in ``zbar`` of every monomial."""

    max_z_deg: int
    max_zbar_deg: int

    def __post_init__(self) -> None:
        if self.max_z_deg < 0 or self.max_zbar_deg < 0:
            raise ConfigurationError(f"negative truncation {self}")

    def raised(self, dz: int = 1, dzbar: int = 0) -> Truncation:
        return Truncation(self.max_z_deg + dz, self.max_zbar_deg + dzbar)

    def admits(self, a: Sequence[int], b: Sequence[int]) -> bool:
        return sum(a) <= self.max_z_deg and sum(b) <= self.max_zbar_deg
