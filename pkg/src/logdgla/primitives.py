"""Primitives for ``d'``: solve ``d' alpha = omega`` on admissible forms.

Two routes are provided.  :func:`peel_primitive` is constructive: it strips
log directions from the highest branch index down, inverting ``P_k``
diagonally on monomials, and finishes the smooth directions with the Euler
homotopy.  :func:`solve_dprime` assembles the matrix of ``d'`` on the
truncated admissible basis and solves exactly; it shares nothing with the
peeling route beyond ``dprime`` itself.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .core import ModelConfig, PreconditionError, Truncation
from .linalg import SparseMatrix, Span, nullspace, solve
from .logforms import Key, LogForm, basis_keys, dprime, is_admissible

__all__ = [
    "SolverFailure",
    "Truncation",
    "monomial_inverse",
    "peel_primitive",
    "solve_dprime",
    "verify_primitive",
    "dprime_matrix",
    "dprime_block",
    "closed_form_from_kernel",
    "cohomology_defect",
]


class SolverFailure(RuntimeError):
    """The constructive solver met an obstruction it cannot invert."""


def monomial_inverse(model: ModelConfig, v: int, i: int, a: Sequence[int], b: Sequence[int] = ()) -> Fraction | None:
    """Inverse eigenvalue of ``P_i`` on ``z^a zbar^b mu_v``; None on the kernel direction."""
    if not 0 <= i < model.l:
        raise PreconditionError(f"branch index {i} outside 0..{model.l - 1}")
    eig = a[i] + model.kappa(v, i)
    return 1 / eig if eig else None


def _check_closed_admissible(omega: LogForm) -> tuple[int, int]:
    deg = omega.bidegree()
    if deg is None:
        raise PreconditionError("omega must be nonzero and homogeneous")
    if deg[0] < 1:
        raise PreconditionError(f"primitives need holomorphic degree >= 1, got {deg[0]}")
    if not is_admissible(omega):
        raise PreconditionError("omega is not admissible")
    return deg


def _euler_homotopy(u: LogForm) -> LogForm:
    """Primitive of a d'-closed form with only smooth holomorphic factors.

    Contracts with the Euler field of the smooth coordinates and divides by
    smooth degree plus form degree.
    """
    model = u.model
    l = model.l
    acc: dict[Key, Fraction] = {}
    for (v, I, J, K, a, b), c in u.items():
        if I:
            raise SolverFailure("log factor left after peeling")
        weight = sum(a[l:]) + len(J)
        for pos, j in enumerate(J):
            newJ = J[:pos] + J[pos + 1:]
            newa = a[:j] + (a[j] + 1,) + a[j + 1:]
            key = (v, I, newJ, K, newa, b)
            sign = -1 if pos & 1 else 1
            acc[key] = acc.get(key, Fraction(0)) + sign * c / weight
    return LogForm._trusted(model, acc)


def peel_primitive(omega: LogForm, trunc: Truncation | None = None) -> LogForm:
    """Constructive primitive of a d'-closed admissible form of degree ``p >= 1``.

    Peels ``omega = dz_k/z_k ^ psi + beta`` for ``k`` running from the highest
    branch down, replacing each coefficient of ``psi`` by its ``P_k``
    preimage; the remainder has only smooth factors and is handled by the
    Euler homotopy, which raises ``z``-degree by one.
    """
    _check_closed_admissible(omega)
    if trunc is not None and not omega.within(trunc):
        raise PreconditionError(f"omega exceeds truncation {trunc}")
    if dprime(omega):
        raise PreconditionError("omega is not d'-closed")
    model = omega.model
    alpha = LogForm.zero(model)
    u = omega
    for k in reversed(range(model.l)):
        acc: dict[Key, Fraction] = {}
        for (v, I, J, K, a, b), c in u.items():
            if k not in I:
                continue
            if I[-1] != k:
                raise SolverFailure(f"factor above branch {k} survived peeling")
            inv = monomial_inverse(model, v, k, a, b)
            if inv is None:
                raise SolverFailure(f"P_{k} not invertible on {a} for value {v}")
            sign = -1 if (len(I) - 1) & 1 else 1
            key = (v, I[:-1], J, K, a, b)
            acc[key] = acc.get(key, Fraction(0)) + sign * inv * c
        big_omega = LogForm._trusted(model, acc)
        alpha = alpha + big_omega
        u = u - dprime(big_omega)
    alpha = alpha + _euler_homotopy(u)
    if dprime(alpha) != omega:
        raise SolverFailure("peeled primitive does not reproduce omega")
    return alpha


def verify_primitive(omega: LogForm, alpha: LogForm) -> bool:
    return dprime(alpha) == omega


def dprime_matrix(model: ModelConfig, p: int, q: int, trunc: Truncation) -> tuple[SparseMatrix, tuple[Key, ...], tuple[Key, ...]]:
    """Matrix of ``d'`` from admissible ``(p, q)`` to admissible ``(p+1, q)`` within ``trunc``.

    Returns the matrix with its column (source) and row (target) keys.
    """
    src = basis_keys(model, p, q, trunc, True)
    dst = basis_keys(model, p + 1, q, trunc, True) if p < model.d else ()
    return _matrix(model, src, dst), src, dst


def _matrix(model: ModelConfig, src: Sequence[Key], dst: Sequence[Key]) -> SparseMatrix:
    row = {k: i for i, k in enumerate(dst)}
    cols = []
    for key in src:
        image = dprime(LogForm._trusted(model, {key: Fraction(1)}))
        cols.append({row[k]: c for k, c in image.items()})
    return SparseMatrix(len(dst), len(src), cols)


def _block(key: Key, l: int) -> tuple:
    """Data that ``d'`` never changes: value, antiholomorphic part, log exponents."""
    v, _I, _J, K, a, b = key
    return (v, K, b, a[:l])


@lru_cache(maxsize=None)
def _blocks(model: ModelConfig, p: int, q: int, trunc: Truncation) -> dict[tuple, tuple[Key, ...]]:
    out: dict[tuple, list[Key]] = {}
    for key in basis_keys(model, p, q, trunc, True):
        out.setdefault(_block(key, model.l), []).append(key)
    return {blk: tuple(keys) for blk, keys in out.items()}


def dprime_block(model: ModelConfig, p: int, q: int, trunc: Truncation, block: tuple) -> tuple[SparseMatrix, tuple[Key, ...], tuple[Key, ...]]:
    """Restriction of :func:`dprime_matrix` to one block of invariant data."""
    src = _blocks(model, p, q, trunc).get(block, ())
    dst = _blocks(model, p + 1, q, trunc).get(block, ()) if p < model.d else ()
    return _matrix(model, src, dst), src, dst


def solve_dprime(omega: LogForm, trunc: Truncation) -> LogForm | None:
    """Exact linear solve of ``d' alpha = omega`` with ``alpha`` admissible within ``trunc + 1``.

    ``d'`` preserves the value index, the antiholomorphic data and the log
    exponents, so the system splits into independent blocks and only the
    blocks touched by ``omega`` are assembled.
    """
    p, q = _check_closed_admissible(omega)
    if not omega.within(trunc):
        raise PreconditionError(f"omega exceeds truncation {trunc}")
    model = omega.model
    wide = trunc.raised(1)
    by_block: dict[tuple, dict[Key, Fraction]] = {}
    for key, c in omega.items():
        by_block.setdefault(_block(key, model.l), {})[key] = c
    acc: dict[Key, Fraction] = {}
    for blk, part in sorted(by_block.items()):
        mat, src, dst = dprime_block(model, p - 1, q, wide, blk)
        row = {k: i for i, k in enumerate(dst)}
        rhs = {}
        for k, c in part.items():
            if k not in row:
                return None
            rhs[row[k]] = c
        x = solve(mat, rhs)
        if x is None:
            return None
        for j, c in x.items():
            acc[src[j]] = c
    return LogForm._trusted(model, acc)


def closed_form_from_kernel(model: ModelConfig, p: int, q: int, trunc: Truncation, seed: int) -> LogForm:
    """Random d'-closed admissible ``(p, q)``-form drawn from an enumerated kernel basis.

    Picks one to three random blocks, computes the kernel of ``d'`` on each
    exactly and combines the kernel vectors with random coefficients.
    """
    blocks = _blocks(model, p, q, trunc)
    if not blocks:
        return LogForm.zero(model)
    rng = random.Random(seed)
    names = sorted(blocks)
    acc: dict[Key, Fraction] = {}
    for blk in rng.sample(names, min(len(names), rng.randint(1, 3))):
        mat, src, _ = dprime_block(model, p, q, trunc, blk)
        for vec in nullspace(mat):
            c = Fraction(rng.choice([-2, -1, 1, 2]), rng.randint(1, 3))
            for j, x in vec.items():
                acc[src[j]] = acc.get(src[j], Fraction(0)) + c * x
    return LogForm._trusted(model, acc)


def cohomology_defect(model: ModelConfig, p: int, q: int, trunc: Truncation) -> int:
    """Dimension of closed admissible ``(p, q)``-forms within ``trunc`` not hit from ``trunc + 1``.

    Zero means every closed form in the truncation has a primitive with one
    extra degree of headroom, i.e. the truncated ``H^p_{d'}`` vanishes.
    """
    wide = trunc.raised(1)
    defect = 0
    for blk in sorted(_blocks(model, p, q, trunc)):
        mat, src, _ = dprime_block(model, p, q, trunc, blk)
        kernel = nullspace(mat)
        if not kernel:
            continue
        if p == 0:
            defect += len(kernel)
            continue
        prev, psrc, pdst = dprime_block(model, p - 1, q, wide, blk)
        index = {k: i for i, k in enumerate(pdst)}
        image = Span(prev.columns)
        for vec in kernel:
            lifted = {}
            for j, x in vec.items():
                if src[j] not in index:
                    lifted = None
                    break
                lifted[index[src[j]]] = x
            if lifted is None or lifted not in image:
                defect += 1
    return defect
