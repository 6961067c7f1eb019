"""Seeded property checks of the DGLA structure on admissible log forms."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .core import ModelConfig
from .logforms import LogForm, bracket, dprime, dsecond, dtotal, is_admissible, random_form

AXIOMS = ("antisymmetry", "jacobi", "leibniz")
IDENTITIES = ("dprime_squared", "dsecond_squared", "anticommute")
CLOSURE = ("bracket_closed", "dprime_closed", "dsecond_closed")


def _sign(n: int) -> int:
    return -1 if n & 1 else 1


@dataclass
class AxiomReport:
    samples: int
    failures: dict[str, list[int]] = field(default_factory=dict)

    def ok(self, name: str) -> bool:
        return not self.failures.get(name)

    @property
    def passed(self) -> bool:
        return not any(self.failures.values())

    def as_dict(self) -> dict[str, object]:
        names = AXIOMS + IDENTITIES + CLOSURE
        return {
            "samples": self.samples,
            "checks": {n: self.ok(n) for n in names},
            "failing_samples": {n: self.failures[n] for n in names if self.failures.get(n)},
        }


def random_homogeneous(model: ModelConfig, rng: random.Random, max_deg: int) -> LogForm:
    p, q = rng.randint(0, model.d), rng.randint(0, model.d)
    return random_form(model, p, q, max_deg, rng.randrange(2**31), admissible=True, max_terms=3)


def check_sample(x: LogForm, y: LogForm, z: LogForm) -> set[str]:
    """Names of the checks violated by one triple of homogeneous forms."""
    bad: set[str] = set()
    i, j, k = (f.total_degree() or 0 for f in (x, y, z))
    xy = bracket(x, y)
    if xy + bracket(y, x) * _sign(i * j):
        bad.add("antisymmetry")
    jac = (
        bracket(x, bracket(y, z)) * _sign(k * i)
        + bracket(y, bracket(z, x)) * _sign(i * j)
        + bracket(z, xy) * _sign(j * k)
    )
    if jac:
        bad.add("jacobi")
    if dtotal(xy) != bracket(dtotal(x), y) + bracket(x, dtotal(y)) * _sign(i):
        bad.add("leibniz")
    dx, ddx = dprime(x), dsecond(x)
    if dprime(dx):
        bad.add("dprime_squared")
    if dsecond(ddx):
        bad.add("dsecond_squared")
    if dprime(ddx) + dsecond(dx):
        bad.add("anticommute")
    if not is_admissible(xy):
        bad.add("bracket_closed")
    if not is_admissible(dx):
        bad.add("dprime_closed")
    if not is_admissible(ddx):
        bad.add("dsecond_closed")
    return bad


def check_axioms(model: ModelConfig, samples: int = 500, seed: int = 0, max_deg: int = 2) -> AxiomReport:
    """Run every check on ``samples`` random triples drawn from one seeded stream."""
    rng = random.Random(seed)
    report = AxiomReport(samples, {n: [] for n in AXIOMS + IDENTITIES + CLOSURE})
    for s in range(samples):
        x, y, z = (random_homogeneous(model, rng, max_deg) for _ in range(3))
        for name in check_sample(x, y, z):
            report.failures[name].append(s)
    return report
