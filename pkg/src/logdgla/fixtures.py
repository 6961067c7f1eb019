"""Standard models used by the test suites and the CLI."""

from __future__ import annotations

from .core import Character, ModelConfig, ValueModule


def abelian(d: int, *kappa: object, name: str = "mu") -> ModelConfig:
    """Rank-one local system with ``l = len(kappa)`` log branches and zero bracket."""
    values = ValueModule((name,), (Character.of(*kappa),), {})
    return ModelConfig(d, len(kappa), values)


def mixed(d: int, *kappas: tuple[object, ...]) -> ModelConfig:
    """Abelian module with several characters, named ``mu0, mu1, ...``."""
    l = len(kappas[0])
    values = ValueModule(
        tuple(f"mu{i}" for i in range(len(kappas))),
        tuple(Character.of(*k) for k in kappas),
        {},
    )
    return ModelConfig(d, l, values)


def gl2_values(off_diagonal: tuple[tuple[object, ...], tuple[object, ...]]) -> ValueModule:
    """``gl_2`` with ``E12``/``E21`` carrying the given characters.

    The two characters must sum to an integer vector componentwise, so that
    ``[E12, E21]`` lands on the trivial-character diagonal through a carry.
    """
    up, down = (Character.of(*k) for k in off_diagonal)
    zero = Character.trivial(len(up))
    brackets = {
        ("E12", "E21"): {"E11": 1, "E22": -1},
        ("E21", "E12"): {"E11": -1, "E22": 1},
        ("E11", "E12"): {"E12": 1},
        ("E12", "E11"): {"E12": -1},
        ("E22", "E12"): {"E12": -1},
        ("E12", "E22"): {"E12": 1},
        ("E11", "E21"): {"E21": -1},
        ("E21", "E11"): {"E21": 1},
        ("E22", "E21"): {"E21": 1},
        ("E21", "E22"): {"E21": -1},
    }
    basis = [("E11", zero), ("E22", zero), ("E12", up), ("E21", down)]
    return ValueModule.build(basis, brackets)


def gl2(d: int = 1, l: int = 1) -> ModelConfig:
    """``gl_2`` carry fixture: ``E12`` has character 2/3, ``E21`` has 1/3 on branch 0.

    Further branches (``l = 2``) use 1/2 on both off-diagonal elements.
    """
    up = ("2/3",) + ("1/2",) * (l - 1)
    down = ("1/3",) + ("1/2",) * (l - 1)
    return ModelConfig(d, l, gl2_values((up, down)))


def standard_fixtures() -> dict[str, ModelConfig]:
    """Character fixtures exercised by the axiom and acceptance suites."""
    return {
        "abelian_k0": abelian(1, 0),
        "abelian_k1/2": abelian(1, "1/2"),
        "abelian_k(1/3,1/2)": abelian(2, "1/3", "1/2"),
        "gl2_carry": gl2(1, 1),
    }
