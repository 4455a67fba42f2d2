"""Verification-suite inputs: one structure plus one payload, with metadata."""

from __future__ import annotations

from dataclasses import dataclass, field

from .derivations import Derivation
from .kh_module import BlockStructure, ModuleSpace
from .measure_ring import AtomSpace
from .morphisms import AlgebraMorphism
from .operator_algebra import Operator

KINDS = ("derivation", "automorphism", "star_iso", "axioms")


@dataclass(eq=False)
class Instance:
    """A generated or loaded problem instance.

    ``payload`` is a ``Derivation`` for derivation instances, an
    ``AlgebraMorphism`` for automorphism/star_iso instances, and a tuple of
    square ``Operator`` values for axiom instances.  Ground truth, when the
    instance was generated synthetically, holds the conjugating element and
    (for star_iso) the per-atom component permutations.
    """

    kind: str
    structure: ModuleSpace | BlockStructure
    payload: object
    seed: int
    params: dict = field(default_factory=dict)
    ground_truth: Operator | None = None
    permutations: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown instance kind {self.kind!r}")

    @property
    def atom_space(self) -> AtomSpace:
        if isinstance(self.structure, BlockStructure):
            return self.structure.space
        return self.structure.space
