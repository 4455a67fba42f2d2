"""Finite atomic measure spaces and the ring of per-atom complex values.

The ring of measurable functions is modelled on a finite set of atoms: a
ring element holds one complex value per atom, idempotents are boolean
indicators, and almost-everywhere statements become exact per-atom
statements.  Atom weights record the measure of each atom; they are carried
for fidelity but never enter the algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AtomSpaceMismatch,
    DivisionBySingular,
    LengthMismatch,
    NotNonnegative,
    NotReal,
)
from .tolerances import TAU_EQ, TAU_ZERO


@dataclass(frozen=True)
class AtomSpace:
    """A finite measure space given by strictly positive atom weights."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        weights = tuple(float(w) for w in self.weights)
        if len(weights) < 1:
            raise ValueError("an atom space needs at least one atom")
        if any(not np.isfinite(w) or w <= 0.0 for w in weights):
            raise ValueError("atom weights must be finite and strictly positive")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, atom_count: int, weight: float = 1.0) -> "AtomSpace":
        return cls((weight,) * atom_count)

    @property
    def atom_count(self) -> int:
        return len(self.weights)

    def __repr__(self) -> str:
        return f"AtomSpace({self.atom_count} atoms)"


def _frozen_complex(values, count: int) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.shape != (count,):
        raise ValueError(f"expected {count} values, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def check_same_space(a: "AtomSpace", b: "AtomSpace") -> None:
    if a != b:
        raise AtomSpaceMismatch(f"{a!r} vs {b!r}")


@dataclass(frozen=True, eq=False)
class RingElement:
    """One complex value per atom of a fixed atom space."""

    space: AtomSpace
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values", _frozen_complex(self.values, self.space.atom_count)
        )

    @classmethod
    def constant(cls, space: AtomSpace, value: complex) -> "RingElement":
        return cls(space, np.full(space.atom_count, value, dtype=np.complex128))

    @classmethod
    def zero(cls, space: AtomSpace) -> "RingElement":
        return cls.constant(space, 0.0)

    @classmethod
    def one(cls, space: AtomSpace) -> "RingElement":
        return cls.constant(space, 1.0)

    def conj(self) -> "RingElement":
        return RingElement(self.space, np.conj(self.values))

    def modulus(self) -> "RingElement":
        """Pointwise absolute value |a|, a nonnegative element."""
        return RingElement(self.space, np.abs(self.values).astype(np.complex128))

    def real_part(self) -> np.ndarray:
        return self.values.real

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_real(self, tol: float = TAU_EQ) -> bool:
        return bool(
            np.all(np.abs(self.values.imag) <= tol * (1.0 + np.abs(self.values)))
        )

    def is_nonnegative(self, tol: float = TAU_EQ) -> bool:
        if not self.is_real(tol):
            return False
        return bool(
            np.all(self.values.real >= -tol * (1.0 + np.abs(self.values)))
        )

    def is_zero(self, tol: float = TAU_EQ) -> bool:
        return bool(np.all(np.abs(self.values) <= tol))

    # Arithmetic sugar; the named entry point is ring_arith below.
    # Unknown operands fall through so module vectors and operators can
    # pick the product up via their own __rmul__.
    def __add__(self, other):
        lifted = _lift(other, self.space)
        return NotImplemented if lifted is None else ring_arith(self, lifted, "add")

    def __radd__(self, other):
        lifted = _lift(other, self.space)
        return NotImplemented if lifted is None else ring_arith(lifted, self, "add")

    def __sub__(self, other):
        lifted = _lift(other, self.space)
        return NotImplemented if lifted is None else ring_arith(self, lifted, "sub")

    def __rsub__(self, other):
        lifted = _lift(other, self.space)
        return NotImplemented if lifted is None else ring_arith(lifted, self, "sub")

    def __mul__(self, other):
        lifted = _lift(other, self.space)
        return NotImplemented if lifted is None else ring_arith(self, lifted, "mul")

    def __rmul__(self, other):
        lifted = _lift(other, self.space)
        return NotImplemented if lifted is None else ring_arith(lifted, self, "mul")

    def __truediv__(self, other):
        lifted = _lift(other, self.space)
        return NotImplemented if lifted is None else ring_arith(self, lifted, "div")

    def __neg__(self) -> "RingElement":
        return RingElement(self.space, -self.values)

    def __repr__(self) -> str:
        return f"RingElement({np.array2string(self.values, precision=5)})"


def _lift(value, space: AtomSpace) -> "RingElement | None":
    if isinstance(value, RingElement):
        return value
    if isinstance(value, Idempotent):
        return value.as_ring()
    if isinstance(value, (int, float, complex, np.number)):
        return RingElement.constant(space, complex(value))
    return None


@dataclass(frozen=True, eq=False)
class Idempotent:
    """A boolean indicator per atom; the 0/1 elements of the ring."""

    space: AtomSpace
    indicator: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.indicator, dtype=bool)
        if arr.shape != (self.space.atom_count,):
            raise ValueError(
                f"expected {self.space.atom_count} flags, got shape {arr.shape}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "indicator", arr)

    @classmethod
    def full(cls, space: AtomSpace) -> "Idempotent":
        return cls(space, np.ones(space.atom_count, dtype=bool))

    @classmethod
    def empty(cls, space: AtomSpace) -> "Idempotent":
        return cls(space, np.zeros(space.atom_count, dtype=bool))

    def as_ring(self) -> RingElement:
        return RingElement(self.space, self.indicator.astype(np.complex128))

    def is_full(self) -> bool:
        return bool(np.all(self.indicator))

    def is_empty(self) -> bool:
        return bool(~np.any(self.indicator))

    # Lattice operations are exact on the indicators.
    def meet(self, other: "Idempotent") -> "Idempotent":
        check_same_space(self.space, other.space)
        return Idempotent(self.space, self.indicator & other.indicator)

    def join(self, other: "Idempotent") -> "Idempotent":
        check_same_space(self.space, other.space)
        return Idempotent(self.space, self.indicator | other.indicator)

    def complement(self) -> "Idempotent":
        return Idempotent(self.space, ~self.indicator)

    __and__ = meet
    __or__ = join
    __invert__ = complement

    def __mul__(self, other):
        if isinstance(other, Idempotent):
            return self.meet(other)
        return self.as_ring() * other

    def __rmul__(self, other):
        return self.__mul__(other)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Idempotent)
            and self.space == other.space
            and bool(np.array_equal(self.indicator, other.indicator))
        )

    def __hash__(self) -> int:
        return hash((self.space, self.indicator.tobytes()))

    def __repr__(self) -> str:
        bits = "".join("1" if b else "0" for b in self.indicator)
        return f"Idempotent({bits})"


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    """Pairwise disjoint idempotents over one atom space summing to one."""

    parts: tuple[Idempotent, ...]

    def __post_init__(self) -> None:
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("a partition of unity needs at least one part")
        space = parts[0].space
        total = np.zeros(space.atom_count, dtype=int)
        for part in parts:
            check_same_space(space, part.space)
            total += part.indicator.astype(int)
        if not np.all(total == 1):
            raise ValueError("parts must be disjoint and cover every atom")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def trivial(cls, space: AtomSpace) -> "PartitionOfUnity":
        return cls((Idempotent.full(space),))

    @property
    def space(self) -> AtomSpace:
        return self.parts[0].space

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def part_index(self) -> np.ndarray:
        """Per atom, the index of the part containing it."""
        idx = np.zeros(self.space.atom_count, dtype=int)
        for k, part in enumerate(self.parts):
            idx[part.indicator] = k
        return idx


_OPS = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": np.divide,
}


def ring_arith(a: RingElement, b: RingElement, op: str) -> RingElement:
    """Pointwise ring arithmetic; ``op`` is one of add/sub/mul/div."""
    if op not in _OPS:
        raise ValueError(f"unknown ring operation {op!r}")
    check_same_space(a.space, b.space)
    if op == "div" and np.any(np.abs(b.values) <= TAU_ZERO):
        raise DivisionBySingular("divisor vanishes on some atom")
    return RingElement(a.space, _OPS[op](a.values, b.values))


def sqrt_nonneg(a: RingElement, tol: float = TAU_EQ) -> RingElement:
    """Pointwise square root of a nonnegative element."""
    if not a.is_nonnegative(tol):
        raise NotNonnegative("square root requires a nonnegative element")
    return RingElement(
        a.space, np.sqrt(np.maximum(a.values.real, 0.0)).astype(np.complex128)
    )


def leq(a: RingElement, b: RingElement, tol: float = TAU_EQ) -> bool:
    """Pointwise order on real elements: a <= b on every atom, within tol."""
    check_same_space(a.space, b.space)
    if not (a.is_real(tol) and b.is_real(tol)):
        raise NotReal("ordering is defined for real elements only")
    slack = tol * (1.0 + np.maximum(np.abs(a.values), np.abs(b.values)))
    return bool(np.all(a.values.real <= b.values.real + slack))


def support(a: RingElement, tol_zero: float = TAU_ZERO) -> Idempotent:
    """Indicator of the atoms where the element does not vanish."""
    return Idempotent(a.space, np.abs(a.values) > tol_zero)


def is_strictly_positive(a: RingElement, tol_zero: float = TAU_ZERO) -> bool:
    """True iff the element is real and positive on every atom."""
    if not a.is_real():
        raise NotReal("strict positivity is defined for real elements only")
    return bool(np.all(a.values.real > tol_zero))


def mix(parts: PartitionOfUnity, items: Sequence[RingElement]) -> RingElement:
    """Glue one ring element per part along the partition."""
    if len(items) != len(parts.parts):
        raise LengthMismatch(
            f"{len(parts.parts)} parts but {len(items)} items"
        )
    space = parts.space
    out = np.zeros(space.atom_count, dtype=np.complex128)
    for part, item in zip(parts.parts, items):
        check_same_space(space, item.space)
        out[part.indicator] = item.values[part.indicator]
    return RingElement(space, out)


def ring_close(a: RingElement, b: RingElement, tol: float = TAU_EQ) -> bool:
    """Relative per-atom comparison of two ring elements."""
    check_same_space(a.space, b.space)
    slack = tol * (1.0 + np.maximum(np.abs(a.values), np.abs(b.values)))
    return bool(np.all(np.abs(a.values - b.values) <= slack))
