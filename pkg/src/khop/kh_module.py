"""Kaplansky-Hilbert modules as per-atom finite-dimensional complex fibers.

A module space assigns each atom a fiber dimension; a vector holds one
complex coordinate array per atom.  The ring-valued inner product is the
per-atom Hermitian dot product, linear in the first slot and conjugated in
the second.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    AtomSpaceMismatch,
    ModuleMismatch,
    NotADecomposition,
    NotDisjoint,
    NotHomogeneous,
)
from .measure_ring import (
    AtomSpace,
    Idempotent,
    PartitionOfUnity,
    RingElement,
    check_same_space,
    sqrt_nonneg,
    support,
)
from .tolerances import TAU_EQ, TAU_RANK, TAU_ZERO


@dataclass(frozen=True)
class ModuleSpace:
    """Per-atom fiber dimensions over a fixed atom space."""

    space: AtomSpace
    fiber_dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.fiber_dims)
        if len(dims) != self.space.atom_count:
            raise ValueError("one fiber dimension per atom required")
        if any(d < 0 for d in dims):
            raise ValueError("fiber dimensions must be nonnegative")
        object.__setattr__(self, "fiber_dims", dims)

    @classmethod
    def homogeneous(cls, space: AtomSpace, n: int) -> "ModuleSpace":
        return cls(space, (n,) * space.atom_count)

    @property
    def atom_count(self) -> int:
        return self.space.atom_count

    def is_homogeneous(self) -> bool:
        """True iff every fiber has the same dimension n >= 1."""
        dims = set(self.fiber_dims)
        return len(dims) == 1 and self.fiber_dims[0] >= 1

    def homogeneous_type(self) -> int:
        if not self.is_homogeneous():
            raise NotHomogeneous(f"fiber dims {self.fiber_dims} are not constant")
        return self.fiber_dims[0]

    def generator_count(self) -> int:
        """Minimal number of generators; the maximum fiber dimension."""
        return max(self.fiber_dims)

    def __repr__(self) -> str:
        return f"ModuleSpace(dims={self.fiber_dims})"


def check_same_module(a: "ModuleVector", b: "ModuleVector") -> None:
    if a.module != b.module:
        raise ModuleMismatch(f"{a.module!r} vs {b.module!r}")


@dataclass(frozen=True, eq=False)
class ModuleVector:
    """One complex coordinate vector per atom, matching the fiber dims."""

    module: ModuleSpace
    coords: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        dims = self.module.fiber_dims
        raw = tuple(self.coords)
        if len(raw) != len(dims):
            raise ValueError("one coordinate array per atom required")
        frozen = []
        for t, (arr, d) in enumerate(zip(raw, dims)):
            a = np.array(arr, dtype=np.complex128).reshape(-1)
            if a.shape != (d,):
                raise ValueError(f"atom {t}: expected {d} coords, got {a.shape}")
            a.setflags(write=False)
            frozen.append(a)
        object.__setattr__(self, "coords", tuple(frozen))

    @classmethod
    def zero(cls, module: ModuleSpace) -> "ModuleVector":
        return cls(module, tuple(np.zeros(d, dtype=np.complex128)
                                 for d in module.fiber_dims))

    def max_abs(self) -> float:
        mags = [np.max(np.abs(c)) if c.size else 0.0 for c in self.coords]
        return float(max(mags))

    def __add__(self, other: "ModuleVector") -> "ModuleVector":
        check_same_module(self, other)
        return ModuleVector(self.module,
                            tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "ModuleVector") -> "ModuleVector":
        check_same_module(self, other)
        return ModuleVector(self.module,
                            tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "ModuleVector":
        return ModuleVector(self.module, tuple(-a for a in self.coords))

    def __mul__(self, scalar) -> "ModuleVector":
        if isinstance(scalar, (int, float, complex, np.number)):
            return ModuleVector(self.module,
                                tuple(complex(scalar) * a for a in self.coords))
        return NotImplemented

    def __rmul__(self, scalar) -> "ModuleVector":
        if isinstance(scalar, (int, float, complex, np.number)):
            return self.__mul__(scalar)
        if isinstance(scalar, Idempotent):
            scalar = scalar.as_ring()
        if isinstance(scalar, RingElement):
            check_same_space(scalar.space, self.module.space)
            return ModuleVector(
                self.module,
                tuple(scalar.values[t] * c for t, c in enumerate(self.coords)),
            )
        return NotImplemented

    def __repr__(self) -> str:
        return f"ModuleVector(dims={self.module.fiber_dims})"


def basis_vector(module: ModuleSpace, k: int) -> ModuleVector:
    """The k-th standard basis vector; zero on atoms with fiber dim <= k."""
    coords = []
    for d in module.fiber_dims:
        c = np.zeros(d, dtype=np.complex128)
        if k < d:
            c[k] = 1.0
        coords.append(c)
    return ModuleVector(module, tuple(coords))


def standard_basis(module: ModuleSpace) -> list[ModuleVector]:
    """The n standard basis vectors of a homogeneous type-n module."""
    n = module.homogeneous_type()
    return [basis_vector(module, k) for k in range(n)]


def inner(phi: ModuleVector, psi: ModuleVector) -> RingElement:
    """Ring-valued inner product, linear in the first slot."""
    check_same_module(phi, psi)
    values = np.array(
        [np.sum(a * np.conj(b)) for a, b in zip(phi.coords, psi.coords)],
        dtype=np.complex128,
    )
    return RingElement(phi.module.space, values)


def norm(phi: ModuleVector) -> RingElement:
    """Ring-valued norm, the square root of <phi, phi>."""
    gram = inner(phi, phi)
    # Hermitian square is exactly real; clip rounding noise before the root.
    return sqrt_nonneg(RingElement(gram.space, gram.values.real.astype(np.complex128)))


@dataclass(frozen=True, eq=False)
class Functional:
    """A bounded ring-linear functional, held by its Riesz vector.

    Applying the functional evaluates ``inner(phi, riesz_vector)``.
    """

    riesz_vector: ModuleVector

    def __call__(self, phi: ModuleVector) -> RingElement:
        return inner(phi, self.riesz_vector)

    @classmethod
    def zero(cls, module: ModuleSpace) -> "Functional":
        return cls(ModuleVector.zero(module))


def riesz(f: Functional) -> ModuleVector:
    """The vector representing the functional."""
    return f.riesz_vector


def riesz_from_map(module: ModuleSpace, rows: Sequence) -> Functional:
    """Build a functional from per-atom row coefficients.

    ``rows[t]`` holds the coefficients r with f(phi) = sum_k r[k] phi[k] on
    atom t; the Riesz vector is the conjugate row.
    """
    probe = ModuleVector(module, tuple(rows))
    vec = ModuleVector(module, tuple(np.conj(c) for c in probe.coords))
    return Functional(vec)


def d_decompose(
    phi: ModuleVector,
    e1: RingElement,
    e2: RingElement,
    tol: float = TAU_EQ,
) -> tuple[ModuleVector, ModuleVector]:
    """Split phi along a disjoint decomposition norm(phi) = e1 + e2.

    Returns the pair (support(e1) * phi, support(e2) * phi).  The parts must
    be nonnegative, have disjoint supports, and sum to the norm.
    """
    space = phi.module.space
    check_same_space(space, e1.space)
    check_same_space(space, e2.space)
    if not (e1.is_nonnegative(tol) and e2.is_nonnegative(tol)):
        raise NotADecomposition("parts must be nonnegative")
    s1, s2 = support(e1), support(e2)
    product = e1 * e2
    if not product.is_zero(tol * (1.0 + e1.max_abs() * e2.max_abs())):
        raise NotDisjoint("parts have overlapping mass")
    if not (s1 & s2).is_empty():
        raise NotDisjoint("part supports overlap")
    total = e1 + e2
    target = norm(phi)
    gap = total - target
    if not gap.is_zero(tol * (1.0 + target.max_abs())):
        raise NotADecomposition("parts do not sum to the norm")
    return s1 * phi, s2 * phi


@dataclass(frozen=True, eq=False)
class IndependenceResult:
    """Outcome of a ring-linear independence test."""

    independent: bool
    witness: Idempotent | None


def nabla_independent(
    vs: Sequence[ModuleVector], tol_rank: float = TAU_RANK
) -> IndependenceResult:
    """Test idempotent-localized linear independence of a vector family.

    Independent iff the per-atom coordinate matrix has full row rank on every
    atom; otherwise the witness marks the atoms where the rank drops.
    """
    if not vs:
        raise ValueError("independence test needs a nonempty family")
    module = vs[0].module
    for v in vs[1:]:
        check_same_module(vs[0], v)
    n = len(vs)
    deficient = np.zeros(module.atom_count, dtype=bool)
    for t, d in enumerate(module.fiber_dims):
        rows = np.array([v.coords[t] for v in vs], dtype=np.complex128).reshape(n, d)
        deficient[t] = _svd_rank(rows, tol_rank) < n
    if not deficient.any():
        return IndependenceResult(True, None)
    return IndependenceResult(False, Idempotent(module.space, deficient))


def _svd_rank(mat: np.ndarray, tol_rank: float) -> int:
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol_rank * s[0]))


@dataclass(frozen=True)
class BlockStructure:
    """An ordered direct sum of module spaces over one atom space."""

    components: tuple[ModuleSpace, ...]
    sum_space: ModuleSpace

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a block structure needs at least one component")
        space = comps[0].space
        for comp in comps[1:]:
            check_same_space(space, comp.space)
        dims = tuple(
            sum(comp.fiber_dims[t] for comp in comps)
            for t in range(space.atom_count)
        )
        expected = ModuleSpace(space, dims)
        if self.sum_space != expected:
            raise ValueError("sum space does not match the component dims")
        object.__setattr__(self, "components", comps)

    @property
    def space(self) -> AtomSpace:
        return self.sum_space.space

    @property
    def component_count(self) -> int:
        return len(self.components)

    def offsets(self, t: int) -> list[int]:
        """Coordinate offsets of each component inside atom t's fiber."""
        offs, acc = [], 0
        for comp in self.components:
            offs.append(acc)
            acc += comp.fiber_dims[t]
        return offs

    def inject(self, i: int, vec: ModuleVector) -> ModuleVector:
        """Embed a component vector into the sum space."""
        if vec.module != self.components[i]:
            raise ModuleMismatch(f"vector does not live in component {i}")
        coords = []
        for t, d in enumerate(self.sum_space.fiber_dims):
            c = np.zeros(d, dtype=np.complex128)
            off = self.offsets(t)[i]
            di = self.components[i].fiber_dims[t]
            c[off:off + di] = vec.coords[t]
            coords.append(c)
        return ModuleVector(self.sum_space, tuple(coords))

    def project(self, i: int, vec: ModuleVector) -> ModuleVector:
        """Extract the i-th component of a sum-space vector."""
        if vec.module != self.sum_space:
            raise ModuleMismatch("vector does not live in the sum space")
        coords = []
        for t in range(self.space.atom_count):
            off = self.offsets(t)[i]
            di = self.components[i].fiber_dims[t]
            coords.append(vec.coords[t][off:off + di].copy())
        return ModuleVector(self.components[i], tuple(coords))

    def __repr__(self) -> str:
        return f"BlockStructure({self.component_count} components)"


def direct_sum(components: Sequence[ModuleSpace]) -> BlockStructure:
    """Assemble the direct sum of module spaces over a shared atom space."""
    comps = tuple(components)
    if not comps:
        raise ValueError("direct sum of an empty family")
    space = comps[0].space
    for comp in comps[1:]:
        if comp.space != space:
            raise AtomSpaceMismatch("components live over different atom spaces")
    dims = tuple(
        sum(comp.fiber_dims[t] for comp in comps) for t in range(space.atom_count)
    )
    return BlockStructure(comps, ModuleSpace(space, dims))


def normalize(
    phi: ModuleVector, tol_zero: float = TAU_ZERO
) -> tuple[ModuleVector, Idempotent]:
    """Scale phi to unit norm on its support; returns (vector, support).

    The returned vector has norm equal to the support indicator, so callers
    needing a globally unit vector must check that the idempotent is full.
    """
    lengths = norm(phi)
    mask = support(lengths, tol_zero)
    coords = []
    for t, c in enumerate(phi.coords):
        if mask.indicator[t]:
            coords.append(c / lengths.values[t].real)
        else:
            coords.append(np.zeros_like(c))
    return ModuleVector(phi.module, tuple(coords)), mask
