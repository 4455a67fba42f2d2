"""Ring-linear operators as per-atom complex matrix families.

An operator between module spaces stores one matrix per atom, acting on the
fibers.  Ring-linearity is automatic because the action never mixes atoms.
Everything an operator can do here (adjoint, spectral norm, rank profile,
rank factorization) reduces to per-atom dense linear algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ModuleMismatch, NotHomogeneous
from .kh_module import (
    Functional,
    ModuleSpace,
    ModuleVector,
    inner,
    norm,
)
from .measure_ring import (
    AtomSpace,
    Idempotent,
    PartitionOfUnity,
    RingElement,
    check_same_space,
)
from .tolerances import TAU_EQ, TAU_RANK


@dataclass(frozen=True, eq=False)
class Operator:
    """A family of per-atom matrices mapping domain fibers to codomain fibers."""

    domain: ModuleSpace
    codomain: ModuleSpace
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        check_same_space(self.domain.space, self.codomain.space)
        raw = tuple(self.blocks)
        if len(raw) != self.domain.atom_count:
            raise ValueError("one block per atom required")
        frozen = []
        for t, block in enumerate(raw):
            shape = (self.codomain.fiber_dims[t], self.domain.fiber_dims[t])
            b = np.array(block, dtype=np.complex128).reshape(shape)
            b.setflags(write=False)
            frozen.append(b)
        object.__setattr__(self, "blocks", tuple(frozen))

    @classmethod
    def identity(cls, module: ModuleSpace) -> "Operator":
        return cls(module, module,
                   tuple(np.eye(d, dtype=np.complex128) for d in module.fiber_dims))

    @classmethod
    def zero(cls, domain: ModuleSpace, codomain: ModuleSpace | None = None) -> "Operator":
        codomain = domain if codomain is None else codomain
        blocks = tuple(
            np.zeros((codomain.fiber_dims[t], domain.fiber_dims[t]),
                     dtype=np.complex128)
            for t in range(domain.atom_count)
        )
        return cls(domain, codomain, blocks)

    @property
    def space(self) -> AtomSpace:
        return self.domain.space

    def is_square(self) -> bool:
        return self.domain == self.codomain

    def max_abs(self) -> float:
        mags = [np.max(np.abs(b)) if b.size else 0.0 for b in self.blocks]
        return float(max(mags)) if mags else 0.0

    def __add__(self, other: "Operator") -> "Operator":
        return add(self, other)

    def __sub__(self, other: "Operator") -> "Operator":
        return add(self, scale(-1.0, other))

    def __neg__(self) -> "Operator":
        return scale(-1.0, self)

    def __matmul__(self, other: "Operator") -> "Operator":
        return compose(self, other)

    def __mul__(self, scalar) -> "Operator":
        return scale(scalar, self)

    def __rmul__(self, scalar) -> "Operator":
        return scale(scalar, self)

    def __repr__(self) -> str:
        return (f"Operator({self.domain.fiber_dims} -> "
                f"{self.codomain.fiber_dims})")


def apply(a: Operator, phi: ModuleVector) -> ModuleVector:
    """Evaluate the operator on a vector, atom by atom."""
    if phi.module != a.domain:
        raise ModuleMismatch("vector does not live in the operator's domain")
    return ModuleVector(
        a.codomain, tuple(b @ c for b, c in zip(a.blocks, phi.coords))
    )


def compose(a: Operator, b: Operator) -> Operator:
    """The composition a after b."""
    if a.domain != b.codomain:
        raise ModuleMismatch("composition needs codomain(b) == domain(a)")
    return Operator(b.domain, a.codomain,
                    tuple(x @ y for x, y in zip(a.blocks, b.blocks)))


def add(a: Operator, b: Operator) -> Operator:
    if a.domain != b.domain or a.codomain != b.codomain:
        raise ModuleMismatch("sum needs matching domain and codomain")
    return Operator(a.domain, a.codomain,
                    tuple(x + y for x, y in zip(a.blocks, b.blocks)))


def scale(lam, a: Operator) -> Operator:
    """Scale by a complex number or a ring element (per-atom diagonal)."""
    if isinstance(lam, Operator):
        lam, a = a, lam
    if isinstance(lam, Idempotent):
        lam = lam.as_ring()
    if isinstance(lam, RingElement):
        check_same_space(lam.space, a.space)
        return Operator(a.domain, a.codomain,
                        tuple(lam.values[t] * b for t, b in enumerate(a.blocks)))
    return Operator(a.domain, a.codomain,
                    tuple(complex(lam) * b for b in a.blocks))


def adjoint(a: Operator) -> Operator:
    """Per-atom conjugate transpose; swaps domain and codomain."""
    return Operator(a.codomain, a.domain,
                    tuple(b.conj().T for b in a.blocks))


def tensor(phi: ModuleVector, psi: ModuleVector) -> Operator:
    """The rank-one operator sending eta to inner(eta, psi) * phi."""
    check_same_space(phi.module.space, psi.module.space)
    blocks = tuple(
        np.outer(p, np.conj(q)) for p, q in zip(phi.coords, psi.coords)
    )
    return Operator(psi.module, phi.module, blocks)


def op_norm(a: Operator) -> RingElement:
    """Per-atom operator norm (largest singular value)."""
    values = np.zeros(a.space.atom_count, dtype=np.complex128)
    for t, b in enumerate(a.blocks):
        if b.size:
            values[t] = np.linalg.svd(b, compute_uv=False)[0]
    return RingElement(a.space, values)


def frobenius(a: Operator) -> RingElement:
    """Per-atom Frobenius norm of the blocks."""
    values = np.array([np.linalg.norm(b) for b in a.blocks], dtype=np.complex128)
    return RingElement(a.space, values)


def op_distance(a: Operator, b: Operator) -> float:
    """Largest per-atom Frobenius distance between two operators."""
    return frobenius(a - b).max_abs()


def rank_profile(a: Operator, tol_rank: float = TAU_RANK) -> tuple[int, ...]:
    """Per-atom numerical rank of the blocks."""
    ranks = []
    for b in a.blocks:
        if b.size == 0:
            ranks.append(0)
            continue
        s = np.linalg.svd(b, compute_uv=False)
        ranks.append(0 if s[0] == 0.0 else int(np.sum(s > tol_rank * s[0])))
    return tuple(ranks)


@dataclass(frozen=True, eq=False)
class TypeDecomposition:
    """Partition of the atoms by the per-atom rank of an operator."""

    partition: PartitionOfUnity
    types: tuple[int, ...]


def type_decomposition(a: Operator, tol_rank: float = TAU_RANK) -> TypeDecomposition:
    """Group atoms by rank; on each part the operator is homogeneous."""
    ranks = np.array(rank_profile(a, tol_rank))
    present = sorted(set(int(r) for r in ranks))
    parts = tuple(Idempotent(a.space, ranks == r) for r in present)
    return TypeDecomposition(PartitionOfUnity(parts), tuple(present))


@dataclass(frozen=True, eq=False)
class GeneralForm:
    """A homogeneous type-n operator as n functionals paired with n vectors.

    The operator acts as phi -> sum_k g_k(phi) psi_k.
    """

    functionals: tuple[Functional, ...]
    vectors: tuple[ModuleVector, ...]

    def evaluate(self, phi: ModuleVector) -> ModuleVector:
        out = ModuleVector.zero(self.vectors[0].module)
        for g, psi in zip(self.functionals, self.vectors):
            out = out + g(phi) * psi
        return out

    def as_operator(self) -> Operator:
        terms = [tensor(psi, g.riesz_vector)
                 for g, psi in zip(self.functionals, self.vectors)]
        acc = terms[0]
        for term in terms[1:]:
            acc = acc + term
        return acc


def general_form(a: Operator, tol_rank: float = TAU_RANK) -> GeneralForm:
    """Factor a homogeneous type-n operator through n rank-one terms.

    Uses a per-atom thin SVD; the left singular vectors become the output
    family (always ring-linearly independent) and the functionals carry the
    weighted right singular vectors.  Columns are ordered by descending
    singular value with index order breaking ties, so the factorization is
    deterministic.
    """
    ranks = rank_profile(a, tol_rank)
    n = ranks[0] if ranks else 0
    if any(r != n for r in ranks) or n < 1:
        raise NotHomogeneous(f"per-atom ranks {ranks} are not a constant n >= 1")
    psi_coords: list[list[np.ndarray]] = [[] for _ in range(n)]
    riesz_coords: list[list[np.ndarray]] = [[] for _ in range(n)]
    for t, block in enumerate(a.blocks):
        u, s, vh = np.linalg.svd(block, full_matrices=False)
        order = np.argsort(-s, kind="stable")
        for k in range(n):
            j = order[k]
            psi_coords[k].append(u[:, j])
            riesz_coords[k].append(s[j] * vh[j, :].conj())
    vectors = tuple(
        ModuleVector(a.codomain, tuple(psi_coords[k])) for k in range(n)
    )
    functionals = tuple(
        Functional(ModuleVector(a.domain, tuple(riesz_coords[k])))
        for k in range(n)
    )
    return GeneralForm(functionals, vectors)


def matrix_unit(module: ModuleSpace, r: int, s: int) -> Operator:
    """The operator with a single 1 at (r, s) on every atom large enough."""
    blocks = []
    for d in module.fiber_dims:
        b = np.zeros((d, d), dtype=np.complex128)
        if r < d and s < d:
            b[r, s] = 1.0
        blocks.append(b)
    return Operator(module, module, tuple(blocks))


def is_idempotent(a: Operator, tol: float = TAU_EQ) -> bool:
    if not a.is_square():
        raise ModuleMismatch("idempotency is defined for square operators")
    gap = op_distance(compose(a, a), a)
    return gap <= tol * (1.0 + a.max_abs() ** 2)


def is_selfadjoint(a: Operator, tol: float = TAU_EQ) -> bool:
    if not a.is_square():
        raise ModuleMismatch("self-adjointness is defined for square operators")
    return op_distance(a, adjoint(a)) <= tol * (1.0 + a.max_abs())


def is_projection(a: Operator, tol: float = TAU_EQ) -> bool:
    return is_idempotent(a, tol) and is_selfadjoint(a, tol)


def _random_vector(module: ModuleSpace, rng: np.random.Generator) -> ModuleVector:
    coords = tuple(
        rng.standard_normal(d) + 1j * rng.standard_normal(d)
        for d in module.fiber_dims
    )
    return ModuleVector(module, coords)


def ostar_closure_check(
    ops: Sequence[Operator],
    samples: int = 50,
    seed: int = 0,
    tol: float = TAU_EQ,
) -> dict:
    """Check the star-algebra closure identities on a family of operators.

    For every ordered pair (a, b) verifies the adjoint laws for sums, ring
    scalings, products and the involution, plus the defining pairing identity
    on sampled vector pairs.  Returns the max residual per identity and an
    overall ``ok`` flag.
    """
    if not ops:
        raise ValueError("closure check needs at least one operator")
    module = ops[0].domain
    for a in ops:
        if not a.is_square() or a.domain != module:
            raise ModuleMismatch("closure check needs square operators on one module")
    rng = np.random.default_rng(seed)
    res = {"add": 0.0, "scale": 0.0, "compose": 0.0, "involution": 0.0,
           "pairing": 0.0}
    for a in ops:
        res["involution"] = max(res["involution"],
                                op_distance(adjoint(adjoint(a)), a))
        for b in ops:
            res["add"] = max(res["add"],
                             op_distance(adjoint(a + b), adjoint(a) + adjoint(b)))
            res["compose"] = max(
                res["compose"],
                op_distance(adjoint(compose(a, b)),
                            compose(adjoint(b), adjoint(a))),
            )
            lam = RingElement(
                module.space,
                rng.standard_normal(module.atom_count)
                + 1j * rng.standard_normal(module.atom_count),
            )
            res["scale"] = max(
                res["scale"],
                op_distance(adjoint(scale(lam, a)), scale(lam.conj(), adjoint(a))),
            )
    for _ in range(samples):
        a = ops[int(rng.integers(len(ops)))]
        phi = _random_vector(module, rng)
        psi = _random_vector(module, rng)
        lhs = inner(apply(a, phi), psi)
        rhs = inner(phi, apply(adjoint(a), psi))
        res["pairing"] = max(res["pairing"], (lhs - rhs).max_abs())
    magnitude = max(a.max_abs() for a in ops)
    bound = tol * (1.0 + magnitude) ** 2
    return {"residuals": res, "ok": all(v <= bound for v in res.values()),
            "bound": bound}
