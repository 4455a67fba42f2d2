"""Algebra morphisms: spatial elements, rank-one classification, isometries.

Morphisms are stored by their images on the matrix units of the source
algebra.  For a plain module space the source algebra is the full per-atom
matrix algebra; for a block structure it is the component-diagonal
subalgebra.  The two extraction routines rebuild the implementing object
constructively: a similarity element for automorphisms of one algebra, and
a surjective isometry (with a partition of unity and per-part component
bijections) for star-isomorphisms between block algebras.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    ComponentMismatch,
    DegenerateImageProjection,
    DimensionMismatch,
    EmptyFiber,
    ModuleMismatch,
    NotAProjection,
    NotAutomorphism,
    NotInBlockAlgebra,
    NotRankOne,
    NotStarIsomorphism,
    ShapeMismatch,
)
from .kh_module import (
    BlockStructure,
    ModuleSpace,
    ModuleVector,
    direct_sum,
    inner,
)
from .measure_ring import Idempotent, PartitionOfUnity, RingElement
from .operator_algebra import (
    Operator,
    adjoint,
    apply,
    compose,
    is_projection,
    op_distance,
    op_norm,
    rank_profile,
)
from .tolerances import TAU_EQ, TAU_RANK, TAU_RES, TAU_ZERO

Structure = ModuleSpace | BlockStructure


def as_block(structure: Structure) -> BlockStructure:
    """View a plain module space as a single-component block structure."""
    if isinstance(structure, BlockStructure):
        return structure
    return direct_sum([structure])


@lru_cache(maxsize=None)
def _unit_table(dims: tuple[int, ...]):
    """Flat enumeration of the matrix units of a component-diagonal algebra.

    Returns (keys, index, prod) where ``prod[a, b]`` is the flat index of
    the product unit, or -1 when the product vanishes.
    """
    keys = [
        (i, r, s)
        for i, d in enumerate(dims)
        for r in range(d)
        for s in range(d)
    ]
    index = {key: a for a, key in enumerate(keys)}
    count = len(keys)
    prod = np.full((count, count), -1, dtype=np.int64)
    for a, (i, r, s) in enumerate(keys):
        for b, (j, u, v) in enumerate(keys):
            if i == j and s == u:
                prod[a, b] = index[(i, r, v)]
    return keys, index, prod


@dataclass(frozen=True, eq=False)
class AlgebraMorphism:
    """Images of the source algebra's matrix units as target matrices.

    ``images[t][i]`` has shape (d_i, d_i, n, n): the image of the unit
    E^(i)_rs of component i on atom t, as a matrix on the target sum fiber.
    """

    source: Structure
    target: Structure
    images: tuple[tuple[np.ndarray, ...], ...]
    star_preserving: bool = False

    def __post_init__(self) -> None:
        src = as_block(self.source)
        tgt = as_block(self.target)
        if src.space != tgt.space:
            raise ModuleMismatch("source and target live over different atom spaces")
        raw = tuple(tuple(per_atom) for per_atom in self.images)
        if len(raw) != src.space.atom_count:
            raise ValueError("one image family per atom required")
        frozen = []
        for t, per_atom in enumerate(raw):
            if len(per_atom) != src.component_count:
                raise ValueError(f"atom {t}: one image tensor per component required")
            n = tgt.sum_space.fiber_dims[t]
            tensors = []
            for i, arr in enumerate(per_atom):
                d = src.components[i].fiber_dims[t]
                a = np.array(arr, dtype=np.complex128).reshape(d, d, n, n)
                a.setflags(write=False)
                tensors.append(a)
            frozen.append(tuple(tensors))
        object.__setattr__(self, "images", tuple(frozen))

    @property
    def source_block(self) -> BlockStructure:
        return as_block(self.source)

    @property
    def target_block(self) -> BlockStructure:
        return as_block(self.target)

    def max_abs(self) -> float:
        mags = [
            np.max(np.abs(arr))
            for per_atom in self.images
            for arr in per_atom
            if arr.size
        ]
        return float(max(mags)) if mags else 0.0

    def source_dims(self, t: int) -> tuple[int, ...]:
        return tuple(c.fiber_dims[t] for c in self.source_block.components)

    def stacked_images(self, t: int) -> np.ndarray:
        """All unit images on atom t as one (unit_count, n, n) array."""
        n = self.target_block.sum_space.fiber_dims[t]
        parts = [arr.reshape(-1, n, n) for arr in self.images[t]]
        if not parts:
            return np.zeros((0, n, n), dtype=np.complex128)
        return np.concatenate(parts, axis=0)


def identity_morphism(structure: Structure, star_preserving: bool = True) -> AlgebraMorphism:
    block = as_block(structure)
    images = []
    for t in range(block.space.atom_count):
        n = block.sum_space.fiber_dims[t]
        offs = block.offsets(t)
        per_atom = []
        for i, comp in enumerate(block.components):
            d = comp.fiber_dims[t]
            arr = np.zeros((d, d, n, n), dtype=np.complex128)
            for r in range(d):
                for s in range(d):
                    arr[r, s, offs[i] + r, offs[i] + s] = 1.0
            per_atom.append(arr)
        images.append(tuple(per_atom))
    return AlgebraMorphism(structure, structure, tuple(images), star_preserving)


def conjugation_morphism(
    x: Operator,
    source: Structure,
    target: Structure,
    star_preserving: bool = False,
    unitary: bool = False,
) -> AlgebraMorphism:
    """The map a -> x a x^{-1} recorded on the source matrix units.

    With ``unitary=True`` the inverse is taken as the adjoint.
    """
    src = as_block(source)
    tgt = as_block(target)
    if x.domain != src.sum_space or x.codomain != tgt.sum_space:
        raise ModuleMismatch("conjugating element has the wrong shape")
    images = []
    for t, block in enumerate(x.blocks):
        inv = block.conj().T if unitary else np.linalg.inv(block)
        offs = src.offsets(t)
        per_atom = []
        for i, comp in enumerate(src.components):
            d = comp.fiber_dims[t]
            cols = block[:, offs[i]:offs[i] + d]
            rows = inv[offs[i]:offs[i] + d, :]
            per_atom.append(np.einsum("ar,sb->rsab", cols, rows))
        images.append(tuple(per_atom))
    return AlgebraMorphism(source, target, tuple(images), star_preserving)


def apply_morphism(m: AlgebraMorphism, a: Operator) -> Operator:
    """Evaluate the morphism on an element of the source algebra.

    Coefficients are read from the component-diagonal blocks of ``a``;
    anything outside them is not part of the algebra and is ignored.
    """
    src = m.source_block
    tgt = m.target_block
    if a.domain != src.sum_space or a.codomain != src.sum_space:
        raise ModuleMismatch("operator does not live on the source algebra")
    blocks = []
    for t, blk in enumerate(a.blocks):
        n = tgt.sum_space.fiber_dims[t]
        out = np.zeros((n, n), dtype=np.complex128)
        offs = src.offsets(t)
        for i, comp in enumerate(src.components):
            d = comp.fiber_dims[t]
            coeff = blk[offs[i]:offs[i] + d, offs[i]:offs[i] + d]
            if d:
                out += np.einsum("rs,rsab->ab", coeff, m.images[t][i])
        blocks.append(out)
    return Operator(tgt.sum_space, tgt.sum_space, tuple(blocks))


@dataclass(frozen=True)
class MorphismReport:
    """Residuals of the algebra-morphism laws, worst case over atoms."""

    multiplicative_residual: float
    unital_residual: float
    star_residual: float | None
    bijective: bool
    min_singular_value: float
    algebra_dims_match: bool
    off_block_residual: float
    bound: float
    ok: bool


def _off_block_mass(mat: np.ndarray, offsets: list[int], dims: tuple[int, ...]) -> float:
    mask = np.ones(mat.shape, dtype=bool)
    for off, d in zip(offsets, dims):
        mask[off:off + d, off:off + d] = False
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(mat[mask]))) if mat.size else 0.0


def morphism_check(m: AlgebraMorphism, tol: float = TAU_EQ,
                   tol_rank: float = TAU_RANK) -> MorphismReport:
    """Verify multiplicativity, unitality, bijectivity and star-preservation.

    Never raises on a law failure; the report carries every residual.
    """
    src = m.source_block
    tgt = m.target_block
    mult = 0.0
    unital = 0.0
    star = 0.0 if m.star_preserving else None
    min_sing = np.inf
    dims_match = True
    off_block = 0.0
    tgt_multi = tgt.component_count > 1
    for t in range(src.space.atom_count):
        dims = m.source_dims(t)
        keys, index, prod = _unit_table(dims)
        stacked = m.stacked_images(t)
        count = stacked.shape[0]
        n = tgt.sum_space.fiber_dims[t]
        tgt_dims = tuple(c.fiber_dims[t] for c in tgt.components)
        dims_match = dims_match and (count == sum(d * d for d in tgt_dims))
        if count == 0:
            continue
        products = np.einsum("aij,bjk->abik", stacked, stacked)
        expected = np.zeros_like(products)
        valid = prod >= 0
        expected[valid] = stacked[prod[valid]]
        gaps = np.sqrt(np.sum(np.abs(products - expected) ** 2, axis=(2, 3)))
        mult = max(mult, float(np.max(gaps)))
        unit_sum = np.zeros((n, n), dtype=np.complex128)
        for (i, r, s), a in index.items():
            if r == s:
                unit_sum += stacked[a]
        unital = max(unital, float(np.linalg.norm(unit_sum - np.eye(n))))
        if star is not None:
            for (i, r, s), a in index.items():
                flipped = stacked[index[(i, s, r)]]
                star = max(star, float(np.linalg.norm(
                    flipped - stacked[a].conj().T)))
        vectorized = stacked.reshape(count, n * n).T
        svals = np.linalg.svd(vectorized, compute_uv=False)
        smax = svals[0] if svals.size else 0.0
        smin = svals[min(count, n * n) - 1] if svals.size else 0.0
        if smax > 0:
            min_sing = min(min_sing, float(smin / smax))
        else:
            min_sing = 0.0
        if tgt_multi:
            offs = tgt.offsets(t)
            for img in stacked:
                off_block = max(off_block, _off_block_mass(img, offs, tgt_dims))
    if not np.isfinite(min_sing):
        min_sing = 1.0
    bijective = dims_match and min_sing > tol_rank
    magnitude = m.max_abs()
    bound = tol * (1.0 + magnitude) ** 2
    laws = [mult <= bound, unital <= bound, bijective, off_block <= bound]
    if star is not None:
        laws.append(star <= bound)
    return MorphismReport(
        multiplicative_residual=mult,
        unital_residual=unital,
        star_residual=star,
        bijective=bijective,
        min_singular_value=float(min_sing),
        algebra_dims_match=dims_match,
        off_block_residual=off_block,
        bound=bound,
        ok=all(laws),
    )


@dataclass(frozen=True, eq=False)
class SpatialImplementation:
    """Implementing element or isometry, with the partition and bijections.

    For a similarity extraction the partition is trivial and the single
    bijection is the identity on one component.  ``bijections[k][i]`` is the
    target component matched to source component i on the atoms of part k.
    """

    implementing: Operator
    inverse: Operator
    partition: PartitionOfUnity
    bijections: tuple[tuple[int, ...], ...]
    max_residual: float


def extract_spatial_element(
    alpha: AlgebraMorphism,
    tol: float = TAU_EQ,
    tol_zero: float = TAU_ZERO,
    tol_rank: float = TAU_RANK,
) -> SpatialImplementation:
    """Recover x with alpha(a) = x a x^{-1} for an automorphism of one algebra.

    Per atom: the image q of the projection onto the first basis vector is a
    rank-one idempotent; its first nonvanishing column, normalized, is a
    fixed vector e1 of q, and the columns of x are the images of the column
    units applied to e1.
    """
    if isinstance(alpha.source, BlockStructure) or isinstance(alpha.target, BlockStructure):
        raise NotAutomorphism("similarity extraction works on one plain module algebra")
    if alpha.source != alpha.target:
        raise NotAutomorphism("source and target algebras differ")
    module: ModuleSpace = alpha.source
    if any(d == 0 for d in module.fiber_dims):
        raise EmptyFiber("every atom needs fiber dimension >= 1")
    report = morphism_check(alpha, tol=tol, tol_rank=tol_rank)
    checks = [
        report.multiplicative_residual <= report.bound,
        report.unital_residual <= report.bound,
        report.bijective,
    ]
    if not all(checks):
        raise NotAutomorphism(f"morphism laws fail: {report}")
    blocks = []
    inverse_blocks = []
    for t, m in enumerate(module.fiber_dims):
        img = alpha.images[t][0]
        q = img[0, 0]
        e1 = None
        for k in range(m):
            col = q[:, k]
            length = float(np.linalg.norm(col))
            if length > tol_zero:
                e1 = col / length
                break
        if e1 is None:
            raise DegenerateImageProjection(
                f"atom {t}: image projection annihilates the standard basis"
            )
        x = np.zeros((m, m), dtype=np.complex128)
        for j in range(m):
            x[:, j] = img[j, 0] @ e1
        svals = np.linalg.svd(x, compute_uv=False)
        if svals[0] == 0.0 or svals[-1] <= tol_rank * svals[0]:
            raise NotAutomorphism(f"atom {t}: extracted element is singular")
        blocks.append(x)
        inverse_blocks.append(np.linalg.inv(x))
    worst = 0.0
    for t, m in enumerate(module.fiber_dims):
        img = alpha.images[t][0]
        x = blocks[t]
        xinv = inverse_blocks[t]
        for r in range(m):
            for s in range(m):
                conjugated = np.outer(x[:, r], xinv[s, :])
                worst = max(worst, float(np.linalg.norm(img[r, s] - conjugated)))
    element = Operator(module, module, tuple(blocks))
    inverse = Operator(module, module, tuple(inverse_blocks))
    return SpatialImplementation(
        implementing=element,
        inverse=inverse,
        partition=PartitionOfUnity.trivial(module.space),
        bijections=((0,),),
        max_residual=worst,
    )


@dataclass(frozen=True, eq=False)
class RankOneProjectionDecomposition:
    """A rank-one projection as unit vectors glued along a partition."""

    partition: PartitionOfUnity
    vectors: tuple[ModuleVector, ...]


def _range_vectors(
    q: Operator, tol: float, tol_zero: float, tol_rank: float
) -> list[np.ndarray]:
    """Per-atom canonical unit range vectors of a rank-one projection."""
    if not q.is_square():
        raise NotAProjection("projections are square operators")
    if not is_projection(q, tol):
        raise NotAProjection("operator is not idempotent self-adjoint")
    ranks = rank_profile(q, tol_rank)
    bad = [t for t, r in enumerate(ranks) if r != 1]
    if bad:
        raise NotRankOne(f"rank differs from one on atoms {bad}")
    vectors = []
    for block in q.blocks:
        norms = np.linalg.norm(block, axis=0)
        j = int(np.argmax(norms))
        v = block[:, j] / norms[j]
        # canonical phase: first sizable coordinate made real positive
        for coord in v:
            if abs(coord) > tol_zero:
                v = v * (np.conj(coord) / abs(coord))
                break
        vectors.append(v)
    return vectors


def _component_of(v: np.ndarray, offsets: list[int],
                  dims: tuple[int, ...], tol_zero: float) -> int | None:
    """Index of the unique component carrying the vector, else None."""
    hit = None
    for i, (off, d) in enumerate(zip(offsets, dims)):
        if d and np.max(np.abs(v[off:off + d])) > tol_zero:
            if hit is not None:
                return None
            hit = i
    return hit


def h1_classify(
    q: Operator,
    structure: Structure,
    tol: float = TAU_EQ,
    tol_zero: float = TAU_ZERO,
    tol_rank: float = TAU_RANK,
) -> RankOneProjectionDecomposition:
    """Decompose a rank-one projection of the block algebra along components.

    Returns one part per component: the atoms whose range vector lives in
    that component, together with the masked unit vector.  Mixing the
    rank-one operators of the vectors along the partition reconstructs q.
    """
    block = as_block(structure)
    if q.domain != block.sum_space or q.codomain != block.sum_space:
        raise ModuleMismatch("projection does not act on the sum space")
    vectors = _range_vectors(q, tol, tol_zero, tol_rank)
    atom_count = block.space.atom_count
    comp_of_atom = np.zeros(atom_count, dtype=int)
    for t, v in enumerate(vectors):
        dims = tuple(c.fiber_dims[t] for c in block.components)
        comp = _component_of(v, block.offsets(t), dims, tol_zero)
        if comp is None:
            raise NotInBlockAlgebra(
                f"atom {t}: range vector is not supported in a single component"
            )
        comp_of_atom[t] = comp
    parts = tuple(
        Idempotent(block.space, comp_of_atom == i)
        for i in range(block.component_count)
    )
    out_vectors = []
    for i in range(block.component_count):
        coords = []
        for t in range(atom_count):
            if comp_of_atom[t] == i:
                coords.append(vectors[t])
            else:
                coords.append(np.zeros(block.sum_space.fiber_dims[t],
                                       dtype=np.complex128))
        out_vectors.append(ModuleVector(block.sum_space, tuple(coords)))
    return RankOneProjectionDecomposition(PartitionOfUnity(parts),
                                          tuple(out_vectors))


def m_set_member(
    q: Operator,
    structure: BlockStructure,
    tol: float = TAU_EQ,
    tol_zero: float = TAU_ZERO,
    tol_rank: float = TAU_RANK,
) -> int | None:
    """Component index if q's range sits in one component on every atom.

    Returns None when the support spreads over several components or moves
    between components across atoms.
    """
    vectors = _range_vectors(q, tol, tol_zero, tol_rank)
    found: int | None = None
    for t, v in enumerate(vectors):
        dims = tuple(c.fiber_dims[t] for c in structure.components)
        comp = _component_of(v, structure.offsets(t), dims, tol_zero)
        if comp is None:
            return None
        if found is None:
            found = comp
        elif comp != found:
            return None
    return found


def approx_relation(
    p: Operator,
    q: Operator,
    structure: BlockStructure,
    tol: float = TAU_EQ,
    tol_zero: float = TAU_ZERO,
    tol_rank: float = TAU_RANK,
) -> bool:
    """Whether some algebra element b makes p b q nonzero.

    Searching the matrix units suffices since they span the algebra; for
    unit range vectors u of p and w of q the largest ||p E^(i)_rs q|| over
    units equals max_r |u^(i)_r| * max_s |w^(i)_s| per component.
    """
    u_vectors = _range_vectors(p, tol, tol_zero, tol_rank)
    w_vectors = _range_vectors(q, tol, tol_zero, tol_rank)
    for t, (u, w) in enumerate(zip(u_vectors, w_vectors)):
        offs = structure.offsets(t)
        for i, comp in enumerate(structure.components):
            d = comp.fiber_dims[t]
            if d == 0:
                continue
            mu = float(np.max(np.abs(u[offs[i]:offs[i] + d])))
            mw = float(np.max(np.abs(w[offs[i]:offs[i] + d])))
            if mu * mw > tol_zero:
                return True
    return False


def xi_witness(phi: ModuleVector, psi: ModuleVector,
               tol_zero: float = TAU_ZERO) -> ModuleVector:
    """Atom-wise witness vector for relating two unit vectors.

    On atoms where the vectors are orthogonal take (phi + psi)/sqrt(2),
    elsewhere take phi; applied per atom so the dichotomy is well defined
    even when orthogonality holds only on part of the space.
    """
    pairing = inner(phi, psi)
    coords = []
    for t, (a, b) in enumerate(zip(phi.coords, psi.coords)):
        if abs(pairing.values[t]) <= tol_zero:
            coords.append((a + b) / np.sqrt(2.0))
        else:
            coords.append(a.copy())
    return ModuleVector(phi.module, tuple(coords))


def extract_unitary(
    pi: AlgebraMorphism,
    tol: float = TAU_EQ,
    tol_zero: float = TAU_ZERO,
    tol_rank: float = TAU_RANK,
) -> SpatialImplementation:
    """Build the isometry implementing a star-isomorphism of block algebras.

    The image of each component's first unit projection is classified as a
    glued rank-one projection; the per-atom component matching must be a
    bijection, atoms sharing a bijection form the partition, and the
    isometry columns are the images of the column units applied to the
    classified unit vectors.
    """
    if not pi.star_preserving:
        raise NotStarIsomorphism("morphism is not declared star-preserving")
    src = pi.source_block
    tgt = pi.target_block
    if src.component_count != tgt.component_count:
        raise ComponentMismatch(
            f"{src.component_count} source vs {tgt.component_count} target components"
        )
    for comp in (*src.components, *tgt.components):
        if any(d == 0 for d in comp.fiber_dims):
            raise EmptyFiber("every component needs fiber dimension >= 1 per atom")
    report = morphism_check(pi, tol=tol, tol_rank=tol_rank)
    if not report.ok:
        raise NotStarIsomorphism(f"morphism laws fail: {report}")
    atom_count = src.space.atom_count
    k = src.component_count
    # classify the images of the unit projections of each component
    targets = np.zeros((k, atom_count), dtype=int)
    psi_vectors: list[list[np.ndarray]] = []
    for i in range(k):
        blocks = tuple(pi.images[t][i][0, 0] for t in range(atom_count))
        q_i = Operator(tgt.sum_space, tgt.sum_space, blocks)
        try:
            decomp = h1_classify(q_i, tgt, tol, tol_zero, tol_rank)
        except (NotAProjection, NotRankOne, NotInBlockAlgebra) as exc:
            raise NotStarIsomorphism(
                f"image of component {i} unit projection: {exc}"
            ) from exc
        targets[i] = decomp.partition.part_index()
        per_atom = []
        for t in range(atom_count):
            j = targets[i, t]
            per_atom.append(np.asarray(decomp.vectors[j].coords[t]))
        psi_vectors.append(per_atom)
    # per-atom component matching must be a bijection
    for t in range(atom_count):
        assignment = [int(targets[i, t]) for i in range(k)]
        if sorted(assignment) != list(range(k)):
            raise ComponentMismatch(f"atom {t}: assignment {assignment} is not a bijection")
    mismatches = []
    for t in range(atom_count):
        for i in range(k):
            j = int(targets[i, t])
            if src.components[i].fiber_dims[t] != tgt.components[j].fiber_dims[t]:
                mismatches.append((t, i, j))
    if mismatches:
        raise DimensionMismatch(
            f"matched components differ in dimension at (atom, i, j): {mismatches}"
        )
    # group atoms by their bijection
    by_bijection: dict[tuple[int, ...], list[int]] = {}
    for t in range(atom_count):
        key = tuple(int(targets[i, t]) for i in range(k))
        by_bijection.setdefault(key, []).append(t)
    ordered = sorted(by_bijection)
    parts = []
    for key in ordered:
        flags = np.zeros(atom_count, dtype=bool)
        flags[by_bijection[key]] = True
        parts.append(Idempotent(src.space, flags))
    partition = PartitionOfUnity(tuple(parts))
    # assemble the isometry column by column
    u_blocks = []
    for t in range(atom_count):
        n_src = src.sum_space.fiber_dims[t]
        n_tgt = tgt.sum_space.fiber_dims[t]
        u = np.zeros((n_tgt, n_src), dtype=np.complex128)
        offs = src.offsets(t)
        for i in range(k):
            d = src.components[i].fiber_dims[t]
            psi = psi_vectors[i][t]
            for col in range(d):
                u[:, offs[i] + col] = pi.images[t][i][col, 0] @ psi
        u_blocks.append(u)
    u_op = Operator(src.sum_space, tgt.sum_space, tuple(u_blocks))
    u_adj = adjoint(u_op)
    # verification residuals
    worst = max(
        op_norm(compose(u_adj, u_op) - Operator.identity(src.sum_space)).max_abs(),
        op_norm(compose(u_op, u_adj) - Operator.identity(tgt.sum_space)).max_abs(),
    )
    for t in range(atom_count):
        u = u_blocks[t]
        offs_src = src.offsets(t)
        offs_tgt = tgt.offsets(t)
        for i in range(k):
            d = src.components[i].fiber_dims[t]
            j = int(targets[i, t])
            for r in range(d):
                col = u[:, offs_src[i] + r]
                outside = col.copy()
                outside[offs_tgt[j]:offs_tgt[j] + d] = 0.0
                if outside.size:
                    worst = max(worst, float(np.max(np.abs(outside))))
                for s in range(d):
                    conjugated = np.outer(col, np.conj(u[:, offs_src[i] + s]))
                    gap = pi.images[t][i][r, s] - conjugated
                    worst = max(worst, float(np.linalg.norm(gap)))
    return SpatialImplementation(
        implementing=u_op,
        inverse=u_adj,
        partition=partition,
        bijections=tuple(ordered),
        max_residual=worst,
    )


@dataclass(frozen=True)
class SpatialReport:
    """Residuals of a claimed spatial implementation.

    ``inner`` records whether the morphism is implemented inside its own
    algebra (source equal to target and the implementing operator carried by
    the component-diagonal); a component-permuting automorphism of a block
    algebra is spatial without being inner, so this does not enter ``ok``.
    """

    conjugation_residual: float
    isometry_left: float
    isometry_right: float
    inverse_residual: float
    source_equals_target: bool
    in_algebra_residual: float | None
    inner: bool | None
    bound: float
    ok: bool


def verify_spatial(
    m: AlgebraMorphism,
    impl: SpatialImplementation,
    samples: int = 20,
    seed: int = 0,
    tol: float = TAU_RES,
) -> SpatialReport:
    """Re-check a spatial implementation against its morphism.

    Samples random vectors on the target side and compares the morphism's
    action with conjugation; also reports the isometry defects and, when
    source and target coincide, how far the implementing operator is from
    the algebra itself.
    """
    src = m.source_block
    tgt = m.target_block
    u = impl.implementing
    uinv = impl.inverse
    if u.domain != src.sum_space or u.codomain != tgt.sum_space:
        raise ShapeMismatch("implementing operator has the wrong endpoints")
    if uinv.domain != tgt.sum_space or uinv.codomain != src.sum_space:
        raise ShapeMismatch("claimed inverse has the wrong endpoints")
    ident_src = Operator.identity(src.sum_space)
    ident_tgt = Operator.identity(tgt.sum_space)
    inverse_residual = max(
        op_distance(compose(u, uinv), ident_tgt),
        op_distance(compose(uinv, u), ident_src),
    )
    isometry_left = op_norm(compose(adjoint(u), u) - ident_src).max_abs()
    isometry_right = op_norm(compose(u, adjoint(u)) - ident_tgt).max_abs()
    # generators: every matrix unit, checked exactly through the images
    conj = 0.0
    for t in range(src.space.atom_count):
        offs = src.offsets(t)
        ub = u.blocks[t]
        ui = uinv.blocks[t]
        for i, comp in enumerate(src.components):
            d = comp.fiber_dims[t]
            for r in range(d):
                for s in range(d):
                    conjugated = np.outer(ub[:, offs[i] + r], ui[offs[i] + s, :])
                    conj = max(conj, float(np.linalg.norm(
                        m.images[t][i][r, s] - conjugated)))
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        blocks = []
        for t in range(src.space.atom_count):
            n = src.sum_space.fiber_dims[t]
            blk = np.zeros((n, n), dtype=np.complex128)
            offs = src.offsets(t)
            for i, comp in enumerate(src.components):
                d = comp.fiber_dims[t]
                blk[offs[i]:offs[i] + d, offs[i]:offs[i] + d] = (
                    rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
                )
            blocks.append(blk)
        a = Operator(src.sum_space, src.sum_space, tuple(blocks))
        phi = ModuleVector(
            tgt.sum_space,
            tuple(rng.standard_normal(d) + 1j * rng.standard_normal(d)
                  for d in tgt.sum_space.fiber_dims),
        )
        lhs = apply(apply_morphism(m, a), phi)
        rhs = apply(u, apply(a, apply(uinv, phi)))
        gap = lhs - rhs
        scale = 1.0 + a.max_abs() * max(phi.max_abs(), 1.0)
        conj = max(conj, gap.max_abs() / scale)
    same = as_block(m.source) == as_block(m.target) or m.source == m.target
    in_algebra = None
    if same:
        in_algebra = 0.0
        for t in range(tgt.space.atom_count):
            dims = tuple(c.fiber_dims[t] for c in tgt.components)
            in_algebra = max(
                in_algebra,
                _off_block_mass(u.blocks[t], tgt.offsets(t), dims),
            )
    magnitude = max(u.max_abs(), 1.0)
    bound = tol * (1.0 + magnitude) ** 2
    oks = [conj <= bound, isometry_left <= bound, isometry_right <= bound,
           inverse_residual <= bound]
    inner_flag = None if in_algebra is None else bool(in_algebra <= bound)
    return SpatialReport(
        conjugation_residual=conj,
        isometry_left=isometry_left,
        isometry_right=isometry_right,
        inverse_residual=inverse_residual,
        source_equals_target=bool(same),
        in_algebra_residual=in_algebra,
        inner=inner_flag,
        bound=bound,
        ok=all(oks),
    )
