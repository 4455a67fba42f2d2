"""Morphism layer: checks, similarity extraction, isometry extraction."""

import numpy as np
import pytest

from khop import (
    AlgebraMorphism,
    AtomSpace,
    Idempotent,
    ModuleSpace,
    ModuleVector,
    Operator,
    adjoint,
    apply,
    apply_morphism,
    approx_relation,
    compose,
    conjugation_morphism,
    direct_sum,
    extract_spatial_element,
    extract_unitary,
    h1_classify,
    identity_morphism,
    inner,
    m_set_member,
    morphism_check,
    norm,
    normalize,
    op_distance,
    op_norm,
    tensor,
    verify_spatial,
    xi_witness,
)
from khop.errors import (
    ComponentMismatch,
    EmptyFiber,
    NotAProjection,
    NotAutomorphism,
    NotRankOne,
    NotStarIsomorphism,
    ShapeMismatch,
)
from khop.generators import haar_unitary, random_block_unitary, random_invertible
from khop.morphisms import SpatialImplementation

from conftest import rand_operator, rand_vector


def transpose_morphism(module: ModuleSpace) -> AlgebraMorphism:
    images = []
    for t, m in enumerate(module.fiber_dims):
        arr = np.zeros((m, m, m, m), dtype=np.complex128)
        for r in range(m):
            for s in range(m):
                arr[r, s, s, r] = 1.0
        images.append((arr,))
    return AlgebraMorphism(module, module, tuple(images))


class TestMorphismCheck:
    def test_identity_is_clean(self, module22):
        report = morphism_check(identity_morphism(module22))
        assert report.ok
        assert report.multiplicative_residual == 0.0
        assert report.unital_residual == 0.0
        assert report.star_residual == 0.0
        assert report.bijective

    def test_conjugation_is_automorphism(self, module22, rng):
        x = random_invertible(module22, rng)
        report = morphism_check(conjugation_morphism(x, module22, module22))
        assert report.multiplicative_residual <= report.bound
        assert report.unital_residual <= report.bound
        assert report.bijective

    def test_transpose_is_anti_multiplicative(self, module22):
        report = morphism_check(transpose_morphism(module22))
        # on the pair (E_01, E_10) the mismatch is ||E_11 - E_00|| = sqrt(2)
        assert report.multiplicative_residual >= 1.0
        assert not report.ok

    def test_star_flag_checked(self, module22, rng):
        x = random_invertible(module22, rng, condition_cap=100.0)
        claimed = conjugation_morphism(x, module22, module22, star_preserving=True)
        report = morphism_check(claimed)
        assert report.star_residual is not None
        assert report.star_residual > report.bound  # x is not unitary

    def test_unitary_conjugation_preserves_star(self, module22, rng):
        blocks = tuple(haar_unitary(2, rng) for _ in range(2))
        u = Operator(module22, module22, blocks)
        pi = conjugation_morphism(u, module22, module22,
                                  star_preserving=True, unitary=True)
        report = morphism_check(pi)
        assert report.ok


class TestSpatialElement:
    def test_identity_gives_scalar(self, module22):
        impl = extract_spatial_element(identity_morphism(module22))
        assert impl.max_residual <= 1e-12
        for block in impl.implementing.blocks:
            off_diag = block - np.diag(np.diagonal(block))
            assert np.max(np.abs(off_diag)) <= 1e-12
            assert abs(block[0, 0] - block[1, 1]) <= 1e-12
            assert abs(block[0, 0]) > 1e-9

    def test_diagonal_generator(self, module22):
        x = Operator(module22, module22,
                     tuple(np.diag([1.0, 2.0]).astype(complex) for _ in range(2)))
        impl = extract_spatial_element(conjugation_morphism(x, module22, module22))
        assert impl.max_residual <= 1e-10
        x_inv = Operator(module22, module22,
                         tuple(np.diag([1.0, 0.5]).astype(complex) for _ in range(2)))
        ratio = compose(impl.implementing, x_inv)
        for block in ratio.blocks:
            gap = block - (np.trace(block) / 2) * np.eye(2)
            assert np.max(np.abs(gap)) <= 1e-10

    def test_atom_varying_generator(self, rng):
        module = ModuleSpace(AtomSpace.uniform(4), (2, 3, 1, 4))
        x = random_invertible(module, rng, condition_cap=1e3)
        impl = extract_spatial_element(conjugation_morphism(x, module, module))
        assert impl.max_residual <= 1e-7
        ratio = compose(impl.implementing,
                        Operator(module, module,
                                 tuple(np.linalg.inv(b) for b in x.blocks)))
        from khop.oracles import operator_centrality_gap

        assert operator_centrality_gap(ratio) <= 1e-7

    def test_round_trip_conjugation(self, module22, rng):
        x = random_invertible(module22, rng)
        alpha = conjugation_morphism(x, module22, module22)
        impl = extract_spatial_element(alpha)
        a = rand_operator(module22, rng)
        lhs = apply_morphism(alpha, a)
        rhs = compose(impl.implementing, compose(a, impl.inverse))
        assert op_distance(lhs, rhs) <= 1e-8 * (1 + a.max_abs())

    def test_gauge_between_two_extractions(self, module22, rng):
        # any two implementing elements are ring-scalar multiples of each other
        x = random_invertible(module22, rng)
        alpha = conjugation_morphism(x, module22, module22)
        impl = extract_spatial_element(alpha)
        ratio = compose(impl.implementing,
                        Operator(module22, module22,
                                 tuple(np.linalg.inv(b) for b in x.blocks)))
        for block in ratio.blocks:
            gap = block - (np.trace(block) / 2) * np.eye(2)
            assert np.max(np.abs(gap)) <= 1e-9

    def test_rejects_transpose(self, module22):
        with pytest.raises(NotAutomorphism):
            extract_spatial_element(transpose_morphism(module22))


def single_component_projection(structure, component, coords_per_atom):
    """Embed unit vectors of one component and return their projection."""
    comp = structure.components[component]
    vec = ModuleVector(comp, coords_per_atom)
    unit, _ = normalize(vec)
    embedded = structure.inject(component, unit)
    return tensor(embedded, embedded), embedded


class TestH1Classify:
    def test_basis_projection_plain_module(self, module22):
        from khop import standard_basis

        e0 = standard_basis(module22)[0]
        decomp = h1_classify(tensor(e0, e0), module22)
        assert len(decomp.partition) == 1
        assert decomp.partition.parts[0].is_full()
        assert (decomp.vectors[0] - e0).max_abs() <= 1e-12

    def test_two_component_split(self, space2, rng):
        line = ModuleSpace.homogeneous(space2, 2)
        structure = direct_sum([line, line])
        # range lives in component 0 on atom 0 and component 1 on atom 1
        blocks = []
        v = np.array([1.0, 1.0]) / np.sqrt(2.0)
        full0 = np.concatenate([v, np.zeros(2)]).astype(complex)
        full1 = np.concatenate([np.zeros(2), v]).astype(complex)
        blocks.append(np.outer(full0, full0.conj()))
        blocks.append(np.outer(full1, full1.conj()))
        q = Operator(structure.sum_space, structure.sum_space, tuple(blocks))
        decomp = h1_classify(q, structure)
        assert np.array_equal(decomp.partition.parts[0].indicator, [True, False])
        assert np.array_equal(decomp.partition.parts[1].indicator, [False, True])
        rebuilt = tensor(decomp.vectors[0], decomp.vectors[0]) + tensor(
            decomp.vectors[1], decomp.vectors[1])
        assert op_distance(rebuilt, q) <= 1e-12

    def test_rejects_rank_two(self, module22):
        with pytest.raises(NotRankOne):
            h1_classify(Operator.identity(module22), module22)

    def test_rejects_non_projection(self, module22, rng):
        with pytest.raises(NotAProjection):
            h1_classify(rand_operator(module22, rng), module22)

    def test_phase_canonical(self, module22, rng):
        phi, _ = normalize(rand_vector(module22, rng))
        rotated = ModuleVector(module22, tuple(
            np.exp(1j * rng.uniform(0, 2 * np.pi)) * c for c in phi.coords))
        d1 = h1_classify(tensor(phi, phi), module22)
        d2 = h1_classify(tensor(rotated, rotated), module22)
        assert (d1.vectors[0] - d2.vectors[0]).max_abs() <= 1e-12


class TestMSet:
    def test_member_single_component(self, space2, rng):
        line = ModuleSpace.homogeneous(space2, 2)
        structure = direct_sum([line, line])
        q, _ = single_component_projection(
            structure, 0,
            tuple(rng.standard_normal(2) + 1j * rng.standard_normal(2)
                  for _ in range(2)))
        assert m_set_member(q, structure) == 0

    def test_component_moves_across_atoms(self, space2):
        line = ModuleSpace.homogeneous(space2, 1)
        structure = direct_sum([line, line])
        blocks = (
            np.outer([1.0, 0.0], [1.0, 0.0]).astype(complex),
            np.outer([0.0, 1.0], [0.0, 1.0]).astype(complex),
        )
        q = Operator(structure.sum_space, structure.sum_space, blocks)
        assert m_set_member(q, structure) is None

    def test_spread_support(self, space2):
        line = ModuleSpace.homogeneous(space2, 1)
        structure = direct_sum([line, line])
        v = np.array([1.0, 1.0]) / np.sqrt(2.0)
        blocks = tuple(np.outer(v, v).astype(complex) for _ in range(2))
        q = Operator(structure.sum_space, structure.sum_space, blocks)
        assert m_set_member(q, structure) is None

    def test_rejects_non_projection(self, space2, rng):
        line = ModuleSpace.homogeneous(space2, 1)
        structure = direct_sum([line, line])
        with pytest.raises(NotAProjection):
            m_set_member(rand_operator(structure.sum_space, rng), structure)


class TestApproxRelation:
    def make_structure(self, space):
        return direct_sum([ModuleSpace.homogeneous(space, 2)] * 2)

    def test_reflexive(self, space2, rng):
        structure = self.make_structure(space2)
        q, _ = single_component_projection(
            structure, 0,
            tuple(rng.standard_normal(2) + 1j * rng.standard_normal(2)
                  for _ in range(2)))
        assert approx_relation(q, q, structure)

    def test_distinct_components_unrelated(self, space2, rng):
        structure = self.make_structure(space2)
        p, _ = single_component_projection(
            structure, 0,
            tuple(rng.standard_normal(2) + 1j * rng.standard_normal(2)
                  for _ in range(2)))
        q, _ = single_component_projection(
            structure, 1,
            tuple(rng.standard_normal(2) + 1j * rng.standard_normal(2)
                  for _ in range(2)))
        assert not approx_relation(p, q, structure)

    def test_orthogonal_same_component_related(self, space2):
        structure = self.make_structure(space2)
        p, phi = single_component_projection(
            structure, 0, (np.array([1.0, 0.0]), np.array([1.0, 0.0])))
        q, psi = single_component_projection(
            structure, 0, (np.array([0.0, 1.0]), np.array([0.0, 1.0])))
        assert approx_relation(p, q, structure)
        # the explicit witness product is nonzero on every atom
        xi = xi_witness(psi, phi)
        chain = compose(q, compose(tensor(xi, xi), p))
        assert np.all(op_norm(chain).values.real > 1e-9)


class TestXiWitness:
    def test_atomwise_dichotomy(self, module22):
        phi = ModuleVector(module22, (np.array([1.0, 0.0]), np.array([1.0, 0.0])))
        psi = ModuleVector(module22, (np.array([0.0, 1.0]),
                                      np.array([1.0, 1.0]) / np.sqrt(2.0)))
        xi = xi_witness(phi, psi)
        # orthogonal on atom 0: averaged; oblique on atom 1: keeps phi
        assert np.allclose(xi.coords[0], (phi.coords[0] + psi.coords[0]) / np.sqrt(2))
        assert np.allclose(xi.coords[1], phi.coords[1])
        pairing = inner(phi, xi) * inner(xi, psi)
        assert np.all(np.abs(pairing.values) > 1e-9)


class TestExtractUnitary:
    def test_identity_two_components(self, space2):
        structure = direct_sum([ModuleSpace.homogeneous(space2, 2)] * 2)
        impl = extract_unitary(identity_morphism(structure))
        assert impl.max_residual <= 1e-12
        assert len(impl.partition) == 1
        assert impl.bijections == ((0, 1),)
        assert op_distance(impl.implementing,
                           Operator.identity(structure.sum_space)) <= 1e-12

    def test_swap_on_one_atom(self, space2, rng):
        module = ModuleSpace.homogeneous(space2, 2)
        structure = direct_sum([module, module])
        perms = ((1, 0), (0, 1))  # swap on atom 0, identity on atom 1
        u0 = random_block_unitary(structure, perms, rng)
        pi = conjugation_morphism(u0, structure, structure,
                                  star_preserving=True, unitary=True)
        impl = extract_unitary(pi)
        assert impl.max_residual <= 1e-10
        assert impl.bijections == ((0, 1), (1, 0))
        assert np.array_equal(impl.partition.parts[0].indicator, [False, True])
        assert np.array_equal(impl.partition.parts[1].indicator, [True, False])
        u = impl.implementing
        assert op_norm(compose(adjoint(u), u)
                       - Operator.identity(u.domain)).max_abs() <= 1e-10

    def test_permutation_with_random_unitaries(self, rng):
        space = AtomSpace.uniform(3)
        module = ModuleSpace(space, (2, 1, 3))
        structure = direct_sum([module] * 3)
        perms = tuple(tuple(int(v) for v in rng.permutation(3)) for _ in range(3))
        u0 = random_block_unitary(structure, perms, rng)
        pi = conjugation_morphism(u0, structure, structure,
                                  star_preserving=True, unitary=True)
        impl = extract_unitary(pi)
        assert impl.max_residual <= 1e-8
        part_of_atom = impl.partition.part_index()
        for t in range(3):
            assert impl.bijections[part_of_atom[t]] == perms[t]

    def test_cross_structure_isomorphism(self, space2, rng):
        # distinct source and target structures related by a block unitary
        small = ModuleSpace.homogeneous(space2, 2)
        big = ModuleSpace.homogeneous(space2, 1)
        source = direct_sum([small, big])
        target = direct_sum([small, big])
        blocks = []
        for t in range(2):
            u = np.zeros((3, 3), dtype=np.complex128)
            u[:2, :2] = haar_unitary(2, rng)
            u[2:, 2:] = haar_unitary(1, rng)
            blocks.append(u)
        u0 = Operator(source.sum_space, target.sum_space, tuple(blocks))
        pi = conjugation_morphism(u0, source, target,
                                  star_preserving=True, unitary=True)
        impl = extract_unitary(pi)
        assert impl.max_residual <= 1e-10
        assert impl.bijections == ((0, 1),)

    def test_requires_star_flag(self, space2, rng):
        structure = direct_sum([ModuleSpace.homogeneous(space2, 2)] * 2)
        u0 = random_block_unitary(structure, ((0, 1), (0, 1)), rng)
        pi = conjugation_morphism(u0, structure, structure, unitary=True)
        with pytest.raises(NotStarIsomorphism):
            extract_unitary(pi)

    def test_rejects_non_unitary_conjugation(self, space2, rng):
        structure = direct_sum([ModuleSpace.homogeneous(space2, 2)] * 2)
        x = random_invertible(structure.sum_space, rng, condition_cap=100.0)
        pi = conjugation_morphism(x, structure, structure, star_preserving=True)
        with pytest.raises(NotStarIsomorphism):
            extract_unitary(pi)

    def test_component_count_mismatch(self, space2):
        line = ModuleSpace.homogeneous(space2, 1)
        pair = direct_sum([line, line])
        plane = direct_sum([ModuleSpace.homogeneous(space2, 2)])
        images = []
        for t in range(2):
            per_comp = []
            for i in range(2):
                arr = np.zeros((1, 1, 2, 2), dtype=np.complex128)
                arr[0, 0, i, i] = 1.0
                per_comp.append(arr)
            images.append(tuple(per_comp))
        pi = AlgebraMorphism(pair, plane, tuple(images), star_preserving=True)
        with pytest.raises(ComponentMismatch):
            extract_unitary(pi)

    def test_empty_fiber(self, space2):
        thin = ModuleSpace(space2, (1, 0))
        structure = direct_sum([thin, thin])
        pi = identity_morphism(structure)
        with pytest.raises(EmptyFiber):
            extract_unitary(pi)

    def test_isometry_norm_law(self, space2, rng):
        # per part and component, vectors keep their lengths across the map
        module = ModuleSpace.homogeneous(space2, 2)
        structure = direct_sum([module, module])
        perms = ((1, 0), (1, 0))
        u0 = random_block_unitary(structure, perms, rng)
        pi = conjugation_morphism(u0, structure, structure,
                                  star_preserving=True, unitary=True)
        impl = extract_unitary(pi)
        for _ in range(10):
            blocks = []
            for t in range(2):
                blk = np.zeros((4, 4), dtype=np.complex128)
                for i in range(2):
                    blk[2 * i:2 * i + 2, 2 * i:2 * i + 2] = (
                        rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
                blocks.append(blk)
            x = Operator(structure.sum_space, structure.sum_space, tuple(blocks))
            px = apply_morphism(pi, x)
            for i in range(2):
                phi_i = structure.inject(i, ModuleVector(
                    module, tuple(np.eye(2, dtype=complex)[0] for _ in range(2))))
                psi_i = apply(impl.implementing, phi_i)
                for part in impl.partition:
                    lhs = part * norm(apply(x, phi_i))
                    rhs = part * norm(apply(px, psi_i))
                    assert (lhs - rhs).max_abs() <= 1e-9 * (1 + x.max_abs())


class TestVerifySpatial:
    def test_round_trip(self, space2, rng):
        structure = direct_sum([ModuleSpace.homogeneous(space2, 2)] * 2)
        perms = ((1, 0), (0, 1))
        u0 = random_block_unitary(structure, perms, rng)
        pi = conjugation_morphism(u0, structure, structure,
                                  star_preserving=True, unitary=True)
        impl = extract_unitary(pi)
        report = verify_spatial(pi, impl)
        assert report.ok
        assert report.source_equals_target
        assert report.conjugation_residual <= 1e-8
        # a component swap is spatial but not inner in the block algebra
        assert report.inner is False

    def test_scaled_isometry_residual(self, space2, rng):
        structure = direct_sum([ModuleSpace.homogeneous(space2, 2)] * 2)
        u0 = random_block_unitary(structure, ((0, 1), (0, 1)), rng)
        pi = conjugation_morphism(u0, structure, structure,
                                  star_preserving=True, unitary=True)
        impl = extract_unitary(pi)
        doubled = SpatialImplementation(
            implementing=2.0 * impl.implementing,
            inverse=0.5 * impl.inverse,
            partition=impl.partition,
            bijections=impl.bijections,
            max_residual=impl.max_residual,
        )
        report = verify_spatial(pi, doubled)
        # ||(2U)+(2U) - I|| = ||4I - I|| = 3 on every atom
        assert abs(report.isometry_left - 3.0) <= 1e-9
        assert not report.ok

    def test_central_phase_gauge_invariance(self, space2, rng):
        structure = direct_sum([ModuleSpace.homogeneous(space2, 2)] * 2)
        u0 = random_block_unitary(structure, ((1, 0), (1, 0)), rng)
        pi = conjugation_morphism(u0, structure, structure,
                                  star_preserving=True, unitary=True)
        impl = extract_unitary(pi)
        phase = np.exp(1j * 0.7)
        rotated = SpatialImplementation(
            implementing=phase * impl.implementing,
            inverse=np.conj(phase) * impl.inverse,
            partition=impl.partition,
            bijections=impl.bijections,
            max_residual=impl.max_residual,
        )
        report = verify_spatial(pi, rotated)
        assert report.ok
        assert report.conjugation_residual <= 1e-8

    def test_shape_mismatch(self, space2, rng, module22):
        structure = direct_sum([ModuleSpace.homogeneous(space2, 2)] * 2)
        u0 = random_block_unitary(structure, ((0, 1), (0, 1)), rng)
        pi = conjugation_morphism(u0, structure, structure,
                                  star_preserving=True, unitary=True)
        impl = extract_unitary(pi)
        bad = SpatialImplementation(
            implementing=Operator.identity(module22),
            inverse=Operator.identity(module22),
            partition=impl.partition,
            bijections=impl.bijections,
            max_residual=0.0,
        )
        with pytest.raises(ShapeMismatch):
            verify_spatial(pi, bad)

    def test_inner_automorphism_membership(self, module22, rng):
        # plain-module automorphisms implement inside the algebra itself
        blocks = tuple(haar_unitary(2, rng) for _ in range(2))
        u = Operator(module22, module22, blocks)
        pi = conjugation_morphism(u, module22, module22,
                                  star_preserving=True, unitary=True)
        impl = extract_unitary(pi)
        report = verify_spatial(pi, impl)
        assert report.ok
        assert report.source_equals_target
        assert report.in_algebra_residual == 0.0
        assert report.inner is True


class TestApplyMorphism:
    def test_matches_direct_conjugation(self, module22, rng):
        x = random_invertible(module22, rng)
        alpha = conjugation_morphism(x, module22, module22)
        a = rand_operator(module22, rng)
        xinv = Operator(module22, module22,
                        tuple(np.linalg.inv(b) for b in x.blocks))
        expected = compose(x, compose(a, xinv))
        assert op_distance(apply_morphism(alpha, a), expected) <= 1e-9 * (
            1 + expected.max_abs())

    def test_identity_morphism_is_identity(self, module22, rng):
        a = rand_operator(module22, rng)
        assert op_distance(apply_morphism(identity_morphism(module22), a), a) == 0.0
