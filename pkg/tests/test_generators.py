"""Instance generation: determinism, conditioning, parameter validation."""

import numpy as np
import pytest

from khop import gen_instance, leibniz_check, morphism_check
from khop.errors import InvalidParams
from khop.generators import haar_unitary, random_block_unitary, random_invertible
from khop.kh_module import ModuleSpace, direct_sum
from khop.measure_ring import AtomSpace


def test_derivation_instances_satisfy_leibniz():
    inst = gen_instance("derivation", 4, (1, 2, 3, 2), seed=11)
    assert leibniz_check(inst.payload).ok


def test_trivial_fiber_derivation_is_zero():
    inst = gen_instance("derivation", 1, 1, seed=0)
    assert inst.payload.max_abs() == 0.0


def test_automorphism_instances_check_out():
    inst = gen_instance("automorphism", 3, 2, seed=4)
    report = morphism_check(inst.payload)
    assert report.multiplicative_residual <= report.bound
    assert report.bijective


def test_condition_cap_respected():
    rng = np.random.default_rng(0)
    module = ModuleSpace(AtomSpace.uniform(5), (4,) * 5)
    for cap in (10.0, 1e3):
        x = random_invertible(module, rng, condition_cap=cap)
        for block in x.blocks:
            s = np.linalg.svd(block, compute_uv=False)
            assert s[0] / s[-1] <= cap * (1 + 1e-9)


def test_haar_unitary_is_unitary():
    rng = np.random.default_rng(3)
    for n in (1, 2, 5):
        u = haar_unitary(n, rng)
        assert np.max(np.abs(u.conj().T @ u - np.eye(n))) <= 1e-12


def test_block_unitary_moves_components():
    rng = np.random.default_rng(5)
    space = AtomSpace.uniform(2)
    module = ModuleSpace.homogeneous(space, 2)
    structure = direct_sum([module, module])
    u = random_block_unitary(structure, ((1, 0), (0, 1)), rng)
    b0 = u.blocks[0]
    # atom 0 swaps: upper-left corner empty, lower-left carries the unitary
    assert np.max(np.abs(b0[:2, :2])) == 0.0
    assert np.max(np.abs(b0[2:, :2])) > 0.0
    assert np.max(np.abs(b0.conj().T @ b0 - np.eye(4))) <= 1e-12


def test_block_unitary_rejects_dim_mismatch():
    rng = np.random.default_rng(5)
    space = AtomSpace.uniform(1)
    structure = direct_sum([
        ModuleSpace(space, (1,)), ModuleSpace(space, (2,))
    ])
    with pytest.raises(InvalidParams):
        random_block_unitary(structure, ((1, 0),), rng)


def test_star_iso_permutations_are_bijections():
    inst = gen_instance("star_iso", 5, 3, seed=21, components=4)
    for perm in inst.permutations:
        assert sorted(perm) == [0, 1, 2, 3]


def test_instance_determinism():
    a = gen_instance("star_iso", 3, 2, seed=100, components=2)
    b = gen_instance("star_iso", 3, 2, seed=100, components=2)
    assert a.permutations == b.permutations
    for t in range(3):
        for i in range(2):
            assert np.array_equal(a.payload.images[t][i], b.payload.images[t][i])


def test_invalid_params():
    with pytest.raises(InvalidParams):
        gen_instance("derivation", 0, 2, seed=1)
    with pytest.raises(InvalidParams):
        gen_instance("derivation", 2, (2,), seed=1)
    with pytest.raises(InvalidParams):
        gen_instance("derivation", 2, (2, 0), seed=1)
    with pytest.raises(InvalidParams):
        gen_instance("automorphism", 2, 2, seed=1, condition_cap=0.5)
    with pytest.raises(InvalidParams):
        gen_instance("star_iso", 2, 2, seed=1, components=0)
    with pytest.raises(InvalidParams):
        gen_instance("axioms", 2, 2, seed=1, operators=0)
    with pytest.raises(InvalidParams):
        gen_instance("nonsense", 2, 2, seed=1)
