import numpy as np
import pytest

from khop import AtomSpace, ModuleSpace, ModuleVector, Operator


@pytest.fixture
def space2():
    return AtomSpace.uniform(2)


@pytest.fixture
def space3():
    return AtomSpace((1.0, 0.5, 2.0))


@pytest.fixture
def module22(space2):
    return ModuleSpace.homogeneous(space2, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def rand_vector(module: ModuleSpace, rng) -> ModuleVector:
    return ModuleVector(module, tuple(
        rng.standard_normal(d) + 1j * rng.standard_normal(d)
        for d in module.fiber_dims
    ))


def rand_operator(module: ModuleSpace, rng, codomain=None) -> Operator:
    codomain = module if codomain is None else codomain
    return Operator(module, codomain, tuple(
        rng.standard_normal((codomain.fiber_dims[t], module.fiber_dims[t]))
        + 1j * rng.standard_normal((codomain.fiber_dims[t], module.fiber_dims[t]))
        for t in range(module.atom_count)
    ))
