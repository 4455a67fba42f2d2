"""Seeded random instance generation.

All randomness flows through one ``numpy.random.default_rng`` (PCG64)
generator seeded from the instance seed, so a fixed seed reproduces the
instance bit for bit across runs.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .derivations import inner_derivation
from .errors import InvalidParams
from .instance import Instance
from .kh_module import BlockStructure, ModuleSpace, direct_sum
from .measure_ring import AtomSpace
from .morphisms import conjugation_morphism
from .operator_algebra import Operator


def _resolve_dims(atoms: int, dims) -> tuple[int, ...]:
    if isinstance(dims, (int, np.integer)):
        return (int(dims),) * atoms
    out = tuple(int(d) for d in dims)
    if len(out) != atoms:
        raise InvalidParams(f"need {atoms} per-atom dims, got {len(out)}")
    return out


def random_operator(module: ModuleSpace, rng: np.random.Generator,
                    codomain: ModuleSpace | None = None) -> Operator:
    """Complex standard-normal blocks."""
    codomain = module if codomain is None else codomain
    blocks = []
    for t in range(module.atom_count):
        shape = (codomain.fiber_dims[t], module.fiber_dims[t])
        blocks.append(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return Operator(module, codomain, blocks)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a Gaussian matrix."""
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r).copy()
    phases[phases == 0] = 1.0
    return q * (phases / np.abs(phases))


def random_invertible(module: ModuleSpace, rng: np.random.Generator,
                      condition_cap: float = 1e3) -> Operator:
    """Invertible blocks with per-atom condition number below the cap."""
    if condition_cap < 1.0:
        raise InvalidParams("condition cap must be >= 1")
    blocks = []
    half = np.sqrt(condition_cap)
    for d in module.fiber_dims:
        if d == 0:
            blocks.append(np.zeros((0, 0), dtype=np.complex128))
            continue
        u = haar_unitary(d, rng)
        v = haar_unitary(d, rng)
        # log-uniform singular values keep the condition number <= cap
        sing = np.exp(rng.uniform(np.log(1.0 / half), np.log(half), size=d))
        blocks.append(u @ np.diag(sing) @ v.conj().T)
    return Operator(module, module, blocks)


def random_block_unitary(
    structure: BlockStructure,
    permutations: Sequence[Sequence[int]],
    rng: np.random.Generator,
) -> Operator:
    """Per-atom component permutation composed with per-component unitaries.

    ``permutations[t][i]`` gives the target slot of component i at atom t;
    the matched components must have equal fiber dimensions there.
    """
    sum_space = structure.sum_space
    blocks = []
    for t in range(structure.space.atom_count):
        n = sum_space.fiber_dims[t]
        perm = permutations[t]
        offs = structure.offsets(t)
        u = np.zeros((n, n), dtype=np.complex128)
        for i, comp in enumerate(structure.components):
            d = comp.fiber_dims[t]
            j = perm[i]
            if structure.components[j].fiber_dims[t] != d:
                raise InvalidParams(
                    f"atom {t}: permuting component {i} onto {j} with unequal dims"
                )
            u[offs[j]:offs[j] + d, offs[i]:offs[i] + d] = haar_unitary(d, rng)
        blocks.append(u)
    return Operator(sum_space, sum_space, blocks)


def gen_instance(
    kind: str,
    atoms: int,
    dims,
    seed: int,
    condition_cap: float = 1e3,
    components: int = 2,
    operators: int = 4,
) -> Instance:
    """Generate a deterministic instance of the requested kind.

    Derivations come from commutators with a random element, automorphisms
    from conjugation with a condition-capped invertible element, and
    star-isomorphisms from conjugation with a component-permuting unitary;
    the generating element is stored as ground truth.
    """
    if atoms < 1:
        raise InvalidParams("need at least one atom")
    fiber_dims = _resolve_dims(atoms, dims)
    if kind in ("derivation", "automorphism", "star_iso") and min(fiber_dims) < 1:
        raise InvalidParams("extraction instances need fiber dims >= 1")
    rng = np.random.default_rng(seed)
    space = AtomSpace.uniform(atoms)
    module = ModuleSpace(space, fiber_dims)
    params = {"atoms": atoms, "dims": list(fiber_dims)}

    if kind == "derivation":
        x = random_operator(module, rng)
        return Instance(kind, module, inner_derivation(x), seed, params,
                        ground_truth=x)

    if kind == "automorphism":
        params["condition_cap"] = condition_cap
        x = random_invertible(module, rng, condition_cap)
        alpha = conjugation_morphism(x, module, module)
        return Instance(kind, module, alpha, seed, params, ground_truth=x)

    if kind == "star_iso":
        if components < 1:
            raise InvalidParams("need at least one component")
        params["components"] = components
        structure = direct_sum([module] * components)
        perms = tuple(
            tuple(int(v) for v in rng.permutation(components))
            for _ in range(atoms)
        )
        u0 = random_block_unitary(structure, perms, rng)
        pi = conjugation_morphism(u0, structure, structure,
                                  star_preserving=True, unitary=True)
        return Instance(kind, structure, pi, seed, params,
                        ground_truth=u0, permutations=perms)

    if kind == "axioms":
        if operators < 1:
            raise InvalidParams("need at least one operator")
        params["operators"] = operators
        ops = tuple(random_operator(module, rng) for _ in range(operators))
        return Instance(kind, module, ops, seed, params)

    raise InvalidParams(f"unknown instance kind {kind!r}")
