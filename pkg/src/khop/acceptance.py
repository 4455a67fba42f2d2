"""End-to-end acceptance criteria at pinned tolerances.

Every criterion runs a fixed family of seeded instances and compares
residuals against the tolerances it states; ``run_acceptance`` returns one
result per criterion.  An optional scale factor relaxes or tightens all
pinned bounds jointly (1.0 keeps them as stated).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .derivations import (
    extract_implementing_element,
    leibniz_check,
    transpose_map,
)
from .generators import gen_instance
from .kh_module import ModuleSpace, ModuleVector, direct_sum, inner, normalize
from .measure_ring import AtomSpace
from .morphisms import (
    approx_relation,
    extract_spatial_element,
    extract_unitary,
    h1_classify,
    xi_witness,
)
from .operator_algebra import (
    Operator,
    adjoint,
    compose,
    frobenius,
    op_norm,
    ostar_closure_check,
    tensor,
)
from .oracles import commutator_lstsq_element, operator_centrality_gap
from .suites import AXIOM_LAWS, _EXACT_LAWS
from .tolerances import TAU_EQ, TAU_ZERO


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] criterion {self.number} ({self.name}): {self.detail}"


def _random_shape(seed: int, salt: int, max_atoms: int, max_dim: int):
    rng = np.random.default_rng([seed, salt])
    atoms = int(rng.integers(1, max_atoms + 1))
    dims = tuple(int(d) for d in rng.integers(1, max_dim + 1, size=atoms))
    return atoms, dims


def criterion_derivation_round_trip(scale: float = 1.0) -> CriterionResult:
    """100 commutator derivations: extraction vs ground truth and oracle."""
    worst_res, worst_central, worst_oracle = 0.0, 0.0, 0.0
    failures = 0
    for seed in range(100):
        atoms, dims = _random_shape(seed, 11, max_atoms=8, max_dim=6)
        inst = gen_instance("derivation", atoms, dims, seed)
        x = inst.ground_truth
        extraction = extract_implementing_element(inst.payload)
        bound = 1e-8 * (1.0 + frobenius(x).max_abs()) * scale
        central = operator_centrality_gap(extraction.element - x)
        oracle = commutator_lstsq_element(inst.payload)
        oracle_gap = operator_centrality_gap(extraction.element - oracle)
        worst_res = max(worst_res, extraction.max_residual / bound)
        worst_central = max(worst_central, central)
        worst_oracle = max(worst_oracle, oracle_gap)
        ok = (extraction.max_residual <= bound
              and central <= 1e-8 * scale
              and oracle_gap <= 1e-8 * scale)
        failures += int(not ok)
    return CriterionResult(
        1, "derivation round trip", failures == 0,
        f"failures={failures}/100 worst residual/bound={worst_res:.2e} "
        f"centrality={worst_central:.2e} oracle gap={worst_oracle:.2e}",
    )


def criterion_leibniz_soundness(scale: float = 1.0) -> CriterionResult:
    """Perturbed commutator maps are rejected with the right magnitude."""
    failures = 0
    worst_ratio_low, worst_ratio_high = np.inf, 0.0
    for seed in range(100):
        eps = 1e-3 if seed % 2 == 0 else 1e-6
        atoms, dims = _random_shape(seed, 23, max_atoms=6, max_dim=6)
        if max(dims) < 2:
            dims = tuple(max(d, 2) for d in dims)
        inst = gen_instance("derivation", atoms, dims, seed)
        clean = leibniz_check(inst.payload)
        twist = transpose_map(inst.payload.module)
        defect_scale = leibniz_check(twist).max_violation
        perturbed = inst.payload + eps * twist
        report = leibniz_check(perturbed)
        ratio = report.max_violation / (eps * defect_scale)
        worst_ratio_low = min(worst_ratio_low, ratio)
        worst_ratio_high = max(worst_ratio_high, ratio)
        ok = (clean.ok and not report.ok
              and 0.1 / scale <= ratio <= 10.0 * scale)
        failures += int(not ok)
    return CriterionResult(
        2, "leibniz soundness", failures == 0,
        f"failures={failures}/100 violation/(eps*scale) in "
        f"[{worst_ratio_low:.2f}, {worst_ratio_high:.2f}]",
    )


def criterion_automorphism_round_trip(scale: float = 1.0) -> CriterionResult:
    """100 conjugation automorphisms with condition cap 1e3."""
    failures = 0
    worst_res, worst_gauge = 0.0, 0.0
    for seed in range(100):
        atoms, dims = _random_shape(seed, 37, max_atoms=6, max_dim=5)
        inst = gen_instance("automorphism", atoms, dims, seed, condition_cap=1e3)
        impl = extract_spatial_element(inst.payload)
        x = inst.ground_truth
        x_inv = Operator(x.codomain, x.domain,
                         tuple(np.linalg.inv(b) for b in x.blocks))
        ratio = compose(impl.implementing, x_inv)
        gauge = operator_centrality_gap(ratio)
        worst_res = max(worst_res, impl.max_residual)
        worst_gauge = max(worst_gauge, gauge)
        ok = impl.max_residual <= 1e-7 * scale and gauge <= 1e-7 * scale
        failures += int(not ok)
    return CriterionResult(
        3, "automorphism round trip", failures == 0,
        f"failures={failures}/100 worst residual={worst_res:.2e} "
        f"gauge={worst_gauge:.2e}",
    )


def criterion_star_iso_extraction(scale: float = 1.0) -> CriterionResult:
    """50 permuting block star-isomorphisms: isometry, conjugation, bijections."""
    failures = 0
    worst_iso, worst_conj = 0.0, 0.0
    for seed in range(50):
        rng = np.random.default_rng([seed, 41])
        components = int(rng.integers(2, 5))
        atoms = int(rng.integers(1, 7))
        dims = tuple(int(d) for d in rng.integers(1, 5, size=atoms))
        inst = gen_instance("star_iso", atoms, dims, seed, components=components)
        impl = extract_unitary(inst.payload)
        u = impl.implementing
        iso = max(
            op_norm(compose(adjoint(u), u)
                    - Operator.identity(u.domain)).max_abs(),
            op_norm(compose(u, adjoint(u))
                    - Operator.identity(u.codomain)).max_abs(),
        )
        part_index = impl.partition.part_index()
        bijections_match = all(
            tuple(inst.permutations[t]) == impl.bijections[part_index[t]]
            for t in range(atoms)
        )
        worst_iso = max(worst_iso, iso)
        worst_conj = max(worst_conj, impl.max_residual)
        ok = (iso <= 1e-8 * scale
              and impl.max_residual <= 1e-7 * scale
              and bijections_match)
        failures += int(not ok)
    return CriterionResult(
        4, "star-isomorphism extraction", failures == 0,
        f"failures={failures}/50 worst isometry={worst_iso:.2e} "
        f"conjugation={worst_conj:.2e}",
    )


def _random_rank_one_projection(seed: int):
    rng = np.random.default_rng([seed, 53])
    atoms = int(rng.integers(1, 6))
    components = int(rng.integers(2, 5))
    space = AtomSpace.uniform(atoms)
    modules = [
        ModuleSpace(space, tuple(int(d) for d in rng.integers(1, 5, size=atoms)))
        for _ in range(components)
    ]
    structure = direct_sum(modules)
    blocks = []
    for t in range(atoms):
        n = structure.sum_space.fiber_dims[t]
        comp = int(rng.integers(components))
        off = structure.offsets(t)[comp]
        d = modules[comp].fiber_dims[t]
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        v = v / np.linalg.norm(v)
        full = np.zeros(n, dtype=np.complex128)
        full[off:off + d] = v
        blocks.append(np.outer(full, np.conj(full)))
    q = Operator(structure.sum_space, structure.sum_space, tuple(blocks))
    return q, structure


def criterion_rank_one_decomposition(scale: float = 1.0) -> CriterionResult:
    """100 rank-one projections reconstruct from their classifications."""
    failures = 0
    worst = 0.0
    for seed in range(100):
        q, structure = _random_rank_one_projection(seed)
        decomp = h1_classify(q, structure)
        rebuilt = None
        for vec in decomp.vectors:
            term = tensor(vec, vec)
            rebuilt = term if rebuilt is None else rebuilt + term
        gap = frobenius(rebuilt - q).max_abs()
        covers = sum(int(np.sum(p.indicator)) for p in decomp.partition.parts)
        worst = max(worst, gap)
        ok = gap <= 1e-9 * scale and covers == structure.space.atom_count
        failures += int(not ok)
    return CriterionResult(
        5, "rank-one projection decomposition", failures == 0,
        f"failures={failures}/100 worst reconstruction={worst:.2e}",
    )


def criterion_component_relation(scale: float = 1.0) -> CriterionResult:
    """Single-component projections relate exactly when components agree."""
    del scale  # the relation is exact
    atoms = 3
    components = 4
    space = AtomSpace.uniform(atoms)
    module = ModuleSpace.homogeneous(space, 3)
    structure = direct_sum([module] * components)
    rng = np.random.default_rng(61)
    failures = 0
    vectors = {}
    for i in range(components):
        raw = ModuleVector(module, tuple(
            rng.standard_normal(3) + 1j * rng.standard_normal(3)
            for _ in range(atoms)
        ))
        unit, _ = normalize(raw)
        vectors[i] = structure.inject(i, unit)
    for i in range(components):
        for j in range(components):
            p = tensor(vectors[i], vectors[i])
            q = tensor(vectors[j], vectors[j])
            related = approx_relation(p, q, structure)
            failures += int(related != (i == j))
    # orthogonal pair inside one component, witnessed atom-wise
    base = ModuleVector(module, tuple(np.eye(3, dtype=np.complex128)[0]
                                      for _ in range(atoms)))
    mixed_coords = []
    for t in range(atoms):
        if t % 2 == 0:
            mixed_coords.append(np.eye(3, dtype=np.complex128)[1])
        else:
            mixed_coords.append((np.eye(3)[0] + np.eye(3)[1])
                                / np.sqrt(2.0) + 0.0j)
    partner = ModuleVector(module, tuple(mixed_coords))
    phi = structure.inject(0, base)
    psi = structure.inject(0, partner)
    failures += int(not approx_relation(tensor(phi, phi), tensor(psi, psi),
                                        structure))
    xi = xi_witness(phi, psi)
    witness = compose(tensor(psi, psi), compose(tensor(xi, xi), tensor(phi, phi)))
    coeffs = inner(phi, xi) * inner(xi, psi)
    nonzero = bool(np.all(np.abs(coeffs.values) > TAU_ZERO))
    witness_nonzero = bool(np.all(op_norm(witness).values.real > TAU_ZERO))
    failures += int(not (nonzero and witness_nonzero))
    return CriterionResult(
        6, "component relation dichotomy", failures == 0,
        f"failures={failures} over {components * components} pairs "
        f"plus atom-wise witness",
    )


def criterion_closure_identities(scale: float = 1.0) -> CriterionResult:
    """50 operator pairs satisfy the adjoint closure identities."""
    failures = 0
    worst = 0.0
    for seed in range(50):
        atoms, dims = _random_shape(seed, 71, max_atoms=5, max_dim=5)
        inst = gen_instance("axioms", atoms, dims, seed, operators=2)
        outcome = ostar_closure_check(inst.payload, samples=20, seed=seed)
        residual = max(outcome["residuals"].values())
        worst = max(worst, residual)
        failures += int(residual > 1e-10 * scale)
    return CriterionResult(
        7, "adjoint closure identities", failures == 0,
        f"failures={failures}/50 worst residual={worst:.2e}",
    )


def criterion_axiom_suites(scale: float = 1.0) -> CriterionResult:
    """1000 randomized cases per law, zero failures."""
    cases = 1000
    failing_laws = []
    for law_id, (name, law) in enumerate(AXIOM_LAWS):
        rng = np.random.default_rng([97, law_id])
        worst = 0.0
        for k in range(cases):
            shape_rng = np.random.default_rng([k, 5, law_id])
            atoms = int(shape_rng.integers(1, 5))
            dims = tuple(int(d) for d in shape_rng.integers(1, 6, size=atoms))
            module = ModuleSpace(AtomSpace.uniform(atoms), dims)
            worst = max(worst, law(module, rng, 1))
        bound = 0.0 if name in _EXACT_LAWS else 10.0 * TAU_EQ * scale
        if worst > bound:
            failing_laws.append(name)
    return CriterionResult(
        8, "axiom suites", not failing_laws,
        (f"failing laws: {failing_laws}" if failing_laws
         else f"{cases} cases per law, all within bounds"),
    )


CRITERIA = (
    criterion_derivation_round_trip,
    criterion_leibniz_soundness,
    criterion_automorphism_round_trip,
    criterion_star_iso_extraction,
    criterion_rank_one_decomposition,
    criterion_component_relation,
    criterion_closure_identities,
    criterion_axiom_suites,
)


def run_acceptance(scale: float = 1.0) -> list[CriterionResult]:
    """Run every acceptance criterion and return the results in order."""
    return [criterion(scale) for criterion in CRITERIA]
