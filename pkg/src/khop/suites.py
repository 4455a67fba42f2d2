"""Verification suites over instances, with machine-readable reports.

Each suite turns one instance into a list of named checks (residual,
tolerance, pass/fail).  The axiom-law runners are exposed separately so the
acceptance harness can drive them at its own case counts.  Saved reports
exclude wall-clock timings so that a report is a deterministic function of
the instance and the tolerance configuration.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .derivations import extract_implementing_element, leibniz_check, residual
from .errors import NotADerivation, NotAutomorphism, NotStarIsomorphism, ParseError, ValidationError
from .instance import Instance
from .kh_module import (
    ModuleSpace,
    ModuleVector,
    d_decompose,
    inner,
    nabla_independent,
    norm,
)
from .measure_ring import RingElement, support
from .morphisms import extract_spatial_element, extract_unitary, morphism_check
from .operator_algebra import adjoint, apply, compose, ostar_closure_check
from .oracles import commutator_lstsq_element, gaussian_rank, operator_centrality_gap
from .serialize import canonical_json
from .tolerances import DEFAULT_TOLERANCES, Tolerances


@dataclass
class CheckResult:
    name: str
    residual: float
    tolerance: float
    passed: bool
    detail: str = ""


@dataclass
class Report:
    checks: list[CheckResult]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return all(c.passed for c in self.checks)


def report_to_doc(report: Report) -> dict:
    return {
        "version": "khop-1",
        "checks": [
            {
                "name": c.name,
                "residual": float(c.residual),
                "tolerance": float(c.tolerance),
                "passed": bool(c.passed),
                "detail": c.detail,
            }
            for c in report.checks
        ],
        "verdict": "pass" if report.verdict else "fail",
    }


def doc_to_report(doc) -> Report:
    if not isinstance(doc, dict) or "checks" not in doc:
        raise ValidationError("$.checks: missing")
    checks = []
    for k, c in enumerate(doc["checks"]):
        try:
            checks.append(CheckResult(
                name=str(c["name"]),
                residual=float(c["residual"]),
                tolerance=float(c["tolerance"]),
                passed=bool(c["passed"]),
                detail=str(c.get("detail", "")),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"$.checks[{k}]: {exc}") from exc
    return Report(checks)


def save_report(report: Report, path) -> None:
    Path(path).write_text(canonical_json(report_to_doc(report)), encoding="utf-8")


def load_report(path) -> Report:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return doc_to_report(doc)


def format_report(report: Report) -> str:
    lines = []
    for c in report.checks:
        mark = "PASS" if c.passed else "FAIL"
        lines.append(
            f"[{mark}] {c.name}: residual={c.residual:.3e} tol={c.tolerance:.3e}"
            + (f"  ({c.detail})" if c.detail else "")
        )
    lines.append("verdict: " + ("pass" if report.verdict else "fail"))
    return "\n".join(lines)


# --- randomized law runners ---------------------------------------------------
#
# Each runner draws `cases` configurations on the given module and returns the
# worst relative residual (0.0 means the law held exactly everywhere).

def _rand_vector(module: ModuleSpace, rng) -> ModuleVector:
    return ModuleVector(module, tuple(
        rng.standard_normal(d) + 1j * rng.standard_normal(d)
        for d in module.fiber_dims
    ))


def _rand_ring(module: ModuleSpace, rng) -> RingElement:
    n = module.atom_count
    return RingElement(module.space,
                       rng.standard_normal(n) + 1j * rng.standard_normal(n))


def _rel(gap: float, magnitude: float) -> float:
    return gap / (1.0 + magnitude)


def law_inner_positivity(module, rng, cases) -> float:
    worst = 0.0
    for _ in range(cases):
        phi = _rand_vector(module, rng)
        g = inner(phi, phi)
        bad = max(float(np.max(np.abs(g.values.imag))),
                  float(np.max(np.maximum(-g.values.real, 0.0))))
        worst = max(worst, _rel(bad, g.max_abs()))
    return worst


def law_inner_definiteness(module, rng, cases) -> float:
    mismatches = 0
    for _ in range(cases):
        phi = _rand_vector(module, rng)
        coords = []
        for c in phi.coords:
            coords.append(np.zeros_like(c) if rng.random() < 0.3 else c)
        phi = ModuleVector(module, tuple(coords))
        expected = np.array([bool(np.any(c != 0)) for c in phi.coords])
        got = support(inner(phi, phi)).indicator
        mismatches += int(not np.array_equal(expected, got))
    return float(mismatches)


def law_inner_hermitian(module, rng, cases) -> float:
    worst = 0.0
    for _ in range(cases):
        phi, psi = _rand_vector(module, rng), _rand_vector(module, rng)
        lhs = inner(phi, psi)
        rhs = inner(psi, phi).conj()
        worst = max(worst, _rel((lhs - rhs).max_abs(), lhs.max_abs()))
    return worst


def law_inner_ring_linear(module, rng, cases) -> float:
    worst = 0.0
    for _ in range(cases):
        phi, psi = _rand_vector(module, rng), _rand_vector(module, rng)
        lam = _rand_ring(module, rng)
        lhs = inner(lam * phi, psi)
        rhs = lam * inner(phi, psi)
        worst = max(worst, _rel((lhs - rhs).max_abs(), rhs.max_abs()))
    return worst


def law_inner_additive(module, rng, cases) -> float:
    worst = 0.0
    for _ in range(cases):
        phi, psi, eta = (_rand_vector(module, rng) for _ in range(3))
        lhs = inner(phi + psi, eta)
        rhs = inner(phi, eta) + inner(psi, eta)
        worst = max(worst, _rel((lhs - rhs).max_abs(), rhs.max_abs()))
    return worst


def law_norm_nonneg(module, rng, cases) -> float:
    worst = 0.0
    for _ in range(cases):
        phi = _rand_vector(module, rng)
        lengths = norm(phi)
        bad = max(float(np.max(np.abs(lengths.values.imag))),
                  float(np.max(np.maximum(-lengths.values.real, 0.0))))
        worst = max(worst, _rel(bad, lengths.max_abs()))
    return worst


def law_norm_definiteness(module, rng, cases) -> float:
    mismatches = 0
    for _ in range(cases):
        phi = _rand_vector(module, rng)
        coords = []
        for c in phi.coords:
            coords.append(np.zeros_like(c) if rng.random() < 0.3 else c)
        phi = ModuleVector(module, tuple(coords))
        expected = np.array([bool(np.any(c != 0)) for c in phi.coords])
        got = support(norm(phi)).indicator
        mismatches += int(not np.array_equal(expected, got))
    return float(mismatches)


def law_norm_homogeneous(module, rng, cases) -> float:
    worst = 0.0
    for _ in range(cases):
        phi = _rand_vector(module, rng)
        lam = _rand_ring(module, rng)
        lhs = norm(lam * phi)
        rhs = lam.modulus() * norm(phi)
        worst = max(worst, _rel((lhs - rhs).max_abs(), rhs.max_abs()))
    return worst


def law_norm_triangle(module, rng, cases) -> float:
    worst = 0.0
    for _ in range(cases):
        phi, psi = _rand_vector(module, rng), _rand_vector(module, rng)
        gap = norm(phi + psi) - (norm(phi) + norm(psi))
        excess = float(np.max(np.maximum(gap.values.real, 0.0)))
        worst = max(worst, _rel(excess, norm(phi).max_abs() + norm(psi).max_abs()))
    return worst


def law_cauchy_schwarz(module, rng, cases) -> float:
    worst = 0.0
    for _ in range(cases):
        phi, psi = _rand_vector(module, rng), _rand_vector(module, rng)
        lhs = inner(phi, psi).modulus()
        rhs = norm(phi) * norm(psi)
        excess = float(np.max(np.maximum((lhs - rhs).values.real, 0.0)))
        worst = max(worst, _rel(excess, rhs.max_abs()))
    return worst


def law_d_decompose(module, rng, cases) -> float:
    worst = 0.0
    for _ in range(cases):
        phi = _rand_vector(module, rng)
        lengths = norm(phi)
        mask = rng.random(module.atom_count) < 0.5
        from .measure_ring import Idempotent

        m1 = Idempotent(module.space, mask)
        e1 = m1 * lengths
        e2 = (~m1) * lengths
        phi1, phi2 = d_decompose(phi, e1, e2)
        sum_gap = (phi1 + phi2 - phi).max_abs()
        n1_gap = (norm(phi1) - e1).max_abs()
        n2_gap = (norm(phi2) - e2).max_abs()
        worst = max(worst, _rel(max(sum_gap, n1_gap, n2_gap), lengths.max_abs()))
    return worst


def law_nabla_vs_oracle(module, rng, cases) -> float:
    mismatches = 0
    max_dim = max(module.fiber_dims)
    for _ in range(cases):
        count = int(rng.integers(1, max_dim + 2))
        family = [_rand_vector(module, rng) for _ in range(count)]
        if count >= 2 and rng.random() < 0.5:
            # plant a ring-linear dependency on a random atom subset
            hit = rng.random(module.atom_count) < 0.6
            coeffs = rng.standard_normal(count - 1) + 1j * rng.standard_normal(count - 1)
            coords = []
            for t, c in enumerate(family[-1].coords):
                if hit[t]:
                    mixed = np.zeros_like(c)
                    for k in range(count - 1):
                        mixed += coeffs[k] * family[k].coords[t]
                    coords.append(mixed)
                else:
                    coords.append(c)
            family[-1] = ModuleVector(module, tuple(coords))
        verdict = nabla_independent(family)
        expected_deficient = np.zeros(module.atom_count, dtype=bool)
        for t, d in enumerate(module.fiber_dims):
            rows = np.array([v.coords[t] for v in family]).reshape(count, d)
            expected_deficient[t] = gaussian_rank(rows) < count
        if expected_deficient.any():
            ok = (not verdict.independent
                  and verdict.witness is not None
                  and np.array_equal(verdict.witness.indicator, expected_deficient))
        else:
            ok = verdict.independent
        mismatches += int(not ok)
    return float(mismatches)


AXIOM_LAWS = (
    ("inner_product.positivity", law_inner_positivity),
    ("inner_product.definiteness", law_inner_definiteness),
    ("inner_product.hermitian_symmetry", law_inner_hermitian),
    ("inner_product.ring_linearity", law_inner_ring_linear),
    ("inner_product.additivity", law_inner_additive),
    ("norm.nonnegativity", law_norm_nonneg),
    ("norm.definiteness", law_norm_definiteness),
    ("norm.homogeneity", law_norm_homogeneous),
    ("norm.triangle", law_norm_triangle),
    ("cauchy_schwarz", law_cauchy_schwarz),
    ("d_decompose.postconditions", law_d_decompose),
    ("nabla_independence.vs_rank_oracle", law_nabla_vs_oracle),
)

_EXACT_LAWS = {
    "inner_product.definiteness",
    "norm.definiteness",
    "nabla_independence.vs_rank_oracle",
}


def run_axiom_laws(module: ModuleSpace, rng, cases: int,
                   tol: Tolerances) -> list[CheckResult]:
    """Run every randomized law on one module; one check per law."""
    results = []
    for name, law in AXIOM_LAWS:
        worst = law(module, rng, cases)
        bound = 0.0 if name in _EXACT_LAWS else tol.eq * 10.0
        results.append(CheckResult(f"axiom.{name}", worst, bound, worst <= bound,
                                   detail=f"{cases} cases"))
    return results


# --- per-kind suites -----------------------------------------------------------

def _derivation_suite(inst: Instance, tol: Tolerances) -> list[CheckResult]:
    deriv = inst.payload
    checks = []
    report = leibniz_check(deriv, tol.leibniz)
    checks.append(CheckResult("leibniz.violation", report.max_violation,
                              report.tolerance, report.ok))
    if not report.ok:
        checks.append(CheckResult("extraction.skipped", 1.0, 0.0, False,
                                  detail="NotADerivation"))
        return checks
    extraction = extract_implementing_element(deriv, tol.leibniz, tol.residual)
    scale = 1.0 + deriv.max_abs()
    checks.append(CheckResult("extraction.residual", extraction.max_residual,
                              tol.residual * scale,
                              extraction.max_residual <= tol.residual * scale))
    oracle = commutator_lstsq_element(deriv)
    oracle_gap = operator_centrality_gap(extraction.element - oracle)
    checks.append(CheckResult("extraction.vs_lstsq_oracle", oracle_gap,
                              tol.residual * scale,
                              oracle_gap <= tol.residual * scale))
    if inst.ground_truth is not None:
        gt_gap = operator_centrality_gap(extraction.element - inst.ground_truth)
        checks.append(CheckResult("extraction.ground_truth_centrality", gt_gap,
                                  tol.residual * scale,
                                  gt_gap <= tol.residual * scale))
    return checks


def _automorphism_suite(inst: Instance, tol: Tolerances) -> list[CheckResult]:
    alpha = inst.payload
    checks = []
    report = morphism_check(alpha, tol.eq, tol.rank)
    checks.append(CheckResult("morphism.multiplicative",
                              report.multiplicative_residual, report.bound,
                              report.multiplicative_residual <= report.bound))
    checks.append(CheckResult("morphism.unital", report.unital_residual,
                              report.bound, report.unital_residual <= report.bound))
    checks.append(CheckResult("morphism.bijective",
                              0.0 if report.bijective else 1.0, 0.0,
                              report.bijective,
                              detail=f"min_sv={report.min_singular_value:.3e}"))
    if not (report.multiplicative_residual <= report.bound
            and report.unital_residual <= report.bound and report.bijective):
        checks.append(CheckResult("extraction.skipped", 1.0, 0.0, False,
                                  detail="NotAutomorphism"))
        return checks
    impl = extract_spatial_element(alpha, tol.eq, tol.zero, tol.rank)
    bound = tol.residual * 10.0
    checks.append(CheckResult("extraction.residual", impl.max_residual, bound,
                              impl.max_residual <= bound))
    if inst.ground_truth is not None:
        ratio = compose(impl.implementing,
                        _inverse_of(inst.ground_truth))
        gap = operator_centrality_gap(ratio) / max(ratio.max_abs(), 1.0)
        checks.append(CheckResult("extraction.ground_truth_proportional", gap,
                                  bound, gap <= bound))
    return checks


def _inverse_of(x):
    from .operator_algebra import Operator

    blocks = tuple(np.linalg.inv(b) for b in x.blocks)
    return Operator(x.codomain, x.domain, blocks)


def _star_iso_suite(inst: Instance, tol: Tolerances) -> list[CheckResult]:
    pi = inst.payload
    checks = []
    report = morphism_check(pi, tol.eq, tol.rank)
    star = report.star_residual if report.star_residual is not None else 1.0
    checks.append(CheckResult("morphism.multiplicative",
                              report.multiplicative_residual, report.bound,
                              report.multiplicative_residual <= report.bound))
    checks.append(CheckResult("morphism.star_preserving", star, report.bound,
                              star <= report.bound))
    checks.append(CheckResult("morphism.bijective",
                              0.0 if report.bijective else 1.0, 0.0,
                              report.bijective))
    if not report.ok:
        checks.append(CheckResult("extraction.skipped", 1.0, 0.0, False,
                                  detail="NotStarIsomorphism"))
        return checks
    impl = extract_unitary(pi, tol.eq, tol.zero, tol.rank)
    u = impl.implementing
    from .operator_algebra import Operator, op_norm

    iso_left = op_norm(compose(adjoint(u), u)
                       - Operator.identity(u.domain)).max_abs()
    iso_right = op_norm(compose(u, adjoint(u))
                        - Operator.identity(u.codomain)).max_abs()
    checks.append(CheckResult("isometry.left", iso_left, tol.residual,
                              iso_left <= tol.residual))
    checks.append(CheckResult("isometry.right", iso_right, tol.residual,
                              iso_right <= tol.residual))
    conj_bound = tol.residual * 10.0
    checks.append(CheckResult("conjugation.residual", impl.max_residual,
                              conj_bound, impl.max_residual <= conj_bound))
    if inst.permutations is not None:
        part_index = impl.partition.part_index()
        mismatch = 0
        for t, perm in enumerate(inst.permutations):
            recovered = impl.bijections[part_index[t]]
            mismatch += int(tuple(perm) != tuple(recovered))
        checks.append(CheckResult("bijections.match_ground_truth",
                                  float(mismatch), 0.0, mismatch == 0))
    return checks


def _axioms_suite(inst: Instance, tol: Tolerances, cases: int) -> list[CheckResult]:
    module = inst.structure
    rng = np.random.default_rng([inst.seed, 1])
    checks = run_axiom_laws(module, rng, cases, tol)
    closure = ostar_closure_check(inst.payload, samples=50,
                                  seed=inst.seed, tol=tol.eq)
    for name, value in closure["residuals"].items():
        checks.append(CheckResult(f"closure.{name}", value, closure["bound"],
                                  value <= closure["bound"]))
    return checks


def run_suite(inst: Instance, tol: Tolerances = DEFAULT_TOLERANCES,
              cases: int = 200) -> Report:
    """Dispatch an instance to its verification suite."""
    start = time.perf_counter()
    if inst.kind == "derivation":
        checks = _derivation_suite(inst, tol)
    elif inst.kind == "automorphism":
        checks = _automorphism_suite(inst, tol)
    elif inst.kind == "star_iso":
        checks = _star_iso_suite(inst, tol)
    elif inst.kind == "axioms":
        checks = _axioms_suite(inst, tol, cases)
    else:
        raise ValidationError(f"unknown instance kind {inst.kind!r}")
    elapsed = time.perf_counter() - start
    return Report(checks, timings={"suite_seconds": elapsed})
