"""Ring-linear derivations of the per-atom matrix algebra.

A derivation is stored by its images on the matrix units of each atom's full
matrix algebra.  The extraction routine recovers an implementing element x
with d(a) = xa - ax by the constructive projection-correction argument: fix
the rank-one projection p onto the first basis vector, cancel d(p) with the
commutator of a correction element, read off x column by column, then undo
the correction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyFiber, ModuleMismatch, NotADerivation
from .kh_module import ModuleSpace
from .measure_ring import RingElement
from .operator_algebra import Operator
from .tolerances import TAU_LEIB, TAU_RES


@dataclass(frozen=True, eq=False)
class Derivation:
    """Images of the per-atom matrix units under a ring-linear map.

    ``images[t]`` has shape (m, m, m, m) with ``images[t][r, s]`` the image
    of the unit E_rs on atom t.  Storing per atom makes the map commute with
    every idempotent by construction.
    """

    module: ModuleSpace
    images: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        dims = self.module.fiber_dims
        raw = tuple(self.images)
        if len(raw) != len(dims):
            raise ValueError("one image tensor per atom required")
        frozen = []
        for t, (arr, m) in enumerate(zip(raw, dims)):
            a = np.array(arr, dtype=np.complex128).reshape(m, m, m, m)
            a.setflags(write=False)
            frozen.append(a)
        object.__setattr__(self, "images", tuple(frozen))

    @classmethod
    def zero(cls, module: ModuleSpace) -> "Derivation":
        return cls(module, tuple(
            np.zeros((m, m, m, m), dtype=np.complex128)
            for m in module.fiber_dims
        ))

    def max_abs(self) -> float:
        mags = [np.max(np.abs(a)) if a.size else 0.0 for a in self.images]
        return float(max(mags)) if mags else 0.0

    def __add__(self, other: "Derivation") -> "Derivation":
        if self.module != other.module:
            raise ModuleMismatch("derivations live on different modules")
        return Derivation(self.module, tuple(
            a + b for a, b in zip(self.images, other.images)
        ))

    def __mul__(self, scalar) -> "Derivation":
        return Derivation(self.module, tuple(
            complex(scalar) * a for a in self.images
        ))

    __rmul__ = __mul__


def inner_derivation(x: Operator) -> Derivation:
    """The commutator map a -> xa - ax, recorded on matrix units."""
    if not x.is_square():
        raise ModuleMismatch("inner derivations need a square operator")
    images = []
    for t, block in enumerate(x.blocks):
        m = x.domain.fiber_dims[t]
        img = np.zeros((m, m, m, m), dtype=np.complex128)
        for r in range(m):
            for s in range(m):
                img[r, s] = _unit_commutator(block, r, s)
        images.append(img)
    return Derivation(x.domain, tuple(images))


def _unit_commutator(block: np.ndarray, r: int, s: int) -> np.ndarray:
    # (X E_rs - E_rs X)[i, j] = X[i, r] d_sj - d_ir X[s, j]
    m = block.shape[0]
    out = np.zeros((m, m), dtype=np.complex128)
    out[:, s] += block[:, r]
    out[r, :] -= block[s, :]
    return out


def transpose_map(module: ModuleSpace) -> Derivation:
    """The per-atom transpose recorded on matrix units.

    Not a derivation; useful as a negative control when testing the
    product-rule check.
    """
    images = []
    for m in module.fiber_dims:
        img = np.zeros((m, m, m, m), dtype=np.complex128)
        for r in range(m):
            for s in range(m):
                img[r, s, s, r] = 1.0
        images.append(img)
    return Derivation(module, tuple(images))


def apply_derivation(deriv: Derivation, a: Operator) -> Operator:
    """Evaluate the stored map on an arbitrary algebra element."""
    if a.domain != deriv.module or a.codomain != deriv.module:
        raise ModuleMismatch("operator does not live on the derivation's module")
    blocks = tuple(
        np.einsum("rs,rsij->ij", block, img)
        for block, img in zip(a.blocks, deriv.images)
    )
    return Operator(deriv.module, deriv.module, blocks)


@dataclass(frozen=True)
class LeibnizReport:
    """Result of checking the product rule on all matrix-unit pairs."""

    ok: bool
    max_violation: float
    tolerance: float


def leibniz_check(deriv: Derivation, tol: float = TAU_LEIB) -> LeibnizReport:
    """Check d(EF) = d(E)F + E d(F) on every pair of matrix units.

    Bilinearity extends the check to the whole algebra.  The bound scales
    with the magnitude of the stored images.
    """
    if any(m == 0 for m in deriv.module.fiber_dims):
        raise EmptyFiber("every atom needs fiber dimension >= 1")
    worst = 0.0
    for img, m in zip(deriv.images, deriv.module.fiber_dims):
        eye = np.eye(m)
        # defect[r,s,u,v] = d(E_rs E_uv) - d(E_rs) E_uv - E_rs d(E_uv)
        lhs = np.einsum("su,rvij->rsuvij", eye, img)
        right_mul = np.einsum("rsiu,vj->rsuvij", img, eye)
        left_mul = np.einsum("ir,uvsj->rsuvij", eye, img)
        defect = lhs - right_mul - left_mul
        gaps = np.sqrt(np.sum(np.abs(defect) ** 2, axis=(4, 5)))
        worst = max(worst, float(np.max(gaps)))
    bound = tol * (1.0 + deriv.max_abs())
    return LeibnizReport(worst <= bound, worst, bound)


def residual(deriv: Derivation, x: Operator) -> RingElement:
    """Per atom, the worst Frobenius gap between d(E) and xE - Ex over units E."""
    if x.domain != deriv.module or x.codomain != deriv.module:
        raise ModuleMismatch("candidate element lives on the wrong module")
    values = np.zeros(deriv.module.atom_count, dtype=np.complex128)
    for t, (img, block) in enumerate(zip(deriv.images, x.blocks)):
        m = deriv.module.fiber_dims[t]
        worst = 0.0
        for r in range(m):
            for s in range(m):
                gap = img[r, s] - _unit_commutator(block, r, s)
                worst = max(worst, float(np.linalg.norm(gap)))
        values[t] = worst
    return RingElement(deriv.module.space, values)


@dataclass(frozen=True, eq=False)
class ExtractionReport:
    """Implementing element of a derivation plus verification data.

    ``gauge`` records the per-atom normalized trace of the element; the
    implementing element is only determined up to a central summand, and
    subtracting the gauge gives a canonical trace-free representative.
    """

    element: Operator
    correction: Operator
    max_residual: float
    gauge: RingElement

    def canonical_element(self) -> Operator:
        blocks = []
        for t, block in enumerate(self.element.blocks):
            m = block.shape[0]
            blocks.append(block - self.gauge.values[t] * np.eye(m))
        return Operator(self.element.domain, self.element.codomain, tuple(blocks))


def extract_implementing_element(
    deriv: Derivation,
    tol_leib: float = TAU_LEIB,
    tol_res: float = TAU_RES,
) -> ExtractionReport:
    """Recover x with d(a) = xa - ax for a validated derivation.

    Per atom: with p the projection onto the first basis vector, the
    correction psi = p d(p) - d(p) p makes the adjusted map d' vanish on p;
    the element x0 is then read off column-wise from x0 e_j = d'(E_j0) e,
    and x = x0 - psi implements the original map.
    """
    if any(m == 0 for m in deriv.module.fiber_dims):
        raise EmptyFiber("every atom needs fiber dimension >= 1")
    report = leibniz_check(deriv, tol_leib)
    if not report.ok:
        raise NotADerivation(
            f"product rule violated by {report.max_violation:.3e} "
            f"(bound {report.tolerance:.3e})"
        )
    element_blocks = []
    correction_blocks = []
    gauge_values = np.zeros(deriv.module.atom_count, dtype=np.complex128)
    for t, m in enumerate(deriv.module.fiber_dims):
        img = deriv.images[t]
        d_p = img[0, 0]
        p = np.zeros((m, m), dtype=np.complex128)
        p[0, 0] = 1.0
        psi = p @ d_p - d_p @ p
        x0 = np.zeros((m, m), dtype=np.complex128)
        for j in range(m):
            # adjusted map: d'(E) = d(E) - (E psi - psi E)
            corrected = img[j, 0] + _unit_commutator(psi, j, 0)
            x0[:, j] = corrected[:, 0]
        x = x0 - psi
        element_blocks.append(x)
        correction_blocks.append(psi)
        gauge_values[t] = np.trace(x) / m
    element = Operator(deriv.module, deriv.module, tuple(element_blocks))
    correction = Operator(deriv.module, deriv.module, tuple(correction_blocks))
    max_res = residual(deriv, element).max_abs()
    return ExtractionReport(element, correction, max_res,
                            RingElement(deriv.module.space, gauge_values))
