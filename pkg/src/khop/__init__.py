"""Kaplansky-Hilbert module algebra on finite atomic measure spaces.

The package models the ring of measurable functions by per-atom complex
values, modules over it by per-atom complex fibers, and ring-linear
operators by per-atom matrix families.  On top of that it implements the
constructive extraction of the element implementing a derivation, the
similarity element of an automorphism, and the isometry (with partition of
unity and component bijections) implementing a star-isomorphism of
block-diagonal algebras.
"""

from .measure_ring import (
    AtomSpace,
    Idempotent,
    PartitionOfUnity,
    RingElement,
    is_strictly_positive,
    leq,
    mix,
    ring_arith,
    ring_close,
    sqrt_nonneg,
    support,
)
from .kh_module import (
    BlockStructure,
    Functional,
    IndependenceResult,
    ModuleSpace,
    ModuleVector,
    basis_vector,
    d_decompose,
    direct_sum,
    inner,
    nabla_independent,
    norm,
    normalize,
    riesz,
    riesz_from_map,
    standard_basis,
)
from .operator_algebra import (
    GeneralForm,
    Operator,
    TypeDecomposition,
    adjoint,
    apply,
    compose,
    frobenius,
    general_form,
    is_idempotent,
    is_projection,
    is_selfadjoint,
    matrix_unit,
    op_distance,
    op_norm,
    ostar_closure_check,
    rank_profile,
    scale,
    tensor,
    type_decomposition,
)
from .derivations import (
    Derivation,
    ExtractionReport,
    apply_derivation,
    extract_implementing_element,
    inner_derivation,
    leibniz_check,
    residual,
    transpose_map,
)
from .morphisms import (
    AlgebraMorphism,
    MorphismReport,
    RankOneProjectionDecomposition,
    SpatialImplementation,
    SpatialReport,
    apply_morphism,
    approx_relation,
    conjugation_morphism,
    extract_spatial_element,
    extract_unitary,
    h1_classify,
    identity_morphism,
    m_set_member,
    morphism_check,
    verify_spatial,
    xi_witness,
)
from .instance import Instance
from .generators import gen_instance
from .serialize import load_instance, save_instance
from .suites import Report, load_report, run_suite, save_report
from .tolerances import DEFAULT_TOLERANCES, Tolerances
from . import errors

__version__ = "0.1.0"
