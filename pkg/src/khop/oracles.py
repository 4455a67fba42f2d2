"""Independent second-route computations used by the verification suites.

These deliberately avoid the code paths they are meant to check: the rank
oracle runs a hand-rolled Gaussian elimination instead of the SVD, and the
commutator oracle solves the defining linear system of a derivation instead
of replaying the constructive extraction.
"""

from __future__ import annotations

import numpy as np

from .derivations import Derivation
from .operator_algebra import Operator
from .tolerances import TAU_RANK


def gaussian_rank(matrix, tol_rank: float = TAU_RANK) -> int:
    """Numerical rank via partial-pivot Gaussian elimination."""
    a = np.array(matrix, dtype=np.complex128)
    if a.size == 0:
        return 0
    rows, cols = a.shape
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return 0
    threshold = tol_rank * scale
    rank = 0
    row = 0
    for col in range(cols):
        pivot = row + int(np.argmax(np.abs(a[row:, col]))) if row < rows else row
        if row >= rows or abs(a[pivot, col]) <= threshold:
            continue
        a[[row, pivot]] = a[[pivot, row]]
        factors = a[row + 1:, col] / a[row, col]
        a[row + 1:] -= np.outer(factors, a[row])
        rank += 1
        row += 1
        if row == rows:
            break
    return rank


def commutator_lstsq_element(deriv: Derivation) -> Operator:
    """Solve d(E) = xE - Ex over all matrix units in the least-squares sense.

    Per atom the unknown block is recovered through the pseudo-inverse of
    the commutator system; the minimum-norm solution is automatically
    orthogonal to the central kernel, hence trace-free.
    """
    blocks = []
    for t, m in enumerate(deriv.module.fiber_dims):
        img = deriv.images[t]
        if m == 0:
            blocks.append(np.zeros((0, 0), dtype=np.complex128))
            continue
        system = np.zeros((m * m * m * m, m * m), dtype=np.complex128)
        rhs = np.zeros(m * m * m * m, dtype=np.complex128)
        eye = np.eye(m, dtype=np.complex128)
        for k in range(m * m):
            basis = np.zeros((m, m), dtype=np.complex128)
            basis[k // m, k % m] = 1.0
            col = []
            for r in range(m):
                for s in range(m):
                    unit = np.outer(eye[:, r], eye[s, :])
                    col.append((basis @ unit - unit @ basis).reshape(-1))
            system[:, k] = np.concatenate(col)
        row = 0
        for r in range(m):
            for s in range(m):
                rhs[row:row + m * m] = img[r, s].reshape(-1)
                row += m * m
        solution, *_ = np.linalg.lstsq(system, rhs, rcond=None)
        blocks.append(solution.reshape(m, m))
    return Operator(deriv.module, deriv.module, tuple(blocks))


def centrality_gap(diff_block: np.ndarray) -> float:
    """Frobenius distance of a block from the scalar matrices."""
    m = diff_block.shape[0]
    if m == 0:
        return 0.0
    center = np.trace(diff_block) / m
    return float(np.linalg.norm(diff_block - center * np.eye(m)))


def operator_centrality_gap(diff: Operator) -> float:
    """Worst per-atom distance of an operator from the ring-scalar center."""
    return max(centrality_gap(b) for b in diff.blocks)
