"""Default numerical tolerances.

Equality-style comparisons are relative: quantities agree "within eq" when
their difference stays below ``eq * (1 + magnitude)``.  Zero tests and rank
thresholds are kept separate because they gate support computations rather
than comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

TAU_ZERO = 1e-9
TAU_EQ = 1e-9
TAU_RANK = 1e-8
TAU_LEIB = 1e-8
TAU_RES = 1e-8


@dataclass(frozen=True)
class Tolerances:
    """Bundle of thresholds used by the verification suites."""

    zero: float = TAU_ZERO
    eq: float = TAU_EQ
    rank: float = TAU_RANK
    leibniz: float = TAU_LEIB
    residual: float = TAU_RES

    def scaled(self, factor: float) -> "Tolerances":
        """Scale the eq/leibniz/residual thresholds jointly by ``factor``."""
        if factor <= 0:
            raise ValueError("tolerance scale factor must be positive")
        return Tolerances(
            zero=self.zero,
            eq=self.eq * factor,
            rank=self.rank,
            leibniz=self.leibniz * factor,
            residual=self.residual * factor,
        )


DEFAULT_TOLERANCES = Tolerances()


def eq_bound(magnitude: float, tol: float = TAU_EQ) -> float:
    """Absolute bound corresponding to a relative tolerance at a magnitude."""
    return tol * (1.0 + magnitude)
