"""Cavity geometry and derived scales.

The container is a rectangular box with edge lengths L1, L2, L3 and either
Neumann or Dirichlet walls.  Natural units (k_B = hbar = 1) are used
throughout, so an inverse temperature beta has the dimension of length and
the confinement scales eta_i = beta/(2 pi L_i) are dimensionless.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import AnisotropyWarning, ValidationError

NEUMANN = "neumann"
DIRICHLET = "dirichlet"

# axes whose 1/L differ by less than this relative amount are treated as tied
TIE_REL_TOL = 1e-9


def beta_bar(beta: float) -> float:
    """Reduced inverse temperature beta/(2 pi)."""
    return beta / (2.0 * math.pi)


@dataclass(frozen=True)
class CavityGeometry:
    """Rectangular cavity with a single boundary condition on all walls."""

    L1: float
    L2: float
    L3: float
    bc: str = NEUMANN

    def __post_init__(self):
        if not (self.L1 > 0 and self.L2 > 0 and self.L3 > 0):
            raise ValidationError(f"edge lengths must be positive, got {self.lengths}")
        if self.bc not in (NEUMANN, DIRICHLET):
            raise ValidationError(f"bc must be {NEUMANN!r} or {DIRICHLET!r}, got {self.bc!r}")

    @property
    def lengths(self) -> tuple[float, float, float]:
        return (self.L1, self.L2, self.L3)

    @property
    def volume(self) -> float:
        return self.L1 * self.L2 * self.L3

    @property
    def face_sum(self) -> float:
        """Sum of pairwise edge products L1 L2 + L2 L3 + L3 L1."""
        return self.L1 * self.L2 + self.L2 * self.L3 + self.L3 * self.L1

    @property
    def edge_sum(self) -> float:
        return self.L1 + self.L2 + self.L3

    @property
    def bc_sign(self) -> int:
        """+1 for Neumann, -1 for Dirichlet (sign of the surface terms)."""
        return 1 if self.bc == NEUMANN else -1

    def anisotropy(self) -> tuple[float, float]:
        """Ratios (a1, a2) = (L3/L1, L3/L2); L3 is the reference edge."""
        return (self.L3 / self.L1, self.L3 / self.L2)

    def anisotropy_integers(self, *, warn: bool = True) -> tuple[int, int]:
        """(a1, a2) rounded to integers.

        The discrete counting machinery assumes L3 is an integral multiple of
        L1 and L2.  Non-integer ratios are rounded and flagged with
        AnisotropyWarning when `warn` is set.
        """
        a1, a2 = self.anisotropy()
        ints = (round(a1), round(a2))
        if warn and (abs(a1 - ints[0]) > 1e-9 * a1 or abs(a2 - ints[1]) > 1e-9 * a2):
            warnings.warn(
                f"anisotropy ratios ({a1:g}, {a2:g}) are not integers; "
                "shell counting is approximate",
                AnisotropyWarning,
                stacklevel=2,
            )
        if ints[0] < 1 or ints[1] < 1:
            raise ValidationError("L3 must be the largest edge for integer anisotropy")
        return ints

    def etas(self, beta: float) -> tuple[float, float, float]:
        """Confinement scales eta_i = beta/(2 pi L_i)."""
        bb = beta_bar(beta)
        return (bb / self.L1, bb / self.L2, bb / self.L3)

    def eta_max(self, beta: float) -> float:
        return beta_bar(beta) / min(self.lengths)

    def axis_groups(self) -> list[list[int]]:
        """Axes grouped by tied confinement scale, most confined group first.

        eta_i is proportional to 1/L_i at any temperature, so the grouping is
        temperature independent.  Ties use TIE_REL_TOL on 1/L.
        """
        order = sorted(range(3), key=lambda i: self.lengths[i])
        groups: list[list[int]] = [[order[0]]]
        for i in order[1:]:
            ref = self.lengths[groups[-1][0]]
            if abs(1.0 / self.lengths[i] - 1.0 / ref) <= TIE_REL_TOL / ref:
                groups[-1].append(i)
            else:
                groups.append([i])
        return groups
