"""Zeta-regularized one-loop layer: spectral zeta pieces and expansion coefficients.

The grand-canonical effective action of the charged field is built from the
spectral zeta function of the fluctuation operator.  After a Mellin transform
the heat-kernel expansion splits it into a gap-power piece (zeta1) and a
thermal piece (zeta2) whose small-eta, small-mass expansion collapses onto
Riemann zeta and Gamma factors.  The s -> 0 limits give the inverse-
temperature expansion coefficients of the action (c3 .. c_-1/2) and of the
net charge (b2 .. b0).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import mpmath
from scipy import special

from .errors import DivergenceWarning, PoleError, ValidationError
from .spectral import HeatKernelCoeffs

EULER_GAMMA = 0.5772156649015329
DIGAMMA_HALF = -EULER_GAMMA - 2.0 * math.log(2.0)  # psi(1/2)
ZETA3 = 1.2020569031595943  # Riemann zeta(3), stored constant

_POLE_TOL = 1e-6


def riemann_zeta(x: float) -> float:
    """Riemann zeta at real x != 1 (mpmath handles the continuation)."""
    if abs(x - 1.0) < _POLE_TOL:
        raise PoleError(f"zeta({x}) too close to the pole at 1")
    return float(mpmath.zeta(x))


@dataclass(frozen=True)
class FieldParams:
    """Mass, chemical potential, inverse temperature, and measure scale."""

    m: float
    mu: float
    beta: float
    l_scale: float = 1.0

    def __post_init__(self):
        if self.m < 0:
            raise ValidationError("mass must be nonnegative")
        if self.beta <= 0:
            raise ValidationError("beta must be positive")
        if self.l_scale <= 0:
            raise ValidationError("l_scale must be positive")

    @property
    def gap2(self) -> float:
        """m^2 - mu^2."""
        return self.m * self.m - self.mu * self.mu

    @property
    def beta_bar(self) -> float:
        return self.beta / (2.0 * math.pi)


def _gamma_ratio(s: float, k: int) -> float:
    """Gamma(s - k/2) / Gamma(s) with the removable cases folded in."""
    if k == 0:
        return 1.0
    if k == 2:
        return 1.0 / (s - 1.0)
    return special.gamma(s - k / 2.0) * special.rgamma(s)


def _check_zeta1_pole(s: float):
    if abs(s - 1.0) < _POLE_TOL:
        raise PoleError("s too close to the k=2 pole at s=1")
    # half-odd poles of Gamma(s-1/2)/Gamma(s) and Gamma(s-3/2)/Gamma(s): s <= 3/2
    n = round(1.5 - s)
    if n >= 0 and abs(s - (1.5 - n)) < _POLE_TOL:
        raise PoleError(f"s={s} too close to a half-integer pole")


def zeta1(s: float, coeffs: HeatKernelCoeffs, fp: FieldParams) -> float:
    """Gap-power part: sum_k Gamma(s - k/2)/Gamma(s) A_k (m^2 - mu^2)^(k/2 - s).

    Warns (DivergenceWarning) when the k=0 term blows up as mu -> m.
    """
    gap2 = fp.gap2
    if gap2 <= 0:
        raise ValidationError("zeta1 requires m^2 - mu^2 > 0")
    _check_zeta1_pole(s)
    a = (coeffs.A0, coeffs.A1, coeffs.A2, coeffs.A3)
    if s > 0 and a[0] != 0.0 and gap2 < 1e-10 * max(fp.m * fp.m, 1e-300):
        warnings.warn(
            "k=0 term (m^2-mu^2)^(-s) is divergent this close to mu = m",
            DivergenceWarning,
            stacklevel=2,
        )
    return sum(_gamma_ratio(s, k) * a[k] * gap2 ** (k / 2.0 - s) for k in range(4))


def _check_zeta2_pole(s: float):
    # positive half-integers (zeta and Gamma factors) and negative half-odd
    # integers (Gamma(s+1/2)); s = 0 is removable and handled separately
    twice = round(2.0 * s)
    if abs(2.0 * s - twice) < 2.0 * _POLE_TOL:
        if twice >= 1:
            raise PoleError(f"s={s} too close to a pole of the expansion factors")
        if twice < 0 and twice % 2 != 0:
            raise PoleError(f"s={s} too close to a pole of Gamma(s+1/2)")


def _f5(s: float) -> float:
    """zeta(2s+1) Gamma(s+1/2) / Gamma(s); removable at s=0 with limit sqrt(pi)/2."""
    if abs(s) < 1e-8:
        return math.sqrt(math.pi) / 2.0
    return riemann_zeta(2.0 * s + 1.0) * special.gamma(s + 0.5) * special.rgamma(s)


def zeta2_expanded(s: float, coeffs: HeatKernelCoeffs, fp: FieldParams) -> float:
    """Thermal part of the spectral zeta in its small-eta, small-mass form.

    Five groups: Riemann-zeta/Gamma products attached to A3 and A2, the
    mixed A1/A3 bracket, the A0/A2 bracket, and the order-beta_bar A3/A1
    bracket.  Valid when eta_i and m*beta_bar are small; warns outside.
    """
    _check_zeta2_pole(s)
    m2, mu2 = fp.m * fp.m, fp.mu * fp.mu
    gap2 = fp.gap2
    bb = fp.beta_bar
    if fp.m * bb > 0.1 or bb / min(coeffs.lengths) > 0.1:
        warnings.warn(
            "expansion parameters eta or m*beta_bar are not small; "
            "zeta2_expanded is outside its validity regime",
            DivergenceWarning,
            stacklevel=2,
        )
    A0, A1, A2, A3 = coeffs.A0, coeffs.A1, coeffs.A2, coeffs.A3
    rg = special.rgamma(s)
    g1 = (A3 / bb**3) * math.pi ** (2 * s - 3.5) * riemann_zeta(4 - 2 * s) \
        * special.gamma(2 - s) * rg
    g2 = (A2 / bb**2) * math.pi ** (2 * s - 2.5) * riemann_zeta(3 - 2 * s) \
        * special.gamma(1.5 - s) * rg
    g3 = (1.0 / bb) * math.pi ** (2 * s - 1.5) * riemann_zeta(2 - 2 * s) \
        * special.gamma(1 - s) * rg * (A1 - A3 * (m2 + (2 * s - 2) * mu2))
    if abs(s) < 1e-8:
        g4 = riemann_zeta(2 * s) * (A0 - A2 * (m2 + (2 * s - 1) * mu2)) if s != 0 \
            else -0.5 * (A0 - A2 * (m2 - mu2))
    else:
        g4 = riemann_zeta(2 * s) * (A0 - A2 * (m2 + (2 * s - 1) * mu2))
    b5 = A3 * (gap2**2 / 2.0 + (s + 1.5) * (s + 0.5) * 2.0 * mu2**2 / 3.0) \
        - A1 * (m2 + 2 * s * mu2)
    g5 = bb * _f5(s) * b5
    return 2.0 * bb ** (2 * s) * (g1 + g2 + g3 + g4 + g5)


@dataclass(frozen=True)
class ActionCoeffs:
    """Inverse-temperature expansion coefficients of the one-loop action.

    Gamma_q = c3/bb^3 + c2/bb^2 + c1/bb + c12 log(bb) + c0 + cm12 bb log(bb)
    with bb = beta/(2 pi).
    """

    c3: float
    c2: float
    c1: float
    c12: float
    c0: float
    cm12: float


def _xlogx(x: float) -> float:
    return 0.0 if x == 0.0 else x * math.log(x)


def action_coeffs(coeffs: HeatKernelCoeffs, fp: FieldParams) -> ActionCoeffs:
    """The displayed one-loop action coefficients.

    c0 and cm12 are transcribed literally; their printed grouping is known to
    be ambiguous and they are excluded from any cross-validated quantity.
    """
    gap2 = fp.gap2
    if gap2 < 0:
        raise ValidationError("action coefficients need |mu| <= m")
    m2, mu2 = fp.m * fp.m, fp.mu * fp.mu
    A0, A1, A2, A3 = coeffs.A0, coeffs.A1, coeffs.A2, coeffs.A3
    sqpi = math.sqrt(math.pi)
    log2pi = math.log(2.0 * math.pi)
    c3 = -(sqpi / 45.0) * A3
    c2 = -ZETA3 * A2 / math.pi**2
    c1 = -(sqpi / 3.0) * (A1 - A3 * (m2 - 2.0 * mu2))
    c12 = 2.0 * (A0 - A2 * gap2)
    c0 = (2.0 * log2pi * A0
          - 0.5 * sqpi * math.sqrt(gap2) * A1
          - (_xlogx(gap2) + 2.0 * log2pi * m2 - (2.0 * log2pi + 1.0) * mu2) * A2
          - 2.0 * sqpi * gap2**1.5 * A3)
    cm12 = -(A3 * (gap2**2 + mu2**2) - 2.0 * A1 * m2) / sqpi
    return ActionCoeffs(c3, c2, c1, c12, c0, cm12)


def effective_action_quantum(beta_bar: float, ac: ActionCoeffs) -> float:
    """Assembled quantum part of the action at reduced inverse temperature."""
    lb = math.log(beta_bar)
    return (ac.c3 / beta_bar**3 + ac.c2 / beta_bar**2 + ac.c1 / beta_bar
            + ac.c12 * lb + ac.c0 + ac.cm12 * beta_bar * lb)


def bulk_charge_coefficient(mu: float, volume: float) -> float:
    """Named identity: the bulk charge coefficient b2 equals mu * V / 3."""
    return mu * volume / 3.0


@dataclass(frozen=True)
class ChargeExpansion:
    """Charge and action expansion coefficients at fixed (m, mu, geometry).

    b1, b12, b0 carry inverse powers of m^2 - mu^2 and are only evaluated for
    |mu| < m; at the critical point they are NaN with subleading_valid False
    while b2 and b32 stay valid.
    """

    b2: float
    b32: float
    b1: float
    b12: float
    b0: float
    c3: float
    c2: float
    c1: float
    c12: float
    c0: float
    cm12: float
    C: float
    euler_gamma: float
    digamma_half: float
    subleading_valid: bool


def charge_coeffs(coeffs: HeatKernelCoeffs, fp: FieldParams) -> ChargeExpansion:
    """Coefficients of Q = b2 T^2 + b32 T log T + b1 T + b12 log T + b0 + ...

    b2 = (8 mu pi^(3/2) / 3) A3, which simplifies to mu V / 3 (see
    bulk_charge_coefficient); b32 = 4 mu A2 carries the boundary sign.
    """
    gap2 = fp.gap2
    if gap2 < 0:
        raise ValidationError("charge coefficients need |mu| <= m")
    mu = fp.mu
    A0, A1, A2, A3 = coeffs.A0, coeffs.A1, coeffs.A2, coeffs.A3
    sqpi = math.sqrt(math.pi)
    b2 = (8.0 * mu * math.pi**1.5 / 3.0) * A3
    b32 = 4.0 * mu * A2
    C = A3 * (4.0 * mu * mu - fp.m * fp.m)
    if gap2 > 0:
        b1 = -mu * (4.0 * mu * sqpi * math.sqrt(gap2) * A3
                    + 2.0 * (2.0 + math.log(gap2)) * A2
                    - 2.0 * sqpi * A1 / math.sqrt(gap2)
                    - 2.0 * A0 / gap2)
        b12 = -mu * C / (2.0 * sqpi)
        b0 = (mu / (2.0 * sqpi)) * (2.0 * C * (DIGAMMA_HALF + 3.0 * EULER_GAMMA)
                                    + (32.0 / 3.0) * A3 * mu * mu
                                    - 8.0 * A1
                                    - math.log(fp.l_scale**2) * C)
        valid = True
    else:
        b1 = b12 = b0 = math.nan
        valid = False
    ac = action_coeffs(coeffs, fp)
    return ChargeExpansion(b2=b2, b32=b32, b1=b1, b12=b12, b0=b0,
                           c3=ac.c3, c2=ac.c2, c1=ac.c1, c12=ac.c12,
                           c0=ac.c0, cm12=ac.cm12, C=C,
                           euler_gamma=EULER_GAMMA, digamma_half=DIGAMMA_HALF,
                           subleading_valid=valid)
