"""Critical temperatures, condensate fraction, and the multistep regime map.

All solvers work at the critical substitution mu = m, where the bulk charge
coefficient is b2 = m V / 3 and the surface coefficient b32 = 4 m A2 carries
the boundary-condition sign.  Every root is polished until the defining
equation's relative residual is below 1e-10; reference values from the
bundled scenario presets are regression markers only, the equation residual
is authoritative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import optimize

from .errors import SolverError, ValidationError
from .geometry import TIE_REL_TOL, CavityGeometry, NEUMANN
from .spectral import heat_kernel_coeffs

RESIDUAL_RTOL = 1e-10
# operationalizes the 'much greater than' of the regime inequalities;
# see RegimeReport for the raw margins if another threshold is wanted
DEFAULT_DOMINANCE = 3.5

LOG_2PI = math.log(2.0 * math.pi)


def _critical_coeffs(g: CavityGeometry, m: float) -> tuple[float, float]:
    """(b2, b32) at mu = m."""
    c = heat_kernel_coeffs(g)
    return (8.0 * m * math.pi**1.5 / 3.0) * c.A3, 4.0 * m * c.A2


def bulk_tc(Q: float, g: CavityGeometry, m: float) -> float:
    """Bulk critical temperature sqrt(Q / b2) = sqrt(3 Q / (m V))."""
    if Q <= 0 or m <= 0:
        raise ValidationError("need Q > 0 and m > 0")
    return math.sqrt(3.0 * Q / (m * g.volume))


def _solve_root(f, seed: float, scale: float, what: str) -> float:
    """Root of f on (0, inf) near seed: bracket expansion + Brent + polish."""
    lo = hi = seed
    flo = fhi = f(seed)
    for _ in range(200):
        if flo <= 0:
            break
        lo *= 0.5
        flo = f(lo)
    else:
        raise SolverError(f"{what}: could not bracket the root from below")
    for _ in range(200):
        if fhi >= 0:
            break
        hi *= 2.0
        fhi = f(hi)
    else:
        raise SolverError(f"{what}: could not bracket the root from above")
    if lo == hi:
        root = lo
    else:
        root = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=200)
    # secant polish against float noise in the bracket endpoints
    for _ in range(3):
        r = f(root)
        if abs(r) <= RESIDUAL_RTOL * scale:
            break
        h = 1e-7 * root
        d = (f(root + h) - f(root - h)) / (2.0 * h)
        if d == 0:
            break
        root -= r / d
    if abs(f(root)) > RESIDUAL_RTOL * scale:
        raise SolverError(f"{what}: residual {f(root):.3g} above tolerance")
    return root


@dataclass(frozen=True)
class FiniteTc:
    """Finite-size critical temperature and its perturbative estimate."""

    tc: float
    tc_bulk: float
    tc_perturbative: float
    residual: float


def _finite_tc_equation(Q: float, b2: float, b32: float, L3: float) -> float:
    return _solve_root(lambda t: b2 * t * t + b32 * t * math.log(t * L3) - Q,
                       math.sqrt(Q / b2), Q, "finite-size critical temperature")


def finite_tc(Q: float, g: CavityGeometry, m: float) -> FiniteTc:
    """Solve Q = b2 Tc^2 + b32 Tc log(Tc L3) for the finite cavity.

    The perturbative companion Tc/Tc0 = 1 - b32 log(Q L3^2/b2) / (4 sqrt(b2 Q))
    is returned for comparison.  b32 > 0 (Neumann) lowers Tc below bulk,
    Dirichlet raises it.
    """
    b2, b32 = _critical_coeffs(g, m)
    tc0 = bulk_tc(Q, g, m)
    tc = _finite_tc_equation(Q, b2, b32, g.L3)
    ratio = 1.0 - b32 * math.log(Q * g.L3**2 / b2) / (4.0 * math.sqrt(b2 * Q))
    res = abs(b2 * tc * tc + b32 * tc * math.log(tc * g.L3) - Q) / Q
    return FiniteTc(tc=tc, tc_bulk=tc0, tc_perturbative=tc0 * ratio, residual=res)


@dataclass(frozen=True)
class CondensateFraction:
    value: float
    raw: float
    clamped: bool


def condensate_fraction(T: float, Q: float, g: CavityGeometry, m: float) -> CondensateFraction:
    """Analytic ground-state fraction with the finite-size log corrections.

    Q0/Q = 1 - x^2 + [b32 log(Q L3^2/b2) / (2 sqrt(b2 Q))] (x^2 - x)
           - [b32 / sqrt(b2 Q)] x log x,   x = T / Tc_bulk.

    The raw value leaves the asymptotic expression untouched; `value` is
    clipped to [0, 1] with `clamped` flagging when that happened.
    """
    if T <= 0:
        raise ValidationError("temperature must be positive")
    b2, b32 = _critical_coeffs(g, m)
    x = T / bulk_tc(Q, g, m)
    root = math.sqrt(b2 * Q)
    raw = (1.0 - x * x
           + (b32 * math.log(Q * g.L3**2 / b2) / (2.0 * root)) * (x * x - x)
           - (b32 / root) * x * math.log(x))
    value = min(max(raw, 0.0), 1.0)
    return CondensateFraction(value=value, raw=raw, clamped=value != raw)


@dataclass(frozen=True)
class TcRoot:
    value: float
    residual: float
    scenario: str


# scenario -> (sign of the b32/3 log term, 2D-mode coefficient of m L T log)
_T3D_TABLE = {
    "1D": (-1.0, lambda g: 4.0 * g.L2 * g.L3 / math.pi),
    "2D": (1.0, lambda g: g.L3**2 / math.pi),
    "3step": (1.0, lambda g: g.L2 * g.L3 / math.pi),
}


def t3d(Q: float, g: CavityGeometry, m: float, scenario: str) -> TcRoot:
    """Three-dimensional critical temperature of a multistep scenario.

    Solves Q = b2 T^2 + s (b32 T / 3) log(T L1 / pi) + c m T log(T L1 / pi)
    with (s, c) from the scenario table; 'isotropic' falls back to the
    finite-size equation.  Residual is relative to Q.
    """
    if Q <= 0 or m <= 0:
        raise ValidationError("need Q > 0 and m > 0")
    if scenario == "isotropic":
        ft = finite_tc(Q, g, m)
        return TcRoot(value=ft.tc, residual=ft.residual, scenario=scenario)
    if scenario not in _T3D_TABLE:
        raise ValidationError(f"unknown scenario {scenario!r}")
    sign, coeff = _T3D_TABLE[scenario]
    b2, b32 = _critical_coeffs(g, m)
    c2d = coeff(g) * m

    def f(t: float) -> float:
        lg = math.log(t * g.L1 / math.pi)
        return b2 * t * t + sign * (b32 / 3.0) * t * lg + c2d * t * lg - Q

    root = _solve_root(f, math.sqrt(Q / b2), Q, f"T3D ({scenario})")
    return TcRoot(value=root, residual=abs(f(root)) / Q, scenario=scenario)


@dataclass(frozen=True)
class T2dResult:
    value: float
    closed_form: float
    residual: float
    scenario: str


def t2d(Q: float, g: CavityGeometry, m: float, scenario: str) -> T2dResult:
    """Two-dimensional critical temperature: T log(L T) = Q / btilde.

    btilde = m L2 L3 / pi with L = L2 for the 3step scenario, and
    btilde = m L3^2 / pi with L = L3 for the 2D one.  The large-charge
    closed form Q / (btilde log(Q L / btilde)) is returned alongside.
    """
    if scenario not in ("2D", "3step"):
        raise ValidationError("t2d is defined for the 2D and 3step scenarios")
    if Q <= 0 or m <= 0:
        raise ValidationError("need Q > 0 and m > 0")
    btilde = m * g.L2 * g.L3 / math.pi
    L = g.L2 if scenario == "3step" else g.L3
    rhs = Q / btilde

    def f(t: float) -> float:
        return t * math.log(L * t) - rhs

    closed = Q / (btilde * math.log(Q * L / btilde)) if Q * L / btilde > 1.0 else math.nan
    seed = closed if math.isfinite(closed) and closed > 1.0 / L else 2.0 / L
    root = _solve_root(f, max(seed, 1.26 / L), rhs, f"T2D ({scenario})")
    return T2dResult(value=root, closed_form=closed,
                     residual=abs(f(root)) / rhs, scenario=scenario)


def t1d(Q: float, g: CavityGeometry, m: float) -> float:
    """One-dimensional critical temperature pi Q / (2 m L3^2 log(2 pi))."""
    if Q <= 0 or m <= 0:
        raise ValidationError("need Q > 0 and m > 0")
    return math.pi * Q / (2.0 * m * g.L3**2 * LOG_2PI)


@dataclass(frozen=True)
class CriticalSet:
    Tc_bulk: float
    Tc_finite: float
    T3D: float | None
    T2D: float | None
    T1D: float | None
    scenario: str


def critical_set(Q: float, g: CavityGeometry, m: float, scenario: str) -> CriticalSet:
    """All critical temperatures meaningful for the scenario."""
    ft = finite_tc(Q, g, m)
    if scenario == "isotropic":
        return CriticalSet(ft.tc_bulk, ft.tc, None, None, None, scenario)
    t3 = t3d(Q, g, m, scenario).value
    t2 = t2d(Q, g, m, scenario).value if scenario in ("2D", "3step") else None
    t1 = t1d(Q, g, m) if scenario in ("1D", "3step") else None
    return CriticalSet(ft.tc_bulk, ft.tc, t3, t2, t1, scenario)


# ---------------------------------------------------------------------------
# Multistep regime classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegimeReport:
    """Margins of the three separation inequalities and the resulting label.

    Each margin is the left/right ratio of its inequality (A: T1D < T2D,
    B: T2D < T3D, C: T1D < T3D) written in terms of the sorted edge ratios
    and Q_tilde = pi Q / (m L2).  The label requires every relevant margin
    to exceed the dominance factor; 'frozen' flags eta > 1 at T3D, where the
    shortest direction decouples before any lower condensation step.
    """

    ratio_32: float
    ratio_31: float
    q_tilde: float
    condition_a: float
    condition_b: float
    condition_c: float
    label: str
    dominance: float
    t3d_estimate: float
    eta_max_at_t3d: float


def _natural_scenario(l1: float, l2: float, l3: float) -> str:
    tied12 = abs(l2 - l1) <= TIE_REL_TOL * l2
    tied23 = abs(l3 - l2) <= TIE_REL_TOL * l3
    if tied12 and tied23:
        return "isotropic"
    if tied12:
        return "1D"
    if tied23:
        return "2D"
    return "3step"


def classify_regime(Q: float, g: CavityGeometry, m: float,
                    *, dominance: float = DEFAULT_DOMINANCE) -> RegimeReport:
    """Multistep condensation label from the anisotropy inequalities.

    Sorted edges l1 <= l2 <= l3, Q_tilde = pi Q / (m l2):
      A:  l3/l2             >> log(Q_tilde) / (2 log 2 pi)
      B:  l3/l1             >> pi Q_tilde / (3 log^2 Q_tilde)
      C:  (l3/l1)(l3/l2)^2  >> pi Q_tilde / (12 log^2 2 pi)
    Three-step needs all three; B alone separates a two-step cascade through
    two-dimensional modes, A and C through one-dimensional ones.
    """
    if Q <= 0 or m <= 0:
        raise ValidationError("need Q > 0 and m > 0")
    l1, l2, l3 = sorted(g.lengths)
    qt = math.pi * Q / (m * l2)
    lq = math.log(qt)
    r32, r31 = l3 / l2, l3 / l1
    margin_a = r32 / (lq / (2.0 * LOG_2PI)) if lq > 0 else math.inf
    margin_b = r31 / (math.pi * qt / (3.0 * lq * lq)) if lq > 0 else math.inf
    margin_c = (r31 * r32**2) / (math.pi * qt / (12.0 * LOG_2PI**2))

    g_sorted = CavityGeometry(l1, l2, l3, g.bc)
    scen = _natural_scenario(l1, l2, l3)
    t3 = t3d(Q, g_sorted, m, scen).value
    eta1 = 1.0 / (2.0 * math.pi * t3 * l1)

    if eta1 > 1.0:
        label = "frozen"
    elif margin_a >= dominance and margin_b >= dominance and margin_c >= dominance:
        label = "three-step"
    elif margin_b >= dominance:
        label = "two-step-2D"
    elif margin_a >= dominance and margin_c >= dominance:
        label = "two-step-1D"
    else:
        label = "one-step"
    return RegimeReport(ratio_32=r32, ratio_31=r31, q_tilde=qt,
                        condition_a=margin_a, condition_b=margin_b,
                        condition_c=margin_c, label=label, dominance=dominance,
                        t3d_estimate=t3, eta_max_at_t3d=eta1)
