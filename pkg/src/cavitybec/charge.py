"""Net-charge engine over the discrete cavity spectrum.

The conserved charge of the relativistic gas at temperature T = 1/beta and
chemical potential mu is

    Q = sum_N [ 1/(exp(beta (E_N - mu)) - 1) - 1/(exp(beta (E_N + mu)) - 1) ],

E_N = sqrt(omega_N + m^2).  Two routes compute it:

* `exact_charge` enumerates every mode with beta (E - mu) <= cutoff and sums
  the occupancies directly (the oracle; cost grows with the mode count);
* `ChargeEngine` keeps the low modes (E < E0 + T) exact and resums everything
  above with a Boltzmann series whose mode sums come from a proper-time
  integral over the lattice heat kernel, so its cost is independent of the
  mode count.  All occupancies are evaluated in terms of the gap
  delta = E0 - mu, never by subtracting nearly equal energies.

Asymptotic charge formulas for the condensation scenarios live at the end.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverError, ValidationError, WorkBudgetError
from .geometry import NEUMANN, CavityGeometry
from .spectral import eigenvalue, partition_kernels_lattice, smooth_dos
from .zeta import FieldParams, charge_coeffs
from . import spectral

DEFAULT_CUTOFF = 40.0        # dimensionless beta (E - mu) truncation
DEFAULT_MODE_BUDGET = 1e8    # bounding-box candidates for direct enumeration


@dataclass(frozen=True)
class ThermoState:
    """Temperature, chemical potential, mass, and optional target charge."""

    T: float
    mu: float
    m: float
    Q_total: float | None = None

    def __post_init__(self):
        if self.T <= 0:
            raise ValidationError("temperature must be positive")
        if self.m < 0:
            raise ValidationError("mass must be nonnegative")


def _lowest_omega(g: CavityGeometry) -> float:
    return 0.0 if g.bc == NEUMANN else eigenvalue((1, 1, 1), g)


def lowest_energy(g: CavityGeometry, m: float) -> float:
    return math.sqrt(_lowest_omega(g) + m * m)


def _enumerate_modes(g: CavityGeometry, omega_cap: float, budget: float):
    """Arrays (n1, n2, n3, omega) of all modes with omega <= omega_cap."""
    lo = 0 if g.bc == NEUMANN else 1
    if omega_cap < 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, empty, np.empty(0)
    nmax = [int(L * math.sqrt(omega_cap) / math.pi) for L in g.lengths]
    box = math.prod(max(n - lo + 1, 0) for n in nmax)
    if box > budget:
        raise WorkBudgetError(
            f"mode enumeration of ~{box:.3g} candidates exceeds budget {budget:.3g}"
        )
    axes = [np.arange(lo, n + 1, dtype=np.int64) for n in nmax]
    w = [(math.pi / L) ** 2 * ax.astype(float) ** 2 for L, ax in zip(g.lengths, axes)]
    omega = w[0][:, None, None] + w[1][None, :, None] + w[2][None, None, :]
    mask = omega <= omega_cap
    idx = np.nonzero(mask)
    return (axes[0][idx[0]], axes[1][idx[1]], axes[2][idx[2]], omega[mask])


def _classify_array(g: CavityGeometry, n1, n2, n3) -> np.ndarray:
    """Vectorized excitation classes, identical to spectral.classify_mode."""
    lo = 0 if g.bc == NEUMANN else 1
    groups = g.axis_groups()
    gidx = np.empty(3, dtype=np.int64)
    for k, group in enumerate(groups):
        for i in group:
            gidx[i] = k
    sizes_below = np.array([sum(len(gr) for gr in groups[k + 1:])
                            for k in range(len(groups))])
    ns = (n1, n2, n3)
    exc = [ns[i] > lo for i in range(3)]
    big = len(groups) + 1
    kstar = np.full(n1.shape, big, dtype=np.int64)
    for i in range(3):
        kstar = np.minimum(kstar, np.where(exc[i], gidx[i], big))
    e = sum((exc[i] & (gidx[i] == kstar)).astype(np.int64) for i in range(3))
    cls = np.where(kstar == big, 0, sizes_below[np.minimum(kstar, len(groups) - 1)] + e)
    return cls


@dataclass(frozen=True)
class ExactChargeResult:
    value: float
    n_modes: int
    tail_bound: float
    cutoff: float


def exact_charge(state: ThermoState, g: CavityGeometry, cutoff: float = DEFAULT_CUTOFF,
                 *, budget: float = DEFAULT_MODE_BUDGET, full_output: bool = False):
    """Direct truncated charge sum over modes with beta (E - mu) <= cutoff.

    Antisymmetric in mu; requires |mu| < E0.  The reported tail bound is the
    continuum estimate (V / 2 pi^2) e^(-cutoff) (Ec^2 + 2 Ec T + 2 T^2) T
    of everything beyond the truncation.
    """
    if cutoff < 30:
        raise ValidationError("cutoff must be at least 30 for a negligible tail")
    T, mu, m = state.T, state.mu, state.m
    if mu < 0:
        res = exact_charge(ThermoState(T, -mu, m), g, cutoff,
                           budget=budget, full_output=True)
        res = ExactChargeResult(-res.value, res.n_modes, res.tail_bound, cutoff)
        return res if full_output else res.value
    e0 = lowest_energy(g, m)
    if mu >= e0:
        raise ValidationError(f"mu={mu} must lie below the lowest mode energy {e0}")
    beta = 1.0 / T
    if mu == 0.0:
        res = ExactChargeResult(0.0, 0, 0.0, cutoff)
        return res if full_output else res.value
    e_cap = cutoff * T + mu
    *_, omega = _enumerate_modes(g, e_cap * e_cap - m * m, budget)
    e = np.sqrt(omega + m * m)
    val = float(np.sum(1.0 / np.expm1(beta * (e - mu)) - 1.0 / np.expm1(beta * (e + mu))))
    tail = (g.volume / (2.0 * math.pi**2) * math.exp(-cutoff)
            * (e_cap**2 + 2.0 * e_cap * T + 2.0 * T**2) * T)
    res = ExactChargeResult(val, int(len(e)), tail, cutoff)
    return res if full_output else res.value


# ---------------------------------------------------------------------------
# Fast exact engine: low modes + heat-kernel resummed Boltzmann series
# ---------------------------------------------------------------------------

_SERIES_EXHAUST = 39.0   # e^-39 ~ 1e-17, Boltzmann tail below double precision
_QUAD_RTOL = 1e-12
_EDGE_DROP = 46.0        # integrand window: exp(-46) ~ 1e-20 of the peak


class ChargeEngine:
    """Exact charge and its class partition at fixed (geometry, m, T).

    Splitting energy is E0 + s_split * T.  Modes below it are summed with
    exact Bose factors; the rest enter through S_j = sum exp(-j beta (E-E0))
    evaluated as heat-kernel proper-time integrals minus the low-mode part.
    Building the tables costs a few quadratures; evaluating charge(delta)
    afterwards is a small vector operation, which makes chemical-potential
    bisection cheap.
    """

    def __init__(self, g: CavityGeometry, m: float, T: float, *,
                 s_split: float = 1.0, budget: float = DEFAULT_MODE_BUDGET):
        if T <= 0 or m < 0:
            raise ValidationError("need T > 0 and m >= 0")
        self.g, self.m, self.T = g, m, T
        self.beta = 1.0 / T
        self.omega0 = _lowest_omega(g)
        self.e0 = math.sqrt(self.omega0 + m * m)
        self.s_split = s_split
        e_split = self.e0 + s_split * T
        n1, n2, n3, omega = _enumerate_modes(g, e_split**2 - m * m, budget)
        cls = _classify_array(g, n1, n2, n3)
        e = np.sqrt(omega + m * m)
        de = (omega - self.omega0) / (e + self.e0)  # E - E0, exactly for the ground state
        self._de_low = [de[cls == c] for c in range(4)]
        self.n_low = int(len(de))
        self.j_max = max(int(math.ceil(_SERIES_EXHAUST / s_split)), 3)
        self._sj_high = self._high_mode_sums()

    # -- heat-kernel proper-time integrals ---------------------------------
    def _high_mode_sums(self) -> np.ndarray:
        """S[j-1, c] = sum over high modes of class c of exp(-j beta (E - E0))."""
        jb = self.beta * np.arange(1, self.j_max + 1, dtype=float)
        total = self._subordination(jb)
        for c in range(4):
            de = self._de_low[c]
            if len(de):
                total[:, c] -= np.exp(-jb[:, None] * de[None, :]).sum(axis=1)
        # tiny negatives from quadrature noise on an empty high set
        return np.maximum(total, 0.0)

    def _windows(self, jb: np.ndarray):
        e0 = self.e0
        if e0 > 0:
            peak = np.log(jb / (2.0 * e0))
            v = np.arccosh(1.0 + _EDGE_DROP / (jb * e0))
            lo, hi = peak - v - 14.0, peak + v + 14.0
        else:
            peak = np.log(jb**2 / 6.0 + 1e-300)
            lo = np.log(jb**2 / (4.0 * (_EDGE_DROP + 60.0)))
            hi = peak + 2.0 * (_EDGE_DROP + 60.0)
        return np.minimum(lo, peak - 2.0), np.maximum(hi, peak + 2.0)

    def _subordination(self, jb: np.ndarray) -> np.ndarray:
        """All-mode sums sum_N exp(-j beta (E_N - E0)) for every j, per class.

        (j beta / 2 sqrt(pi)) int dtau tau^(-3/2)
            exp(j beta E0 - (j beta)^2/(4 tau) - E0^2 tau) P0(tau)
        with P0 the ground-shifted partition kernel; the exponent is <= 0.
        Trapezoid on a log grid, refined until stable to _QUAD_RTOL.
        """
        lo, hi = self._windows(jb)
        u_min, u_max = float(np.min(lo)) - 1.0, float(np.max(hi)) + 1.0
        u_min, u_max = max(u_min, -690.0), min(u_max, 690.0)
        h = 0.25
        prev = None
        for _ in range(8):
            n = int((u_max - u_min) / h) + 2
            u = u_min + h * np.arange(n)
            tau = np.exp(u)
            p0 = partition_kernels_lattice(tau, self.g)  # (4, n)
            expo = (jb[:, None] * self.e0
                    - jb[:, None]**2 * np.exp(-u)[None, :] / 4.0
                    - self.e0**2 * tau[None, :]
                    - 0.5 * u[None, :])
            w = np.exp(expo)
            cur = (h / (2.0 * math.sqrt(math.pi))) * jb[:, None] \
                * np.einsum("jn,cn->jc", w, p0)
            if prev is not None:
                scale = np.maximum(np.abs(cur), 1e-290)
                if float(np.max(np.abs(cur - prev) / scale)) < _QUAD_RTOL:
                    return cur
            prev = cur
            h *= 0.5
        return prev

    # -- charge evaluation ---------------------------------------------------
    def charge_parts(self, delta: float) -> np.ndarray:
        """Charge per excitation class at gap delta = E0 - mu > 0."""
        if delta <= 0:
            raise ValidationError("gap delta must be positive (mu < E0)")
        b = self.beta
        xm, xp = b * delta, b * (2.0 * self.e0 - delta)
        out = np.empty(4)
        for c in range(4):
            de = b * self._de_low[c]
            out[c] = float(np.sum(1.0 / np.expm1(de + xm) - 1.0 / np.expm1(de + xp)))
        j = np.arange(1, self.j_max + 1, dtype=float)
        factors = np.exp(-j * xm) - np.exp(-j * xp)
        out += factors @ self._sj_high
        return out

    def charge(self, delta: float) -> float:
        return float(np.sum(self.charge_parts(delta)))

    def charge_at_mu(self, mu: float) -> float:
        """Charge at a chemical potential given as a plain float (odd in mu)."""
        if mu == 0.0:
            return 0.0
        if mu < 0:
            return -self.charge_at_mu(-mu)
        return self.charge(self.e0 - mu)

    # -- chemical-potential solve --------------------------------------------
    def solve_gap(self, q_target: float, *, rtol: float = 1e-11,
                  max_iter: int = 200) -> tuple[float, float, int]:
        """Gap delta with charge(delta) = q_target, by bisection on log(delta).

        The charge decreases monotonically in delta, diverges as delta -> 0
        and vanishes as mu -> 0, so the bracket (0, E0) always holds the root.
        Returns (delta, achieved charge, iterations).
        """
        if q_target <= 0:
            raise ValidationError("target charge must be positive")
        y_hi = math.log(1e-300)        # charge -> +inf side
        y_lo = math.log(self.e0)       # mu -> 0, charge -> 0 side
        best = (math.inf, None, None)
        for it in range(1, max_iter + 1):
            y = 0.5 * (y_lo + y_hi)
            q = self.charge(math.exp(y))
            err = abs(q - q_target) / q_target
            if err < best[0]:
                best = (err, y, q)
            if err <= rtol:
                return math.exp(y), q, it
            if q > q_target:
                y_hi = y
            else:
                y_lo = y
            if abs(y_lo - y_hi) < 1e-15:
                break
        err, y, q = best
        if err > 100.0 * rtol:
            raise SolverError(
                f"chemical-potential bisection stalled at relative residual {err:.3g}"
            )
        return math.exp(y), q, max_iter


def solve_mu(T: float, Q_target: float, g: CavityGeometry, m: float,
             *, rtol: float = 1e-11) -> float:
    """Chemical potential in (0, E0) with total charge Q_target at temperature T."""
    engine = ChargeEngine(g, m, T)
    delta, _, _ = engine.solve_gap(Q_target, rtol=rtol)
    return engine.e0 - delta


@dataclass(frozen=True)
class PartitionedCharge:
    """Charge split by excitation dimensionality at a solved chemical potential."""

    Q0: float
    Q1: float
    Q2: float
    Q3: float
    mu_solved: float
    engine: str
    T: float
    Q_total: float
    gap: float
    reduced_gap: float  # beta (E0 - mu)

    @property
    def parts(self) -> tuple[float, float, float, float]:
        return (self.Q0, self.Q1, self.Q2, self.Q3)


def partitioned_charge(T: float, Q_target: float, g: CavityGeometry, m: float,
                       *, rtol: float = 1e-11,
                       engine: ChargeEngine | None = None) -> PartitionedCharge:
    """Solve mu at fixed total charge and split the charge by mode class."""
    eng = engine if engine is not None else ChargeEngine(g, m, T)
    if engine is not None and abs(eng.T - T) > 1e-12 * T:
        raise ValidationError("engine was built for a different temperature")
    delta, _, _ = eng.solve_gap(Q_target, rtol=rtol)
    parts = eng.charge_parts(delta)
    return PartitionedCharge(Q0=float(parts[0]), Q1=float(parts[1]),
                             Q2=float(parts[2]), Q3=float(parts[3]),
                             mu_solved=eng.e0 - delta, engine="exact",
                             T=T, Q_total=float(np.sum(parts)),
                             gap=delta, reduced_gap=delta / T)


def sweep_partitioned(T_values, Q_target: float, g: CavityGeometry, m: float,
                      *, rtol: float = 1e-11) -> list[PartitionedCharge]:
    """Partitioned charge along a temperature sweep (one engine per point)."""
    return [partitioned_charge(float(T), Q_target, g, m, rtol=rtol) for T in T_values]


# ---------------------------------------------------------------------------
# Asymptotic charge formulas per condensation scenario
# ---------------------------------------------------------------------------

def _coeffs_at(state: ThermoState, g: CavityGeometry, T: float):
    fp = FieldParams(m=state.m, mu=state.mu, beta=1.0 / T)
    return charge_coeffs(spectral.heat_kernel_coeffs(g), fp)


def _log_ratio(T: float, mtilde2: float) -> float:
    if mtilde2 <= 0:
        raise ValidationError("effective infrared mass squared must be positive")
    return math.log(T * T / mtilde2)


def asymptotic_q_excited(T: float, state: ThermoState, g: CavityGeometry) -> float:
    """Total excited charge b2 T^2 + (b32 T / 2) log(T^2 / mtilde^2).

    mtilde^2 = pi^2/L3^2 + m^2 - mu^2 carries the lowest excited level as an
    infrared cutoff.  For large L3 near criticality the log term approaches
    b32 T log(T L3).
    """
    ce = _coeffs_at(state, g, T)
    mtilde2 = (math.pi / g.L3) ** 2 + state.m**2 - state.mu**2
    return ce.b2 * T * T + 0.5 * ce.b32 * T * _log_ratio(T, mtilde2)


_Q3_SIGN = {"1D": -1.0, "2D": 1.0, "3step": 1.0}


def asymptotic_q3(T: float, state: ThermoState, g: CavityGeometry, scenario: str) -> float:
    """Charge of three-dimensionally excited modes: b2 T^2 -/+ (b32 T / 6) log(T^2/mtilde^2).

    The sign is negative for the 1D scenario and positive for 2D and 3step;
    the infrared cutoff eps1 = a1^2 (lowest mode excited along the shortest
    edge) enters through mtilde^2 = pi^2 eps1 / L3^2 + m^2 - mu^2.
    """
    if scenario not in _Q3_SIGN:
        raise ValidationError("asymptotic_q3 covers scenarios 1D, 2D, 3step; "
                              "use asymptotic_q_excited for the isotropic one")
    sd = smooth_dos(g, scenario)
    ce = _coeffs_at(state, g, T)
    mtilde2 = math.pi**2 * sd.eps1_3d / g.L3**2 + state.m**2 - state.mu**2
    return ce.b2 * T * T + _Q3_SIGN[scenario] * ce.b32 * T * _log_ratio(T, mtilde2) / 6.0


def asymptotic_q2(T: float, state: ThermoState, g: CavityGeometry, scenario: str) -> float:
    """Charge of two-dimensionally excited modes, scenario-dispatched.

    1D: (2 mu L2 L3 T / pi) log(T^2/mtilde^2) with eps1 = a1^2;
    2D and 3step: (mu L2 L3 T / 2 pi) with eps1 = 1 and a2^2 respectively.
    """
    if scenario not in ("1D", "2D", "3step"):
        raise ValidationError("asymptotic_q2 covers scenarios 1D, 2D, 3step")
    sd = smooth_dos(g, scenario)
    pref = 2.0 / math.pi if scenario == "1D" else 0.5 / math.pi
    mtilde2 = math.pi**2 * sd.eps1 / g.L3**2 + state.m**2 - state.mu**2
    return pref * state.mu * g.L2 * g.L3 * T * _log_ratio(T, mtilde2)


def asymptotic_q1(T: float, state: ThermoState, g: CavityGeometry,
                  scenario: str = "3step") -> float:
    """Charge of one-dimensionally excited modes, 2 mu L3^2 T log(2 pi) / pi.

    The 2D scenario doubles the prefactor (two tied long directions).
    """
    factor = 4.0 if scenario == "2D" else 2.0
    return factor * state.mu * g.L3**2 * T * math.log(2.0 * math.pi) / math.pi
