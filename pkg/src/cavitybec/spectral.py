"""Cavity spectrum: eigenvalues, theta function, heat kernels, smooth DOS.

The Laplacian heat kernel of a rectangular cavity factorizes into three
one-dimensional sums, each a Jacobi theta function of purely imaginary nome.
Its short-time expansion carries the volume (Weyl), surface, edge, and corner
coefficients used by the asymptotic charge formulas, and the same theta
products partition the spectrum into mode classes excited in 0, 1, 2, or 3
directions for the multistep condensation analysis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import ValidationError
from .geometry import DIRICHLET, NEUMANN, CavityGeometry, beta_bar

# series/dual crossover for the theta evaluation; guarantees < 30 terms
_THETA_CROSSOVER = math.pi
_THETA_RTOL = 1e-14


def theta3(z: float, tau: float) -> float:
    """Jacobi theta_3(z | i tau / pi) = 1 + 2 sum_n exp(-n^2 tau) cos(2 n z).

    Requires tau > 0.  Below the crossover the modular (duality)
    transformation

        theta3(z | i tau/pi) = sqrt(pi/tau) exp(-z^2/tau)
                               * [1 + 2 sum_n exp(-pi^2 n^2 / tau) cosh(2 pi n z / tau)]

    is applied first, so both branches need only a handful of terms.
    """
    if tau <= 0:
        raise ValidationError("theta3 requires tau > 0")
    if tau >= _THETA_CROSSOVER:
        total, n = 1.0, 1
        while True:
            term = 2.0 * math.exp(-n * n * tau) * math.cos(2.0 * n * z)
            total += term
            if abs(term) < _THETA_RTOL * abs(total) or n > 60:
                return total
            n += 1
    dual, n = 1.0, 1
    while True:
        term = 2.0 * math.exp(-math.pi**2 * n * n / tau) * math.cosh(2.0 * math.pi * n * z / tau)
        dual += term
        if abs(term) < _THETA_RTOL * abs(dual) or n > 60:
            break
        n += 1
    return math.sqrt(math.pi / tau) * math.exp(-z * z / tau) * dual


def _theta3_zero(tau: np.ndarray) -> np.ndarray:
    """Vectorized theta3(0, tau) for a positive array of tau."""
    tau = np.asarray(tau, dtype=float)
    out = np.ones_like(tau)
    direct = tau >= _THETA_CROSSOVER
    if np.any(direct):
        t = tau[direct]
        acc = np.ones_like(t)
        for n in range(1, 31):
            acc += 2.0 * np.exp(-n * n * t)
        out[direct] = acc
    if np.any(~direct):
        t = tau[~direct]
        acc = np.ones_like(t)
        for n in range(1, 31):
            acc += 2.0 * np.exp(-math.pi**2 * n * n / t)
        out[~direct] = np.sqrt(math.pi / t) * acc
    return out


# ---------------------------------------------------------------------------
# Eigenvalues and expansion coefficients
# ---------------------------------------------------------------------------

def eigenvalue(n, g: CavityGeometry) -> float:
    """Laplacian eigenvalue sum_i (pi n_i / L_i)^2 for a valid mode index."""
    n = tuple(int(x) for x in n)
    if len(n) != 3:
        raise ValidationError("mode index must have three components")
    lo = 0 if g.bc == NEUMANN else 1
    if any(x < lo for x in n):
        raise ValidationError(f"mode index {n} invalid for {g.bc} boundary conditions")
    return sum((math.pi * ni / Li) ** 2 for ni, Li in zip(n, g.lengths))


def mode_energy(omega: float, m: float) -> float:
    return math.sqrt(omega + m * m)


@dataclass(frozen=True)
class HeatKernelCoeffs:
    """Short-time expansion coefficients of the cavity heat kernel.

    K(t) ~ A3 t^(-3/2) + A2 t^(-1) + A1 t^(-1/2) + A0; A2 and A0 flip sign
    between Neumann (+) and Dirichlet (-).  Units: A3 ~ volume, A2 ~ area,
    A1 ~ length, A0 dimensionless.  The source edge lengths are kept for
    regime checks downstream.
    """

    A0: float
    A1: float
    A2: float
    A3: float
    bc_sign: int
    lengths: tuple[float, float, float]


def heat_kernel_coeffs(g: CavityGeometry) -> HeatKernelCoeffs:
    s = g.bc_sign
    return HeatKernelCoeffs(
        A0=s / 8.0,
        A1=g.edge_sum / (8.0 * math.sqrt(math.pi)),
        A2=s * g.face_sum / (8.0 * math.pi),
        A3=g.volume / (8.0 * math.pi ** 1.5),
        bc_sign=s,
        lengths=g.lengths,
    )


def heat_kernel_exact(tau: float, g: CavityGeometry, beta: float) -> float:
    """K(tau) = (1/8) prod_i [theta3(0 | i eta_i^2 pi tau) +/- 1].

    Equals the mode sum over exp(-beta_bar^2 omega_N tau) for the cavity's
    boundary condition (+ Neumann, - Dirichlet).
    """
    if tau <= 0 or beta <= 0:
        raise ValidationError("tau and beta must be positive")
    s = g.bc_sign
    k = 0.125
    for eta in g.etas(beta):
        k *= theta3(0.0, eta * eta * math.pi**2 * tau) + s
    return k


def heat_kernel_expansion(tau: float, g: CavityGeometry, beta: float) -> float:
    """Four-term short-time expansion of the heat kernel."""
    c = heat_kernel_coeffs(g)
    bb = beta_bar(beta)
    return (c.A3 / (bb**3 * tau**1.5) + c.A2 / (bb**2 * tau)
            + c.A1 / (bb * math.sqrt(tau)) + c.A0)


# ---------------------------------------------------------------------------
# Partition of the spectrum by excitation dimensionality
# ---------------------------------------------------------------------------

def classify_mode(n, g: CavityGeometry) -> int:
    """Excitation dimensionality class of a mode, an integer in {0, 1, 2, 3}.

    Class 0 is the ground state.  Otherwise rank the axes by confinement
    (eta descending, i.e. shortest edge first) and find the most confined
    excited axis; the class counts the axes strictly less confined than it
    plus the excited axes tied with it.  Dirichlet indices are shifted by
    one (the ground state is (1,1,1)).
    """
    n = tuple(int(x) for x in n)
    lo = 0 if g.bc == NEUMANN else 1
    if len(n) != 3 or any(x < lo for x in n):
        raise ValidationError(f"mode index {n} invalid for {g.bc} boundary conditions")
    excited = [x > lo for x in n]
    if not any(excited):
        return 0
    groups = g.axis_groups()
    for k, group in enumerate(groups):
        exc_in_group = sum(excited[i] for i in group)
        if exc_in_group:
            below = sum(len(gr) for gr in groups[k + 1:])
            return below + exc_in_group
    raise AssertionError("unreachable")


def _axis_factors(x: np.ndarray, bc: str):
    """(ground, excited) per-axis kernel factors, shifted by the lowest mode.

    The axis sum with parameter x is sum_n exp(-n^2 x) from the boundary
    condition's minimum index.  Factors are shifted by exp(+n_min^2 x) so the
    ground factor is exactly 1 and nothing underflows:

      Neumann:   ground 1, excited sum_{n>=1} exp(-n^2 x)
      Dirichlet: ground 1, excited sum_{n>=2} exp(-(n^2-1) x)
    """
    x = np.asarray(x, dtype=float)
    if bc == NEUMANN:
        excited = 0.5 * (_theta3_zero(x) - 1.0)
    else:
        small = x < _THETA_CROSSOVER
        excited = np.empty_like(x)
        if np.any(small):
            xs = x[small]
            # exp(x) * [(theta-1)/2 - exp(-x)]; no cancellation, theta >> 1 here
            excited[small] = np.exp(xs) * 0.5 * (_theta3_zero(xs) - 1.0) - 1.0
        if np.any(~small):
            xl = x[~small]
            acc = np.zeros_like(xl)
            for n in range(2, 32):
                acc += np.exp(-(n * n - 1.0) * xl)
            excited[~small] = acc
    return np.ones_like(x), excited


def partition_kernels_lattice(t, g: CavityGeometry) -> np.ndarray:
    """Shifted per-class kernels P_c(t) = sum_{class c} exp(-(omega - omega_0) t).

    Returns an array of shape (4, len(t)).  Summing over classes gives the
    full shifted kernel; multiplying by exp(-omega_0 t) restores the raw one.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise ValidationError("kernel parameter must be positive")
    groups = g.axis_groups()
    ground = []
    excited = []
    for i in range(3):
        gr, ex = _axis_factors(t * (math.pi / g.lengths[i]) ** 2, g.bc)
        ground.append(gr)
        excited.append(ex)
    out = np.zeros((4, len(t)))
    out[0] = 1.0  # ground state
    # free factor of every axis in groups below k (less confined)
    for k, group in enumerate(groups):
        gsize = len(group)
        ex_axis = excited[group[0]]  # tied axes share the factor
        below_axes = [i for gr in groups[k + 1:] for i in gr]
        free_below = np.ones(len(t))
        for i in below_axes:
            free_below = free_below * (ground[i] + excited[i])
        n_below = len(below_axes)
        for e in range(1, gsize + 1):
            cls = n_below + e
            out[cls] += comb(gsize, e) * ex_axis**e * free_below
    return out


def partitioned_heat_kernels(tau: float, g: CavityGeometry, beta: float):
    """Heat kernels (K0, K1, K2, K3) of the four excitation classes.

    Each K_j sums exp(-beta_bar^2 omega_N tau) over modes of class j; the four
    add up to heat_kernel_exact by construction.
    """
    if tau <= 0 or beta <= 0:
        raise ValidationError("tau and beta must be positive")
    t = beta_bar(beta) ** 2 * tau
    omega0 = 0.0 if g.bc == NEUMANN else eigenvalue((1, 1, 1), g)
    shift = math.exp(-omega0 * t)
    k = partition_kernels_lattice(np.array([t]), g)[:, 0] * shift
    return tuple(float(x) for x in k)


# ---------------------------------------------------------------------------
# Smooth densities of states per condensation scenario
# ---------------------------------------------------------------------------

SCENARIOS = ("isotropic", "1D", "2D", "3step")


@dataclass(frozen=True)
class SmoothDos:
    """Smooth spectral data of a condensation scenario.

    rho3(eps) = weyl * sqrt(eps) + surface (dimensionless energies); rho2 is
    the constant two-dimensional density (None for the isotropic scenario).
    eps1 is the scenario's infrared cutoff (lowest relevant excited level);
    eps1_3d is the cutoff of the three-dimensionally excited charge integral.
    """

    scenario: str
    weyl: float
    surface: float
    rho2: float | None
    eps1: float
    eps1_3d: float


def _require_close(x: float, y: float, what: str):
    if abs(x - y) > 1e-9 * max(abs(x), abs(y), 1.0):
        raise ValidationError(what)


def smooth_dos(g: CavityGeometry, scenario: str) -> SmoothDos:
    """Weyl/surface density coefficients and infrared cutoffs of a scenario.

    Scenario geometries (a1 = L3/L1, a2 = L3/L2):
      isotropic: any ratios, either boundary condition;
      1D:    a1 = a2 (two short edges tied), Neumann;
      2D:    a2 = 1 (two long edges tied), Neumann;
      3step: a1 > a2 > 1, Neumann.
    """
    if scenario not in SCENARIOS:
        raise ValidationError(f"unknown scenario {scenario!r}")
    a1, a2 = g.anisotropy()
    sym = 1.0 / (a1 * a2) + 1.0 / a1 + 1.0 / a2
    weyl = (math.pi / 4.0) / (a1 * a2)
    if scenario == "isotropic":
        return SmoothDos(scenario, weyl, g.bc_sign * (math.pi / 8.0) * sym,
                         None, 1.0, 1.0)
    if g.bc != NEUMANN:
        raise ValidationError("multistep scenarios are defined for Neumann walls")
    if scenario == "1D":
        _require_close(a1, a2, "1D scenario needs L1 = L2")
        return SmoothDos(scenario, weyl, -(math.pi / 24.0) * sym,
                         math.pi / (2.0 * a1), a1 * a1, a1 * a1)
    if scenario == "2D":
        _require_close(a2, 1.0, "2D scenario needs L2 = L3")
        return SmoothDos(scenario, weyl, (math.pi / 24.0) * sym,
                         math.pi / 4.0, 1.0, a1 * a1)
    _require_close(min(a1, a2), a2, "3step scenario needs L1 < L2 < L3")
    if not (a1 > a2 > 1.0):
        raise ValidationError("3step scenario needs L1 < L2 < L3")
    return SmoothDos(scenario, weyl, (math.pi / 24.0) * sym,
                     math.pi / (4.0 * a2), a2 * a2, a1 * a1)
