"""Lattice-point counting inside anisotropic ellipsoids.

The dimensionless single-particle spectrum of an integer-anisotropy cavity is
the set of values a1^2 n1^2 + a2^2 n2^2 + n3^2.  This module provides

* exact enumeration of integer points in the closed ellipsoid
  sum_i (a_i n_i)^2 <= eps (the oracle for everything else),
* a Poisson-resummed Bessel series for the same count, evaluated with a
  Gaussian smearing of the ellipsoid radius that makes the series absolutely
  convergent with a quantified error,
* cumulative densities of states for Neumann/Dirichlet cavity modes,
* the oscillating residual of the cumulative count around its smooth
  (volume + surface) part, and the power-law fit of its running supremum.

Points exactly on a shell count as inside (closed ball) in every routine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import signal, special

from .errors import ConvergenceError, ValidationError, WorkBudgetError
from .geometry import DIRICHLET, NEUMANN

# candidate points an enumeration may visit before it is refused
DEFAULT_WORK_BUDGET = 10**8

_UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}
_SPHERE_SURFACE = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


def _check_avec(a) -> tuple[int, ...]:
    avec = tuple(int(x) for x in a)
    if len(avec) < 1:
        raise ValidationError("anisotropy vector must have at least one component")
    if any(x < 1 for x in avec) or any(abs(x - float(y)) > 0 for x, y in zip(avec, a)):
        raise ValidationError(f"anisotropy components must be integers >= 1, got {tuple(a)}")
    return avec


def _axis_limit(bound: float, step: int) -> int:
    """Largest n >= 0 with (step*n)^2 <= bound, or -1 if bound < 0."""
    if bound < 0:
        return -1
    n = int(math.sqrt(bound) / step)
    # float sqrt can be off by one ulp at exact shells; correct by comparison
    while (step * (n + 1)) ** 2 <= bound:
        n += 1
    while n > 0 and (step * n) ** 2 > bound:
        n -= 1
    return n


def enumeration_estimate(a, epsilon: float) -> float:
    """Bounding-box candidate count for the full-lattice enumeration."""
    est = 1.0
    for ai in a:
        est *= 2 * max(_axis_limit(epsilon, ai), 0) + 1
    return est


def _count_full(avec: tuple[int, ...], eps: float) -> int:
    """Points of the full integer lattice in the closed ellipsoid."""
    if len(avec) == 1:
        n = _axis_limit(eps, avec[0])
        return 2 * n + 1 if n >= 0 else 0
    total = 0
    head, rest = avec[0], avec[1:]
    for n in range(_axis_limit(eps, head) + 1):
        sub = _count_full(rest, eps - (head * n) ** 2)
        total += sub if n == 0 else 2 * sub
    return total


def _count_restricted(avec: tuple[int, ...], eps: float, n_min: int) -> int:
    """Points with every n_i >= n_min (0 for Neumann, 1 for Dirichlet)."""
    if len(avec) == 1:
        n = _axis_limit(eps, avec[0])
        return max(n - n_min + 1, 0)
    total = 0
    head, rest = avec[0], avec[1:]
    for n in range(n_min, _axis_limit(eps, head) + 1):
        total += _count_restricted(rest, eps - (head * n) ** 2, n_min)
    return total


def count_bruteforce(a, epsilon: float, *, budget: float = DEFAULT_WORK_BUDGET) -> int:
    """Exact number of integer lattice points with sum (a_i n_i)^2 <= epsilon.

    This is the oracle every other counting operation is checked against.
    Refuses (WorkBudgetError) when the bounding box exceeds `budget`
    candidate points rather than silently truncating.
    """
    avec = _check_avec(a)
    if epsilon < 0:
        raise ValidationError("epsilon must be nonnegative")
    est = enumeration_estimate(avec, epsilon)
    if est > budget:
        raise WorkBudgetError(
            f"enumeration of ~{est:.3g} candidates exceeds budget {budget:.3g}"
        )
    return _count_full(avec, epsilon)


def cumulative_dos(a, epsilon: float, bc: str = NEUMANN,
                   *, budget: float = DEFAULT_WORK_BUDGET) -> int:
    """Number of cavity modes with dimensionless energy <= epsilon.

    Combines full-lattice counts of the coordinate sub-lattices with the
    inclusion-exclusion sign pattern: all signs positive for Dirichlet
    (n_i >= 1), alternating (-1)^(d-k) for Neumann (n_i >= 0).
    """
    avec = _check_avec(a)
    if epsilon < 0:
        raise ValidationError("epsilon must be nonnegative")
    if bc not in (NEUMANN, DIRICHLET):
        raise ValidationError(f"unknown boundary condition {bc!r}")
    d = len(avec)
    if d not in (1, 2, 3):
        raise ValidationError("cumulative_dos is defined for d in {1, 2, 3}")
    if enumeration_estimate(avec, epsilon) > budget:
        raise WorkBudgetError("enumeration exceeds work budget")
    total = 0
    for k in range(d + 1):
        sign = 1 if bc == DIRICHLET else (-1) ** (d - k)
        for axes in combinations(range(d), k):
            sub = tuple(avec[i] for i in axes)
            n_sub = _count_full(sub, epsilon) if sub else 1
            total += sign * n_sub if bc == NEUMANN else n_sub * sign
    q, r = divmod(total, 2**d)
    if r:
        raise RuntimeError("inclusion-exclusion produced a non-integer mode count")
    return q


def cumulative_dos_direct(a, epsilon: float, bc: str = NEUMANN) -> int:
    """Restricted-range enumeration of the same count (independent route)."""
    avec = _check_avec(a)
    return _count_restricted(avec, epsilon, 0 if bc == NEUMANN else 1)


def _canonical_3d(a) -> tuple[int, int]:
    """Accept (a1, a2) or (a1, a2, 1) and return (a1, a2)."""
    avec = _check_avec(a)
    if len(avec) == 2:
        return avec
    if len(avec) == 3 and avec[2] == 1:
        return avec[:2]
    raise ValidationError("three-dimensional residual needs a = (a1, a2) with implicit a3 = 1")


def smooth_count_3d(a, epsilon, bc: str = NEUMANN):
    """Volume + surface part of the three-dimensional cumulative count.

    (pi/6) eps^(3/2)/(a1 a2) + s (pi/8) eps (1/(a1 a2) + 1/a1 + 1/a2),
    s = +1 Neumann, -1 Dirichlet.
    """
    a1, a2 = _canonical_3d(a)
    s = 1.0 if bc == NEUMANN else -1.0
    eps = np.asarray(epsilon, dtype=float)
    vol = (math.pi / 6.0) * eps ** 1.5 / (a1 * a2)
    surf = (math.pi / 8.0) * eps * (1.0 / (a1 * a2) + 1.0 / a1 + 1.0 / a2)
    out = vol + s * surf
    return float(out) if np.isscalar(epsilon) else out


@dataclass(frozen=True)
class CountResult:
    epsilon: float
    exact_count: int
    smooth_part: float
    residual: float


def residual_delta(a, epsilon: float, bc: str = NEUMANN,
                   *, budget: float = DEFAULT_WORK_BUDGET) -> CountResult:
    """Oscillating residual of the cumulative mode count around its smooth part."""
    a1, a2 = _canonical_3d(a)
    exact = cumulative_dos((a1, a2, 1), epsilon, bc, budget=budget)
    smooth = smooth_count_3d((a1, a2), epsilon, bc)
    return CountResult(epsilon=float(epsilon), exact_count=exact,
                       smooth_part=smooth, residual=exact - smooth)


def residual_sweep(a, eps_max: int, bc: str = NEUMANN):
    """Residual on the dense integer grid eps = 1 .. eps_max.

    Shell values of an integer-anisotropy cavity are integers, so the integer
    grid visits every jump of the counting function.  Returns
    (eps, exact, smooth, residual) arrays.  Vectorized via one shell
    histogram, equivalent to cumulative_dos at each grid point.
    """
    a1, a2 = _canonical_3d(a)
    eps_max = int(eps_max)
    if eps_max < 1:
        raise ValidationError("eps_max must be >= 1")
    lo = 0 if bc == NEUMANN else 1
    n1 = np.arange(lo, _axis_limit(eps_max, a1) + 1)
    n2 = np.arange(lo, _axis_limit(eps_max, a2) + 1)
    n3 = np.arange(lo, _axis_limit(eps_max, 1) + 1)
    vals = ((a1 * n1[:, None, None]) ** 2
            + (a2 * n2[None, :, None]) ** 2
            + (n3[None, None, :]) ** 2).ravel()
    hist = np.bincount(vals[vals <= eps_max], minlength=eps_max + 1)
    exact = np.cumsum(hist)[1:]  # counts at eps = 1 .. eps_max
    eps = np.arange(1, eps_max + 1, dtype=float)
    smooth = smooth_count_3d((a1, a2), eps, bc)
    return eps, exact.astype(np.int64), smooth, exact - smooth


def make_epsilon_grid(eps_min: float, eps_max: float, points: int,
                      spacing: str = "geometric") -> np.ndarray:
    """Deterministic sample grid in eps.

    'geometric' gives log-spaced reals; 'integer' gives the dense grid of all
    integers in [eps_min, eps_max] (what the shell structure wants).
    """
    if spacing == "geometric":
        if eps_min <= 0 or eps_max <= eps_min:
            raise ValidationError("need 0 < eps_min < eps_max")
        return np.geomspace(eps_min, eps_max, int(points))
    if spacing == "integer":
        return np.arange(max(1, math.ceil(eps_min)), math.floor(eps_max) + 1, dtype=float)
    raise ValidationError(f"unknown spacing {spacing!r}")


@dataclass(frozen=True)
class SupFit:
    exponent_gamma: float
    prefactor: float
    sample_range: tuple[float, float]
    n_increase: int


# transient shells below this energy are excluded from the supremum fit
SUP_FIT_EPS_MIN = 10.0


def fit_sup_exponent(samples, *, eps_min: float = SUP_FIT_EPS_MIN) -> SupFit:
    """Power-law exponent of the running supremum of the residual.

    Takes (eps, residual) pairs, forms sup over eps' <= eps, keeps the strict
    increase points with eps >= eps_min, and fits log(sup) against log(eps)
    by least squares.  The slope is the exponent.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError("samples must be an iterable of (eps, residual) pairs")
    if arr.shape[0] < 100:
        raise ValidationError("need at least 100 samples for a supremum fit")
    order = np.argsort(arr[:, 0])
    eps, res = arr[order, 0], arr[order, 1]
    if eps[-1] < 100.0 * eps[0]:
        raise ValidationError("samples must span at least two decades of eps")
    run = np.maximum.accumulate(res)
    inc = np.empty(len(run), dtype=bool)
    inc[0] = True
    inc[1:] = run[1:] > run[:-1]
    keep = inc & (eps >= eps_min) & (run > 0)
    if keep.sum() < 10:
        raise ConvergenceError(
            f"degenerate fit: only {int(keep.sum())} strict increases above eps={eps_min:g}"
        )
    slope, intercept = np.polyfit(np.log(eps[keep]), np.log(run[keep]), 1)
    return SupFit(exponent_gamma=float(slope), prefactor=float(np.exp(intercept)),
                  sample_range=(float(eps[0]), float(eps[-1])),
                  n_increase=int(keep.sum()))


# ---------------------------------------------------------------------------
# Poisson-resummed (Bessel) count with Gaussian radius smearing
# ---------------------------------------------------------------------------

def _is_shell(avec: tuple[int, ...], k: int) -> bool:
    if k < 0:
        return False
    if k == 0:
        return True
    return _count_full(avec, k) > _count_full(avec, k - 1)


def _nearest_shell_distance(avec: tuple[int, ...], eps: float) -> float:
    """Distance in radius sqrt(eps) to the nearest occupied shell."""
    lo = math.floor(eps)
    while lo >= 0 and not _is_shell(avec, lo):
        lo -= 1
    hi = math.ceil(eps)
    if hi == eps:
        hi += 1  # the shell at eps itself counts as inside, look above
    while not _is_shell(avec, hi):
        hi += 1
    r = math.sqrt(eps)
    d_lo = r - math.sqrt(lo) if lo >= 0 else math.inf
    d_hi = math.sqrt(hi) - r
    return min(d_lo, d_hi)


def default_smearing(a, epsilon: float) -> float:
    """Gaussian radius smearing that moves the count by far less than 0.5.

    One eighth of the distance to the nearest occupied shell: every lattice
    point then sits at least 8 sigma from the smeared boundary, so the
    smearing changes each indicator weight by under exp(-32).
    """
    avec = _check_avec(a)
    dist = _nearest_shell_distance(avec, epsilon)
    if dist <= 0 or (epsilon == int(epsilon) and _is_shell(avec, int(epsilon))):
        raise ValidationError(
            f"epsilon={epsilon:g} lies on a degeneracy shell; "
            "the smoothed count is ambiguous there"
        )
    return dist / 8.0


# truncate the damped series where exp(-2 pi^2 sigma^2 kappa^2) ~ exp(-_DAMP_EXHAUST)
_DAMP_EXHAUST = 37.0


def _bessel_halfint(d: int, x: np.ndarray) -> np.ndarray:
    """J_(d/2)(x) for d = 1, 2, 3 (closed forms for the half-integer orders)."""
    if d == 1:
        return np.sqrt(2.0 / (math.pi * x)) * np.sin(x)
    if d == 2:
        return special.j1(x)
    return np.sqrt(2.0 / (math.pi * x)) * (np.sin(x) / x - np.cos(x))


def _squared_norm_multiplicities(avec: tuple[int, ...], l_max: int) -> np.ndarray:
    """r[k] = number of dual-lattice vectors with A^2 |l/a|^2 = k, |l_i| <= l_max.

    Built by convolving the per-axis histograms of (A/a_i)^2 l_i^2.
    """
    A = math.prod(avec)
    coeffs = [(A // ai) ** 2 for ai in avec]
    size = sum(c * l_max**2 for c in coeffs) + 1
    out = None
    for c in coeffs:
        axis = np.zeros(c * l_max**2 + 1)
        j = np.arange(0, l_max + 1)
        np.add.at(axis, c * j * j, np.where(j == 0, 1.0, 2.0))
        if out is None:
            out = axis
        elif len(out) * len(axis) < 4_000_000:
            out = np.convolve(out, axis)
        else:
            out = signal.fftconvolve(out, axis)
    out = np.rint(out[:size])
    return out


@dataclass(frozen=True)
class FourierCount:
    value: float
    volume_term: float
    sigma: float
    l_max: int
    kappa_complete: float
    tail_estimate: float
    n_terms: int


def _tail_estimate(d: int, A: int, epsilon: float, sigma: float, kappa_c: float) -> float:
    """Upper estimate of the damped series beyond dual radius kappa_c."""
    c = 2.0 * math.pi**2 * sigma**2
    pref = _SPHERE_SURFACE[d] / math.pi * epsilon ** ((d - 1) / 4.0)
    if d == 1:
        integral = 0.5 * special.exp1(c * kappa_c**2)
    elif d == 2:
        integral = (0.5 * c**-0.25 * special.gamma(0.25)
                    * special.gammaincc(0.25, c * kappa_c**2))
    else:
        integral = 0.5 * math.sqrt(math.pi / c) * special.erfc(math.sqrt(c) * kappa_c)
    return 2.0 * pref * integral


def count_fourier(a, epsilon: float, l_max: int | None = None, *,
                  sigma: float | None = None, tail_tol: float | None = None,
                  full_output: bool = False):
    """Smoothed lattice-point count from the dual (Bessel) series.

    The zero-frequency term is the ellipsoid volume V_d eps^(d/2) / A
    (dimensional analysis and the small-argument limit of the Bessel kernel
    fix this form).  Each dual vector l contributes

        eps^(d/4) J_(d/2)(2 pi |l/a| sqrt(eps)) / (A |l/a|^(d/2))

    damped by exp(-2 pi^2 sigma^2 |l/a|^2) from a Gaussian smearing of the
    ellipsoid radius with width sigma.  With the default sigma the smeared
    count differs from the exact one by far less than 0.5, so the rounded
    value is exact off-shell.

    l_max bounds each dual component; None picks the damping-exhaustion
    radius.  If `tail_tol` is given, a tail estimate above it raises
    ConvergenceError.
    """
    avec = _check_avec(a)
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    d = len(avec)
    if d not in (1, 2, 3):
        raise ValidationError("count_fourier supports d in {1, 2, 3}")
    A = math.prod(avec)
    volume = _UNIT_BALL_VOLUME[d] * epsilon ** (d / 2.0) / A

    if l_max is not None and l_max == 0:
        res = FourierCount(volume, volume, 0.0, 0, 0.0, math.inf, 0)
        return res if full_output else res.value

    if sigma is None:
        sigma = default_smearing(avec, epsilon)
    kappa_cut = math.sqrt(_DAMP_EXHAUST / 2.0) / (math.pi * sigma)
    if l_max is None:
        l_max = math.ceil(kappa_cut * max(avec))
    kappa_complete = (l_max + 1) / max(avec)

    r = _squared_norm_multiplicities(avec, l_max)
    k = np.nonzero(r)[0]
    k = k[k > 0]
    kappa2 = k.astype(float) / A**2
    keep = kappa2 <= kappa_cut**2 * 1.0000001
    k, kappa2 = k[keep], kappa2[keep]
    kappa = np.sqrt(kappa2)
    x = 2.0 * math.pi * kappa * math.sqrt(epsilon)
    terms = (epsilon ** (d / 4.0) * _bessel_halfint(d, x) / kappa ** (d / 2.0)
             * np.exp(-2.0 * math.pi**2 * sigma**2 * kappa2) / A)
    series = float(np.sum(r[k] * terms))

    tail = _tail_estimate(d, A, epsilon, sigma, min(kappa_complete, kappa_cut))
    if tail_tol is not None and tail > tail_tol:
        raise ConvergenceError(
            f"series tail estimate {tail:.3g} exceeds tolerance {tail_tol:.3g} "
            f"at l_max={l_max}"
        )
    res = FourierCount(value=volume + series, volume_term=volume, sigma=sigma,
                       l_max=int(l_max), kappa_complete=kappa_complete,
                       tail_estimate=tail, n_terms=int(len(k)))
    return res if full_output else res.value


# Published validation grid: the rounded Fourier count must equal the exact
# enumeration on every pair.  Epsilons sit half way between integer shells.
FOURIER_VALIDATION_GRID: tuple[tuple[tuple[int, ...], float], ...] = tuple(
    [((1,), e) for e in (10.5, 37.5, 101.5, 350.5, 1000.5, 3333.5, 9999.5)]
    + [((2,), e) for e in (17.5, 222.5, 4000.5)]
    + [((3,), e) for e in (30.5, 900.5, 8100.5)]
    + [((5,), e) for e in (76.5, 2500.5)]
    + [((7,), e) for e in (150.5, 9801.5)]
    + [((1, 1), e) for e in (12.5, 52.5, 250.5, 1001.5, 3162.5, 9999.5)]
    + [((2, 1), e) for e in (20.5, 111.5, 1500.5, 6000.5)]
    + [((3, 2), e) for e in (35.5, 500.5, 2000.5)]
    + [((5, 3), e) for e in (200.5, 1200.5)]
    + [((10, 3), e) for e in (302.5, 2500.5)]
    + [((10, 7), e) for e in (666.5,)]
    + [((1, 1, 1), e) for e in (10.5, 29.5, 100.5, 317.5, 1000.5, 2025.5)]
    + [((2, 1, 1), e) for e in (25.5, 144.5, 440.5)]
    + [((2, 2, 1), e) for e in (60.5, 250.5)]
    + [((3, 2, 1), e) for e in (90.5, 333.5)]
    + [((4, 3, 1), e) for e in (160.5,)]
    + [((10, 3, 1), e) for e in (120.5,)]
)


def validate_fourier_grid(grid=FOURIER_VALIDATION_GRID):
    """Exact vs rounded-Fourier comparison over a pair grid.

    Returns a list of (a, eps, exact, fourier_value, agrees) tuples.
    """
    out = []
    for avec, eps in grid:
        exact = count_bruteforce(avec, eps)
        four = count_fourier(avec, eps, tail_tol=0.25)
        out.append((avec, eps, exact, four, abs(four - exact) < 0.5))
    return out
