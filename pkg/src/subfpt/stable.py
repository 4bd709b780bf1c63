"""One-sided alpha-stable subordinator U_alpha and its inverse S_alpha.

Conventions: ``E[exp(-r U(s))] = exp(-s r**alpha)``, so ``U(1)`` has the
density ``l_alpha`` with Laplace transform ``exp(-r**alpha)``.  ``alpha = 1``
is accepted wherever it makes sense and denotes the degenerate clock
``U(s) = s``.

Sampling and the density both go through Kanter's representation

    U(1) = (A(phi) / E) ** ((1 - alpha) / alpha),
    A(phi) = [sin(alpha phi)**alpha sin((1-alpha) phi)**(1-alpha) / sin(phi)] ** (1/(1-alpha)),

with ``phi ~ Uniform(0, pi)`` and ``E ~ Exp(1)`` independent.  Integrating
out ``E`` gives Zolotarev's single-integral form of the CDF and density.
"""

from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import ConvergenceError, DomainError
from .special_functions import DEFAULT_ACCURACY, _bernoulli_even, erfc

__all__ = [
    "StableTailConstants",
    "SubordinatorPath",
    "check_alpha",
    "kanter_log_a",
    "sample_stable_positive",
    "sample_stable_conditional",
    "stable_density",
    "stable_cdf",
    "stable_tail_constants",
    "q_density",
    "sample_subordinator_path",
    "invert_subordinator",
    "default_path_step",
    "log_density_table",
]

# quadrature tolerance for the Zolotarev integrals
_DENSITY_RTOL = 1e-10


def check_alpha(alpha, allow_one=True):
    """Validate the stability index and return it as a float."""
    alpha = float(alpha)
    upper_ok = alpha <= 1.0 if allow_one else alpha < 1.0
    if not (alpha > 0.0 and upper_ok):
        bound = "(0, 1]" if allow_one else "(0, 1)"
        raise DomainError(f"alpha must lie in {bound}, got {alpha}")
    return alpha


@dataclass(frozen=True)
class StableTailConstants:
    """Constants of ``l_alpha(z) ~ B z**-xi exp(-kappa / z**theta)`` as z -> 0+."""

    theta: float
    kappa: float
    B: float
    xi: float


@dataclass(frozen=True)
class SubordinatorPath:
    """A sampled path of U_alpha on an internal-time grid.

    ``grid[0] == 0`` and ``values[0] == 0``; both arrays strictly increase.
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise DomainError("grid and values must be 1-d arrays of equal length")
        if self.grid[0] != 0.0 or self.values[0] != 0.0:
            raise DomainError("subordinator paths start at U(0) = 0")


def stable_tail_constants(alpha):
    """Small-z constants (theta, kappa, B, xi) of the one-sided stable density."""
    alpha = check_alpha(alpha, allow_one=False)
    one_m = 1.0 - alpha
    return StableTailConstants(
        theta=alpha / one_m,
        kappa=one_m * alpha ** (alpha / one_m),
        B=math.sqrt(alpha ** (1.0 / one_m) / (2.0 * math.pi * one_m)),
        xi=(2.0 - alpha) / (2.0 * one_m),
    )


def kanter_log_a(alpha, phi):
    """log A(phi) of Kanter's representation, phi in (0, pi)."""
    one_m = 1.0 - alpha
    return (
        alpha * np.log(np.sin(alpha * phi))
        + one_m * np.log(np.sin(one_m * phi))
        - np.log(np.sin(phi))
    ) / one_m


def sample_stable_positive(alpha, rng, size=None):
    """Draw U_alpha(1), i.e. a positive stable variate with LT exp(-r**alpha).

    Kanter's exact transform of one uniform angle and one exponential.
    Returns exactly 1 when ``alpha == 1``.
    """
    alpha = check_alpha(alpha)
    if alpha == 1.0:
        return 1.0 if size is None else np.ones(size)
    # open interval: rng.random() can return 0.0
    phi = math.pi * (1.0 - rng.random(size))
    e = rng.standard_exponential(size)
    log_a = kanter_log_a(alpha, phi)
    out = np.exp(((1.0 - alpha) / alpha) * (log_a - np.log(e)))
    return float(out) if size is None else out


def sample_stable_conditional(alpha, rng, size, v_cut, below):
    """Draw U_alpha(1) conditioned on ``V <= v_cut`` (``below``) or ``V > v_cut``.

    ``V <= v`` is the event ``E >= A(phi) v**-theta``; given ``phi`` the
    overshoot of ``E`` is Exp(1) by memorylessness, and ``phi`` itself is
    drawn by rejection against ``exp(-(A(phi) - kappa) v**-theta)``.
    The upper event uses plain rejection, which is cheap whenever
    ``P(V > v_cut)`` is not small.
    """
    alpha = check_alpha(alpha, allow_one=False)
    out = np.empty(size)
    filled = 0
    if below:
        theta = alpha / (1.0 - alpha)
        c = v_cut ** (-theta)
        kappa = stable_tail_constants(alpha).kappa
        while filled < size:
            batch = max(64, 2 * (size - filled))
            phi = math.pi * (1.0 - rng.random(batch))
            a = np.exp(kanter_log_a(alpha, phi))
            keep = rng.random(batch) < np.exp(-(a - kappa) * c)
            a = a[keep]
            e = a * c + rng.standard_exponential(a.size)
            v = np.exp(((1.0 - alpha) / alpha) * (np.log(a) - np.log(e)))
            take = min(v.size, size - filled)
            out[filled : filled + take] = v[:take]
            filled += take
    else:
        while filled < size:
            batch = max(64, 2 * (size - filled))
            v = sample_stable_positive(alpha, rng, batch)
            v = v[v > v_cut]
            take = min(v.size, size - filled)
            out[filled : filled + take] = v[:take]
            filled += take
    return out


def _half_density(z):
    z = np.asarray(z, dtype=float)
    return np.exp(-0.25 / z) / (2.0 * math.sqrt(math.pi) * z ** 1.5)


# log(sin y / y) = -sum_n 2^(2n-1) |B_2n| y^(2n) / (n (2n)!), radius pi
_LOG_SINC_COEF = [
    -float(2 ** (2 * n - 1) * abs(b) / (n * math.factorial(2 * n)))
    for n, b in enumerate(_bernoulli_even(12), start=1)
]


def _log_sinc(y):
    if y > 0.6:
        return math.log(math.sin(y) / y)
    y2 = y * y
    acc = 0.0
    for c in reversed(_LOG_SINC_COEF):
        acc = acc * y2 + c
    return acc * y2


def _log_a_over_kappa(alpha, phi):
    """log(A(phi) / kappa) >= 0, free of cancellation as phi -> 0."""
    one_m = 1.0 - alpha
    return (
        alpha * _log_sinc(alpha * phi) + one_m * _log_sinc(one_m * phi) - _log_sinc(phi)
    ) / one_m


# use the power series in z**-alpha once it converges fast
_SERIES_SWITCH = 0.25


def _large_z_series(alpha, z, density):
    """Convergent series of the density / CDF in powers of z**-alpha.

    density: (1/pi) sum_k (-1)^(k+1) Gamma(k alpha + 1)/k! sin(k pi alpha) z^(-k alpha - 1)
    survival: (1/pi) sum_k (-1)^(k+1) Gamma(k alpha)/k! sin(k pi alpha) z^(-k alpha)
    """
    u = z ** (-alpha)
    total = 0.0
    for k in range(1, 200):
        lg = math.lgamma(k * alpha + (1.0 if density else 0.0)) - math.lgamma(k + 1.0)
        bound = math.exp(lg + k * math.log(u))
        total += (-1.0) ** (k + 1) * bound * math.sin(k * math.pi * alpha)
        # bound ignores sin(k pi alpha), which can vanish for isolated k
        if bound < 1e-17 * abs(total):
            break
    else:
        raise ConvergenceError(f"large-z stable series did not converge at z={z}")
    if density:
        return total / (math.pi * z)
    return 1.0 - total / math.pi


def _zolotarev(alpha, z, density, acc, log=False):
    """Density or CDF of U_alpha(1) at a single z > 0 by adaptive quadrature.

    ``log=True`` returns the logarithm, which stays finite where the value underflows.
    """
    if z ** (-alpha) < _SERIES_SWITCH:
        val = _large_z_series(alpha, z, density)
        return math.log(val) if log else val
    one_m = 1.0 - alpha
    theta = alpha / one_m
    x = z ** (-theta)
    kappa = stable_tail_constants(alpha).kappa
    kx = kappa * x

    # integrate exp(d - (A - kappa) x), d = log(A/kappa), and restore
    # kappa exp(-kappa x) afterwards so tiny densities keep relative accuracy
    def integrand(phi):
        d = _log_a_over_kappa(alpha, phi)
        if density:
            return math.exp(d - kx * math.expm1(d))
        return math.exp(-kx * math.expm1(d))

    points = []
    # the density integrand peaks where A(phi) = 1/x; A rises from kappa at 0
    if density and kx < 1.0:
        lo, hi = 0.0, math.pi
        target = -math.log(kx)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if _log_a_over_kappa(alpha, mid) < target:
                lo = mid
            else:
                hi = mid
        points.append(0.5 * (lo + hi))
    # otherwise mass sits near phi = 0 where log(A/kappa) ~ alpha phi^2 / 2
    if kx > 1.0:
        w = math.sqrt(2.0 / (alpha * kx))
        points.extend([w, 4.0 * w, 16.0 * w])
    points = sorted(p for p in points if 1e-12 < p < math.pi - 1e-12)
    val, err = integrate.quad(
        integrand,
        0.0,
        math.pi,
        points=points or None,
        epsabs=0.0,
        epsrel=_DENSITY_RTOL,
        limit=400,
    )
    if not np.isfinite(val) or err > 1e3 * _DENSITY_RTOL * abs(val):
        kind = "density" if density else "cdf"
        raise ConvergenceError(f"stable {kind} quadrature failed at z={z}")
    if val == 0.0:
        return -math.inf if log else 0.0
    log_pref = -kx - math.log(math.pi)
    if density:
        log_pref += math.log(theta * kappa) - (1.0 / one_m) * math.log(z)
    out = log_pref + math.log(val)
    return out if log else math.exp(out)


class _LogDensityTable:
    """Cubic spline of ``g(u) = log l_alpha(e^u) - log(B e^(-xi u) exp(-kappa e^(-theta u)))``.

    ``g`` is smooth and bounded on the left (it tends to 0 as z -> 0), so a
    spline in ``u`` keeps relative accuracy in the density even where it is
    astronomically small.  Nodes are refined until midpoints are predicted
    to ``tol``.  Below ``u_lo`` the density is under exp(-800) and is
    reported as 0; above ``u_hi`` the large-z series is used directly.
    """

    def __init__(self, alpha, tol=1e-11, step=0.25, max_nodes=20_000):
        c = stable_tail_constants(alpha)
        self.alpha = alpha
        self._c = c
        self._log_b = math.log(c.B)
        self.u_lo = -math.log(800.0 / c.kappa) / c.theta
        # z**-alpha = 0.02: the series needs only a handful of terms
        self.u_hi = math.log(0.02) / -alpha
        n0 = int(math.ceil((self.u_hi - self.u_lo) / step)) + 1
        nodes = {u: self._g_exact(u) for u in np.linspace(self.u_lo, self.u_hi, n0)}
        pending = None
        while True:
            xs = sorted(nodes)
            spline = CubicSpline(xs, [nodes[u] for u in xs])
            if pending is None:
                pending = list(zip(xs[:-1], xs[1:]))
            nxt = []
            for a, b in pending:
                m = 0.5 * (a + b)
                gm = self._g_exact(m)
                nodes[m] = gm
                if abs(float(spline(m)) - gm) > tol:
                    nxt.extend([(a, m), (m, b)])
            if not nxt:
                break
            if len(nodes) > max_nodes:
                raise ConvergenceError(f"log-density table for alpha={alpha} did not reach tol={tol}")
            pending = nxt
        xs = sorted(nodes)
        spline = CubicSpline(xs, [nodes[u] for u in xs])
        self._x = xs
        # per-interval cubic coefficients, highest power first
        self._coef = [tuple(spline.c[:, i]) for i in range(len(xs) - 1)]
        self.size = len(xs)

    def _log_asym(self, u):
        c = self._c
        return self._log_b - c.xi * u - c.kappa * math.exp(-c.theta * u)

    def _g_exact(self, u):
        return _zolotarev(self.alpha, math.exp(u), True, DEFAULT_ACCURACY, log=True) - self._log_asym(u)

    def __call__(self, z):
        """log l_alpha(z) for scalar z > 0 (``-inf`` when below exp(-800))."""
        u = math.log(z)
        if u < self.u_lo:
            return -math.inf
        if u >= self.u_hi:
            return math.log(_large_z_series(self.alpha, z, True))
        i = min(bisect_right(self._x, u) - 1, len(self._coef) - 1)
        a3, a2, a1, a0 = self._coef[i]
        h = u - self._x[i]
        return ((a3 * h + a2) * h + a1) * h + a0 + self._log_asym(u)


@lru_cache(maxsize=16)
def log_density_table(alpha):
    """Cached fast evaluator of ``log l_alpha(z)`` (relative error ~1e-10) for 0 < alpha < 1."""
    alpha = check_alpha(alpha, allow_one=False)
    return _LogDensityTable(alpha)


def stable_density(alpha, z, acc=DEFAULT_ACCURACY):
    """Density l_alpha(z) of U_alpha(1).

    ``alpha = 1/2`` uses the Levy closed form ``exp(-1/(4z)) / (2 sqrt(pi) z**1.5)``;
    other alpha integrate Zolotarev's representation over the Kanter angle.
    Vectorized over ``z``.
    """
    alpha = check_alpha(alpha, allow_one=False)
    za = np.asarray(z, dtype=float)
    if np.any(~(za > 0)):
        raise DomainError("stable_density requires z > 0")
    if alpha == 0.5:
        out = _half_density(za)
    else:
        out = np.array([_zolotarev(alpha, float(v), True, acc) for v in za.ravel()]).reshape(za.shape)
    return float(out) if np.ndim(z) == 0 else out


def stable_cdf(alpha, z, acc=DEFAULT_ACCURACY):
    """P(U_alpha(1) <= z), vectorized over ``z``."""
    alpha = check_alpha(alpha, allow_one=False)
    za = np.asarray(z, dtype=float)
    if np.any(~(za > 0)):
        raise DomainError("stable_cdf requires z > 0")
    if alpha == 0.5:
        out = np.asarray(erfc(0.5 / np.sqrt(za)))
    else:
        out = np.array([_zolotarev(alpha, float(v), False, acc) for v in za.ravel()]).reshape(za.shape)
    return float(out) if np.ndim(z) == 0 else out


def q_density(alpha, s, t, acc=DEFAULT_ACCURACY):
    """Density in ``s`` of the inverse subordinator S_alpha(t).

    ``q(s, t) = t / (alpha s**(1 + 1/alpha)) * l_alpha(t s**(-1/alpha))``.
    Vectorized over ``s``.
    """
    alpha = check_alpha(alpha, allow_one=False)
    sa = np.asarray(s, dtype=float)
    if np.any(~(sa > 0)) or not t > 0:
        raise DomainError("q_density requires s > 0 and t > 0")
    z = t * sa ** (-1.0 / alpha)
    out = t / (alpha * sa ** (1.0 + 1.0 / alpha)) * stable_density(alpha, z, acc)
    return float(out) if np.ndim(s) == 0 else out


def default_path_step(alpha, t_max, n_samples):
    """Internal-time step whose grid bias in S_alpha stays below the MC error.

    The first-crossing rule overshoots S_alpha(t) by at most one step, so we
    ask ``ds < 0.1 * E[S(t_max)] / sqrt(n_samples)``.
    """
    alpha = check_alpha(alpha)
    mean_s = t_max ** alpha / math.gamma(1.0 + alpha)
    return 0.1 * mean_s / math.sqrt(max(n_samples, 1))


def sample_subordinator_path(alpha, ds, s_max, rng):
    """U_alpha on the grid 0, ds, 2 ds, ..., built from iid increments ds**(1/alpha) V."""
    alpha = check_alpha(alpha)
    if not (0.0 < ds < s_max):
        raise DomainError("need 0 < ds < s_max")
    n = int(math.ceil(s_max / ds - 1e-12))
    grid = ds * np.arange(n + 1)
    if alpha == 1.0:
        return SubordinatorPath(grid, grid.copy())
    inc = ds ** (1.0 / alpha) * sample_stable_positive(alpha, rng, n)
    values = np.concatenate(([0.0], np.cumsum(inc)))
    return SubordinatorPath(grid, values)


def invert_subordinator(path, t_grid):
    """S_alpha(t) = first grid time s with U(s) > t.

    Raises
    ------
    DomainError
        If some ``t`` is not below the path's final value.
    """
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0):
        raise DomainError("physical times must be non-negative")
    idx = np.searchsorted(path.values, t, side="right")
    if np.any(idx >= path.values.size):
        raise DomainError(
            f"t={float(np.max(t))} exceeds the path's reach U(s_max)={path.values[-1]}"
        )
    return path.grid[idx]
