"""First-passage-time models: diffusive laws, subordinated laws, samplers.

Every model describes a diffusive first passage time ``sigma`` in internal
time ``s``.  The subdiffusive time is ``tau = U_alpha(sigma)``, so

    P(tau <= t) = int_0^inf q_alpha(s, t) P(sigma <= s) ds,

and in distribution ``tau = sigma**(1/alpha) * V`` with ``V = U_alpha(1)``
independent of ``sigma``.
"""

from dataclasses import dataclass, fields
import math
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate

from .errors import (
    ConvergenceError,
    DomainError,
    SimulationBudgetError,
    UnsupportedModelError,
)
from .inversion import InverseCdfTable
from .special_functions import (
    DEFAULT_ACCURACY,
    Accuracy,
    erf,
    erfc,
    erfc_inv,
    erfcx,
    gamma,
    hyp1f3,
)
from .stable import (
    check_alpha,
    default_path_step,
    log_density_table,
    sample_stable_positive,
    stable_tail_constants,
)

__all__ = [
    "HalfLine",
    "PartialAbsorb",
    "DriftInterval",
    "NarrowEscapeSphere",
    "GenericShortTime",
    "UniformInterval",
    "FptModel",
    "SdeConfig",
    "ShortTimeDiffusive",
    "MODEL_TYPES",
    "survival_diffusive",
    "cdf_diffusive",
    "short_time_constants",
    "diffusive_tail_index",
    "survival_subdiffusive",
    "cdf_subdiffusive",
    "survival_halfline_closed_form",
    "cdf_halfline_closed_form",
    "cdf_sf_subdiffusive",
    "diffusive_table",
    "subdiffusive_table",
    "sample_diffusive_fpt",
    "sample_subdiffusive_fpt",
    "simulate_subdiffusive_path",
    "model_to_block",
    "model_from_block",
]


def _positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class ShortTimeDiffusive:
    """``P(sigma <= s) ~ A1 s**p1 exp(-C1 / s)`` as s -> 0+ (internal time)."""

    A1: float
    p1: float
    C1: float

    def __post_init__(self):
        _positive("A1", self.A1)
        _positive("C1", self.C1)


@dataclass(frozen=True)
class HalfLine:
    """Perfectly absorbing target at the origin, searcher starts at ``x0 > 0``."""

    x0: float
    K_alpha: float

    def __post_init__(self):
        _positive("x0", self.x0)
        _positive("K_alpha", self.K_alpha)


@dataclass(frozen=True)
class PartialAbsorb:
    """Half-line with a partially absorbing (Robin) target of reactivity ``kappa_alpha``."""

    x0: float
    K_alpha: float
    kappa_alpha: float

    def __post_init__(self):
        _positive("x0", self.x0)
        _positive("K_alpha", self.K_alpha)
        _positive("kappa_alpha", self.kappa_alpha)


@dataclass(frozen=True)
class DriftInterval:
    """Interval (0, L0) absorbing at both ends with constant drift ``V_alpha``."""

    x0: float
    L0: float
    K_alpha: float
    V_alpha: float = 0.0

    def __post_init__(self):
        _positive("L0", self.L0)
        _positive("K_alpha", self.K_alpha)
        if not (0.0 < self.x0 < self.L0):
            raise DomainError(f"x0 must lie in (0, L0), got x0={self.x0}, L0={self.L0}")
        if not math.isfinite(self.V_alpha):
            raise DomainError("V_alpha must be finite")

    @property
    def d0(self):
        return min(self.x0, self.L0 - self.x0)


@dataclass(frozen=True)
class NarrowEscapeSphere:
    """Sphere of radius ``L`` with a polar-cap target of half-angle ``eps``; start at the centre.

    Only the short-time law is available.
    """

    L: float
    K_alpha: float
    eps: float

    def __post_init__(self):
        _positive("L", self.L)
        _positive("K_alpha", self.K_alpha)
        if not (0.0 < self.eps < math.pi):
            raise DomainError(f"eps must lie in (0, pi), got {self.eps}")


@dataclass(frozen=True)
class GenericShortTime:
    """User-supplied short-time constants, e.g. ``C1 = L**2 / (4 K_alpha)`` for a geodesic ``L``.

    ``tail_rate`` optionally records an exponential decay rate of ``P(sigma > s)``.
    """

    A1: float
    p1: float
    C1: float
    tail_rate: Optional[float] = None

    def __post_init__(self):
        _positive("A1", self.A1)
        _positive("C1", self.C1)
        if self.tail_rate is not None:
            _positive("tail_rate", self.tail_rate)


@dataclass(frozen=True)
class UniformInterval:
    """Interval (-L, L) absorbing at both ends, searcher starts uniformly inside.

    This is the one-dimensional ball of the uniform-start (Weibull) regime;
    its short-time law is a power ``s**(1/2)`` rather than ``exp(-C1/s)``.
    """

    L: float
    K_alpha: float

    def __post_init__(self):
        _positive("L", self.L)
        _positive("K_alpha", self.K_alpha)


FptModel = Union[HalfLine, PartialAbsorb, DriftInterval, NarrowEscapeSphere,
                 GenericShortTime, UniformInterval]

MODEL_TYPES = {
    cls.__name__: cls
    for cls in (HalfLine, PartialAbsorb, DriftInterval, NarrowEscapeSphere,
                GenericShortTime, UniformInterval)
}

_FULL_LAW = (HalfLine, PartialAbsorb, DriftInterval, UniformInterval)


@dataclass(frozen=True)
class SdeConfig:
    """One-dimensional Ito SDE ``dX = b(X)/eta ds + sqrt(2 K) sigma(X) dW``.

    ``drift`` and ``sigma`` act elementwise on numpy arrays.
    """

    drift: Callable
    eta_alpha: float
    K_alpha: float
    sigma: Callable
    step: float

    def __post_init__(self):
        _positive("eta_alpha", self.eta_alpha)
        _positive("K_alpha", self.K_alpha)
        _positive("step", self.step)

    @classmethod
    def pure_diffusion(cls, K_alpha, step):
        return cls(
            drift=lambda x: np.zeros_like(x),
            eta_alpha=1.0,
            K_alpha=K_alpha,
            sigma=lambda x: np.ones_like(x),
            step=step,
        )


# ---------------------------------------------------------------------------
# Diffusive laws
# ---------------------------------------------------------------------------

def _require_full_law(model):
    if not isinstance(model, _FULL_LAW):
        raise UnsupportedModelError(
            f"{type(model).__name__} has no full-time FPT law; only short-time constants"
        )


def _halfline_pair(x0, K, s):
    u = x0 / np.sqrt(4.0 * K * s)
    return erfc(u), erf(u)


def _partial_pair(m, s):
    sq = np.sqrt(4.0 * m.K_alpha * s)
    u = m.x0 / sq
    w = (2.0 * m.kappa_alpha * s + m.x0) / sq
    eu = np.exp(-u * u)
    cdf = eu * (erfcx(u) - erfcx(w))
    sf = erf(u) + erfcx(w) * eu
    return cdf, sf


def _image_term(a, mu, T, log_pref):
    """exp(log_pref) * int_0^T a / sqrt(2 pi s^3) exp(-a^2/(2s) - mu^2 s/2) ds.

    Closed form ``sign(a) [e^{-|a| mu} Phi((mu T - |a|)/sqrt T) + e^{|a| mu} Phi(-(mu T + |a|)/sqrt T)]``
    evaluated through erfcx to avoid overflow.
    """
    if a == 0.0:
        return 0.0
    sgn = 1.0 if a > 0 else -1.0
    a = abs(a)
    mu = abs(mu)
    rt = math.sqrt(2.0 * T)
    w1 = (a - mu * T) / rt
    w2 = (a + mu * T) / rt
    log_e = log_pref - (a * a + mu * mu * T * T) / (2.0 * T)
    second = 0.5 * float(erfcx(w2)) * math.exp(log_e)
    if w1 >= 0.0:
        first = 0.5 * float(erfcx(w1)) * math.exp(log_e)
    else:
        first = 0.5 * float(erfc(w1)) * math.exp(log_pref - a * mu)
    return sgn * (first + second)


def _image_series(y, v, T):
    total = 0.0
    for shift, drift, log_pref in ((y, v, -v * y), (1.0 - y, -v, v * (1.0 - y))):
        total += _image_term(shift, drift, T, log_pref)
        for k in range(1, 10_000):
            t_pos = _image_term(shift + 2 * k, drift, T, log_pref)
            t_neg = _image_term(shift - 2 * k, drift, T, log_pref)
            total += t_pos + t_neg
            if abs(t_pos) + abs(t_neg) < 1e-16 * max(abs(total), 1e-300):
                break
        else:
            raise ConvergenceError("image series did not converge")
    return total


def _eigen_survival(y, v, T):
    total = 0.0
    for n in range(1, 100_000):
        b = n * math.pi
        lead = 2.0 * math.sin(b * y) * b / (v * v + b * b)
        decay = -v * y - (v * v + b * b) * T / 2.0
        term = lead * (math.exp(decay) - (-1.0) ** n * math.exp(decay + v))
        total += term
        if math.exp(decay + max(v, 0.0)) * 2.0 / b < 1e-17 * max(abs(total), 1e-300):
            break
    return total


# switch from images to eigenfunctions at this scaled time
_EIGEN_SWITCH = 1.0


def _drift_pair_scalar(m, s):
    y = m.x0 / m.L0
    v = m.L0 * m.V_alpha / (2.0 * m.K_alpha)
    T = 2.0 * m.K_alpha * s / m.L0 ** 2
    if T < _EIGEN_SWITCH:
        cdf = min(max(_image_series(y, v, T), 0.0), 1.0)
        return cdf, 1.0 - cdf
    sf = min(max(_eigen_survival(y, v, T), 0.0), 1.0)
    return 1.0 - sf, sf


def _ierfc(x):
    return np.exp(-x * x) / math.sqrt(math.pi) - x * erfc(x)


def _uniform_pair_scalar(m, s):
    ell = 2.0 * m.L
    ratio = m.K_alpha * s / ell ** 2
    if ratio < 0.1:
        r = math.sqrt(4.0 * m.K_alpha * s)
        total = 1.0 / math.sqrt(math.pi)
        for k in range(1, 1000):
            term = 2.0 * (-1.0) ** k * float(_ierfc(k * ell / r))
            total += term
            if abs(term) < 1e-17 * total:
                break
        cdf = 2.0 * r / ell * total
        return cdf, 1.0 - cdf
    sf = 0.0
    for n in range(1, 100_000, 2):
        term = 8.0 / (n * n * math.pi ** 2) * math.exp(-n * n * math.pi ** 2 * ratio)
        sf += term
        if term <= 1e-17 * sf:
            break
    return 1.0 - sf, sf


def _diffusive_pair(model, s):
    """(P(sigma <= s), P(sigma > s)) with each computed to relative accuracy."""
    _require_full_law(model)
    s_arr = np.asarray(s, dtype=float)
    if np.any(~(s_arr > 0)):
        raise DomainError("internal time s must be positive")
    if isinstance(model, HalfLine):
        cdf, sf = _halfline_pair(model.x0, model.K_alpha, s_arr)
    elif isinstance(model, PartialAbsorb):
        cdf, sf = _partial_pair(model, s_arr)
    else:
        scalar = _drift_pair_scalar if isinstance(model, DriftInterval) else _uniform_pair_scalar
        pairs = [scalar(model, float(v)) for v in s_arr.ravel()]
        cdf = np.array([p[0] for p in pairs]).reshape(s_arr.shape)
        sf = np.array([p[1] for p in pairs]).reshape(s_arr.shape)
    if np.ndim(s) == 0:
        return float(cdf), float(sf)
    return np.asarray(cdf), np.asarray(sf)


def survival_diffusive(model, s):
    """P(sigma > s) for models with a full-time law.

    Raises
    ------
    UnsupportedModelError
        For NarrowEscapeSphere and GenericShortTime.
    """
    return _diffusive_pair(model, s)[1]


def cdf_diffusive(model, s):
    """P(sigma <= s), accurate in the short-time tail."""
    return _diffusive_pair(model, s)[0]


def short_time_constants(model):
    """Short-time constants (A1, p1, C1) of ``P(sigma <= s)``."""
    if isinstance(model, HalfLine):
        return ShortTimeDiffusive(
            A1=math.sqrt(4.0 * model.K_alpha / (math.pi * model.x0 ** 2)),
            p1=0.5,
            C1=model.x0 ** 2 / (4.0 * model.K_alpha),
        )
    if isinstance(model, PartialAbsorb):
        K, x0 = model.K_alpha, model.x0
        return ShortTimeDiffusive(
            A1=4.0 / math.sqrt(math.pi) * model.kappa_alpha * x0 / K * (K / x0 ** 2) ** 1.5,
            p1=1.5,
            C1=x0 ** 2 / (4.0 * K),
        )
    if isinstance(model, DriftInterval):
        K, V, x0, L0 = model.K_alpha, model.V_alpha, model.x0, model.L0
        d0 = model.d0
        base = math.sqrt(4.0 * K / (math.pi * d0 ** 2))
        left = math.exp(-V * x0 / (2.0 * K))
        right = math.exp(V * (L0 - x0) / (2.0 * K))
        if 2.0 * x0 < L0:
            pref = left
        elif 2.0 * x0 > L0:
            pref = right
        else:
            pref = left + right
        return ShortTimeDiffusive(A1=base * pref, p1=0.5, C1=d0 ** 2 / (4.0 * K))
    if isinstance(model, NarrowEscapeSphere):
        return ShortTimeDiffusive(
            A1=model.L * (1.0 - math.cos(model.eps)) / math.sqrt(math.pi * model.K_alpha),
            p1=-0.5,
            C1=model.L ** 2 / (4.0 * model.K_alpha),
        )
    if isinstance(model, GenericShortTime):
        return ShortTimeDiffusive(A1=model.A1, p1=model.p1, C1=model.C1)
    raise UnsupportedModelError(
        f"{type(model).__name__} has a power-law short-time behaviour, not A1 s^p1 exp(-C1/s)"
    )


def diffusive_tail_index(model):
    """Index ``r`` with ``P(sigma > s) = O(s**-r)``; ``inf`` for exponential tails.

    Unbounded half-line targets decay like ``s**-1/2``.  Bounded domains
    decay exponentially.  A :class:`GenericShortTime` carries a tail only
    if ``tail_rate`` is set.
    """
    if isinstance(model, (HalfLine, PartialAbsorb)):
        return 0.5
    if isinstance(model, (DriftInterval, NarrowEscapeSphere, UniformInterval)):
        return math.inf
    if isinstance(model, GenericShortTime) and model.tail_rate is not None:
        return math.inf
    raise UnsupportedModelError(f"no tail information for {type(model).__name__}")


# ---------------------------------------------------------------------------
# Subordinated laws
# ---------------------------------------------------------------------------

def _log_q_half(s, t):
    # alpha = 1/2: S(t) is half-normal, q = exp(-s^2/(4t)) / sqrt(pi t)
    return -s * s / (4.0 * t) - 0.5 * math.log(math.pi * t)


def _laplace_point(alpha, C1, t):
    """Maximiser in s of q_alpha(s, t) exp(-C1/s) for small t."""
    c = stable_tail_constants(alpha)
    a_t = alpha + c.theta
    return (C1 * alpha / (c.kappa * c.theta)) ** (alpha / a_t) * t ** (alpha * c.theta / a_t)


def _subordinated(model, alpha, t, want_cdf, acc):
    """int_0^inf q_alpha(s, t) g(s) ds with g the diffusive CDF or survival.

    The integral runs over log s.  Cut-offs sit where the integrand has
    fallen ~exp(-800) below its peak, and the Laplace point and ``t**alpha``
    are passed to QUADPACK as breakpoints.
    """
    c = stable_tail_constants(alpha)
    t_a = t ** alpha
    try:
        C1 = short_time_constants(model).C1
    except UnsupportedModelError:
        C1 = None
    s0 = _laplace_point(alpha, C1, t) if C1 is not None else t_a
    peak = c.kappa * s0 ** (1.0 / (1.0 - alpha)) * t ** (-c.theta)
    if C1 is not None:
        peak += C1 / s0
    s_hi = max(4.0 * t_a, ((peak + 800.0) / c.kappa) ** (1.0 - alpha) * t_a)
    if want_cdf and C1 is not None:
        s_lo = min(C1 / (peak + 800.0), 1e-3 * s0)
    else:
        s_lo = 1e-18 * t_a

    if alpha == 0.5:
        def log_q(s):
            return _log_q_half(s, t)
    else:
        log_l = log_density_table(alpha)

        def log_q(s):
            z = t * s ** (-1.0 / alpha)
            return math.log(t / alpha) - (1.0 + 1.0 / alpha) * math.log(s) + log_l(z)

    def integrand(u):
        s = math.exp(u)
        lq = log_q(s)
        if lq == -math.inf:
            return 0.0
        f, sf = _diffusive_pair(model, s)
        g = f if want_cdf else sf
        if g <= 0.0:
            return 0.0
        return math.exp(u + lq + math.log(g))

    lo, hi = math.log(s_lo), math.log(s_hi)
    pts = sorted({p for p in (math.log(s0), math.log(t_a)) if lo < p < hi})
    val, err = integrate.quad(
        integrand, lo, hi, points=pts or None, epsabs=0.0,
        epsrel=max(acc.rel_tol * 100.0, 1e-10), limit=500,
    )
    if not math.isfinite(val) or err > 1e-6 * max(abs(val), 1e-300) + 1e-14:
        raise ConvergenceError(f"subordination quadrature failed at t={t} (err={err:.3g})")
    return min(max(val, 0.0), 1.0)


def _subdiffusive_pair(model, alpha, t, acc):
    alpha = check_alpha(alpha)
    _require_full_law(model)
    if not t > 0:
        raise DomainError("physical time t must be positive")
    if alpha == 1.0:
        return _diffusive_pair(model, float(t))
    # compute the smaller of the two directly; the other by complement
    cdf = _subordinated(model, alpha, t, True, acc)
    if cdf > 0.5:
        sf = _subordinated(model, alpha, t, False, acc)
        return 1.0 - sf, sf
    return cdf, 1.0 - cdf


def survival_subdiffusive(model, alpha, t, acc=DEFAULT_ACCURACY):
    """P(tau > t) by quadrature of q_alpha against P(sigma > s). Vectorized over ``t``."""
    t_arr = np.asarray(t, dtype=float)
    out = np.array([_subdiffusive_pair(model, alpha, float(v), acc)[1] for v in t_arr.ravel()])
    return float(out[0]) if np.ndim(t) == 0 else out.reshape(t_arr.shape)


def cdf_subdiffusive(model, alpha, t, acc=DEFAULT_ACCURACY):
    """P(tau <= t), computed directly from the CDF integrand when it is small."""
    t_arr = np.asarray(t, dtype=float)
    out = np.array([_subdiffusive_pair(model, alpha, float(v), acc)[0] for v in t_arr.ravel()])
    return float(out[0]) if np.ndim(t) == 0 else out.reshape(t_arr.shape)


def cdf_sf_subdiffusive(model, alpha, t, acc=DEFAULT_ACCURACY):
    """(P(tau <= t), P(tau > t)) for scalar ``t``."""
    return _subdiffusive_pair(model, alpha, float(t), acc)


def cdf_halfline_closed_form(t, x0=1.0, K_alpha=1.0, radius=100.0):
    """Closed-form P(tau <= t) for the half-line at alpha = 1/2 via 1F3 series.

    The 1F3 combination tends to 1 as t -> inf and matches the subordination
    integral of ``P(sigma <= s)``, so it is the CDF of ``tau``.  It is stated
    for ``x0 = K_alpha = 1``; other parameters follow from the scaling
    ``tau -> (x0**2 / K_alpha)**2 tau``.  Times whose series argument
    ``|z| = 1/(256 t)`` exceeds ``radius`` fall back to quadrature, since the
    series cancels catastrophically there.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0)):
        raise DomainError("t must be positive")
    tt = t_arr * (K_alpha / x0 ** 2) ** 2
    z = -1.0 / (256.0 * tt)
    out = np.empty_like(tt)
    ok = np.abs(z) <= radius
    if np.any(ok):
        tk, zk = tt[ok], z[ok]
        f1 = hyp1f3(0.75, 1.25, 1.5, 1.75, zk)
        f2 = hyp1f3(0.25, 0.5, 0.75, 1.25, zk)
        f3 = hyp1f3(0.5, 0.75, 1.25, 1.5, zk)
        # Gamma(-1/4) = -4 Gamma(3/4)
        out[ok] = (
            (-4.0 * gamma(0.75) * f1 - 24.0 * np.sqrt(tk) * gamma(0.25) * f2)
            / (24.0 * math.sqrt(2.0) * math.pi * tk ** 0.75)
            + f3 / (2.0 * math.sqrt(math.pi) * np.sqrt(tk))
            + 1.0
        )
    if np.any(~ok):
        unit = HalfLine(1.0, 1.0)
        out[~ok] = [cdf_subdiffusive(unit, 0.5, float(v)) for v in tt[~ok]]
    out = np.clip(out, 0.0, 1.0)
    return float(out) if np.ndim(t) == 0 else out


def survival_halfline_closed_form(t, x0=1.0, K_alpha=1.0, radius=100.0):
    """Closed-form P(tau > t) for the half-line at alpha = 1/2; see :func:`cdf_halfline_closed_form`."""
    return 1.0 - cdf_halfline_closed_form(t, x0, K_alpha, radius)


# ---------------------------------------------------------------------------
# Tables and samplers
# ---------------------------------------------------------------------------

def _natural_scale(model):
    if isinstance(model, (HalfLine, PartialAbsorb)):
        return model.x0 ** 2 / model.K_alpha
    if isinstance(model, DriftInterval):
        return model.L0 ** 2 / model.K_alpha
    if isinstance(model, UniformInterval):
        return model.L ** 2 / model.K_alpha
    raise UnsupportedModelError(type(model).__name__)


def diffusive_table(model, **kw):
    """Inverse-CDF table of the diffusive FPT ``sigma``."""
    _require_full_law(model)
    return InverseCdfTable(lambda s: _diffusive_pair(model, s), _natural_scale(model), **kw)


def subdiffusive_table(model, alpha, acc=DEFAULT_ACCURACY, **kw):
    """Inverse-CDF table of the subdiffusive FPT ``tau`` built from the quadrature law."""
    alpha = check_alpha(alpha)
    _require_full_law(model)
    start = _natural_scale(model) ** (1.0 / alpha)
    return InverseCdfTable(lambda t: _subdiffusive_pair(model, alpha, t, acc), start, **kw)


def _euler_fpt(model, rng, size, step, max_time, on_budget):
    """Euler-Maruyama first exit with a Brownian-bridge crossing test.

    PartialAbsorb reflects steps that end below the origin and absorbs them
    with probability ``kappa sqrt(pi dt / K)`` (Erban-Chapman), without the
    bridge test.
    """
    K = model.K_alpha
    if isinstance(model, DriftInterval):
        lo, hi, v = 0.0, model.L0, model.V_alpha
    else:
        lo, hi, v = 0.0, math.inf, 0.0
    x = np.full(size, float(model.x0))
    out = np.full(size, math.inf)
    active = np.arange(size)
    sd = math.sqrt(2.0 * K * step)
    n_max = int(math.ceil(max_time / step))
    robin = None
    if isinstance(model, PartialAbsorb):
        robin = model.kappa_alpha * math.sqrt(math.pi * step / K)
        if robin >= 1.0:
            raise DomainError("step too large for the partial-absorption scheme")
    for n in range(1, n_max + 1):
        if active.size == 0:
            break
        xa = x[active]
        xn = xa + v * step + sd * rng.standard_normal(active.size)
        # bridge probability of having touched each wall during the step
        if robin is None:
            p_lo = np.where(
                (xa > lo) & (xn > lo),
                np.exp(-(xa - lo) * (xn - lo) / (K * step)),
                1.0,
            )
            hit = rng.random(active.size) < p_lo
        else:
            # the Robin probability is calibrated for end-of-step crossings only
            hit = xn < lo
        if math.isfinite(hi):
            p_hi = np.where(
                (xa < hi) & (xn < hi),
                np.exp(-(hi - xa) * (hi - xn) / (K * step)),
                1.0,
            )
            hit_hi = rng.random(active.size) < p_hi
        else:
            hit_hi = np.zeros(active.size, dtype=bool)
        if robin is not None:
            absorbed = hit & (rng.random(active.size) < robin)
            xn = np.where(hit & ~absorbed, np.abs(xn), xn)
            done = absorbed
        else:
            done = hit | hit_hi
        out[active[done]] = n * step
        x[active] = xn
        active = active[~done]
    if active.size and on_budget == "raise":
        raise SimulationBudgetError(
            f"{active.size} paths still active at internal time {max_time}"
        )
    return out


def sample_diffusive_fpt(model, rng, size=None, method="exact", step=1e-4,
                         max_time=1e3, on_budget="censor", table=None):
    """Draw diffusive first passage times ``sigma``.

    Parameters
    ----------
    method : {"exact", "euler"}
        ``exact`` inverts the CDF: in closed form for HalfLine
        (``sigma = x0**2 / (4 K erfc_inv(U)**2)``) and through an adaptive
        inverse-CDF table otherwise.  ``euler`` simulates paths with
        Euler-Maruyama and a Brownian-bridge crossing test.
    step, max_time, on_budget
        Euler settings.  Paths alive at ``max_time`` are returned as ``inf``
        (``on_budget="censor"``) or raise ``SimulationBudgetError``.
    table : InverseCdfTable, optional
        Reuse a prebuilt table for ``exact`` sampling.
    """
    n = 1 if size is None else size
    if method == "euler":
        if not isinstance(model, (HalfLine, PartialAbsorb, DriftInterval)):
            raise UnsupportedModelError(f"no SDE scheme for {type(model).__name__}")
        if on_budget not in ("censor", "raise"):
            raise DomainError("on_budget must be 'censor' or 'raise'")
        out = _euler_fpt(model, rng, n, step, max_time, on_budget)
    elif method == "exact":
        _require_full_law(model)
        if isinstance(model, HalfLine):
            u = 1.0 - rng.random(n)
            u = np.minimum(u, 1.0 - 2.0 ** -53)
            out = model.x0 ** 2 / (4.0 * model.K_alpha * erfc_inv(u) ** 2)
        else:
            tab = table if table is not None else diffusive_table(model)
            out = tab.sample(rng, n)
    else:
        raise DomainError(f"unknown method {method!r}")
    out = np.asarray(out, dtype=float)
    return float(out[0]) if size is None else out


def sample_subdiffusive_fpt(model, alpha, rng, size=None, **kw):
    """Draw ``tau = sigma**(1/alpha) V`` with ``V = U_alpha(1)`` independent of ``sigma``.

    Keyword arguments go to :func:`sample_diffusive_fpt`.  For ``alpha = 1``
    this returns ``sigma`` itself.
    """
    alpha = check_alpha(alpha)
    sigma = sample_diffusive_fpt(model, rng, size, **kw)
    if alpha == 1.0:
        return sigma
    v = sample_stable_positive(alpha, rng, size)
    return sigma ** (1.0 / alpha) * v


def simulate_subdiffusive_path(cfg, alpha, t_grid, rng, n_paths=1, x0=0.0, ds=None,
                               chunk=20_000):
    """Positions ``X_alpha(t) = X_1(S_alpha(t))`` on ``t_grid`` for many paths.

    ``X_1`` follows ``cfg`` by Euler-Maruyama on the internal grid
    ``0, ds, 2 ds, ...`` and ``U_alpha`` is built on the same grid; ``S_alpha(t)``
    is the first grid time with ``U > t``.  Paths are streamed, so memory is
    ``O(n_paths * len(t_grid))``.  ``X_alpha(0) = x0``.

    Returns
    -------
    ndarray of shape (n_paths, len(t_grid))
    """
    alpha = check_alpha(alpha)
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or np.any(np.diff(t) < 0) or np.any(t < 0):
        raise DomainError("t_grid must be a sorted 1-d array of non-negative times")
    if ds is None:
        ds = min(cfg.step, default_path_step(alpha, float(t[-1]), n_paths))
    if not ds > 0:
        raise DomainError("ds must be positive")
    out = np.empty((n_paths, t.size))
    for start in range(0, n_paths, chunk):
        stop = min(n_paths, start + chunk)
        out[start:stop] = _stream_paths(cfg, alpha, t, rng, stop - start, x0, ds)
    return out


def _stream_paths(cfg, alpha, t, rng, n, x0, ds):
    out = np.empty((n, t.size))
    zero = t == 0.0
    out[:, zero] = x0
    x = np.full(n, float(x0))
    u = np.zeros(n)
    active = np.arange(n)
    scale = ds ** (1.0 / alpha)
    sd = math.sqrt(2.0 * cfg.K_alpha * ds)
    t_max = float(t[-1])
    first = int(np.searchsorted(t, 0.0, side="right"))
    while active.size:
        xa = x[active]
        xn = xa + cfg.drift(xa) / cfg.eta_alpha * ds + sd * cfg.sigma(xa) * rng.standard_normal(active.size)
        if alpha == 1.0:
            un = u[active] + ds
        else:
            un = u[active] + scale * sample_stable_positive(alpha, rng, active.size)
        # targets with U(s) <= t < U(s + ds) get S(t) = s + ds
        lo = np.maximum(np.searchsorted(t, u[active], side="left"), first)
        hi = np.searchsorted(t, un, side="left")
        cnt = np.maximum(hi - lo, 0)
        if cnt.any():
            sel = cnt > 0
            rows = np.repeat(active[sel], cnt[sel])
            offs = np.arange(int(cnt.sum())) - np.repeat(np.cumsum(cnt[sel]) - cnt[sel], cnt[sel])
            cols = np.repeat(lo[sel], cnt[sel]) + offs
            out[rows, cols] = np.repeat(xn[sel], cnt[sel])
        x[active] = xn
        u[active] = un
        active = active[un <= t_max]
    return out


# ---------------------------------------------------------------------------
# Plain-text serialization
# ---------------------------------------------------------------------------

def model_to_block(model):
    """Render a model as ``[model]`` block lines of ``key = value``."""
    lines = ["[model]", f"type = {type(model).__name__}"]
    for f in fields(model):
        val = getattr(model, f.name)
        if val is None:
            continue
        lines.append(f"{f.name} = {val!r}")
    return "\n".join(lines) + "\n"


def model_from_block(entries):
    """Build a model from a mapping of string keys to string values.

    Raises
    ------
    DomainError
        On a missing or unknown type, unknown keys, or unparsable numbers.
    """
    entries = dict(entries)
    kind = entries.pop("type", None)
    if kind not in MODEL_TYPES:
        raise DomainError(f"unknown model type {kind!r}; expected one of {sorted(MODEL_TYPES)}")
    cls = MODEL_TYPES[kind]
    names = {f.name for f in fields(cls)}
    unknown = set(entries) - names
    if unknown:
        raise DomainError(f"unknown keys for {kind}: {sorted(unknown)}")
    kwargs = {}
    for k, v in entries.items():
        try:
            kwargs[k] = float(v)
        except ValueError:
            raise DomainError(f"{kind}.{k}: cannot parse {v!r} as a number") from None
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise DomainError(f"{kind}: {exc}") from None
