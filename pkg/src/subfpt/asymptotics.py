"""Closed-form asymptotics: short-time lifts, Gumbel rescalings, moment expansions.

Units: :class:`ShortTimeDiffusive` lives in internal time (``C1`` has units
time**alpha); :class:`ShortTimeSub` lives in physical time.  The lift
functions are the only place the two clocks meet.

Gumbel convention: the limit law of rescaled minima is the minimum-type
Gumbel with ``P(X > x) = exp(-exp(x))``, mean ``-gamma`` and density
``exp(x - e^x)``.
"""

from dataclasses import dataclass
import math
from typing import Optional

import numpy as np

from .errors import DomainError
from .models import ShortTimeDiffusive
from .special_functions import (
    EULER_GAMMA,
    digamma,
    gamma,
    harmonic,
    lambert_w0,
    lambert_w0_of_log,
    lambert_w_m1,
    log_gamma,
    trigamma,
)
from .stable import check_alpha, stable_tail_constants

__all__ = [
    "ShortTimeDiffusive",
    "ShortTimeSub",
    "GumbelRescaling",
    "lift_log",
    "lift_full",
    "lift_short_time",
    "characteristic_timescale",
    "leading_moment",
    "gumbel_rescaling",
    "gumbel_survival",
    "gumbel_density",
    "xk_density",
    "moment_expansion",
    "varadhan_lift",
    "weibull_uniform_limit",
    "finiteness_threshold",
]


@dataclass(frozen=True)
class ShortTimeSub:
    """``P(tau <= t) ~ A t**p exp(-C / t**beta)`` as t -> 0+ (physical time)."""

    A: float
    p: float
    C: float
    beta: float

    def __post_init__(self):
        for name in ("A", "C"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive, got {v}")
        if not (0.0 < self.beta <= 1.0):
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")

    def cdf_asymptote(self, t):
        t = np.asarray(t, dtype=float)
        return self.A * t ** self.p * np.exp(-self.C / t ** self.beta)


@dataclass(frozen=True)
class GumbelRescaling:
    """Centering ``b_N`` and scale ``a_N`` with ``(T_N - b_N)/a_N -> Gumbel``.

    ``W`` holds the Lambert-W value for the ``lambert`` scheme with ``p != 0``.
    """

    a_N: float
    b_N: float
    scheme: str
    N: float
    W: Optional[float] = None

    def __post_init__(self):
        if not (self.a_N > 0 and self.b_N > 0):
            raise DomainError(f"rescaling must be positive, got a_N={self.a_N}, b_N={self.b_N}")


def lift_log(alpha, theta, kappa, C1):
    """Logarithmic short-time lift: returns ``(beta, C)``.

    ``beta = alpha theta / (alpha + theta)`` and
    ``C = C1 (kappa theta / (C1 alpha))**(alpha/(alpha+theta)) (alpha + theta)/theta``.
    """
    for name, v in (("alpha", alpha), ("theta", theta), ("kappa", kappa), ("C1", C1)):
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")
    s = alpha + theta
    beta = alpha * theta / s
    C = C1 * (kappa * theta / (C1 * alpha)) ** (alpha / s) * (s / theta)
    return beta, C


def lift_full(alpha, theta, kappa, B, xi, A1, p1, C1):
    """Full short-time lift of ``A1 s**p1 exp(-C1/s)`` through a kernel with
    ``l(z) ~ B z**-xi exp(-kappa / z**theta)``.

    Returns
    -------
    ShortTimeSub
        ``A = A1 B sqrt(2 pi / (C1 alpha (alpha + theta)))
        (alpha C1 / (kappa theta))**((alpha + 2 alpha p1 + 2 xi - 2) / (2 (alpha + theta)))``
        and ``p = alpha (2 p1 theta - 2 xi + theta + 2) / (2 (alpha + theta))``.
    """
    beta, C = lift_log(alpha, theta, kappa, C1)
    if not (A1 > 0 and B > 0):
        raise DomainError("A1 and B must be positive")
    s = alpha + theta
    A = (
        A1
        * B
        * math.sqrt(2.0 * math.pi / (C1 * alpha * s))
        * (alpha * C1 / (kappa * theta)) ** ((alpha + 2.0 * alpha * p1 + 2.0 * xi - 2.0) / (2.0 * s))
    )
    p = alpha * (2.0 * p1 * theta - 2.0 * xi + theta + 2.0) / (2.0 * s)
    return ShortTimeSub(A=A, p=p, C=C, beta=beta)


def lift_short_time(alpha, st):
    """Short-time law of ``tau = U_alpha(sigma)`` from that of ``sigma``.

    ``beta = alpha/(2 - alpha)``, ``C = (2 - alpha) alpha**(alpha/(2-alpha)) C1**(1/(2-alpha))``,
    ``p = beta p1`` and
    ``A = A1 (alpha**(-alpha/(2-alpha)) C1**((1-alpha)/(2-alpha)))**p1 / sqrt(alpha (2 - alpha))``.
    ``alpha = 1`` returns the input unchanged with ``beta = 1``.
    """
    alpha = check_alpha(alpha)
    if alpha == 1.0:
        return ShortTimeSub(A=st.A1, p=st.p1, C=st.C1, beta=1.0)
    two_m = 2.0 - alpha
    beta = alpha / two_m
    C = two_m * alpha ** (alpha / two_m) * st.C1 ** (1.0 / two_m)
    A = st.A1 * (alpha ** (-alpha / two_m) * st.C1 ** ((1.0 - alpha) / two_m)) ** st.p1
    A /= math.sqrt(alpha * two_m)
    return ShortTimeSub(A=A, p=beta * st.p1, C=C, beta=beta)


def varadhan_lift(alpha, C1_density):
    """(beta, C) for ``lim t**beta ln P(tau <= t) = -C`` given ``C1 = L**2/(4 K_alpha)``."""
    alpha = check_alpha(alpha)
    if not C1_density > 0:
        raise DomainError("C1_density must be positive")
    if alpha == 1.0:
        return 1.0, float(C1_density)
    c = stable_tail_constants(alpha)
    return lift_log(alpha, c.theta, c.kappa, C1_density)


def characteristic_timescale(alpha, L, K_alpha):
    """``t_alpha = (alpha**alpha (2-alpha)**(2-alpha) L**2/(4 K_alpha))**(1/alpha)``."""
    alpha = check_alpha(alpha)
    if not (L > 0 and K_alpha > 0):
        raise DomainError("L and K_alpha must be positive")
    return (alpha ** alpha * (2.0 - alpha) ** (2.0 - alpha) * L * L / (4.0 * K_alpha)) ** (1.0 / alpha)


def leading_moment(k, N, m, sub):
    """Leading order ``E[T_{k,N}**m] ~ (C / ln N)**(m / beta)``; independent of ``k``, ``A``, ``p``."""
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise DomainError("k must be a positive integer")
    if not N >= 2:
        raise DomainError("N must be at least 2")
    if not m > 0:
        raise DomainError("m must be positive")
    return (sub.C / math.log(N)) ** (m / sub.beta)


def gumbel_rescaling(N, sub, scheme="lambert"):
    """Rescaling ``(a_N, b_N)`` of the fastest FPT.

    ``lambert``: for ``p = 0``, ``b_N = (C/ln(AN))**(1/beta)`` and
    ``a_N = b_N/(beta ln(AN))``; otherwise ``b_N = (C beta/(p W))**(1/beta)``
    and ``a_N = b_N/(p (1 + W))`` with ``W = W_0`` (``p > 0``) or ``W_{-1}``
    (``p < 0``) of ``(C beta/p)(AN)**(beta/p)``.

    ``loglog``: ``a_N = C**(1/beta)/(beta (ln N)**(1 + 1/beta))`` and
    ``b_N = (C/ln N + C p ln ln N/(beta (ln N)**2) - C ln(A C**(p/beta))/(ln N)**2)**(1/beta)``.

    Raises
    ------
    DomainError
        When ``N`` is too small for the branch or the loglog base is not positive.
    """
    if not N >= 2:
        raise DomainError(f"N must be at least 2, got N={N}")
    A, p, C, beta = sub.A, sub.p, sub.C, sub.beta
    if scheme == "lambert":
        log_an = math.log(A) + math.log(N)
        if p == 0.0:
            if log_an <= 0:
                raise DomainError(f"ln(A N) must be positive, got N={N}")
            b = (C / log_an) ** (1.0 / beta)
            return GumbelRescaling(a_N=b / (beta * log_an), b_N=b, scheme=scheme, N=N)
        log_arg_mag = math.log(C * beta / abs(p)) + (beta / p) * log_an
        if p > 0:
            if log_arg_mag > 700.0:
                W = lambert_w0_of_log(log_arg_mag)
            else:
                W = lambert_w0(math.exp(log_arg_mag))
        else:
            arg = -math.exp(log_arg_mag)
            if arg < -math.exp(-1.0):
                raise DomainError(
                    f"Lambert W_-1 argument {arg:.6g} < -1/e at N={N}; N too small for p < 0"
                )
            W = lambert_w_m1(arg)
        b = (C * beta / (p * W)) ** (1.0 / beta)
        return GumbelRescaling(a_N=b / (p * (1.0 + W)), b_N=b, scheme=scheme, N=N, W=W)
    if scheme == "loglog":
        ln = math.log(N)
        lnln = math.log(ln)
        base = C / ln + C * p * lnln / (beta * ln * ln) - C * math.log(A * C ** (p / beta)) / (ln * ln)
        if not base > 0:
            raise DomainError(f"loglog base {base:.6g} is not positive at N={N}")
        a = C ** (1.0 / beta) / (beta * ln ** (1.0 + 1.0 / beta))
        return GumbelRescaling(a_N=a, b_N=base ** (1.0 / beta), scheme=scheme, N=N)
    raise DomainError(f"unknown scheme {scheme!r}; expected 'lambert' or 'loglog'")


def gumbel_survival(x):
    """P(X > x) = exp(-exp(x)) for the standard minimum-type Gumbel."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-np.exp(x))
    return float(out) if out.ndim == 0 else out


def gumbel_density(x):
    """exp(x - e^x)."""
    return xk_density(1, x)


def xk_density(k, x):
    """Density ``exp(k x - e^x)/(k-1)!`` of the k-th rescaled order statistic limit."""
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise DomainError("k must be a positive integer")
    x = np.asarray(x, dtype=float)
    out = np.exp(k * x - np.exp(x) - log_gamma(float(k)))
    return float(out) if out.ndim == 0 else out


def moment_expansion(k, r):
    """Higher-order mean and variance of ``T_{k,N}`` from a rescaling.

    Returns ``{"mean": b_N + psi(k) a_N, "variance": psi'(k) a_N**2,
    "gap": H_{k-1} a_N}``; ``gap`` is ``E[T_{k,N}] - E[T_{1,N}]``.
    """
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise DomainError("k must be a positive integer")
    # psi(1) = -gamma exactly; keep the constant for k = 1
    psi = -EULER_GAMMA if k == 1 else digamma(float(k))
    return {
        "mean": r.b_N + psi * r.a_N,
        "variance": trigamma(float(k)) * r.a_N ** 2,
        "gap": harmonic(k - 1) * r.a_N,
    }


def weibull_uniform_limit(alpha, d, L, K_alpha, N):
    """Weibull regime for searchers started uniformly in a d-ball of radius ``L``.

    ``P(tau <= t) ~ A t**(alpha/2)`` with
    ``A = 2 d sqrt(K_alpha) / (alpha Gamma(alpha/2) L)``; the fastest FPT is
    close to Weibull with scale ``(A N)**(-2/alpha)`` and shape ``alpha/2``.
    """
    alpha = check_alpha(alpha)
    if not (isinstance(d, (int, np.integer)) and d >= 1):
        raise DomainError("d must be a positive integer")
    if not (L > 0 and K_alpha > 0 and N > 0):
        raise DomainError("L, K_alpha and N must be positive")
    A = 2.0 / (alpha * gamma(alpha / 2.0)) * d / L * math.sqrt(K_alpha)
    scale = (A * N) ** (-2.0 / alpha)
    return {
        "A": A,
        "shape": alpha / 2.0,
        "scale": scale,
        "mean": gamma(1.0 + 2.0 / alpha) * scale,
    }


def finiteness_threshold(alpha, r):
    """Tail exponent ``alpha r/(1+r)`` of ``P(tau > t)`` and the bound ``N_min = (1+r)/(alpha r)``.

    ``r = inf`` (exponential diffusive tail) gives ``(alpha, 1/alpha)``.
    ``E[T_N]`` is finite for ``N > N_min``.
    """
    alpha = check_alpha(alpha)
    if not r > 0:
        raise DomainError("r must be positive")
    if math.isinf(r):
        return {"tail_exponent": alpha, "N_min": 1.0 / alpha}
    return {"tail_exponent": alpha * r / (1.0 + r), "N_min": (1.0 + r) / (alpha * r)}
