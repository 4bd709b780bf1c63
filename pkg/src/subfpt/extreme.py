"""Extreme first passage times: Monte Carlo order statistics and quadrature moments.

Monte Carlo work is split into fixed-size chunks of replications.  Chunk
``i`` draws from ``Philox(SeedSequence(seed, spawn_key=(i,)))``, so results
are bit-identical for any number of worker threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import warnings
from typing import Optional

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln, logsumexp

from .asymptotics import (
    gumbel_rescaling,
    leading_moment,
    lift_short_time,
    moment_expansion,
)
from .errors import ConvergenceError, DivergenceWarning, DomainError
from .models import (
    HalfLine,
    cdf_sf_subdiffusive,
    diffusive_table,
    sample_subdiffusive_fpt,
    short_time_constants,
    subdiffusive_table,
)
from .special_functions import DEFAULT_ACCURACY
from .stable import check_alpha

__all__ = [
    "OrderStatSample",
    "ErrorReport",
    "chunk_rng",
    "mc_order_statistics",
    "mean_fastest_quadrature",
    "mean_order_statistic_quadrature",
    "relative_error_curve",
    "rescaled_density",
    "variance_and_cv",
]

# replications per reproducibility chunk
CHUNK_REPS = 1000
# direct sampling budget (N * reps) before switching to inverse-CDF order statistics
DIRECT_BUDGET = 20_000_000


@dataclass
class OrderStatSample:
    """Replications of ``T_{k,N}``.

    ``joint`` has shape (reps, k) and holds ``T_{1,N} <= ... <= T_{k,N}`` of
    each replication; ``values`` is its last column.
    """

    k: int
    N: int
    values: np.ndarray
    seed: int
    joint: Optional[np.ndarray] = None
    method: str = "direct"

    def __post_init__(self):
        if not (1 <= self.k <= self.N):
            raise DomainError(f"need 1 <= k <= N, got k={self.k}, N={self.N}")
        if np.any(~(self.values > 0)):
            raise DomainError("order statistics must be positive")


@dataclass
class ErrorReport:
    """Relative errors ``|E[T_N] - T_N_approx| / E[T_N]`` along ``N_grid``."""

    N_grid: list
    approx_name: str
    relative_errors: list
    exact: list = field(default_factory=list)
    approx: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.N_grid) != len(self.relative_errors):
            raise DomainError("N_grid and relative_errors must have equal length")
        if any(e < 0 for e in self.relative_errors):
            raise DomainError("relative errors are non-negative")


def chunk_rng(seed, index):
    """Counter-based generator for reproducibility chunk ``index``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _direct_chunk(model, alpha, N, k, n_reps, rng, table):
    out = np.empty((n_reps, k))
    kw = {} if table is None else {"table": table}
    # keep each batch at about a million draws
    per = max(1, 1_000_000 // N)
    done = 0
    while done < n_reps:
        b = min(per, n_reps - done)
        tau = sample_subdiffusive_fpt(model, alpha, rng, b * N, **kw).reshape(b, N)
        if k < N:
            tau = np.partition(tau, k - 1, axis=1)[:, :k]
        out[done : done + b] = np.sort(tau, axis=1)
        done += b
    return out


def _inverse_chunk(N, k, n_reps, rng, table):
    # Renyi: U_(j) = 1 - exp(-G_j), G_j = sum_{i<=j} E_i / (N - i + 1)
    e = rng.standard_exponential((n_reps, k))
    g = np.cumsum(e / (N - np.arange(k)), axis=1)
    log_f = np.log(-np.expm1(-g))
    return table.ppf_from_logs(log_f, -g)


def mc_order_statistics(model, alpha, N, k, reps, seed, method="auto", threads=1,
                        table=None):
    """Monte Carlo replications of the k-th fastest of ``N`` iid FPTs.

    Parameters
    ----------
    method : {"auto", "direct", "inverse_cdf"}
        ``direct`` draws all ``N`` times per replication and selects the
        ``k`` smallest by partition.  ``inverse_cdf`` draws the ``k`` smallest
        uniform order statistics (Renyi representation) and maps them through
        an inverse-CDF table of ``tau`` built from the quadrature law; it is
        exact up to the table tolerance and costs ``O(k)`` per replication.
        ``auto`` uses ``direct`` while ``N * reps`` stays within
        ``DIRECT_BUDGET``.
    threads : int
        Worker threads; results do not depend on it.
    table : InverseCdfTable, optional
        Prebuilt table (of ``tau`` for ``inverse_cdf``, of ``sigma`` for
        ``direct`` on non-HalfLine models).
    """
    alpha = check_alpha(alpha)
    N, k, reps = int(N), int(k), int(reps)
    if not (1 <= k <= N):
        raise DomainError(f"need 1 <= k <= N, got k={k}, N={N}")
    if reps < 1:
        raise DomainError("reps must be at least 1")
    if method == "auto":
        method = "direct" if N * reps <= DIRECT_BUDGET else "inverse_cdf"
    if method == "direct":
        if table is None and not isinstance(model, HalfLine):
            table = diffusive_table(model)
        work = lambda i, n: _direct_chunk(model, alpha, N, k, n, chunk_rng(seed, i), table)
    elif method == "inverse_cdf":
        if table is None:
            f_min = min(1e-16, 1e-3 / (N * reps))
            table = subdiffusive_table(model, alpha, f_min=f_min)
        work = lambda i, n: _inverse_chunk(N, k, n, chunk_rng(seed, i), table)
    else:
        raise DomainError(f"unknown method {method!r}")
    sizes = [min(CHUNK_REPS, reps - s) for s in range(0, reps, CHUNK_REPS)]
    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(len(sizes)), sizes))
    else:
        parts = [work(i, n) for i, n in enumerate(sizes)]
    joint = np.concatenate(parts, axis=0)
    return OrderStatSample(k=k, N=N, values=joint[:, -1].copy(), seed=seed, joint=joint,
                           method=method)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

def _pair_from(survival, cdf):
    if cdf is None:
        def pair(t):
            s = float(survival(t))
            return 1.0 - s, s
    else:
        def pair(t):
            f = float(cdf(t))
            s = float(survival(t)) if f > 0.5 else 1.0 - f
            return f, s
    return pair


def _log_tail_prob(f, s, N, k):
    """log P(T_{k,N} > t) = log sum_{j<k} C(N,j) F^j S^(N-j)."""
    if s <= 0.0:
        return -math.inf
    log_s = math.log(s)
    if f <= 0.0:
        return N * log_s
    log_f = math.log(f)
    j = np.arange(k)
    terms = gammaln(N + 1.0) - gammaln(j + 1.0) - gammaln(N - j + 1.0) + j * log_f + (N - j) * log_s
    return float(logsumexp(terms))


def _tail_exponent(pair, t_ref):
    t1, t2 = t_ref * 1e6, t_ref * 1e9
    s1, s2 = pair(t1)[1], pair(t2)[1]
    if s1 <= 0.0 or s2 <= 0.0:
        return math.inf
    return -(math.log(s2) - math.log(s1)) / (math.log(t2) - math.log(t1))


def mean_order_statistic_quadrature(survival, N, k=1, m=1.0, acc=DEFAULT_ACCURACY, cdf=None,
                                    tail_exponent=None, t_scale=1.0):
    """``E[(T_{k,N})**m] = int_0^inf m t**(m-1) P(T_{k,N} > t) dt`` by adaptive quadrature.

    The bulk is integrated in ``log t`` around the median of ``T_{k,N}``;
    the power-law tail is integrated decade by decade and closed with its
    analytic remainder.  Divergence is flagged with a
    :class:`DivergenceWarning` (and ``inf`` is returned) when the tail
    exponent ``r`` of ``P(tau > t) ~ t**-r`` satisfies ``r (N - k + 1) <= m``.

    Parameters
    ----------
    survival, cdf : callable
        Scalar ``t -> P(tau > t)`` and optionally ``t -> P(tau <= t)``;
        passing ``cdf`` keeps relative accuracy where ``P(tau <= t)`` is tiny.
    tail_exponent : float, optional
        Known ``r``; estimated from the survival at large ``t`` otherwise.
    t_scale : float
        Rough time scale of ``tau`` to start the bracket search.
    """
    if not (isinstance(N, (int, np.integer)) or float(N).is_integer()) or N < 1:
        raise DomainError("N must be a positive integer")
    N, k = int(N), int(k)
    if not (1 <= k <= N):
        raise DomainError("need 1 <= k <= N")
    if not m > 0:
        raise DomainError("m must be positive")
    pair = _pair_from(survival, cdf)
    cache = {}

    def log_tail(t):
        if t not in cache:
            f, s = pair(t)
            cache[t] = _log_tail_prob(f, s, N, k)
        return cache[t]

    r = tail_exponent if tail_exponent is not None else _tail_exponent(pair, t_scale)
    if r * (N - k + 1) <= m:
        warnings.warn(
            f"E[T^{m}] diverges: tail exponent {r:.4g} times {N - k + 1} <= {m}",
            DivergenceWarning,
            stacklevel=2,
        )
        return math.inf

    # median-ish point where P(T > t) = 1/2
    target = -math.log(2.0)
    lo = hi = t_scale
    while log_tail(lo) < target:
        lo /= 10.0
        if lo < 1e-300:
            raise ConvergenceError("could not bracket the bulk of T_{k,N}")
    while log_tail(hi) > target:
        hi *= 10.0
        if hi > 1e300:
            raise ConvergenceError("could not bracket the bulk of T_{k,N}")
    t_mid = math.exp(optimize.brentq(lambda u: log_tail(math.exp(u)) - target,
                                     math.log(lo), math.log(hi), xtol=1e-6))
    # beyond t_far the integrand is below exp(-60) of its bulk
    t_far = t_mid
    while log_tail(t_far) > -60.0:
        t_far *= 2.0
        if t_far > 1e300:
            break
    t_lo = t_mid * 1e-14 ** (1.0 / m)
    epsrel = max(acc.rel_tol, 1e-10)

    def in_log(u):
        t = math.exp(u)
        return m * t ** m * math.exp(log_tail(t))

    with warnings.catch_warnings():
        # QUADPACK flags roundoff once it nears the noise floor of the
        # survival itself; the returned error estimate is checked below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        bulk, err1 = integrate.quad(in_log, math.log(t_lo), math.log(t_far),
                                    points=[math.log(t_mid)], epsabs=0.0, epsrel=epsrel,
                                    limit=500)
    # power-law tail: extend by decades until the integrand is negligible,
    # then close with the analytic remainder of m t^(m-1) c t^(-q)
    q = r * (N - k + 1)
    t_end = t_far
    tail = 0.0
    err2 = 0.0
    for _ in range(400):
        if in_log(math.log(t_end)) <= 1e-15 * bulk or not math.isfinite(q):
            break
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            piece, e = integrate.quad(in_log, math.log(t_end), math.log(t_end) + math.log(10.0),
                                      epsabs=0.0, epsrel=epsrel, limit=200)
        tail += piece
        err2 += e
        t_end *= 10.0
    if math.isfinite(q):
        tail += in_log(math.log(t_end)) / (q - m)
    # below t_lo the survival of T is ~1
    head = t_lo ** m
    total = head + bulk + tail
    if not math.isfinite(total) or err1 > 1e-6 * total:
        raise ConvergenceError(f"moment quadrature did not converge (N={N}, err={err1:.3g})")
    return total


def mean_fastest_quadrature(survival, N, m=1.0, acc=DEFAULT_ACCURACY, cdf=None,
                            tail_exponent=None, t_scale=1.0):
    """``E[(T_N)**m] = int_0^inf m t**(m-1) S(t)**N dt``; see :func:`mean_order_statistic_quadrature`."""
    return mean_order_statistic_quadrature(survival, N, 1, m, acc, cdf, tail_exponent, t_scale)


def _model_callables(model, alpha, acc):
    cache = {}

    def pair(t):
        t = float(t)
        if t not in cache:
            cache[t] = cdf_sf_subdiffusive(model, alpha, t, acc)
        return cache[t]

    return (lambda t: pair(t)[1]), (lambda t: pair(t)[0])


def relative_error_curve(model, alpha, N_grid, approximations=("leading", "lambert", "loglog"),
                         acc=DEFAULT_ACCURACY):
    """Relative errors of asymptotic approximations to ``E[T_N]``.

    ``leading`` is ``(C/ln N)**(1/beta)``; ``lambert`` and ``loglog`` are
    ``b_N - gamma a_N`` with the respective rescaling.  The exact mean comes
    from :func:`mean_fastest_quadrature` on the subordination-quadrature law.
    """
    alpha = check_alpha(alpha)
    sub = lift_short_time(alpha, short_time_constants(model))
    survival, cdf = _model_callables(model, alpha, acc)
    exact = [mean_fastest_quadrature(survival, int(N), 1.0, acc, cdf=cdf, t_scale=sub.C ** (1 / sub.beta))
             for N in N_grid]
    reports = []
    for name in approximations:
        if name == "leading":
            approx = [leading_moment(1, N, 1.0, sub) for N in N_grid]
        elif name in ("lambert", "loglog"):
            approx = [moment_expansion(1, gumbel_rescaling(N, sub, name))["mean"] for N in N_grid]
        else:
            raise DomainError(f"unknown approximation {name!r}")
        errs = [abs(e - a) / e for e, a in zip(exact, approx)]
        reports.append(ErrorReport(list(N_grid), name, errs, list(exact), approx))
    return reports


def rescaled_density(survival, N, r, x_grid, cdf=None, h=1e-3):
    """Density of ``(T_N - b_N)/a_N`` as ``-d/dx S(a_N x + b_N)**N``.

    Central differences with step ``h`` in rescaled units (``a_N h`` in time).
    Points with ``a_N x + b_N - a_N h <= 0`` get density 0.
    """
    pair = _pair_from(survival, cdf)
    x = np.asarray(x_grid, dtype=float)

    def log_tail(t):
        if t <= 0.0:
            return 0.0
        f, s = pair(t)
        return _log_tail_prob(f, s, int(N), 1)

    out = np.empty_like(x)
    for i, xv in enumerate(x.ravel()):
        t_plus = r.a_N * (xv + h) + r.b_N
        t_minus = r.a_N * (xv - h) + r.b_N
        if t_minus <= 0.0:
            out.flat[i] = 0.0
            continue
        out.flat[i] = (math.exp(log_tail(t_minus)) - math.exp(log_tail(t_plus))) / (2.0 * h)
    return out


def variance_and_cv(sample):
    """Unbiased variance and coefficient of variation of the replications."""
    v = np.asarray(sample.values, dtype=float)
    if v.size < 2:
        raise DomainError("need at least two replications")
    var = float(np.var(v, ddof=1))
    mean = float(np.mean(v))
    return {"variance": var, "cv": math.sqrt(var) / mean}
