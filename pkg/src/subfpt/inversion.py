"""Adaptive inverse-CDF tables for positive random variables.

A table stores nodes of ``y = log F(t) - log S(t)`` (the logit of the CDF)
against ``log t`` and interpolates ``log t`` as a cubic spline in ``y``.
Working in logit space keeps relative accuracy in both tails, which is what
order statistics of large samples probe.
"""

import math

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConvergenceError, DomainError

__all__ = ["InverseCdfTable"]


def _logit_from_pair(f, s):
    if f <= 0.0 or s <= 0.0:
        return None
    return math.log(f) - math.log(s)


class InverseCdfTable:
    """Monotone interpolant of ``t = F^{-1}(u)`` for a continuous law on (0, inf).

    Parameters
    ----------
    cdf_sf : callable
        ``t -> (F(t), S(t))`` for scalar ``t > 0``; both values should carry
        relative accuracy, so compute the smaller one directly.
    t_start : float
        A point in the bulk of the law, used to start the bracket search.
    f_min, s_min : float
        The table covers ``f_min <= F <= 1 - s_min``.  Outside that range the
        end segments are extrapolated linearly in (logit, log t).
    tol : float
        Target error in ``log t`` at interval midpoints.
    max_nodes : int
        Refinement budget.
    """

    def __init__(self, cdf_sf, t_start, f_min=1e-16, s_min=1e-16, tol=1e-8,
                 max_nodes=6000, per_decade=4):
        if not t_start > 0:
            raise DomainError("t_start must be positive")
        self._cdf_sf = cdf_sf
        t_lo = t_start
        for _ in range(700):
            f, _s = cdf_sf(t_lo)
            if f <= f_min:
                break
            t_lo /= 10.0
        t_hi = t_start
        for _ in range(700):
            _f, s = cdf_sf(t_hi)
            if s <= s_min:
                break
            t_hi *= 10.0
        n0 = max(16, int(per_decade * math.log10(t_hi / t_lo)) + 1)
        logs = np.linspace(math.log(t_lo), math.log(t_hi), n0)
        nodes = {}
        for lt in logs:
            y = _logit_from_pair(*cdf_sf(math.exp(lt)))
            if y is not None:
                nodes[lt] = y

        # refine until the inverse interpolant predicts each midpoint to tol;
        # only freshly split intervals are re-examined
        lt0, _ = self._clean(nodes)
        pending = list(zip(lt0[:-1], lt0[1:]))
        while pending:
            lt, y = self._clean(nodes)
            if lt.size < 4:
                raise ConvergenceError("inverse-CDF table has too few usable nodes")
            inv = CubicSpline(y, lt)
            nxt = []
            for a, b in pending:
                m = 0.5 * (a + b)
                ym = _logit_from_pair(*cdf_sf(math.exp(m)))
                if ym is None:
                    continue
                err = abs(float(inv(ym)) - m)
                nodes[m] = ym
                if err > tol * max(1.0, abs(m)):
                    nxt.extend([(a, m), (m, b)])
            if len(nodes) > max_nodes:
                raise ConvergenceError(
                    f"inverse-CDF table did not reach tol={tol} within {max_nodes} nodes"
                )
            pending = nxt
        lt, y = self._clean(nodes)
        self.log_t = lt
        self.logit = y
        self._inv = CubicSpline(y, lt)
        self._fwd = CubicSpline(lt, y)

    @staticmethod
    def _clean(nodes):
        lt = np.array(sorted(nodes))
        y = np.array([nodes[v] for v in lt])
        keep = np.concatenate(([True], np.diff(y) > 0))
        # drop any later node that is not above the running maximum
        run = np.maximum.accumulate(y)
        keep &= y >= run
        return lt[keep], y[keep]

    @property
    def size(self):
        return self.log_t.size

    def ppf(self, u):
        """Quantile function, vectorized over ``u`` in (0, 1)."""
        u = np.asarray(u, dtype=float)
        y = np.log(u) - np.log1p(-u)
        return np.exp(self._inv(y))

    def ppf_from_logs(self, log_f, log_s):
        """Quantile at the level given by ``log F`` and ``log S`` separately.

        Useful when ``F`` is far below machine epsilon relative to 1.
        """
        y = np.asarray(log_f, dtype=float) - np.asarray(log_s, dtype=float)
        return np.exp(self._inv(y))

    def cdf(self, t):
        """Interpolated CDF, vectorized over ``t > 0``."""
        t = np.asarray(t, dtype=float)
        y = self._fwd(np.log(t))
        return 1.0 / (1.0 + np.exp(-y))

    def sample(self, rng, size):
        """Inverse-transform draws."""
        u = 1.0 - rng.random(size)  # (0, 1]
        u = np.minimum(u, 1.0 - 2.0 ** -53)
        return self.ppf(u)
