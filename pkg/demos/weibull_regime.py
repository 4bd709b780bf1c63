"""Searchers that start anywhere: the Weibull regime.

When initial positions are uniform on the interval (-L, L), some searchers start
next to the target and the fastest time falls like N**(-2/alpha) rather
than logarithmically.  Monte Carlo via uniform order statistics mapped
through the inverse CDF of tau.

Run with ``python demos/weibull_regime.py``.
"""

import numpy as np

from subfpt import UniformInterval, mc_order_statistics, subdiffusive_table, weibull_uniform_limit

alpha = 0.5
model = UniformInterval(L=1.0, K_alpha=1.0)
table = subdiffusive_table(model, alpha, f_min=1e-16)

grid = [100, 1000, 10_000]
means = []
print("      N      MC E[T_N]     Weibull mean")
for N in grid:
    s = mc_order_statistics(model, alpha, N, 1, 10_000, seed=N, method="inverse_cdf", table=table)
    means.append(s.values.mean())
    # (-L, L) is the one-dimensional ball of radius L
    w = weibull_uniform_limit(alpha, 1, 1.0, 1.0, N)
    print(f"{N:7d}   {means[-1]:.4e}    {w['mean']:.4e}")
slope = np.polyfit(np.log(grid), np.log(means), 1)[0]
print(f"\nslope of log E[T_N] vs log N: {slope:.3f} (theory {-2 / alpha:.0f})")
print("T_N is close to Weibull with shape alpha/2 = 1/4, so its coefficient of variation")
print("is about 8 and 1e4 replications leave roughly 8% noise in each mean.")
