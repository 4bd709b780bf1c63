"""Mean squared displacement of a subordinated Brownian path.

X_alpha(t) = X_1(S_alpha(t)) with S_alpha the inverse stable subordinator.
For free motion E[X_alpha(t)**2] = 2 K t**alpha / Gamma(1 + alpha).

Run with ``python demos/msd.py`` (about half a minute).
"""

import math

import numpy as np

from subfpt import SdeConfig, simulate_subdiffusive_path

alpha, K = 0.5, 1.0
t = np.array([0.25, 0.5, 1.0, 2.0])
x = simulate_subdiffusive_path(SdeConfig.pure_diffusion(K, step=1e-2), alpha, t,
                               np.random.default_rng(3), n_paths=50_000)
sq = x * x
theory = 2 * K * t ** alpha / math.gamma(1 + alpha)
print("    t     MSD (MC)    theory    ratio")
for i, ti in enumerate(t):
    se = sq[:, i].std() / math.sqrt(sq.shape[0])
    print(f"{ti:5.2f}   {sq[:, i].mean():.4f}     {theory[i]:.4f}   {sq[:, i].mean() / theory[i]:.4f} +- {se / theory[i]:.4f}")
