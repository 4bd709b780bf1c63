"""How fast is the fastest of N subdiffusive searchers?

Reproduces the data behind the relative-error and rescaled-density panels:
the exact mean E[T_N] from quadrature against three asymptotic formulas,
then the density of (T_N - b_N)/a_N against the Gumbel limit e^(x - e^x).

Run with ``python demos/fastest_of_many.py`` (about half a minute).
"""

import numpy as np

from subfpt import (
    HalfLine,
    cdf_halfline_closed_form,
    gumbel_density,
    gumbel_rescaling,
    lift_short_time,
    relative_error_curve,
    rescaled_density,
    short_time_constants,
    survival_halfline_closed_form,
)

model = HalfLine(x0=1.0, K_alpha=1.0)
sub = lift_short_time(0.5, short_time_constants(model))
print(f"P(tau <= t) ~ {sub.A:.4f} t^{sub.p:.4f} exp(-{sub.C:.4f} / t^{sub.beta:.4f})")

grid = [10 ** j for j in range(2, 11)]
reports = {r.approx_name: r for r in relative_error_curve(model, 0.5, grid)}
print("\n       N        E[T_N]    leading   lambert    loglog")
for i, N in enumerate(grid):
    e = reports["leading"].exact[i]
    errs = [reports[k].relative_errors[i] for k in ("leading", "lambert", "loglog")]
    print(f"{N:8.0e}  {e:.6e}  " + "  ".join(f"{v:8.4f}" for v in errs))

sf = lambda t: float(survival_halfline_closed_form(t))
cdf = lambda t: float(cdf_halfline_closed_form(t))
x = np.linspace(-6.0, 3.0, 181)
print("\n       N   sup |density - Gumbel|")
for N in (100, 1000, 100_000):
    d = rescaled_density(sf, N, gumbel_rescaling(N, sub), x, cdf=cdf)
    print(f"{N:8d}   {np.max(np.abs(d - gumbel_density(x))):.4f}")
print("\nConvergence is real but slow: the distance shrinks roughly like 1/ln N.")
