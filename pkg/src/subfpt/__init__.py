"""Extreme first passage times of subdiffusion.

Subdiffusive first passage times are obtained by subordinating a diffusive
first passage time to an inverse stable subordinator.  The package evaluates
their laws by quadrature, samples them, lifts short-time asymptotics from
the diffusive to the subdiffusive clock, and compares Gumbel-type
approximations of the fastest of ``N`` searchers against exact values.
"""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    DivergenceWarning,
    DomainError,
    SimulationBudgetError,
    UnsupportedModelError,
)
from .special_functions import Accuracy, DEFAULT_ACCURACY
from .stable import (
    StableTailConstants,
    SubordinatorPath,
    invert_subordinator,
    q_density,
    sample_stable_positive,
    sample_subordinator_path,
    stable_cdf,
    stable_density,
    stable_tail_constants,
)
from .models import (
    DriftInterval,
    GenericShortTime,
    HalfLine,
    NarrowEscapeSphere,
    PartialAbsorb,
    SdeConfig,
    ShortTimeDiffusive,
    UniformInterval,
    cdf_diffusive,
    cdf_halfline_closed_form,
    cdf_sf_subdiffusive,
    cdf_subdiffusive,
    diffusive_table,
    diffusive_tail_index,
    sample_diffusive_fpt,
    sample_subdiffusive_fpt,
    short_time_constants,
    simulate_subdiffusive_path,
    survival_diffusive,
    survival_halfline_closed_form,
    subdiffusive_table,
    survival_subdiffusive,
)
from .asymptotics import (
    GumbelRescaling,
    ShortTimeSub,
    finiteness_threshold,
    gumbel_density,
    gumbel_rescaling,
    gumbel_survival,
    leading_moment,
    lift_short_time,
    moment_expansion,
    weibull_uniform_limit,
    xk_density,
)
from .extreme import (
    OrderStatSample,
    mc_order_statistics,
    mean_fastest_quadrature,
    mean_order_statistic_quadrature,
    relative_error_curve,
    rescaled_density,
    variance_and_cv,
)
