"""Joint moments of occupation times on the legs of Bessel and Brownian spiders."""

from .algebra import NonUnitError, NuPolynomial, TruncatedSeries, series_binomial
from .combinatorics import bessel_number, binomial, rising_binomial_poly, stirling1, stirling2
from .mgf import (
    MgfQuery,
    mgf_bessel_closed,
    mgf_general_quadrature,
    mgf_series_moments,
    mgf_series_polynomials,
)
from .moments import (
    ClosedFormD,
    MissingDFactorError,
    NumericD,
    PaperLiteralError,
    TableD,
    brownian_joint_moment,
    joint_moment_closed,
    joint_moment_poly,
    joint_moment_recursive,
    laplace_invert,
    laplace_joint_moment,
    laplace_to_moment,
    single_moment_closed,
)
from .simulator import (
    MomentEstimate,
    OccupationSample,
    SimConfig,
    besq_step,
    estimate_joint_moment,
    estimate_joint_moments,
    estimate_mgf,
    simulate_path,
)
from .spider import (
    BesselLaw,
    BesselOrder,
    MultiIndex,
    QuadratureError,
    SpiderConfig,
    SpiderConfigError,
    bessel_k,
    c_normalized,
    d_factor_closed,
    d_factor_numeric,
    phi_normalized,
    sector_weights,
    uniform_angle_cdf,
)

__version__ = "0.1.0"
