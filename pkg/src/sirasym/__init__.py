"""sirasym: stochastic-geometry engine for low-density SIR outage asymptotics.

Monte-Carlo estimation of link success probabilities under Palm-conditioned
Poisson / Matern hard-core / Thomas cluster transmitter processes, the
matching closed-form and semianalytic low-density constants (spatial
contention gamma, scaling exponent kappa), success-probability bounds, and
transmission-capacity curves.
"""

__version__ = "0.1.0"

from .asymptotics import (
    AsymptoticResult,
    csma_A_I,
    fit_gamma_kappa,
    gamma_aloha,
    gamma_aloha_beamforming,
    gamma_aloha_nakagami,
    gamma_csma_rayleigh_closed,
    gamma_kappa_csma,
    kappa_bounds_check,
    noise_taylor,
    partitions,
)
from .capacity import (
    MuSigma,
    TcCurve,
    condition_diagnostics,
    mu_sigma,
    success_prob_bounds,
    tc_asymptotic,
    tc_bounds,
    tc_simulated,
)
from .channel import (
    FadingModel,
    LinkConfig,
    PathLossModel,
    expected_ccdf,
    single_interferer_outage,
)
from .discs import disc_intersection_area, lens_area
from .outage import (
    OutageEstimate,
    Scenario,
    estimate_ps,
    interference_moment_analytic,
    interference_moment_mc,
    truncation_radius,
)
from .patterns import PointPattern, Window, dump_pattern, load_pattern
from .pointproc import (
    ClusterSpec,
    MaternSpec,
    ProductDensityModel,
    RejectionCapExceeded,
    aloha_thin,
    empirical_ripley_k,
    matern_density,
    matern_radius_for_density,
    matern_scaled_product_density,
    palm_scenario_sample,
    sample_matern_hardcore,
    sample_ppp,
    sample_thomas_cluster,
)
