"""Shot-noise fields driven by Poisson and determinantal point processes.

Samplers, limit laws (Gaussian and totally skewed stable), the exact Poisson
pre-limit Laplace transform and a Fredholm-determinant oracle for the DPP
case, plus a harness that checks Monte Carlo convergence against them.
"""

from ._accel import USE_NUMBA, backend_name
from .amplitudes import INFINITE, AmplitudeLaw, Deterministic, Exponential, Pareto, law_from_dict
from .fredholm import (DiscretizedOperator, FredholmError, NystromGrid, build_operator,
                       fredholm_laplace, higher_order_vanishing, nystrom_grid, trace_series)
from .limits import (GaussianLimit, StableLimit, gaussian_cov, gaussian_fdd_laplace,
                     gaussian_limit, overlap, poisson_prelimit_laplace, psi, sample_stable,
                     stable_cf, stable_fdd_laplace, stable_limit, stable_sigma, xi_power_integral)
from .pointproc import (DppModel, PointPattern, SamplerBreakdown, Window, dpp_build,
                        kernel_eval, kernel_l2_integral, pair_correlation, sample_dpp,
                        sample_poisson)
from .shotnoise import (BallIndicator, ExpDecay, FddQuery, GaussBump, ResponseFn,
                        centralize_scale, field_eval, response_eval, xi_eval)

__version__ = "0.1.0"
