"""Regression coefficient estimation and confidence ellipsoids for
mixtures with varying concentrations.

Public surface re-exported here; see the individual modules for details:

- :mod:`mixreg.model`      sample and parameter containers
- :mod:`mixreg.mixweights` minimax weights for component moments
- :mod:`mixreg.lsfit`      weighted least squares + sandwich covariance
- :mod:`mixreg.likelihood` likelihood, score, empirical information
- :mod:`mixreg.emfit`      pilot estimates and the EM algorithm
- :mod:`mixreg.ellipsoid`  chi-square calibrated confidence ellipsoids
- :mod:`mixreg.simlab`     simulation experiments and coverage harness
"""

from .ellipsoid import (
    Ellipsoid,
    boundary_points,
    chi2_quantile,
    contains,
    info_ellipsoid,
    ls_ellipsoid,
    volume,
)
from .emfit import EmConfig, EmResult, em_fit, em_iterate, em_weights, pilot_estimates
from .errors import (
    DegenerateComponent,
    InvalidParams,
    MixregError,
    SingularCovariance,
    SingularDesign,
    SingularGram,
    SingularHessian,
    SingularInfo,
    UnsupportedDim,
)
from .likelihood import (
    InfoMatrix,
    InfoSubBlock,
    empirical_info,
    hessian,
    info_subblock,
    log_likelihood,
    one_step,
    score,
)
from .lsfit import (
    LsFitResult,
    MomentEstimates,
    asymptotic_covariance,
    ls_estimate,
    ls_fit,
    ls_fit_all,
    moment_estimates,
)
from .mixweights import GramMatrix, WeightVector, gram_matrix, minimax_weights, psd_repair
from .model import (
    ComponentParams,
    MixtureSample,
    ModelDims,
    TauVector,
    flatten,
    unflatten,
    validate_sample,
)
from .simlab import (
    ExperimentConfig,
    McSummary,
    experiment_config,
    gen_concentrations,
    gen_sample,
    run_monte_carlo,
)

__version__ = "0.1.0"
