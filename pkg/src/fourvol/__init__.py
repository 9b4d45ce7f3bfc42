"""Fourier-Fejer estimation of spot volatility matrices and integrated
volatility functionals from irregular, asynchronous high-frequency data."""

from .errors import (
    ConfigurationError,
    DataError,
    DomainError,
    EstimationError,
    FourvolError,
    InferenceError,
    SamplingError,
    TuningError,
)
from .trigkernels import (
    ObservationGrid,
    ThetaIntegrals,
    cubic_variation,
    dirichlet_kernel,
    fejer_kernel,
    scaled_dirichlet,
    theta_integrals,
)
from .spectrum import (
    SpectrumEstimate,
    StieltjesTransform,
    TickSeries,
    bohr_convolution,
    fourier_stieltjes,
    spectrum_matrix,
)
from .spot import SpotPath, condition_spot, fejer_inversion, spot_at
from .functionals import (
    FunctionalSpec,
    TuningParams,
    eval_functional,
    get_functional,
    plug_in_estimate,
    univariate_plug_in,
)
from .inference import (
    EstimateReport,
    async_bias_estimate,
    avar_estimate,
    confidence_interval,
    shrinkage_target,
    studentize,
)

__version__ = "0.1.0"
