"""Jacobians and measure factorizations of singular and indefinite matrix decompositions."""
from .decomp import (
    CholeskyParts, SpectralParts, SvdParts, cholesky, moore_penrose,
    spectral_nonsingular, svd_nonsingular,
)
from .errors import DomainError, InputError, OracleError, VolformError
from .formulas import JacobianFactor, PinvIndefResult, jacobian_for
from .spectra import (
    ClusterSpec, MatrixClass, Spectrum, TolerancePolicy,
    classify_rect, classify_symmetric, cluster_values,
)

__version__ = "0.1.0"
