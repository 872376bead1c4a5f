"""Numerical toolkit for the almost Mathieu operator and its periodic approximants."""

from .errors import (
    CapacityZeroError,
    DecompositionFailed,
    DomainError,
    NumericalFailure,
    ProbeFailed,
    RootsFailed,
    SizeError,
    ToolkitError,
    UnsupportedError,
)
from .rational import ContinuedFraction, Rational, cf_expand, convergents, golden_convergents, preset
from .operator import SELF_ADJOINT, AmoParams, Perturbation, TridiagonalOperator, potential, truncation_matrix
from .cocycle import (
    ChambersForm,
    DiscriminantPoly,
    chambers_decompose,
    discriminant_poly,
    lyapunov_finite,
    lyapunov_theta_average,
    monodromy,
)
from .hermitian import (
    BandSet,
    StepMeasure,
    bands_fixed_theta,
    bands_union_theta,
    gap_report,
    ids_estimate,
    ids_measure,
    localization_probe,
    sturm_count,
    sturm_eigenvalues,
)
from .potential import (
    Polyline,
    ScalarField,
    equilibrium_measure,
    level_curves,
    log_potential,
    potential_field,
    robin_capacity,
)
from .nonhermitian import PointCloud, hausdorff_distance, hdelta_cloud, poly_roots

__version__ = "0.1.0"
