"""Isospectral matrix flows dX/dt = [phi(X), X] and their diagnostics."""
from .errors import (
    CapabilityError, ConfigError, CoverageError, DimensionError, DomainError, IntegrationError,
    NormflowError, ShapeError, StiffnessError,
)
from .flowengine import (
    FlowTrajectory, PDSplit, TriangularState, aluthge_limit_error, aluthge_transform,
    integrate_decomposed, integrate_direct, split_phi, vector_field,
)
from .integrator import StepControl
from .matcore import (
    divided_difference, hermitian_apply, hermite_interp_poly, matrix_abs, polar_decompose,
    schur_triangularize,
)
from .philib import PhiPair, apply_phi, builtin_pair, validate_conditions

__version__ = "0.1.0"
