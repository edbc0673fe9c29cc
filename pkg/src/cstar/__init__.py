"""Workbench for presentations of C*-algebras over R and C."""

from .errors import (
    InconclusiveError,
    ParseError,
    ResourceError,
    WorkbenchError,
)
from .scalars import Dyadic, GaussianRational, Rational, RationalQuaternion, parse_scalar
from .matrep import Matrix, Representation, op_norm, self_adjoint_spectrum
from .starpoly import Relation, StarPolynomial, evaluate, parse_poly
from .presentation import (
    Budget,
    NormBracket,
    Presentation,
    ball_intersects_kernel,
    builtin_presentation,
    closed_ball_misses_kernel,
    norm_bracket,
    norm_upper_stream,
    parse_presentation,
)
from .abelian import FiniteMetricSpace, UnitInterval, c0_norm
from .groupalg import (
    builtin_group,
    parse_element,
    reduced_norm_lower,
    universal_norm_lower_1d,
    universal_norm_upper,
    word_identity_gap,
)
from .fdstruct import (
    SpannedAlgebra,
    complexify,
    construct_isomorphism,
    decompose,
    finite_spectrum,
    minimal_projections,
    span_closure,
)

__version__ = "0.1.0"
