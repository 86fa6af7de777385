"""Numerical toolkit for spacelike hypersurfaces of the light-cone.

The light-cone is the set of null vectors of Minkowski space R^{n+2}_1.
Charts ``p: D -> light-cone`` come with a dual map ``q``, a shape operator,
curvatures, volume variations and the ruled null hypersurface
``(t, x) -> p(x) + t q(x)``, each checked against an independent oracle.
"""

from __future__ import annotations

from .chart import ImmersionChart, Jet2, builtin, chart_from_config, dual_chart, eval_jet2, validate_spacelike
from .config import DEFAULT_TOLERANCES, RunConfig, Tolerances
from .errors import (
    ConfigError,
    DegenerateTangentError,
    DimensionError,
    DomainError,
    DualDegenerateError,
    DualUndefinedError,
    FDStencilError,
    InversionError,
    LightconeError,
    SPrecondError,
    SpacelikeViolation,
    SpecError,
    StencilRangeError,
    TubularRangeWarning,
)
from .frame import (
    PointFrame,
    build_frame,
    dual_derivative,
    dual_map,
    intrinsic_oracle,
    mean_curvature_from_jets,
    second_fundamental_form,
)
from .functional import (
    VariationReport,
    VariationSpec,
    admissible_lift,
    fd_derivative,
    first_variation_admissible,
    first_variation_general,
    general_variation,
    make_characteristic_variation,
    second_variation_characteristic,
    second_variation_general,
    variation_report,
    volume,
)
from .lorentz_core import completion_vector, inner, normal_plane
from .nullspace import (
    NullVariation,
    convert_null_variation,
    embed_base,
    null_metric,
    ruled_map,
    volume_G,
    volume_equality_check,
)
from .quadrature import QuadratureGrid, build_grid, bump

__version__ = "0.1.0"
