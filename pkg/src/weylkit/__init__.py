"""Weyl geometry on coordinate charts: Weyl connections, conformal products,
Einstein-Weyl diagnostics, dimension-4 Hermitian structures and a Toda grid solver."""

from .expr import DomainError, Expr, ParseError, parse
from .fields import Chart, ComplexPoly2, re_holomorphic, sample_points
from .tensor_core import (
    DimensionError, KFormValue, MetricValue, TensorValue, hodge, inner, interior, musical,
    sd_asd_split, volume_form, wedge,
)
from .weyl import (
    KFormField, WeylChart, covderiv_weightless_form, faraday, gauge_transform, levi_civita_christoffels,
    metric_defect, minimal_lee_form, pair_symmetry_defect, weyl_christoffels, weyl_curvature, weyl_ricci,
)
from .product import (
    ProductWeylChart, build_product, mixed_faraday_check, ricci_decomposition_defect, toda_product,
    weightless_volume_form,
)
from .einstein_weyl import (
    biharmonic_defect, einstein_weyl_defect, toda_residual, weyl_scalar_curvature,
)
from .hermitian import (
    AlmostComplexField, curvature_operator, factor_complex_structures, holonomy_image_rank,
    hyperhermitian_j_from_H, lck_lee_form, nijenhuis,
)
from .toda import GridField, GridSpec, TodaProblem, toda_solve

__version__ = "0.1.0"
