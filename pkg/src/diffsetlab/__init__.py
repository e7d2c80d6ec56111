"""Desk-scale laboratory for polynomial configurations in difference sets."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    AnisoBox,
    GridSpec,
    LabConstants,
    PointSet,
    PolynomialFamily,
    monomial_point,
    read_pointset,
    write_pointset,
)
from .diffset import (  # noqa: E402
    count_monomial_differences,
    greedy_free_set,
    has_polynomial_configuration,
    max_free_set_exact,
)
from .increment import dichotomy, iterate  # noqa: E402
from .lifting import build_lifted_set, sumset_reduce  # noqa: E402

__all__ = [
    "AnisoBox", "GridSpec", "LabConstants", "PointSet", "PolynomialFamily", "monomial_point",
    "read_pointset", "write_pointset", "count_monomial_differences", "greedy_free_set",
    "has_polynomial_configuration", "max_free_set_exact", "dichotomy", "iterate",
    "build_lifted_set", "sumset_reduce",
]
