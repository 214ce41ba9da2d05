"""Submanifolds of step-2 graded groups: degree, blow-ups, measure scaling."""

__version__ = "0.1.0"

from .group import GradedAlgebra, GroupPoint, builtin_group, dilate, inverse, multiply  # noqa: E402
from .metric import HomogeneousDistance, calibrate  # noqa: E402
from .submanifold import ImplicitSubmanifold, pointwise_degree  # noqa: E402
from .blowup import blowup_variety, hausdorff_convergence  # noqa: E402
from .measure import density_limit, scaling_fit, surface_measure  # noqa: E402
from .dimension import box_dimension, low_degree_set  # noqa: E402
from .examples import builtin_submanifold  # noqa: E402
