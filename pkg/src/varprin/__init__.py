"""Variational principles over non-symmetric, non-triangular distance functions."""
from . import _kernels
from .distance import (
    AxiomReport,
    DistanceSpec,
    PointSpace,
    axiom_report,
    evaluate,
    make_builtin,
    product_distance,
    symmetrize,
)
from .engine import (
    Certificate,
    ConstructionTrace,
    ExtendedObjective,
    PerturbationSchedule,
    borwein_preiss,
    ekeland,
    verify_bp,
    verify_ekeland,
    weak_borwein_preiss,
    weak_ekeland,
)
from .sequences import (
    NestedFamily,
    PointSet,
    SequenceTrace,
    Verdict,
    cantor_intersect,
    cauchy_modulus,
    converges_to,
    right_ball,
    sublevel_set,
)

__version__ = "0.1.0"
