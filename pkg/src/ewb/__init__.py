"""Exponentially weighted barycentric forecasting on geodesic metric spaces."""

from .barycenter import BarycenterResult, barycenter, jensen_check, variance_at
from .exceptions import (
    BarycenterError,
    DegenerateMeasureError,
    DomainError,
    GeodesicError,
    LossEvaluationError,
)
from .forecaster import (
    RegretReport,
    Schedule,
    best_in_hindsight,
    ewb_init,
    ewb_predict,
    ewb_update,
    run_game,
)
from .geometry import (
    EuclideanBall,
    HyperbolicDisk,
    QuantileSpace,
    SPDSpace,
    SphereCap,
    comparison_distance,
    distance,
    geodesic_point,
    homothety,
    s_kappa,
    sample_prior,
    space_from_dict,
)
from .losses import LossFn, scaled_distance_loss, squared_distance_loss
from .measures import ParticleMeasure

__version__ = "0.1.0"
