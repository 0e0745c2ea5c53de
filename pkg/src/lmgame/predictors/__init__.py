"""Predictors: anything mapping a context to a next-token distribution."""

from lmgame.predictors.base import (
    PROB_FLOOR,
    Distribution,
    Predictor,
    floor_and_normalize,
    predict_distribution,
    predict_top1,
    sample_next,
)
from lmgame.predictors.ngram import NGramModel, ngram_train
from lmgame.predictors.simple import (
    LookupPredictor,
    PredictorDescriptor,
    UniformPredictor,
    build_predictor,
    point_mass,
)
from lmgame.predictors.remote import RemotePredictor, TransportError

__all__ = [
    "PROB_FLOOR",
    "Distribution",
    "Predictor",
    "floor_and_normalize",
    "predict_distribution",
    "predict_top1",
    "sample_next",
    "NGramModel",
    "ngram_train",
    "LookupPredictor",
    "PredictorDescriptor",
    "UniformPredictor",
    "build_predictor",
    "point_mass",
    "RemotePredictor",
    "TransportError",
]
