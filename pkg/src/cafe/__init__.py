"""Multiplicative frequency encodings (CAFE / CAFE+) for coordinate networks."""

from .encodings import (FeatureVector, FrequencyBasis, chebyshev_encode, concat_features,
                        explicit_basis, fourier_encode, make_pe, sample_rff)
from .model import (CafeModel, FeatureMask, ModelSpec, count_params, encode_cafe, init_model,
                    model_forward, pairwise_expansion_coeffs)
from .train import FitReport, TrainConfig, predict, train

__version__ = "0.1.0"

__all__ = [
    "CafeModel", "FeatureMask", "FeatureVector", "FitReport", "FrequencyBasis", "ModelSpec",
    "TrainConfig", "chebyshev_encode", "concat_features", "count_params", "encode_cafe",
    "explicit_basis", "fourier_encode", "init_model", "make_pe", "model_forward",
    "pairwise_expansion_coeffs", "predict", "sample_rff", "train",
]
