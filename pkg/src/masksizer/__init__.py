"""Semi-automated nasal PAP mask sizing from facial photographs.

The pipeline crops the annotated nose region, regresses the two lateral
nasal-wall landmarks with a hybrid network (tanh hidden layer trained by
momentum backprop, linear output layer solved by pseudo-inverse), recovers
millimetres through a reference-coin scale, and classifies the width against
a mask size chart with a boundary tolerance rule.
"""

__version__ = "0.1.0"

from .dataset import Annotation, NormStats, SampleRecord, load_manifest, scale_px_per_mm
from .imaging import GrayImage, RectRegion, TransformChain, load_pgm, save_pgm
from .network import NetDims, NetworkParams, SavedModel, init_params, load_model, save_model
from .sizing import ESON, SizeChart, width_mm
from .training import FoldResult, TrainConfig, loocv, train_once

__all__ = [
    "Annotation",
    "ESON",
    "FoldResult",
    "GrayImage",
    "NetDims",
    "NetworkParams",
    "NormStats",
    "RectRegion",
    "SampleRecord",
    "SavedModel",
    "SizeChart",
    "TrainConfig",
    "TransformChain",
    "init_params",
    "load_manifest",
    "load_model",
    "load_pgm",
    "loocv",
    "save_model",
    "save_pgm",
    "scale_px_per_mm",
    "train_once",
    "width_mm",
]
