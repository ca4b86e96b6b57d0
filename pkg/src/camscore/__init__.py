"""camscore: gradient-free class activation maps with a metric suite.

Implements ScoreCAM and ScoreCAM++ (tanh-gated activations) plus a GradCAM
baseline, the Average Drop / Increase in Confidence / Win % / logit-drop
evaluation metrics, and a deterministic reference CNN so the whole pipeline
runs end to end without external model weights.
"""

from .backend import ActivationStack, ClassifierBackend, ReferenceCNN
from .engine import CamConfig, CICWeights, SaliencyMap, gradcam, scorecam, scorecampp
from .errors import (
    CamScoreError,
    CapabilityError,
    NumericError,
    PipelineError,
    ShapeMismatchError,
    WeightFormatError,
)
from .metrics import ConfidenceRecord, MetricsReport
from .tensor import Tensor
from .weights import generate_reference, load_weights, save_weights

__version__ = "0.1.0"

__all__ = [
    "ActivationStack",
    "CamConfig",
    "CamScoreError",
    "CapabilityError",
    "CICWeights",
    "ClassifierBackend",
    "ConfidenceRecord",
    "MetricsReport",
    "NumericError",
    "PipelineError",
    "ReferenceCNN",
    "SaliencyMap",
    "ShapeMismatchError",
    "Tensor",
    "WeightFormatError",
    "generate_reference",
    "gradcam",
    "load_weights",
    "save_weights",
    "scorecam",
    "scorecampp",
    "__version__",
]
