"""Make/model classifier: depthwise-separable conv stack, from-scratch
forward pass, cost accounting, and top-k evaluation."""

from .arch import (
    ArchitectureSpec,
    BadAlpha,
    BadResolution,
    LayerSpec,
    ShapeMismatch,
    TensorShape,
    build_architecture,
    count_mult_adds,
    count_params,
    propagate_shapes,
)
from .forward import (
    BadInputSize,
    BadK,
    EmptySet,
    Prediction,
    WeightMismatch,
    depthwise_forward,
    evaluate_topk,
    forward,
    pointwise_forward,
    render_accuracy_table,
    softmax,
    standard_conv_forward,
    top_k,
)
from .weights import (
    Corrupt,
    FingerprintMismatch,
    WeightBundle,
    arch_from_header,
    describe_arch,
    load_model,
    load_weights,
    random_weights,
    save_weights,
    validate_weights,
    zero_weights,
)

__all__ = [
    "ArchitectureSpec",
    "BadAlpha",
    "BadInputSize",
    "BadK",
    "BadResolution",
    "Corrupt",
    "EmptySet",
    "FingerprintMismatch",
    "LayerSpec",
    "Prediction",
    "ShapeMismatch",
    "TensorShape",
    "WeightBundle",
    "WeightMismatch",
    "arch_from_header",
    "build_architecture",
    "describe_arch",
    "load_model",
    "validate_weights",
    "count_mult_adds",
    "count_params",
    "depthwise_forward",
    "evaluate_topk",
    "forward",
    "load_weights",
    "pointwise_forward",
    "propagate_shapes",
    "random_weights",
    "render_accuracy_table",
    "save_weights",
    "softmax",
    "standard_conv_forward",
    "top_k",
    "zero_weights",
]
