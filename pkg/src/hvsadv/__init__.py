"""Adversarial perturbations steered into high-frequency, constant-chroma pixels.

The short version: take the FGSM step x' = clamp(x + eps * sign(dL/dx)), but
only at pixels where (a) a cheap local frequency estimate says texture is busy
enough to hide the change and (b) the gradient moves all three channels the
same direction, so chroma holds still. Two baseline variants that *don't* work
(mixed-sign "constant luma" masking, and projecting the step to exactly zero
luma in YUV) are included for comparison, along with the small CNN they all
attack, an Lp evaluation harness, and a CLI.
"""

from .attacks import (
    ATTACK_KINDS,
    DEFAULT_EPSILON,
    AdversarialResult,
    AttackSpec,
    approx_constant_luma_mask,
    constant_chroma_mask,
    hvs2,
    luma_zero_attack,
    masked_fgsm,
    run_attack,
)
from .checkpoint import load_params, save_params
from .colorspace import (
    LUMA_ZERO_LINF_AMPLIFICATION,
    RGB_TO_YUV,
    YUV_TO_RGB,
    YuvImage,
    project_gradient_zero_luma,
    rgb_to_yuv,
    yuv_to_rgb,
)
from .errors import (
    CheckpointFormatError,
    ConfigError,
    CorruptRecordError,
    DimensionError,
    FormatError,
    InvariantError,
    UndefinedRateError,
)
from .frequency import (
    DEFAULT_FREQUENCY_THRESHOLD,
    FrequencyMap,
    PerturbationMask,
    frequency_debug_image,
    pixel_frequency_map,
    threshold_mask,
)
from .harness import (
    ExperimentConfig,
    Report,
    canonical_json,
    emit_report,
    run_experiment,
    verify_report,
    verify_result,
)
from .image import (
    CIFAR10_CLASS_NAMES,
    Dataset,
    Image,
    LabeledImage,
    decode_ppm,
    encode_ppm,
    load_cifar10_path,
    load_cifar10_records,
    make_montage,
    synthesize_dataset,
)
from .metrics import DistanceRecord, attack_success_rate, evaluate_accuracy, lp_distances
from .network import (
    Architecture,
    Network,
    TrainConfig,
    gradient_check,
    init_network,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ATTACK_KINDS",
    "Architecture",
    "AdversarialResult",
    "AttackSpec",
    "CIFAR10_CLASS_NAMES",
    "CheckpointFormatError",
    "ConfigError",
    "CorruptRecordError",
    "DEFAULT_EPSILON",
    "DEFAULT_FREQUENCY_THRESHOLD",
    "Dataset",
    "DimensionError",
    "DistanceRecord",
    "ExperimentConfig",
    "FormatError",
    "FrequencyMap",
    "Image",
    "InvariantError",
    "LUMA_ZERO_LINF_AMPLIFICATION",
    "LabeledImage",
    "Network",
    "PerturbationMask",
    "RGB_TO_YUV",
    "Report",
    "TrainConfig",
    "UndefinedRateError",
    "YUV_TO_RGB",
    "YuvImage",
    "approx_constant_luma_mask",
    "attack_success_rate",
    "canonical_json",
    "constant_chroma_mask",
    "decode_ppm",
    "emit_report",
    "encode_ppm",
    "evaluate_accuracy",
    "frequency_debug_image",
    "gradient_check",
    "hvs2",
    "init_network",
    "load_cifar10_path",
    "load_cifar10_records",
    "load_params",
    "lp_distances",
    "luma_zero_attack",
    "make_montage",
    "masked_fgsm",
    "pixel_frequency_map",
    "project_gradient_zero_luma",
    "rgb_to_yuv",
    "run_attack",
    "run_experiment",
    "save_params",
    "synthesize_dataset",
    "threshold_mask",
    "train",
    "verify_report",
    "verify_result",
    "yuv_to_rgb",
]
