"""FGSM and its perceptually masked variants.

All attacks take one step of size epsilon along the sign of the input gradient,
optionally gated by a per-pixel mask, then clamp into [0, 1]:

    fgsm           no gate (every pixel)
    hvs2           frequency > tau AND all three channel gradient signs agree
    approx_luma    at least one channel gradient positive and one negative
    luma_zero_yuv  the epsilon*sign step projected to zero luma change

sign(0) is 0, so zero-gradient channels are never perturbed, and a zero
gradient component keeps a pixel out of both sign masks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .colorspace import project_gradient_zero_luma
from .errors import DimensionError
from .frequency import (
    DEFAULT_FREQUENCY_THRESHOLD,
    PerturbationMask,
    pixel_frequency_map,
    threshold_mask,
)
from .image import Image, LabeledImage

ATTACK_KINDS = ("fgsm", "hvs2", "approx_luma", "luma_zero_yuv")

DEFAULT_EPSILON = 8 / 255


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    epsilon: float = DEFAULT_EPSILON
    tau: float = DEFAULT_FREQUENCY_THRESHOLD  # only hvs2 reads this

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")


@dataclass(eq=False)
class AdversarialResult:
    clean: Image
    adversarial: Image
    perturbation: np.ndarray  # pre-clamp step; adversarial == clamp(clean + perturbation)
    label: int
    clean_pred: int
    adv_pred: int
    success: bool  # prediction flipped away from a correctly classified label
    mask_used: PerturbationMask | None
    clamp_count: int

    @property
    def perturbed_pixels(self) -> int:
        """Pixels the attack touched (any nonzero pre-clamp channel step)."""
        return int(np.any(self.perturbation != 0.0, axis=2).sum())


def constant_chroma_mask(grad: np.ndarray) -> PerturbationMask:
    """Gate pixels where all three channel gradients share a strict sign."""
    _check_grad(grad)
    all_pos = (grad > 0).all(axis=2)
    all_neg = (grad < 0).all(axis=2)
    return PerturbationMask((all_pos | all_neg).astype(np.uint8), "chroma")


def approx_constant_luma_mask(grad: np.ndarray) -> PerturbationMask:
    """Gate pixels with at least one positive and one negative channel gradient."""
    _check_grad(grad)
    mixed = (grad > 0).any(axis=2) & (grad < 0).any(axis=2)
    return PerturbationMask(mixed.astype(np.uint8), "luma")


def _check_grad(grad: np.ndarray):
    if grad.ndim != 3 or grad.shape[2] != 3:
        raise DimensionError(f"expected (H, W, 3) gradient, got shape {grad.shape}")


def _finish(oracle, img, label, perturbation, mask_used) -> AdversarialResult:
    stepped = img.data + perturbation
    adv_data = np.clip(stepped, 0.0, 1.0)
    clamp_count = int(np.count_nonzero(adv_data != stepped))
    adversarial = Image(adv_data)
    clean_pred = int(np.argmax(oracle.predict_probs(img)))
    adv_pred = int(np.argmax(oracle.predict_probs(adversarial)))
    return AdversarialResult(
        clean=img,
        adversarial=adversarial,
        perturbation=perturbation,
        label=label,
        clean_pred=clean_pred,
        adv_pred=adv_pred,
        success=clean_pred == label and adv_pred != label,
        mask_used=mask_used,
        clamp_count=clamp_count,
    )


def masked_fgsm(oracle, img: Image, label: int, epsilon: float,
                mask: PerturbationMask, _grad: np.ndarray | None = None) -> AdversarialResult:
    """x' = clamp(x + epsilon * mask * sign(dL/dx)); mask-0 pixels stay bit-identical."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if mask.values.shape != (img.height, img.width):
        raise DimensionError("mask dimensions do not match the image")
    grad = _grad if _grad is not None else oracle.loss_and_input_gradient(img, label)[1]
    perturbation = epsilon * mask.values[:, :, None] * np.sign(grad)
    return _finish(oracle, img, label, perturbation, mask)


def hvs2(oracle, img: Image, label: int, epsilon: float,
         tau: float = DEFAULT_FREQUENCY_THRESHOLD) -> AdversarialResult:
    """FGSM gated into high-frequency pixels whose gradient leaves chroma constant."""
    grad = oracle.loss_and_input_gradient(img, label)[1]
    mask = threshold_mask(pixel_frequency_map(img), tau) & constant_chroma_mask(grad)
    return masked_fgsm(oracle, img, label, epsilon, mask, _grad=grad)


def approx_luma_attack(oracle, img: Image, label: int, epsilon: float) -> AdversarialResult:
    """FGSM gated to mixed-sign pixels (the approximate constant-luma variant)."""
    grad = oracle.loss_and_input_gradient(img, label)[1]
    mask = approx_constant_luma_mask(grad)
    return masked_fgsm(oracle, img, label, epsilon, mask, _grad=grad)


def luma_zero_attack(oracle, img: Image, label: int, epsilon: float) -> AdversarialResult:
    """Take the FGSM step in YUV space with the luma row zeroed.

    The pre-clamp perturbation has Y = 0 per pixel, but its L-inf norm may
    exceed epsilon by up to LUMA_ZERO_LINF_AMPLIFICATION.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    grad = oracle.loss_and_input_gradient(img, label)[1]
    perturbation = project_gradient_zero_luma(epsilon * np.sign(grad))
    return _finish(oracle, img, label, perturbation, mask_used=None)


def full_mask(img: Image) -> PerturbationMask:
    """The all-ones gate: plain FGSM."""
    return PerturbationMask(np.ones((img.height, img.width), dtype=np.uint8), "full")


def run_attack(spec: AttackSpec, oracle, item: LabeledImage) -> AdversarialResult:
    """Dispatch one attack on one labeled image."""
    img, label = item.image, item.label
    if spec.kind == "fgsm":
        return masked_fgsm(oracle, img, label, spec.epsilon, full_mask(img))
    if spec.kind == "hvs2":
        return hvs2(oracle, img, label, spec.epsilon, spec.tau)
    if spec.kind == "approx_luma":
        return approx_luma_attack(oracle, img, label, spec.epsilon)
    if spec.kind == "luma_zero_yuv":
        return luma_zero_attack(oracle, img, label, spec.epsilon)
    raise ValueError(f"unknown attack kind {spec.kind!r}")
