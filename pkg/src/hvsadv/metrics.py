"""Lp distances between image pairs and attack bookkeeping.

L0 counts *pixels* that changed at all (any channel differs, exact
comparison); L1/L2/L-inf are taken over the individual channel entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, UndefinedRateError
from .image import Dataset, Image


@dataclass(frozen=True)
class DistanceRecord:
    l0_pixels: int
    l1: float
    l2: float
    linf: float


def lp_distances(a: Image, b: Image) -> DistanceRecord:
    if a.data.shape != b.data.shape:
        raise DimensionError(
            f"image shapes differ: {a.data.shape} vs {b.data.shape}"
        )
    diff = a.data - b.data
    changed = np.any(a.data != b.data, axis=2)
    flat = diff.ravel()
    return DistanceRecord(
        l0_pixels=int(changed.sum()),
        l1=float(np.abs(flat).sum()),
        l2=float(np.sqrt(np.square(flat).sum())),
        linf=float(np.abs(flat).max()),
    )


def evaluate_accuracy(net, dataset: Dataset) -> float:
    """Fraction of dataset items the network labels correctly.

    Argmax ties resolve to the lowest class index, matching predict().
    """
    from .network import forward_many

    images = [item.image for item in dataset.items]
    labels = np.array([item.label for item in dataset.items])
    probs = forward_many(net, images)
    preds = np.argmax(probs, axis=1)
    return float((preds == labels).mean())


def attack_success_rate(results: Sequence, restrict_to_clean_correct: bool = True) -> float:
    """Fraction of attacks that flipped a prediction.

    With restrict_to_clean_correct the denominator is only the cases the
    model got right to begin with -- the usual convention, since "fooling"
    an already-wrong model means nothing. Raises UndefinedRateError when
    that denominator is empty.
    """
    if len(results) == 0:
        raise ValueError("no attack results to aggregate")
    if restrict_to_clean_correct:
        eligible = [r for r in results if r.clean_pred == r.label]
        if not eligible:
            raise UndefinedRateError(
                "no cleanly correct predictions; success rate undefined"
            )
        return sum(r.success for r in eligible) / len(eligible)
    return sum(r.adv_pred != r.clean_pred for r in results) / len(results)
