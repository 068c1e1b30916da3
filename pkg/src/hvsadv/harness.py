"""Experiment driver: load a checkpoint, attack a slice of data, emit a report.

The report is canonical JSON (sorted keys, two-space indent, trailing newline,
no timestamps), so identical configs produce byte-identical files. Every
aggregate in the report is recomputable from its per-image rows, and
verify_report() does exactly that recomputation.

Each finished attack is re-checked against the invariants the construction is
supposed to guarantee; a violation raises InvariantError rather than producing
a quietly wrong report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attacks import AdversarialResult, AttackSpec, run_attack
from .checkpoint import load_params
from .colorspace import LUMA_ZERO_LINF_AMPLIFICATION, RGB_TO_YUV
from .errors import ConfigError, InvariantError
from .frequency import frequency_debug_image, pixel_frequency_map
from .image import (
    Dataset,
    encode_ppm,
    load_cifar10_path,
    make_montage,
    synthesize_dataset,
)
from .metrics import lp_distances
from .network import Network

REPORT_VERSION = 1

# Absolute slack on the L-inf bound checks; the exact bound holds up to
# float64 rounding in x + delta, which is ~1e-17 for unit-range images.
_LINF_SLACK = 1e-12

_ZERO_LUMA_TOL = 1e-6


@dataclass(frozen=True)
class ExperimentConfig:
    data: str  # CIFAR file/dir, or "synth:<kind>:<count>[:<seed>]"
    checkpoint: str
    attacks: tuple[AttackSpec, ...]
    start: int = 0
    stop: int | None = None  # half-open; None means end of dataset
    seed: int = 0
    save_images: bool = False
    dump_frequency: bool = False

    def __post_init__(self):
        if not self.attacks:
            raise ConfigError("at least one attack must be configured")
        if self.start < 0:
            raise ConfigError(f"range start must be >= 0, got {self.start}")
        if self.stop is not None and self.stop <= self.start:
            raise ConfigError(
                f"range {self.start}..{self.stop} is empty"
            )


@dataclass(eq=False)
class Report:
    payload: dict
    results: dict[str, list[AdversarialResult]]
    indices: list[int]


def load_dataset(data: str, seed: int) -> Dataset:
    """Resolve a --data argument: a synth spec or a CIFAR path."""
    if data.startswith("synth:"):
        parts = data.split(":")
        if len(parts) not in (3, 4):
            raise ConfigError(
                f"bad synth spec {data!r}; expected synth:<kind>:<count>[:<seed>]"
            )
        try:
            count = int(parts[2])
            synth_seed = int(parts[3]) if len(parts) == 4 else seed
        except ValueError as exc:
            raise ConfigError(f"bad synth spec {data!r}: {exc}") from None
        return synthesize_dataset(parts[1], count, seed=synth_seed)
    return load_cifar10_path(data)


def verify_result(result: AdversarialResult, spec: AttackSpec):
    """Re-check the guarantees an attack's construction promises.

    - untouched (mask-zero) pixels are bit-identical to the clean image
    - L-inf of the realised change is within epsilon, except for the
      zero-luma projection, whose step can exceed epsilon by the matrix
      row gain (bounded by LUMA_ZERO_LINF_AMPLIFICATION)
    - the zero-luma step has no luma component before clamping
    """
    diff = result.adversarial.data - result.clean.data
    if spec.kind == "luma_zero_yuv":
        bound = spec.epsilon * LUMA_ZERO_LINF_AMPLIFICATION + _LINF_SLACK
        luma = result.perturbation @ RGB_TO_YUV[0]
        worst = float(np.abs(luma).max())
        if worst >= _ZERO_LUMA_TOL:
            raise InvariantError(
                f"zero-luma step has |Y| = {worst:.3e} >= {_ZERO_LUMA_TOL}"
            )
    else:
        bound = spec.epsilon + _LINF_SLACK
        if result.mask_used is None:
            raise InvariantError(f"{spec.kind} result is missing its mask")
        off = result.mask_used.values == 0
        if not np.array_equal(
            result.adversarial.data[off], result.clean.data[off]
        ):
            raise InvariantError(
                f"{spec.kind} modified pixels outside its mask"
            )
    worst = float(np.abs(diff).max())
    if worst > bound:
        raise InvariantError(
            f"{spec.kind} L-inf {worst:.6g} exceeds bound {bound:.6g}"
        )


def _row(index: int, result: AdversarialResult) -> dict:
    dist = lp_distances(result.clean, result.adversarial)
    return {
        "index": index,
        "label": int(result.label),
        "clean_pred": int(result.clean_pred),
        "adv_pred": int(result.adv_pred),
        "success": bool(result.success),
        "l0_pixels": int(dist.l0_pixels),
        "l1": float(dist.l1),
        "l2": float(dist.l2),
        "linf": float(dist.linf),
        "perturbed_pixels": int(result.perturbed_pixels),
        "clamp_count": int(result.clamp_count),
    }


def compute_aggregates(rows: list[dict]) -> dict:
    """Summaries derivable from (and checkable against) the per-image rows."""
    n = len(rows)
    eligible = [r for r in rows if r["clean_pred"] == r["label"]]
    if eligible:
        success_rate = sum(r["success"] for r in eligible) / len(eligible)
    else:
        success_rate = None
    return {
        "num_images": n,
        "num_clean_correct": len(eligible),
        "success_rate": success_rate,
        "success_rate_all": sum(r["adv_pred"] != r["clean_pred"] for r in rows) / n,
        "mean_l0_pixels": sum(r["l0_pixels"] for r in rows) / n,
        "mean_l1": sum(r["l1"] for r in rows) / n,
        "mean_l2": sum(r["l2"] for r in rows) / n,
        "mean_linf": sum(r["linf"] for r in rows) / n,
        "mean_perturbed_pixels": sum(r["perturbed_pixels"] for r in rows) / n,
        "total_clamped": sum(r["clamp_count"] for r in rows),
    }


def run_experiment(config: ExperimentConfig, net: Network | None = None) -> Report:
    """Attack the configured slice and build the report in memory."""
    if net is None:
        net = load_params(Path(config.checkpoint).read_bytes())
    dataset = load_dataset(config.data, config.seed)
    stop = len(dataset) if config.stop is None else config.stop
    items = dataset.items[config.start:stop]
    if not items:
        raise ConfigError(
            f"range {config.start}..{stop} selects no images "
            f"(dataset has {len(dataset)})"
        )
    indices = list(range(config.start, config.start + len(items)))

    results: dict[str, list[AdversarialResult]] = {}
    blocks: dict[str, dict] = {}
    for spec in config.attacks:
        attack_results = []
        rows = []
        for index, item in zip(indices, items):
            result = run_attack(spec, net, item)
            verify_result(result, spec)
            attack_results.append(result)
            rows.append(_row(index, result))
        results[spec.kind] = attack_results
        block = compute_aggregates(rows)
        block["rows"] = rows
        blocks[spec.kind] = block

    first_rows = blocks[config.attacks[0].kind]["rows"]
    clean_accuracy = sum(r["clean_pred"] == r["label"] for r in first_rows) / len(first_rows)
    for spec in config.attacks[1:]:
        for a, b in zip(first_rows, blocks[spec.kind]["rows"]):
            if a["clean_pred"] != b["clean_pred"]:
                raise InvariantError(
                    "clean predictions disagree across attacks at index "
                    f"{a['index']}"
                )

    payload = {
        "version": REPORT_VERSION,
        "config": {
            "data": config.data,
            "checkpoint": config.checkpoint,
            "range": [config.start, stop],
            "seed": config.seed,
            "attacks": [
                {"kind": s.kind, "epsilon": float(s.epsilon), "tau": float(s.tau)}
                for s in config.attacks
            ],
        },
        "num_images": len(items),
        "clean_accuracy": clean_accuracy,
        "results": blocks,
    }
    return Report(payload=payload, results=results, indices=indices)


def verify_report(payload: dict) -> list[str]:
    """Recompute every aggregate from the rows; return discrepancies."""
    problems = []
    if payload.get("version") != REPORT_VERSION:
        problems.append(f"unknown report version {payload.get('version')!r}")
        return problems
    blocks = payload.get("results", {})
    if not blocks:
        problems.append("report has no attack results")
        return problems
    for kind, block in sorted(blocks.items()):
        rows = block.get("rows", [])
        if not rows:
            problems.append(f"{kind}: no rows")
            continue
        expected = compute_aggregates(rows)
        for key, want in expected.items():
            got = block.get(key)
            if got != want:
                problems.append(f"{kind}: {key} is {got!r}, recomputed {want!r}")
        if len(rows) != payload.get("num_images"):
            problems.append(
                f"{kind}: {len(rows)} rows but num_images is "
                f"{payload.get('num_images')}"
            )
    first = sorted(blocks)[0]
    rows = blocks[first].get("rows", [])
    if rows:
        clean_acc = sum(r["clean_pred"] == r["label"] for r in rows) / len(rows)
        if payload.get("clean_accuracy") != clean_acc:
            problems.append(
                f"clean_accuracy is {payload.get('clean_accuracy')!r}, "
                f"recomputed {clean_acc!r}"
            )
    return problems


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def emit_report(report: Report, config: ExperimentConfig, out_dir: str | Path) -> Path:
    """Write report.json plus clean|adversarial montages; returns the json path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "report.json"
    report_path.write_text(canonical_json(report.payload))

    for kind, results in sorted(report.results.items()):
        pairs = []
        for result in results:
            pairs.extend([result.clean, result.adversarial])
        montage = make_montage(pairs, columns=2, pad=2)
        (out / f"montage_{kind}.ppm").write_bytes(encode_ppm(montage))

    if config.save_images:
        for kind, results in sorted(report.results.items()):
            for index, result in zip(report.indices, results):
                name = f"adv_{kind}_{index:05d}.ppm"
                (out / name).write_bytes(encode_ppm(result.adversarial))
        first = sorted(report.results)[0]
        for index, result in zip(report.indices, report.results[first]):
            (out / f"clean_{index:05d}.ppm").write_bytes(encode_ppm(result.clean))

    if config.dump_frequency:
        first = sorted(report.results)[0]
        for index, result in zip(report.indices, report.results[first]):
            debug = frequency_debug_image(pixel_frequency_map(result.clean))
            (out / f"frequency_{index:05d}.ppm").write_bytes(encode_ppm(debug))

    return report_path


__all__ = [
    "ExperimentConfig",
    "Report",
    "REPORT_VERSION",
    "canonical_json",
    "compute_aggregates",
    "emit_report",
    "load_dataset",
    "run_experiment",
    "verify_report",
    "verify_result",
]
