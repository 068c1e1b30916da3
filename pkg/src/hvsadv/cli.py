"""Command line front end.

    hvsadv synth --kind checkerboard --count 64 --out data.bin
    hvsadv train --data data.bin --checkpoint net.ckpt --epochs 4
    hvsadv attack --data data.bin --checkpoint net.ckpt --attack hvs2 --out run/
    hvsadv report run/report.json
    hvsadv gradcheck

--data falls back to the HVSADV_DATA environment variable and also accepts
inline synthetic specs of the form synth:<kind>:<count>[:<seed>].
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import click
import numpy as np

from .attacks import ATTACK_KINDS, DEFAULT_EPSILON, AttackSpec
from .checkpoint import save_params
from .errors import ConfigError
from .frequency import DEFAULT_FREQUENCY_THRESHOLD
from .harness import (
    ExperimentConfig,
    emit_report,
    load_dataset,
    run_experiment,
    verify_report,
)
from .image import Image, dataset_to_cifar_bytes, synthesize_dataset
from .network import Architecture, TrainConfig, gradient_check, init_network, train

# CLI spellings use hyphens; the internal kinds are identifiers.
ATTACK_CLI_NAMES = {
    "fgsm": "fgsm",
    "hvs2": "hvs2",
    "approx-luma": "approx_luma",
    "luma-zero": "luma_zero_yuv",
}
assert set(ATTACK_CLI_NAMES.values()) == set(ATTACK_KINDS)

_data_option = click.option(
    "--data",
    envvar="HVSADV_DATA",
    required=True,
    help="CIFAR-10 batch file or directory, or synth:<kind>:<count>[:<seed>]. "
    "Defaults to $HVSADV_DATA.",
)


def _parse_range(text: str | None) -> tuple[int, int | None]:
    """'a..b' half-open; either side may be omitted ('..b', 'a..', '..')."""
    if text is None:
        return 0, None
    if ".." not in text:
        raise click.BadParameter(f"expected a..b, got {text!r}", param_hint="--range")
    lo, _, hi = text.partition("..")
    try:
        start = int(lo) if lo else 0
        stop = int(hi) if hi else None
    except ValueError:
        raise click.BadParameter(f"expected a..b, got {text!r}", param_hint="--range")
    return start, stop


@click.group()
@click.version_option(package_name="hvsadv")
def main():
    """High-frequency constant-chroma adversarial attacks on a small CNN."""


@main.command("train")
@_data_option
@click.option("--checkpoint", required=True, type=click.Path(dir_okay=False),
              help="Where to write the trained parameters.")
@click.option("--epochs", default=1, show_default=True, type=int)
@click.option("--lr", default=0.01, show_default=True, type=float)
@click.option("--momentum", default=0.9, show_default=True, type=float)
@click.option("--batch", default=32, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--arch", default="full", show_default=True,
              type=click.Choice(["full", "reduced"]),
              help="'reduced' is the small configuration used for fast checks.")
@click.option("--classes", default=None, type=int,
              help="Override the class count (defaults to the dataset's).")
@click.option("--limit", default=None, type=int,
              help="Train on only the first N images.")
def train_cmd(data, checkpoint, epochs, lr, momentum, batch, seed, arch,
              classes, limit):
    """Train the classifier and save a checkpoint."""
    try:
        dataset = load_dataset(data, seed)
        if limit is not None:
            dataset = dataclasses.replace(dataset, items=dataset.items[:limit])
        img = dataset.items[0].image
        if img.height != img.width:
            raise ConfigError(
                f"training images must be square, got {img.height}x{img.width}"
            )
        base = Architecture.reduced() if arch == "reduced" else Architecture()
        spec = dataclasses.replace(
            base,
            input_size=img.height,
            num_classes=classes if classes is not None else len(dataset.class_names),
        )
        net = init_network(spec, seed)
        net, history = train(net, dataset, TrainConfig(
            lr=lr, momentum=momentum, batch_size=batch, epochs=epochs, seed=seed,
        ))
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    for entry in history:
        click.echo(f"epoch {entry['epoch']:3d}  loss {entry['loss']:.4f}  "
                   f"accuracy {entry['accuracy']:.4f}")
    Path(checkpoint).write_bytes(save_params(net))
    click.echo(f"saved checkpoint to {checkpoint} ({len(dataset)} images, "
               f"{spec.num_classes} classes)")


@main.command("attack")
@_data_option
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--attack", "attack_names", multiple=True,
              type=click.Choice(sorted(ATTACK_CLI_NAMES)),
              help="Repeatable; defaults to all four attacks.")
@click.option("--epsilon", default=DEFAULT_EPSILON, show_default=True, type=float)
@click.option("--tau", default=DEFAULT_FREQUENCY_THRESHOLD, show_default=True,
              type=float, help="Frequency threshold for the hvs2 mask.")
@click.option("--range", "range_text", default=None,
              help="Half-open image range a..b within the dataset.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(file_okay=False),
              help="Output directory for report.json and montages.")
@click.option("--save-images", is_flag=True,
              help="Also write one PPM per clean/adversarial image.")
@click.option("--dump-frequency", is_flag=True,
              help="Also write frequency-map debug images.")
def attack_cmd(data, checkpoint, attack_names, epsilon, tau, range_text,
               seed, out, save_images, dump_frequency):
    """Run attacks against a checkpoint and emit a report."""
    if not attack_names:
        attack_names = tuple(sorted(ATTACK_CLI_NAMES))
    kinds = []
    for name in attack_names:  # dedupe, keep order
        kind = ATTACK_CLI_NAMES[name]
        if kind not in kinds:
            kinds.append(kind)
    start, stop = _parse_range(range_text)
    try:
        config = ExperimentConfig(
            data=data,
            checkpoint=checkpoint,
            attacks=tuple(AttackSpec(kind, epsilon, tau) for kind in kinds),
            start=start,
            stop=stop,
            seed=seed,
            save_images=save_images,
            dump_frequency=dump_frequency,
        )
        report = run_experiment(config)
        path = emit_report(report, config, out)
    except (ValueError, RuntimeError, OSError) as exc:
        raise click.ClickException(str(exc))
    payload = report.payload
    click.echo(f"{payload['num_images']} images, "
               f"clean accuracy {payload['clean_accuracy']:.4f}")
    for kind in kinds:
        block = payload["results"][kind]
        rate = block["success_rate"]
        rate_text = "n/a" if rate is None else f"{rate:.4f}"
        click.echo(
            f"{kind:14s} success {rate_text} "
            f"({block['num_clean_correct']} eligible)  "
            f"mean L0 {block['mean_l0_pixels']:.1f} px  "
            f"mean L2 {block['mean_l2']:.4f}  "
            f"mean Linf {block['mean_linf']:.4f}"
        )
    click.echo(f"wrote {path}")


@main.command()
@click.argument("report_path", type=click.Path(exists=True, dir_okay=False))
def report(report_path):
    """Verify a report.json: recompute all aggregates from its rows."""
    try:
        payload = json.loads(Path(report_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot read report: {exc}")
    problems = verify_report(payload)
    if problems:
        for problem in problems:
            click.echo(f"MISMATCH {problem}", err=True)
        raise SystemExit(1)
    for kind in sorted(payload["results"]):
        block = payload["results"][kind]
        rate = block["success_rate"]
        rate_text = "n/a" if rate is None else f"{rate:.4f}"
        click.echo(f"{kind:14s} success {rate_text} over "
                   f"{block['num_clean_correct']}/{block['num_images']} images")
    click.echo(f"report ok: {payload['num_images']} images, "
               f"clean accuracy {payload['clean_accuracy']:.4f}")


@main.command()
@click.option("--arch", default="reduced", show_default=True,
              type=click.Choice(["full", "reduced"]))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--h", "step", default=1e-3, show_default=True, type=float)
@click.option("--tol", default=1e-3, show_default=True, type=float)
def gradcheck(arch, seed, step, tol):
    """Compare the analytic input gradient against central differences."""
    spec = Architecture.reduced() if arch == "reduced" else Architecture()
    rng = np.random.default_rng(seed)
    net = init_network(spec, seed)
    img = Image(rng.uniform(0.05, 0.95, (spec.input_size, spec.input_size, 3)))
    label = int(rng.integers(spec.num_classes))
    err = gradient_check(net, img, label, h=step)
    click.echo(f"max relative error {err:.3e} (tolerance {tol:.1e})")
    if err > tol:
        raise SystemExit(1)


@main.command()
@click.option("--kind", default="checkerboard", show_default=True,
              type=click.Choice(["constant", "checkerboard", "noise"]))
@click.option("--count", default=64, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def synth(kind, count, seed, out):
    """Write a synthetic dataset in the CIFAR-10 binary layout (32x32)."""
    try:
        dataset = synthesize_dataset(kind, count, seed=seed)
        Path(out).write_bytes(dataset_to_cifar_bytes(dataset))
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {count} 32x32 {kind} images to {out}")


if __name__ == "__main__":
    main()
