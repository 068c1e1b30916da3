"""End-to-end demo on synthetic data: train a small classifier, run all four
attacks over a slice, emit report.json plus montages, and print the
per-attack aggregates.

Runs in a few seconds with no dataset on disk:

    python3 scripts/desk_demo.py --out /tmp/desk
"""

import argparse
import json
from pathlib import Path

from hvsadv.attacks import ATTACK_KINDS, DEFAULT_EPSILON, AttackSpec
from hvsadv.checkpoint import save_params
from hvsadv.harness import ExperimentConfig, emit_report, run_experiment, verify_report
from hvsadv.image import Dataset, synthesize_dataset
from hvsadv.network import Architecture, TrainConfig, init_network, train


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="desk-out", help="output directory")
    ap.add_argument("--count", type=int, default=48, help="synthetic images")
    ap.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    ap.add_argument("--tau", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    data = synthesize_dataset("noise", args.count, seed=args.seed)
    train_ds = Dataset(data.items[: args.count // 2], data.class_names)
    net = init_network(
        Architecture(input_size=32, block_channels=(8, 8), dense_units=32,
                     num_classes=2),
        seed=args.seed,
    )
    net, history = train(
        net, train_ds, TrainConfig(epochs=4, lr=0.003, batch_size=4, seed=args.seed)
    )
    print(f"trained {net.step} steps, "
          f"loss {history[0]['loss']:.3f} -> {history[-1]['loss']:.3f}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "net.ckpt"
    ckpt.write_bytes(save_params(net))

    config = ExperimentConfig(
        data=f"synth:noise:{args.count}:{args.seed}",
        checkpoint=str(ckpt),
        attacks=tuple(
            AttackSpec(kind, args.epsilon, args.tau) for kind in ATTACK_KINDS
        ),
        start=args.count // 2,  # attack only images the net never trained on
        seed=args.seed,
    )
    report = run_experiment(config, net=net)
    emit_report(report, config, out)

    payload = json.loads((out / "report.json").read_text())
    problems = verify_report(payload)
    if problems:
        raise SystemExit("report failed self-check:\n" + "\n".join(problems))

    print(f"clean accuracy {payload['clean_accuracy']:.3f} "
          f"over {payload['num_images']} images")
    for kind, block in payload["results"].items():
        rate = block["success_rate"]
        rate = "n/a" if rate is None else f"{rate:.2f}"
        print(f"  {kind:>14}: success {rate}  "
              f"mean_linf {block['mean_linf']:.4f}  "
              f"mean_l0 {block['mean_l0_pixels']:.0f} px")
    print(f"wrote {out}/report.json and montages")


if __name__ == "__main__":
    main()
