"""Reproduce the CIFAR-10 protocol: train the full network on 2000 images,
measure held-out accuracy, then compare FGSM against the masked hvs2 attack
on 100 held-out images.

Needs the CIFAR-10 binary batches (data_batch_*.bin) on disk:

    python3 scripts/cifar_protocol.py --data /path/to/cifar-10-batches-bin
"""

import argparse
import os
import time

import numpy as np

from hvsadv.attacks import AttackSpec, run_attack
from hvsadv.image import Dataset, load_cifar10_path
from hvsadv.metrics import attack_success_rate, evaluate_accuracy
from hvsadv.network import Architecture, TrainConfig, init_network, train


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", default=os.environ.get("HVSADV_DATA"),
                    help="CIFAR-10 binary file or directory "
                         "(default: $HVSADV_DATA)")
    ap.add_argument("--train-count", type=int, default=2000)
    ap.add_argument("--heldout-count", type=int, default=1000)
    ap.add_argument("--attack-count", type=int, default=100)
    ap.add_argument("--epochs", type=int, default=12)
    ap.add_argument("--epsilon", type=float, default=8 / 255)
    ap.add_argument("--tau", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not args.data:
        ap.error("no data: pass --data or set HVSADV_DATA")

    need = args.train_count + args.heldout_count
    ds = load_cifar10_path(args.data, max_count=need)
    if len(ds) < need:
        raise SystemExit(f"need {need} records, found {len(ds)}")
    train_ds = Dataset(ds.items[: args.train_count], ds.class_names)
    heldout = Dataset(ds.items[args.train_count : need], ds.class_names)
    attacked = heldout.items[: args.attack_count]

    net = init_network(Architecture(), seed=args.seed)
    started = time.monotonic()
    net, history = train(
        net, train_ds, TrainConfig(epochs=args.epochs, seed=args.seed)
    )
    print(f"trained {net.step} steps in {time.monotonic() - started:.0f}s, "
          f"final train accuracy {history[-1]['accuracy']:.3f}")
    print(f"held-out accuracy: {evaluate_accuracy(net, heldout):.3f} "
          f"over {len(heldout)} images")

    fgsm = AttackSpec("fgsm", args.epsilon)
    hvs2 = AttackSpec("hvs2", args.epsilon, args.tau)
    f_res = [run_attack(fgsm, net, it) for it in attacked]
    h_res = [run_attack(hvs2, net, it) for it in attacked]

    clean = np.mean([r.clean_pred == r.label for r in f_res])
    for name, results in (("fgsm", f_res), ("hvs2", h_res)):
        adv = np.mean([r.adv_pred == r.label for r in results])
        px = np.mean([r.perturbed_pixels for r in results])
        print(f"{name}: attacked-subset accuracy {clean:.2f} -> {adv:.2f}, "
              f"success rate {attack_success_rate(results):.2f}, "
              f"mean perturbed pixels {px:.0f}")


if __name__ == "__main__":
    main()
