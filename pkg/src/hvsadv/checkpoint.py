"""Versioned binary checkpoints; load(save(net)) is bit-identical.

Layout: magic b"HVSN" | u32 LE version | u32 LE descriptor length | JSON
descriptor (architecture fields, step, seed, tensor shapes) | raw little-endian
float32 tensors in layer order (weights then bias per parameterized layer).
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import CheckpointFormatError
from .network import Architecture, Network, build_layers

MAGIC = b"HVSN"
VERSION = 1


def save_params(net: Network) -> bytes:
    tensors = [np.ascontiguousarray(p, dtype="<f4") for p in net.param_arrays]
    descriptor = {
        "arch": {
            "input_size": net.arch.input_size,
            "block_channels": list(net.arch.block_channels),
            "dense_units": net.arch.dense_units,
            "num_classes": net.arch.num_classes,
            "in_channels": net.arch.in_channels,
            "kernel": net.arch.kernel,
        },
        "step": net.step,
        "seed": net.seed,
        "tensors": [list(t.shape) for t in tensors],
    }
    desc = json.dumps(descriptor, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<I", VERSION), struct.pack("<I", len(desc)), desc]
    parts += [t.tobytes() for t in tensors]
    return b"".join(parts)


def load_params(raw: bytes) -> Network:
    if len(raw) < 12:
        raise CheckpointFormatError("checkpoint truncated before header")
    if raw[:4] != MAGIC:
        raise CheckpointFormatError(f"bad magic {raw[:4]!r}")
    (version,) = struct.unpack("<I", raw[4:8])
    if version != VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version}")
    (desc_len,) = struct.unpack("<I", raw[8:12])
    if len(raw) < 12 + desc_len:
        raise CheckpointFormatError("checkpoint truncated inside descriptor")
    try:
        descriptor = json.loads(raw[12 : 12 + desc_len].decode("utf-8"))
        arch = Architecture(
            input_size=descriptor["arch"]["input_size"],
            block_channels=tuple(descriptor["arch"]["block_channels"]),
            dense_units=descriptor["arch"]["dense_units"],
            num_classes=descriptor["arch"]["num_classes"],
            in_channels=descriptor["arch"]["in_channels"],
            kernel=descriptor["arch"]["kernel"],
        )
        step, seed = int(descriptor["step"]), int(descriptor["seed"])
        stored_shapes = [tuple(s) for s in descriptor["tensors"]]
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"bad checkpoint descriptor: {exc}") from exc

    layers = build_layers(arch)
    expected_shapes = [p.shape for layer in layers for p in layer.params]
    if stored_shapes != expected_shapes:
        raise CheckpointFormatError(
            "tensor shapes do not match the declared architecture"
        )
    payload = raw[12 + desc_len :]
    expected_bytes = sum(int(np.prod(s)) * 4 for s in expected_shapes)
    if len(payload) != expected_bytes:
        raise CheckpointFormatError(
            f"tensor payload has {len(payload)} bytes, expected {expected_bytes}"
        )
    offset = 0
    for layer in layers:
        if not layer.params:
            continue
        loaded = []
        for shape in (layer.W.shape, layer.b.shape):
            n = int(np.prod(shape)) * 4
            arr = np.frombuffer(payload[offset : offset + n], dtype="<f4").reshape(shape)
            loaded.append(arr.copy())
            offset += n
        layer.W, layer.b = loaded
    return Network(arch, layers, step=step, seed=seed)
