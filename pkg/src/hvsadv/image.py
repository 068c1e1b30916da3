"""Image containers, CIFAR-10 binary ingestion, PPM encoding, montages, synthetic data.

Pixel values live in [0, 1] as float64; bytes map to values by b/255 on the way
in and round-half-up on v*255 on the way out, so 8-bit round trips are stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptRecordError, DimensionError, FormatError

CIFAR10_CLASS_NAMES = (
    "airplane", "automobile", "bird", "cat", "deer",
    "dog", "frog", "horse", "ship", "truck",
)

CIFAR_RECORD_BYTES = 3073  # 1 label byte + 3 planes of 32*32
CIFAR_SIDE = 32

# |difference| between adjacent cells of a synthetic checkerboard image
CHECKER_AMPLITUDE = 0.2

SYNTHETIC_CLASS_NAMES = ("dark", "bright")


@dataclass(eq=False)
class Image:
    """An RGB image: (height, width, 3) float64 array with every value in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise DimensionError(f"expected (H, W, 3) data, got shape {self.data.shape}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise DimensionError(f"image dimensions must be positive, got {self.data.shape}")
        if not ((self.data >= 0.0) & (self.data <= 1.0)).all():
            raise ValueError("pixel values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(eq=False)
class LabeledImage:
    image: Image
    label: int

    def __post_init__(self):
        if self.label < 0:
            raise ValueError(f"label must be non-negative, got {self.label}")


@dataclass(eq=False)
class Dataset:
    items: list[LabeledImage]
    class_names: tuple[str, ...] = CIFAR10_CLASS_NAMES

    def __post_init__(self):
        if not self.items:
            raise ValueError("dataset must be non-empty")
        h, w = self.items[0].image.height, self.items[0].image.width
        for it in self.items:
            if (it.image.height, it.image.width) != (h, w):
                raise DimensionError("all dataset images must share dimensions")
            if it.label >= len(self.class_names):
                raise ValueError(f"label {it.label} out of range for {len(self.class_names)} classes")

    def __len__(self) -> int:
        return len(self.items)


def load_cifar10_records(raw: bytes, max_count: int | None = None) -> Dataset:
    """Parse CIFAR-10 binary-format records into a dataset.

    Each record is 3073 bytes: one label byte then 1024 R, 1024 G, 1024 B
    bytes, row-major per channel plane. Byte b decodes to exactly b/255.
    """
    if len(raw) % CIFAR_RECORD_BYTES != 0:
        raise FormatError(
            f"byte length {len(raw)} is not a multiple of {CIFAR_RECORD_BYTES}"
        )
    available = len(raw) // CIFAR_RECORD_BYTES
    if available == 0:
        raise FormatError("no records present")
    if max_count is None:
        count = available
    else:
        if max_count < 1:
            raise ValueError(f"max_count must be >= 1, got {max_count}")
        count = min(max_count, available)

    # slice first so no bytes beyond the requested records are ever touched
    buf = np.frombuffer(raw[: count * CIFAR_RECORD_BYTES], dtype=np.uint8)
    records = buf.reshape(count, CIFAR_RECORD_BYTES)
    labels = records[:, 0]
    bad = np.nonzero(labels > 9)[0]
    if bad.size:
        raise CorruptRecordError(f"record {bad[0]} has label byte {labels[bad[0]]} > 9")
    planes = records[:, 1:].reshape(count, 3, CIFAR_SIDE, CIFAR_SIDE)
    pixels = planes.transpose(0, 2, 3, 1).astype(np.float64) / 255.0
    items = [LabeledImage(Image(pixels[i]), int(labels[i])) for i in range(count)]
    return Dataset(items, CIFAR10_CLASS_NAMES)


def load_cifar10_path(path: str | Path, max_count: int | None = None) -> Dataset:
    """Load CIFAR-10 records from a .bin file, or every data_batch_*.bin in a directory."""
    p = Path(path)
    if p.is_dir():
        batches = sorted(p.glob("data_batch_*.bin"))
        if not batches:
            raise FormatError(f"no data_batch_*.bin files under {p}")
        raw = b"".join(b.read_bytes() for b in batches)
    else:
        raw = p.read_bytes()
    return load_cifar10_records(raw, max_count)


def quantize_to_bytes(data: np.ndarray) -> np.ndarray:
    """Map [0,1] floats to uint8 by round-half-up on v*255."""
    return np.clip(np.floor(data * 255.0 + 0.5), 0, 255).astype(np.uint8)


def encode_ppm(img: Image) -> bytes:
    """Encode an image as binary PPM (P6, maxval 255)."""
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + quantize_to_bytes(img.data).tobytes()


def decode_ppm(raw: bytes) -> Image:
    """Decode a binary PPM (P6, maxval 255) produced by :func:`encode_ppm`.

    Accepts standard header whitespace and ``#`` comments.
    """
    pos = 0

    def skip_ws():
        nonlocal pos
        while pos < len(raw):
            if raw[pos : pos + 1].isspace():
                pos += 1
            elif raw[pos : pos + 1] == b"#":
                while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                    pos += 1
            else:
                break

    def token() -> bytes:
        nonlocal pos
        skip_ws()
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PPM header")
        return raw[start:pos]

    if token() != b"P6":
        raise FormatError("not a P6 PPM stream")
    try:
        width, height, maxval = int(token()), int(token()), int(token())
    except ValueError as exc:
        raise FormatError(f"bad PPM header field: {exc}") from exc
    if width < 1 or height < 1:
        raise FormatError("PPM dimensions must be positive")
    if maxval != 255:
        raise FormatError(f"only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    body = raw[pos:]
    expected = width * height * 3
    if len(body) != expected:
        raise FormatError(f"PPM body has {len(body)} bytes, expected {expected}")
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(height, width, 3)
    return Image(pixels.astype(np.float64) / 255.0)


def make_montage(images: list[Image], columns: int, pad: int = 0) -> Image:
    """Lay images out row-major on a grid with white padding between cells."""
    if not images:
        raise ValueError("need at least one image")
    if columns < 1:
        raise ValueError(f"columns must be >= 1, got {columns}")
    if pad < 0:
        raise ValueError(f"pad must be >= 0, got {pad}")
    h, w = images[0].height, images[0].width
    for img in images:
        if (img.height, img.width) != (h, w):
            raise DimensionError("montage images must share dimensions")
    rows = -(-len(images) // columns)
    out_h = rows * h + (rows - 1) * pad
    out_w = columns * w + (columns - 1) * pad
    grid = np.ones((out_h, out_w, 3), dtype=np.float64)
    for idx, img in enumerate(images):
        r, c = divmod(idx, columns)
        top, left = r * (h + pad), c * (w + pad)
        grid[top : top + h, left : left + w] = img.data
    return Image(grid)


def synthesize_dataset(kind: str, count: int, seed: int, size: int = 32) -> Dataset:
    """Generate a deterministic two-class dataset; classes differ by mean intensity.

    Labels alternate 0 (dark), 1 (bright). Kinds: ``constant`` flat images,
    ``checkerboard`` alternating cells CHECKER_AMPLITUDE apart, ``noise``
    uniform pixels in the class's intensity band.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if kind not in ("constant", "checkerboard", "noise"):
        raise ValueError(f"unknown synthetic kind {kind!r}")
    rng = np.random.default_rng(seed)
    items = []
    for i in range(count):
        label = i % 2
        base = 0.25 if label == 0 else 0.75
        if kind == "constant":
            level = base + rng.uniform(-0.05, 0.05)
            data = np.full((size, size, 3), level)
        elif kind == "checkerboard":
            rr, cc = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
            parity = ((rr + cc) % 2).astype(np.float64)
            cells = base - CHECKER_AMPLITUDE / 2 + parity * CHECKER_AMPLITUDE
            data = np.repeat(cells[:, :, None], 3, axis=2)
        else:
            lo, hi = (0.0, 0.5) if label == 0 else (0.5, 1.0)
            data = rng.uniform(lo, hi, size=(size, size, 3))
        items.append(LabeledImage(Image(data), label))
    return Dataset(items, SYNTHETIC_CLASS_NAMES)


def dataset_to_cifar_bytes(ds: Dataset) -> bytes:
    """Serialize 32x32 images into CIFAR-10 binary records (quantized to 8 bits)."""
    out = bytearray()
    for it in ds.items:
        if (it.image.height, it.image.width) != (CIFAR_SIDE, CIFAR_SIDE):
            raise DimensionError("CIFAR records require 32x32 images")
        if it.label > 9:
            raise ValueError(f"label {it.label} does not fit a CIFAR record")
        out.append(it.label)
        out += quantize_to_bytes(it.image.data).transpose(2, 0, 1).tobytes()
    return bytes(out)
