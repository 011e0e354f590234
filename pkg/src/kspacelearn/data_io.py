"""Synthetic phantom generation, measurement simulation and bit-exact file
formats for images, k-space fields, patterns and dataset manifests.

The binary "BKF1" field format:

    magic   4 bytes  b"BKF1"
    kind    1 byte   1=real-image 2=complex-image 3=pattern 4=param-vector
    height  u32 little-endian
    width   u32 little-endian
    payload f64 little-endian, row-major
            real-image / pattern: height*width values
            complex-image: full real plane then full imaginary plane
            param-vector: height*width weights then alpha
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import ParamVector, Rng, as_image, cgauss_sample
from .errors import (BadMagicError, ConfigError, DimensionError,
                     FileFormatError, NonFiniteDataError, RangeError,
                     TruncatedFileError)
from .linops import dft2
from .upper_level import TrainingPair

__all__ = [
    "Dataset",
    "FieldFile",
    "export_pgm",
    "make_dataset",
    "make_phantom",
    "read_field",
    "read_manifest",
    "simulate_measurements",
    "write_field",
    "write_manifest",
]

MAGIC = b"BKF1"
KINDS = {"real-image": 1, "complex-image": 2, "pattern": 3, "param-vector": 4}
KIND_NAMES = {v: k for k, v in KINDS.items()}


@dataclass(frozen=True)
class FieldFile:
    kind: str
    data: object  # ndarray for image kinds, ParamVector for param-vector

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FileFormatError(f"unknown field kind {self.kind!r}")


def _payload(ff):
    if ff.kind == "complex-image":
        a = np.asarray(ff.data, dtype=np.complex128)
        return a.shape, np.concatenate([a.real.ravel(), a.imag.ravel()])
    if ff.kind == "param-vector":
        pv = ff.data
        return pv.weights.shape, pv.to_vec()
    a = np.asarray(ff.data, dtype=np.float64)
    return a.shape, a.ravel()


def write_field(path, ff):
    """Write a FieldFile; the round trip through :func:`read_field` is
    byte-exact."""
    shape, payload = _payload(ff)
    h, w = shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<BII", KINDS[ff.kind], h, w))
        fh.write(np.asarray(payload, dtype="<f8").tobytes())


def read_field(path):
    """Read and validate a FieldFile; raises typed errors on malformed input."""
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: missing BKF1 magic")
    if len(raw) < 13:
        raise TruncatedFileError(f"{path}: header truncated")
    kind_byte, h, w = struct.unpack("<BII", raw[4:13])
    if kind_byte not in KIND_NAMES:
        raise FileFormatError(f"{path}: unknown kind byte {kind_byte}")
    kind = KIND_NAMES[kind_byte]
    if h < 1 or w < 1:
        raise FileFormatError(f"{path}: nonpositive dimensions {h}x{w}")
    n = h * w
    expected = {"real-image": n, "complex-image": 2 * n,
                "pattern": n, "param-vector": n + 1}[kind]
    body = raw[13:]
    if len(body) != 8 * expected:
        raise TruncatedFileError(
            f"{path}: expected {8 * expected} payload bytes, got {len(body)}")
    vals = np.frombuffer(body, dtype="<f8")
    if not np.all(np.isfinite(vals)):
        raise NonFiniteDataError(f"{path}: payload contains NaN/Inf")
    if kind == "complex-image":
        data = (vals[:n] + 1j * vals[n:]).reshape(h, w)
    elif kind == "param-vector":
        if np.any(vals[:n] < 0) or np.any(vals[:n] > 1) or vals[n] < 0:
            raise RangeError(f"{path}: param-vector values out of range")
        data = ParamVector(vals[:n].reshape(h, w).copy(), float(vals[n]))
    elif kind == "pattern":
        if np.any(vals < 0) or np.any(vals > 1):
            raise RangeError(f"{path}: pattern weights outside [0, 1]")
        data = vals.reshape(h, w).copy()
    else:
        data = vals.reshape(h, w).copy()
    return FieldFile(kind=kind, data=data)


# ---------------------------------------------------------------------------
# Synthetic data

def make_phantom(rng, shape, ellipse_count):
    """Piecewise-constant phantom: a fixed outer skull-like ellipse plus
    randomly placed, rotated, intensity-weighted ellipses, clipped to [0, 1].
    Returned as a complex image with zero imaginary part."""
    h, w = int(shape[0]), int(shape[1])
    if h < 8 or w < 8:
        raise DimensionError("phantom shape must be at least 8x8")
    if ellipse_count < 1:
        raise ConfigError("ellipse_count must be >= 1")
    yy, xx = np.meshgrid(np.linspace(-1, 1, h), np.linspace(-1, 1, w),
                         indexing="ij")
    img = np.zeros((h, w))
    img += 0.7 * (((yy / 0.92) ** 2 + (xx / 0.78) ** 2) <= 1.0)
    g = rng.substream(0).generator()
    for _ in range(ellipse_count):
        cy, cx = g.uniform(-0.5, 0.5, size=2)
        ay, ax = g.uniform(0.08, 0.4, size=2)
        ang = g.uniform(0.0, np.pi)
        amp = g.uniform(-0.4, 0.6)
        c, s = np.cos(ang), np.sin(ang)
        ry = c * (yy - cy) + s * (xx - cx)
        rx = -s * (yy - cy) + c * (xx - cx)
        img += amp * (((ry / ay) ** 2 + (rx / ax) ** 2) <= 1.0)
    return np.clip(img, 0.0, 1.0).astype(np.complex128)


def simulate_measurements(u_star, noise_sigma, rng):
    """Fully sampled noisy k-space: F u* plus complex Gaussian white noise."""
    u_star = as_image(u_star)
    return dft2(u_star) + cgauss_sample(rng, u_star.shape, noise_sigma)


@dataclass
class Dataset:
    pairs: list
    splits: list  # "train" | "test", one per pair
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.pairs:
            raise ConfigError("dataset must be nonempty")
        if len(self.pairs) != len(self.splits):
            raise ConfigError("one split tag per pair required")
        shape = self.pairs[0].u_star.shape
        for p in self.pairs:
            if p.u_star.shape != shape:
                raise ConfigError("inconsistent shapes across pairs")

    def split(self, tag):
        return [p for p, s in zip(self.pairs, self.splits) if s == tag]


def make_dataset(seed, shape=(32, 32), n_train=5, n_test=10, ellipse_count=6,
                 noise_sigma_rel=0.02):
    """Default desk-scale dataset: random phantoms and their fully sampled
    noisy k-space. The noise level is ``noise_sigma_rel`` times the largest
    k-space magnitude of each image."""
    rng = Rng(seed)
    pairs = []
    splits = []
    total = n_train + n_test
    for i in range(total):
        u = make_phantom(rng.substream(1, i), shape, ellipse_count)
        sigma = noise_sigma_rel * float(np.max(np.abs(dft2(u))))
        y = simulate_measurements(u, sigma, rng.substream(2, i))
        pairs.append(TrainingPair(u_star=u, y=y))
        splits.append("train" if i < n_train else "test")
    prov = {"seed": seed, "shape": f"{shape[0]}x{shape[1]}",
            "n_train": n_train, "n_test": n_test,
            "ellipse_count": ellipse_count,
            "noise_sigma_rel": noise_sigma_rel}
    return Dataset(pairs=pairs, splits=splits, provenance=prov)


# ---------------------------------------------------------------------------
# Dataset manifests (line-oriented key-value text)

def write_manifest(path, dataset, data_dir=None):
    """Write the dataset to ``data_dir`` (default: next to the manifest) and
    a manifest listing pair files, split tags and provenance."""
    path = Path(path)
    data_dir = Path(data_dir) if data_dir is not None else path.parent
    data_dir.mkdir(parents=True, exist_ok=True)
    lines = ["format=kspacelearn-manifest-v1"]
    for k, v in dataset.provenance.items():
        lines.append(f"prov.{k}={v}")
    lines.append(f"count={len(dataset.pairs)}")
    for i, (pair, split) in enumerate(zip(dataset.pairs, dataset.splits)):
        u_name = f"pair{i:04d}_u.bkf"
        y_name = f"pair{i:04d}_y.bkf"
        write_field(data_dir / u_name, FieldFile("real-image", pair.u_star.real))
        write_field(data_dir / y_name, FieldFile("complex-image", pair.y))
        lines.append(f"pair={u_name}|{y_name}|{split}")
    path.write_text("\n".join(lines) + "\n")


def read_manifest(path):
    """Read a dataset manifest and its referenced field files."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines or lines[0] != "format=kspacelearn-manifest-v1":
        raise FileFormatError(f"{path}: not a kspacelearn manifest")
    prov = {}
    pairs = []
    splits = []
    count = None
    for ln in lines[1:]:
        key, _, val = ln.partition("=")
        if key.startswith("prov."):
            prov[key[5:]] = val
        elif key == "count":
            count = int(val)
        elif key == "pair":
            parts = val.split("|")
            if len(parts) != 3:
                raise FileFormatError(f"{path}: malformed pair line {ln!r}")
            u_name, y_name, split = parts
            if split not in ("train", "test"):
                raise FileFormatError(f"{path}: unknown split tag {split!r}")
            u = read_field(path.parent / u_name)
            y = read_field(path.parent / y_name)
            pairs.append(TrainingPair(
                u_star=np.asarray(u.data, dtype=np.complex128),
                y=np.asarray(y.data, dtype=np.complex128)))
            splits.append(split)
        else:
            raise FileFormatError(f"{path}: unknown manifest key {key!r}")
    if count is not None and count != len(pairs):
        raise FileFormatError(
            f"{path}: manifest promises {count} pairs, found {len(pairs)}")
    return Dataset(pairs=pairs, splits=splits, provenance=prov)


# ---------------------------------------------------------------------------
# Human-viewable output

def export_pgm(path, plane, normalize=False):
    """Write a real plane as 16-bit binary PGM (P5, big-endian samples).

    ``normalize`` maps [min, max] to [0, 65535]; otherwise values are clamped
    to [0, 1] and scaled."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise DimensionError("export_pgm expects a 2-D real plane")
    if not np.all(np.isfinite(plane)):
        raise NonFiniteDataError("plane contains NaN/Inf")
    if normalize:
        lo, hi = float(plane.min()), float(plane.max())
        scaled = (plane - lo) / (hi - lo) if hi > lo else np.zeros_like(plane)
    else:
        scaled = np.clip(plane, 0.0, 1.0)
    q = np.round(scaled * 65535.0).astype(">u2")
    h, w = plane.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(q.tobytes())
