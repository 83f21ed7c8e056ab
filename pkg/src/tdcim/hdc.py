"""Binary hyperdimensional classifier running on software or on the CiM fabric.

Encoding is a random binary projection of min-max quantized features,
binarized at the per-vector median. Training bundles encodings per class by
bitwise majority; inference picks the class hypervector at minimum Hamming
distance.

The fabric backend stores the transposed base matrix tile by tile and runs
one binary MAC per feature bit-plane, shift-accumulating the sensed counts.
Inference stores class hypervectors as rows and sums CAM counts over
dimension tiles.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tdcim.array import Fidelity, Mode, OpReceipt, TdCimArray


@dataclass
class Quantizer:
    lo: np.ndarray
    hi: np.ndarray
    bits: int = 4

    @classmethod
    def fit(cls, features, bits: int = 4) -> Quantizer:
        if bits < 1:
            raise ValueError("quant_bits must be >= 1")
        x = np.asarray(features, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("features must be finite")
        return cls(x.min(axis=0), x.max(axis=0), bits)

    def __call__(self, features) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=float))
        if x.shape[-1] != self.lo.size:
            raise ValueError(f"expected {self.lo.size} features, got {x.shape[-1]}")
        span = self.hi - self.lo
        levels = (1 << self.bits) - 1
        safe = np.where(span > 0, span, 1.0)
        scaled = np.where(span > 0, (x - self.lo) / safe, 0.0)
        return np.clip(np.rint(scaled * levels), 0, levels).astype(np.int64)


@dataclass
class BaseMatrix:
    bits: np.ndarray  # (N, D) uint8
    seed: int

    @classmethod
    def generate(cls, n_features: int, dim: int, seed: int) -> BaseMatrix:
        rng = np.random.default_rng(seed)
        return cls(rng.integers(0, 2, size=(n_features, dim), dtype=np.uint8), seed)

    @property
    def n_features(self) -> int:
        return self.bits.shape[0]

    @property
    def dim(self) -> int:
        return self.bits.shape[1]


def binarize(raw) -> np.ndarray:
    """1 where a component is strictly above its vector's median."""
    raw = np.atleast_2d(np.asarray(raw))
    return (raw > np.median(raw, axis=-1, keepdims=True)).astype(np.uint8)


def hamming(a, b) -> np.ndarray:
    """Pairwise Hamming distances between rows of ``a`` (M, D) and ``b`` (C, D)."""
    a = np.atleast_2d(np.asarray(a, dtype=np.int64))
    b = np.atleast_2d(np.asarray(b, dtype=np.int64))
    # |a-b| over bits == a + b - 2ab
    return a.sum(1)[:, None] + b.sum(1)[None, :] - 2 * a @ b.T


class Software:
    """Exact integer reference."""

    def raw(self, q: np.ndarray, base: BaseMatrix, planes: int) -> np.ndarray:
        return q @ base.bits.astype(np.int64)

    def distances(self, hvs: np.ndarray, class_hvs: np.ndarray) -> np.ndarray:
        return hamming(hvs, class_hvs)


@dataclass
class Fabric:
    """Runs encoding MACs and search on a :class:`TdCimArray` used as a reusable tile."""

    array: TdCimArray
    fidelity: Fidelity = Fidelity.DIVIDER
    seed: int = 0
    record: bool = False
    mac_receipts: list[OpReceipt] = field(default_factory=list)
    cam_receipts: list[OpReceipt] = field(default_factory=list)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)

    def _load_tile(self, block: np.ndarray):
        r, c = self.array.shape
        tile = np.zeros((r, c), dtype=np.uint8)
        tile[:block.shape[0], :block.shape[1]] = block
        self.array.write(tile, self.rng)

    def _op(self, inputs: np.ndarray, mode: Mode) -> np.ndarray:
        if not self.record:
            return self.array.counts(inputs, mode, self.fidelity)
        receipts = self.array.run(inputs, mode, self.fidelity)
        (self.mac_receipts if mode is Mode.MAC else self.cam_receipts).extend(receipts)
        return np.stack([rc.counts for rc in receipts])

    def raw(self, q: np.ndarray, base: BaseMatrix, planes: int) -> np.ndarray:
        rows, cols = self.array.shape
        n, d = base.bits.shape
        m = q.shape[0]
        raw = np.zeros((m, d), dtype=np.int64)
        bt = base.bits.T  # (D, N): one stored row per output dimension
        for d0 in range(0, d, rows):
            d1 = min(d0 + rows, d)
            for n0 in range(0, n, cols):
                n1 = min(n0 + cols, n)
                self._load_tile(bt[d0:d1, n0:n1])
                for p in range(planes):
                    plane = np.zeros((m, cols), dtype=np.uint8)
                    plane[:, :n1 - n0] = (q[:, n0:n1] >> p) & 1
                    counts = self._op(plane, Mode.MAC)
                    raw[:, d0:d1] += counts[:, :d1 - d0] << p
        return raw

    def distances(self, hvs: np.ndarray, class_hvs: np.ndarray) -> np.ndarray:
        rows, cols = self.array.shape
        n_cls, d = class_hvs.shape
        m = hvs.shape[0]
        dist = np.zeros((m, n_cls), dtype=np.int64)
        for c0 in range(0, n_cls, rows):
            c1 = min(c0 + rows, n_cls)
            for d0 in range(0, d, cols):
                d1 = min(d0 + cols, d)
                self._load_tile(class_hvs[c0:c1, d0:d1])
                query = np.zeros((m, cols), dtype=np.uint8)
                query[:, :d1 - d0] = hvs[:, d0:d1]
                counts = self._op(query, Mode.CAM)
                dist[:, c0:c1] += counts[:, :c1 - c0]
        return dist


def encode(features, base: BaseMatrix, quantizer: Quantizer, backend=None) -> np.ndarray:
    """Binary hypervectors (M, D) for feature rows (M, N)."""
    backend = backend or Software()
    q = quantizer(features)
    if q.shape[-1] != base.n_features:
        raise ValueError(f"feature count {q.shape[-1]} != base rows {base.n_features}")
    return binarize(backend.raw(q, base, quantizer.bits))


class UntrainedError(RuntimeError):
    pass


@dataclass
class HdcModel:
    base: BaseMatrix
    quant_bits: int = 4
    quantizer: Quantizer | None = None
    labels: list[int] = field(default_factory=list)
    sums: np.ndarray | None = None  # (C, D) per-class bit counts
    counts: np.ndarray | None = None  # (C,) examples per class
    class_hvs: np.ndarray | None = None

    @classmethod
    def create(cls, n_features: int, dim: int, seed: int = 0, quant_bits: int = 4) -> HdcModel:
        if quant_bits < 1:
            raise ValueError("quant_bits must be >= 1")
        return cls(BaseMatrix.generate(n_features, dim, seed), quant_bits)

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    def encode(self, features, backend=None) -> np.ndarray:
        if self.quantizer is None:
            raise UntrainedError("quantizer not fitted; call train first")
        return encode(features, self.base, self.quantizer, backend)

    def train(self, features, labels, backend=None, classes=None) -> HdcModel:
        x = np.atleast_2d(np.asarray(features, dtype=float))
        y = np.asarray(labels).astype(int)
        if self.quantizer is None:
            self.quantizer = Quantizer.fit(x, self.quant_bits)
        self.labels = sorted(set(int(c) for c in (classes if classes is not None else y)))
        index = {c: i for i, c in enumerate(self.labels)}
        hvs = self.encode(x, backend).astype(np.int64)
        self.sums = np.zeros((self.n_classes, self.dim), dtype=np.int64)
        self.counts = np.zeros(self.n_classes, dtype=np.int64)
        for hv, label in zip(hvs, y):
            self.sums[index[int(label)]] += hv
            self.counts[index[int(label)]] += 1
        return self.finalize()

    def finalize(self) -> HdcModel:
        if self.counts is None or np.any(self.counts == 0):
            empty = [c for c, n in zip(self.labels, self.counts if self.counts is not None else [])
                     if n == 0]
            raise ValueError(f"classes without training examples: {empty}")
        # strict majority; ties go to 0
        self.class_hvs = (2 * self.sums > self.counts[:, None]).astype(np.uint8)
        return self

    def infer(self, features, backend=None) -> tuple[np.ndarray, np.ndarray]:
        """Predicted labels (M,) and similarity D - Hamming (M, C)."""
        if self.class_hvs is None:
            raise UntrainedError("model has not been trained")
        backend = backend or Software()
        hvs = self.encode(features, backend)
        dist = backend.distances(hvs, self.class_hvs)
        pred = np.asarray(self.labels)[np.argmin(dist, axis=1)]
        return pred, self.dim - dist

    def to_dict(self) -> dict:
        if self.class_hvs is None:
            raise UntrainedError("model has not been trained")
        return {
            "seed": self.base.seed,
            "N": self.base.n_features,
            "D": self.dim,
            "quant_bits": self.quant_bits,
            "feature_min": self.quantizer.lo.tolist(),
            "feature_max": self.quantizer.hi.tolist(),
            "classes": {str(c): "".join(map(str, hv)) for c, hv in zip(self.labels, self.class_hvs)},
        }

    @classmethod
    def from_dict(cls, data: dict) -> HdcModel:
        model = cls(BaseMatrix.generate(data["N"], data["D"], data["seed"]), data["quant_bits"])
        model.quantizer = Quantizer(np.asarray(data["feature_min"], float),
                                    np.asarray(data["feature_max"], float), data["quant_bits"])
        items = sorted((int(k), v) for k, v in data["classes"].items())
        model.labels = [k for k, _ in items]
        model.class_hvs = np.array([[int(ch) for ch in v] for _, v in items], dtype=np.uint8)
        return model

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> HdcModel:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def synthetic_blobs(n_examples: int = 200, n_features: int = 16, n_classes: int = 2,
                    seed: int = 0, spread: float = 0.15) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian clusters around uniform random centroids in [0, 1]^N, classes interleaved."""
    rng = np.random.default_rng(seed)
    centers = rng.random((n_classes, n_features))
    y = np.arange(n_examples) % n_classes
    x = centers[y] + spread * rng.standard_normal((n_examples, n_features))
    return x, y


def load_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Header row, decimal feature columns, integer label in the last column."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = [r for r in reader if r]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    x = np.array([[float(v) for v in r[:-1]] for r in rows])
    y = np.array([int(r[-1]) for r in rows])
    return x, y


def save_csv(path, x, y) -> None:
    x = np.asarray(x)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{i}" for i in range(x.shape[1])] + ["label"])
        for row, label in zip(x, y):
            w.writerow([repr(float(v)) for v in row] + [int(label)])
