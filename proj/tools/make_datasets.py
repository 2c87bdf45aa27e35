#!/usr/bin/env python3
"""Materialize the datasets used by the experiments into --out.

Produces:
  iris.csv      4 numeric columns + class name (UCI layout), 150 rows
  wdbc.csv      id, M/B diagnosis, 30 numeric columns (WDBC layout), 569 rows
  digits28-*    a 12000-sample 28x28 digit corpus in IDX format, built
                deterministically from sklearn's 8x8 digits by upscaling,
                jittering, and per-sample noise. Stands in for an MNIST
                subset on machines without the MNIST files; real MNIST
                IDX files can be used instead via the experiment config.

Everything is seeded; reruns are byte-identical.
"""

import argparse
import struct
from pathlib import Path

import numpy as np
from sklearn.datasets import load_breast_cancer, load_digits, load_iris

IRIS_CLASS_NAMES = ["Iris-setosa", "Iris-versicolor", "Iris-virginica"]


def write_iris(out: Path) -> None:
    ds = load_iris()
    lines = []
    for row, target in zip(ds.data, ds.target):
        feats = ",".join(f"{v:.1f}" for v in row)
        lines.append(f"{feats},{IRIS_CLASS_NAMES[target]}")
    (out / "iris.csv").write_text("\n".join(lines) + "\n")


def write_wdbc(out: Path) -> None:
    ds = load_breast_cancer()
    # sklearn target: 0 = malignant, 1 = benign
    lines = []
    for i, (row, target) in enumerate(zip(ds.data, ds.target)):
        diag = "M" if target == 0 else "B"
        feats = ",".join(repr(float(v)) for v in row)
        lines.append(f"{1000001 + i},{diag},{feats}")
    (out / "wdbc.csv").write_text("\n".join(lines) + "\n")


def write_idx(images: np.ndarray, labels: np.ndarray, img_path: Path, lbl_path: Path) -> None:
    n, h, w = images.shape
    with open(img_path, "wb") as f:
        f.write(struct.pack(">iiii", 2051, n, h, w))
        f.write(images.astype(np.uint8).tobytes())
    with open(lbl_path, "wb") as f:
        f.write(struct.pack(">ii", 2049, n))
        f.write(labels.astype(np.uint8).tobytes())


def make_digits28(out: Path, n_samples: int = 12000, seed: int = 20240901) -> None:
    rng = np.random.default_rng(seed)
    base = load_digits()
    base_images = base.images  # (1797, 8, 8), values 0..16
    base_labels = base.target

    images = np.zeros((n_samples, 28, 28), dtype=np.uint8)
    labels = np.zeros(n_samples, dtype=np.uint8)
    for i in range(n_samples):
        j = rng.integers(0, len(base_images))
        img8 = base_images[j]
        img24 = np.kron(img8, np.ones((3, 3))) * (255.0 / 16.0)
        canvas = np.zeros((28, 28))
        dy, dx = rng.integers(0, 5, size=2)  # placement jitter, border 0..4
        canvas[dy : dy + 24, dx : dx + 24] = img24
        canvas += rng.normal(0.0, 24.0, size=canvas.shape)  # per-sample noise
        images[i] = np.clip(canvas, 0, 255).astype(np.uint8)
        lbl = int(base_labels[j])
        if rng.random() < 0.03:  # label noise drives memorization
            lbl = int((lbl + 1 + rng.integers(0, 9)) % 10)
        labels[i] = lbl

    write_idx(images, labels, out / "digits28-images-idx3-ubyte", out / "digits28-labels-idx1-ubyte")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    ap.add_argument("--digits-samples", type=int, default=12000)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    write_iris(args.out)
    write_wdbc(args.out)
    make_digits28(args.out, n_samples=args.digits_samples)
    print(f"datasets written to {args.out}")


if __name__ == "__main__":
    main()
