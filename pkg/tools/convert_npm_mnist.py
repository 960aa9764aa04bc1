"""Convert the digit JSON files of the npm ``mnist`` package into a gzipped IDX pair.

The package (https://github.com/cazala/mnist) ships 10000 MNIST digits as
flat arrays of intensities normalized to [0, 1] with three decimals. They
are mapped back to 0-255 by rounding ``x * 255``.

    npm pack mnist && tar xzf mnist-*.tgz
    python tools/convert_npm_mnist.py package/src/digits data/
"""
import argparse
import json
from pathlib import Path

import numpy as np

from topspark.dataset import LabeledDataset, write_idx


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("digits_dir", type=Path)
    ap.add_argument("out_dir", type=Path)
    args = ap.parse_args()

    images, labels = [], []
    for digit in range(10):
        raw = json.loads((args.digits_dir / f"{digit}.json").read_text())["data"]
        arr = np.rint(np.asarray(raw, dtype=np.float64) * 255).clip(0, 255).astype(np.uint8)
        arr = arr[: arr.size // 784 * 784].reshape(-1, 784)
        images.append(arr)
        labels.append(np.full(arr.shape[0], digit, dtype=np.uint8))
    ds = LabeledDataset(np.concatenate(images), np.concatenate(labels), "mnist10k")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_idx(
        ds,
        args.out_dir / "mnist10k-images-idx3-ubyte.gz",
        args.out_dir / "mnist10k-labels-idx1-ubyte.gz",
    )
    print(f"wrote {len(ds)} samples, per-class counts {np.bincount(ds.labels).tolist()}")


if __name__ == "__main__":
    main()
