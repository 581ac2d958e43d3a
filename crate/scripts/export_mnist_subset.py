"""Write the 5000-digit MNIST subset bundled with mlxtend as IDX files.

Usage: pip download --no-deps mlxtend && python3 scripts/export_mnist_subset.py mlxtend-*.whl assets/mnist
"""
import gzip
import io
import struct
import sys
import zipfile

import numpy as np


def main(wheel, out_dir):
    with zipfile.ZipFile(wheel) as z:
        raw = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz"))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",", dtype=np.int64)
    pixels = table[:, :784].astype(np.uint8)
    labels = table[:, 784].astype(np.uint8)
    n = len(labels)
    with open(f"{out_dir}/images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(pixels.tobytes())
    with open(f"{out_dir}/labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.tobytes())


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
