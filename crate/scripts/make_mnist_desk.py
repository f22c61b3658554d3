"""Build the desk-scale MNIST subset used by the acceptance suite.

Input: the `digits/*.json` files shipped in the `mnist` npm package
(`npm pack mnist && tar xzf mnist-*.tgz`), each holding 784-pixel MNIST
digits scaled to [0, 1] with three decimals. Pixels are converted back to
bytes, shuffled with a fixed seed and split into a 2000-image training
set and a 1000-image test set, written in IDX format.

usage: python3 make_mnist_desk.py <package/src/digits> <out_dir>
"""
import json
import random
import struct
import sys
from pathlib import Path


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    samples = []
    for digit in range(10):
        data = json.loads((src / f"{digit}.json").read_text())["data"]
        for k in range(0, len(data), 784):
            px = [int(round(v * 255)) for v in data[k : k + 784]]
            assert all(0 <= p <= 255 for p in px)
            samples.append((px, digit))
    random.Random(20140101).shuffle(samples)
    train, test = samples[:2000], samples[2000:3000]
    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "train-images-idx3-ubyte", [s[0] for s in train])
    write_labels(out / "train-labels-idx1-ubyte", [s[1] for s in train])
    write_images(out / "t10k-images-idx3-ubyte", [s[0] for s in test])
    write_labels(out / "t10k-labels-idx1-ubyte", [s[1] for s in test])
    print(f"{len(samples)} digits available; wrote 2000 train / 1000 test to {out}")


if __name__ == "__main__":
    main()
