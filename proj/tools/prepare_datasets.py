#!/usr/bin/env python3
# Copyright 2026 The RDenseCNN Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Lays out MNIST and CIFAR-10 test data under a dataset root.

Sources are npm packages reachable from registry mirrors:
  mnist-data     ships the original IDX files unchanged.
  tfjs-cifar10   ships CIFAR-10 as lossless PNG sprites (one 1024-pixel RGB
                 row per image) plus JSON label lists; these are re-encoded
                 into the original binary batch layout
                 (1 label byte, 1024 R, 1024 G, 1024 B per record).

Usage: prepare_datasets.py ROOT   (needs `npm` and Pillow)
"""
import json
import pathlib
import shutil
import subprocess
import sys
import tarfile
import tempfile

from PIL import Image


def npm_unpack(name, workdir):
    out = subprocess.run(["npm", "pack", name], cwd=workdir, check=True,
                         capture_output=True, text=True).stdout.strip().splitlines()[-1]
    dest = workdir / name
    with tarfile.open(workdir / out) as tar:
        tar.extractall(dest)
    return dest / "package"


def prepare_mnist(root, workdir):
    pkg = npm_unpack("mnist-data", workdir)
    dest = root / "mnist"
    dest.mkdir(parents=True, exist_ok=True)
    for f in (pkg / "data").iterdir():
        shutil.copy(f, dest / f.name)


def encode_sprite(png, labels):
    img = Image.open(png).convert("RGB")
    width, count = img.size
    assert width == 1024 and count == len(labels), (png, img.size, len(labels))
    raw = img.tobytes()
    out = bytearray()
    for i, label in enumerate(labels):
        row = raw[i * 3072:(i + 1) * 3072]
        out.append(label)
        for c in range(3):
            out += row[c::3]
    return bytes(out)


def prepare_cifar10(root, workdir):
    pkg = npm_unpack("tfjs-cifar10", workdir)
    dest = root / "cifar10" / "cifar-10-batches-bin"
    dest.mkdir(parents=True, exist_ok=True)
    train = json.loads((pkg / "train_lables.json").read_text())
    test = json.loads((pkg / "test_lables.json").read_text())
    for b in range(5):
        data = encode_sprite(pkg / f"data_batch_{b + 1}.png", train[b * 10000:(b + 1) * 10000])
        (dest / f"data_batch_{b + 1}.bin").write_bytes(data)
    (dest / "test_batch.bin").write_bytes(encode_sprite(pkg / "test_batch.png", test))


def main():
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    root = pathlib.Path(sys.argv[1])
    with tempfile.TemporaryDirectory() as tmp:
        workdir = pathlib.Path(tmp)
        prepare_mnist(root, workdir)
        prepare_cifar10(root, workdir)


if __name__ == "__main__":
    main()
