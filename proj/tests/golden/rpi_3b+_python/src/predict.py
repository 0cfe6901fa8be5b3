#!/usr/bin/env python3
"""Prediction program for thing Sensor on target rpi_3b+_python.

Loads the converted model from ../model/model.mlq. On the device the same
container is served through the TensorFlow Lite runtime; this reference
pipeline keeps predictions reproducible without it.
"""

import csv
import math
import struct
import sys

MODEL_PATH = "../model/model.mlq"
EXPECTED_DTYPE = 0  # float32
INPUT_WIDTH = 5
FEATURES = ["reading", "window"]


def load_mlq(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != b"MLQ1":
        raise ValueError("%s: missing MLQ1 magic" % path)
    version, dtype = blob[4], blob[5]
    if version != 1:
        raise ValueError("%s: unsupported version %d" % (path, version))
    if dtype != EXPECTED_DTYPE:
        raise ValueError("%s: dtype %d, this target deploys dtype %d"
                         % (path, dtype, EXPECTED_DTYPE))
    (layer_count,) = struct.unpack_from("<H", blob, 6)
    offset = 8
    layers = []
    for _ in range(layer_count):
        in_dim, out_dim = struct.unpack_from("<II", blob, offset)
        activation = blob[offset + 8]
        offset += 9
        count = in_dim * out_dim
        if dtype == 0:
            weights = list(struct.unpack_from("<%df" % count, blob, offset))
            offset += 4 * count
        else:
            scale, zero_point = struct.unpack_from("<fi", blob, offset)
            offset += 8
            quantized = struct.unpack_from("<%db" % count, blob, offset)
            offset += count
            weights = [scale * (q - zero_point) for q in quantized]
        biases = list(struct.unpack_from("<%df" % out_dim, blob, offset))
        offset += 4 * out_dim
        layers.append((in_dim, out_dim, activation, weights, biases))
    return layers


def forward(layers, row):
    current = row
    for in_dim, out_dim, activation, weights, biases in layers:
        nxt = []
        for o in range(out_dim):
            acc = biases[o]
            base = o * in_dim
            for i in range(in_dim):
                acc += weights[base + i] * current[i]
            if activation == 0:
                acc = max(acc, 0.0)
            elif activation == 1:
                acc = 1.0 / (1.0 + math.exp(-acc))
            nxt.append(acc)
        current = nxt
    return current


def main():
    if len(sys.argv) != 2:
        raise SystemExit("usage: predict.py <features.csv>")
    layers = load_mlq(MODEL_PATH)
    writer = csv.writer(sys.stdout)
    writer.writerow(["row", "label", "score_0", "score_1"])
    with open(sys.argv[1], newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for index, row in enumerate(reader):
            values = [float(v) for v in row[:INPUT_WIDTH]]
            scores = forward(layers, values)
            label = 1 if scores[1] > scores[0] else 0
            writer.writerow([index, label, "%.6f" % scores[0], "%.6f" % scores[1]])


if __name__ == "__main__":
    main()
