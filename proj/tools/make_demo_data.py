#!/usr/bin/env python3
"""Generates data/demo_binary.libsvm: a small two-class problem in LIBSVM format.

Two overlapping gaussian clouds over 64 sparse features, 0/1 labels, with a
15% label flip so the classes are never linearly separable. Features 13 and
47 are deliberately never emitted, leaving all-zero rows for the
preprocessing path to drop. Deterministic for a fixed seed.
"""

import argparse
import random


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/demo_binary.libsvm")
    ap.add_argument("--samples", type=int, default=600)
    ap.add_argument("--features", type=int, default=64)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    dead = {13, 47}
    alive = [i for i in range(1, args.features + 1) if i not in dead]
    # A sparse separating direction; the clouds sit at +-0.8 along it.
    direction = {i: rng.gauss(0.0, 1.0) for i in rng.sample(alive, 12)}

    lines = []
    for _ in range(args.samples):
        label = rng.choice((0, 1))
        shift = 0.8 if label == 1 else -0.8
        row = {}
        for i in alive:
            if rng.random() < 0.2:
                row[i] = rng.gauss(0.0, 1.0)
        for i, w in direction.items():
            row[i] = row.get(i, 0.0) + shift * w
        if not row:
            row[rng.choice(alive)] = 1.0
        if rng.random() < 0.15:
            label = 1 - label
        feats = " ".join(f"{i}:{row[i]:.6g}" for i in sorted(row))
        lines.append(f"{label} {feats}")

    with open(args.out, "w") as out:
        out.write("\n".join(lines) + "\n")
    print(f"wrote {args.samples} samples to {args.out}")


if __name__ == "__main__":
    main()
