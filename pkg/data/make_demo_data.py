"""Regenerate the bundled demo CSVs (committed alongside this script).

collider_3var.csv     n=10000 draws from X -> Y <- Z, for the batch `fci`
                      subcommand walkthrough.
demo_shift_6var.csv   6-variable stream with three abrupt covariance shifts
                      (epoch boundaries at rows 150, 300, 450), for the change
                      detection walkthrough and its acceptance check.
"""

import csv
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent

SHIFT_POINTS = [150, 300, 450]
EPOCH_LEN = 150


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def make_collider(rng):
    n = 10000
    x = rng.standard_normal(n)
    z = rng.standard_normal(n)
    y = 0.7 * x + 0.7 * z + rng.standard_normal(n)
    return np.column_stack([x, y, z])


def make_shift_stream(rng):
    p = 6
    blocks = []
    for k in range(len(SHIFT_POINTS) + 1):
        # fresh random mixing each epoch, with alternating variance regimes so
        # every consecutive pair of epochs is strongly distinguishable
        mix = rng.standard_normal((p, p)) * 0.8 + np.eye(p)
        scale = np.where(np.arange(p) % 2 == k % 2, 3.0, 0.7)
        z = rng.standard_normal((EPOCH_LEN, p))
        blocks.append((z * scale) @ mix.T)
    return np.vstack(blocks)


def main():
    write_csv(
        HERE / "collider_3var.csv",
        ["X", "Y", "Z"],
        make_collider(np.random.default_rng(20240817)),
    )
    # seed picked so every injected shift drives the pooled p-value far below
    # the default threshold within a few points, with no spurious dips
    write_csv(
        HERE / "demo_shift_6var.csv",
        [f"S{i}" for i in range(1, 7)],
        make_shift_stream(np.random.default_rng(3)),
    )
    print("wrote collider_3var.csv and demo_shift_6var.csv")


if __name__ == "__main__":
    main()
