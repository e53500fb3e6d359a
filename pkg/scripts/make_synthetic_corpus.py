"""Write a small synthetic chest-CT-like PGM corpus with a manifest.

Each 64x64 slice has two dark elliptical lung fields inside a brighter body
outline. Positive cases add a few soft bright blobs (ground-glass patches)
inside the lungs. The output is deterministic for a given seed.

    python3 scripts/make_synthetic_corpus.py --out data/synthetic_ct --n 20
"""
import argparse
import os

import numpy as np

from famglm.ingest import encode_pgm


def ellipse(h, w, cy, cx, ry, rx):
    y, x = np.mgrid[0:h, 0:w]
    return ((y - cy) / ry) ** 2 + ((x - cx) / rx) ** 2 <= 1.0


def slice_image(rng, positive, size=64):
    h = w = size
    img = np.full((h, w), 20.0)
    img[ellipse(h, w, h / 2, w / 2, 0.42 * h, 0.47 * w)] = 170.0
    lungs = []
    for side in (-1, 1):
        cx = w / 2 + side * 0.2 * w + rng.normal(0, 1)
        mask = ellipse(h, w, h / 2 + rng.normal(0, 1), cx, 0.3 * h, 0.14 * w)
        img[mask] = 45.0
        lungs.append(mask)
    if positive:
        y, x = np.mgrid[0:h, 0:w]
        lung = lungs[0] | lungs[1]
        ys, xs = np.nonzero(lung)
        for _ in range(rng.integers(2, 5)):
            k = rng.integers(ys.size)
            r = rng.uniform(3, 6)
            blob = 70.0 * np.exp(-((y - ys[k]) ** 2 + (x - xs[k]) ** 2) / (2 * r * r))
            img += blob * lung
    img += rng.normal(0, 6, (h, w))
    return np.clip(np.rint(img), 0, 255)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data/synthetic_ct")
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    os.makedirs(args.out, exist_ok=True)
    rows = ["path,label"]
    for i in range(args.n):
        label = i % 2
        name = f"slice_{i:02d}.pgm"
        with open(os.path.join(args.out, name), "wb") as fh:
            fh.write(encode_pgm(slice_image(rng, label, args.size)))
        rows.append(f"{name},{label}")
    with open(os.path.join(args.out, "manifest.csv"), "w") as fh:
        fh.write("\n".join(rows) + "\n")
    print(f"wrote {args.n} images and manifest.csv to {args.out}")


if __name__ == "__main__":
    main()
