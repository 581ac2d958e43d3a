"""Procedurally generate the five stand-in texture images (public domain, CC0).

Usage: python3 scripts/make_textures.py assets/textures
"""
import sys

import numpy as np
from PIL import Image

SIDE = 256


def smooth_noise(rng, cells, side=SIDE):
    grid = rng.random((cells + 1, cells + 1))
    t = np.linspace(0, cells, side, endpoint=False)
    i = t.astype(int)
    f = t - i
    f = f * f * (3 - 2 * f)
    a = grid[i][:, i]
    b = grid[i][:, i + 1]
    c = grid[i + 1][:, i]
    d = grid[i + 1][:, i + 1]
    fx = f[None, :]
    fy = f[:, None]
    return (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy


def turbulence(rng, octaves=5, base=4):
    out = np.zeros((SIDE, SIDE))
    for k in range(octaves):
        out += smooth_noise(rng, base * 2**k) / 2**k
    return out / out.max()


def tiles(rng):
    y, x = np.mgrid[0:SIDE, 0:SIDE]
    cell = 32
    grout = ((x % cell) < 3) | ((y % cell) < 3)
    shade = rng.random((SIDE // cell, SIDE // cell))[y // cell, x // cell]
    img = 0.55 + 0.35 * shade + 0.08 * smooth_noise(rng, 32)
    img[grout] = 0.1
    return img


def wood(rng):
    y, x = np.mgrid[0:SIDE, 0:SIDE]
    r = np.hypot(x - 40.0, (y - 300.0) * 0.35)
    return 0.5 + 0.5 * np.sin(r * 0.45 + 6.0 * turbulence(rng, 3, 3))


def carpet(rng):
    fine = rng.random((SIDE, SIDE))
    blur = (fine + np.roll(fine, 1, 0) + np.roll(fine, 1, 1) + np.roll(fine, (1, 1), (0, 1))) / 4
    return 0.6 * blur + 0.4 * smooth_noise(rng, 16)


def bricks(rng):
    y, x = np.mgrid[0:SIDE, 0:SIDE]
    bh, bw = 20, 48
    row = y // bh
    xs = x + (row % 2) * (bw // 2)
    mortar = ((y % bh) < 3) | ((xs % bw) < 3)
    shade = rng.random((SIDE // bh + 1, SIDE // bw + 2))[row, xs // bw]
    img = 0.35 + 0.3 * shade + 0.15 * smooth_noise(rng, 64)
    img[mortar] = 0.85
    return img


def marble(rng):
    y, x = np.mgrid[0:SIDE, 0:SIDE]
    return 0.5 + 0.5 * np.sin((x + y) * 0.05 + 9.0 * turbulence(rng, 6, 2))


TEXTURES = [("tiles", tiles), ("wood", wood), ("carpet", carpet), ("bricks", bricks), ("marble", marble)]
TINTS = [(0.9, 0.9, 0.85), (0.8, 0.55, 0.3), (0.5, 0.45, 0.6), (0.75, 0.35, 0.25), (0.95, 0.95, 0.95)]


def main(out_dir):
    rng = np.random.default_rng(20210101)
    for (name, make), tint in zip(TEXTURES, TINTS):
        g = np.clip(make(rng), 0, 1)
        rgb = np.stack([g * c for c in tint], axis=-1)
        Image.fromarray((rgb * 255).round().astype(np.uint8), "RGB").save(f"{out_dir}/{name}.png")


if __name__ == "__main__":
    main(sys.argv[1])
