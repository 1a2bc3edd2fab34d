"""Writes the procedural substitute images used by the image completion checks."""

import math
import pathlib
import sys


def landscape(x, y, w, h):
    u, v = x / (w - 1), y / (h - 1)
    r, g, b = 0.35 + 0.4 * v, 0.55 + 0.3 * v, 0.95 - 0.2 * v
    if (u - 0.75) ** 2 + (v - 0.22) ** 2 < 0.008:
        r, g, b = 1.0, 0.85, 0.3
    ridge = 0.55 + 0.08 * math.sin(7.0 * u) + 0.04 * math.sin(19.0 * u + 1.0)
    if v > ridge:
        shade = 0.6 + 0.4 * (1.0 - (v - ridge) / (1.0 - ridge + 1e-9))
        r, g, b = 0.2 * shade, 0.55 * shade, 0.25 * shade
    if v > 0.85:
        stripe = 0.5 + 0.5 * math.sin(40.0 * u + 12.0 * v)
        r, g, b = 0.45 + 0.2 * stripe, 0.35 + 0.1 * stripe, 0.2
    return r, g, b


def tiles(x, y, w, h):
    u, v = x / (w - 1), y / (h - 1)
    cx, cy = int(u * 6), int(v * 6)
    base = 0.3 + 0.5 * ((cx + cy) % 2)
    r = base * (0.6 + 0.4 * u)
    g = base * (0.5 + 0.5 * v)
    b = 0.5 + 0.4 * math.cos(3.0 * u) * math.sin(2.0 * v)
    if (u - 0.5) ** 2 + (v - 0.5) ** 2 < 0.04:
        r, g, b = 0.9, 0.2 + 0.3 * v, 0.2
    return r, g, b


def write_ppm(path, w, h, fn):
    out = bytearray(f"P6\n{w} {h}\n255\n".encode())
    for y in range(h):
        for x in range(w):
            for c in fn(x, y, w, h):
                out.append(max(0, min(255, int(math.floor(c * 255.0 + 0.5)))))
    path.write_bytes(bytes(out))


def main(root):
    data = pathlib.Path(root) / "data"
    data.mkdir(exist_ok=True)
    write_ppm(data / "landscape.ppm", 267, 189, landscape)
    write_ppm(data / "tiles.ppm", 257, 246, tiles)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parent.parent)
