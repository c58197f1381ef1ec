#!/usr/bin/env python3
"""Render base-plane, infinity-line, and one fiber frame for each built-in
example map.  Output: PPM files under ./renders/ (or --out DIR).

Usage: python3 scripts/render_gallery.py [--out renders] [--pixels 512,384]
"""
import argparse
import os

from skewfatou import Membership, gallery, make_evaluator
from skewfatou.render import Viewport, render, write_ppm


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="renders")
    ap.add_argument("--pixels", default="512,384")
    ap.add_argument("--width", type=float, default=7.0)
    args = ap.parse_args()

    nx, ny = (int(x) for x in args.pixels.replace("x", ",").split(","))
    os.makedirs(args.out, exist_ok=True)
    vp = Viewport(center=0j, width=args.width, pixels=(nx, ny))

    for name in gallery.names():
        sp = gallery.build(name)
        ev = make_evaluator(sp)
        for what in ("base", "infinity"):
            path = os.path.join(args.out, f"{name}.{what}.ppm")
            write_ppm(path, render(ev, what, vp))
            print("wrote", path)
        # one fiber frame over a bounded base point, when we can find one
        for z0 in (-2.0, 0.0, 1.0, -1.0):
            if ev.base_membership(z0) is not Membership.OUT:
                path = os.path.join(args.out, f"{name}.fiber_z{z0:+.0f}.ppm")
                write_ppm(path, render(ev, "fiber", vp, z=z0))
                print("wrote", path)
                break


if __name__ == "__main__":
    main()
