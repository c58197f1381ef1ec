#!/usr/bin/env python3
"""Connectivity-locus sweep for the family (z^2, w^2 + a z).

Writes a PPM image (black = connected, white = disconnected, gray =
undecided) and a CSV verdict table.  The locus should reproduce the
Mandelbrot set, since the family is connected exactly when a is in it.

Usage: python3 scripts/sweep_a_family.py [--pixels 384,288] [--out a_locus]
"""
import argparse
import json
import subprocess
import sys
import tempfile

from skewfatou import gallery


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pixels", default="384,288")
    ap.add_argument("--center", default="-0.5")
    ap.add_argument("--width", type=float, default=4.0)
    ap.add_argument("--out", default="a_locus")
    ap.add_argument("--threads", type=int, default=4)
    args = ap.parse_args()

    nx, ny = (int(x) for x in args.pixels.replace("x", ",").split(","))
    doc = json.loads(gallery.family_document(
        center=complex(args.center.replace("i", "j")),
        width=args.width, pixels=(nx, ny)))
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(doc, fh)
        family = fh.name

    cmd = [sys.executable, "-m", "skewfatou.cli", "sweep", family,
           "--out", args.out, "--threads", str(args.threads)]
    raise SystemExit(subprocess.call(cmd))


if __name__ == "__main__":
    main()
