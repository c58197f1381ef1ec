"""Escape-time / potential-shaded rasters written as binary PPM (P6).

Shading rule: pixels with zero Green value (in the set within budget) are
black; escaping pixels are shaded 1..255 by their Green value normalized to
the frame maximum.  Everything is deterministic, so images can be compared
byte-for-byte in regression tests.
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .potential import PotentialEvaluator


@dataclass(frozen=True)
class Viewport:
    center: complex
    width: float
    pixels: tuple  # (nx, ny)

    def __post_init__(self):
        nx, ny = self.pixels
        if self.width <= 0 or nx < 1 or ny < 1:
            raise ValueError("viewport needs positive width and pixel counts")
        object.__setattr__(self, "pixels", (int(nx), int(ny)))

    @property
    def height(self) -> float:
        nx, ny = self.pixels
        return self.width * ny / nx

    def grid(self) -> np.ndarray:
        """Complex sample points, shape (ny, nx), row 0 at the top."""
        nx, ny = self.pixels
        xs = self.center.real + (np.arange(nx) + 0.5) / nx * self.width - self.width / 2
        ys = self.center.imag + self.height / 2 - (np.arange(ny) + 0.5) / ny * self.height
        return xs[None, :] + 1j * ys[:, None]


def shade(greens: np.ndarray) -> np.ndarray:
    """Map Green values to 8-bit grayscale: 0 iff in-set, else 1..255."""
    g = np.asarray(greens, dtype=float)
    out = np.zeros(g.shape, dtype=np.uint8)
    esc = g > 0
    if esc.any():
        gmax = float(g[esc].max())
        scaled = 1.0 + 254.0 * (g[esc] / gmax)
        out[esc] = np.clip(scaled, 1, 255).astype(np.uint8)
    return out


def render(ev: PotentialEvaluator, what: str, viewport: Viewport,
           z: complex | None = None) -> np.ndarray:
    """Grayscale frame for one of: base, fiber (needs z), infinity,
    j2-slice (full-map Green over the fiber plane at z)."""
    pts = viewport.grid()
    if what == "base":
        g = ev.green_base_grid(pts)
    elif what == "infinity":
        g = ev.green_infinity_grid(pts)
    elif what == "fiber":
        if z is None:
            raise ValueError("fiber render needs a base point z")
        g = ev.green_fiber_grid(z, pts)
    elif what == "j2-slice":
        if z is None:
            raise ValueError("j2-slice render needs a base point z")
        g = ev.green_full_grid(z, pts)
    else:
        raise ValueError(f"unknown render target {what!r}")
    return shade(g)


def write_ppm(path: str, gray: np.ndarray) -> None:
    """Write a grayscale frame as binary P6 RGB, atomically."""
    gray = np.asarray(gray, dtype=np.uint8)
    ny, nx = gray.shape
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    header = f"P6\n{nx} {ny}\n255\n".encode("ascii")
    dirname = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=dirname, suffix=".ppm.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(rgb.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
