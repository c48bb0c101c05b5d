"""Rasters of E (or K), PGM output and pixel-level topology checks."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Tuple

import numpy as np
from scipy import ndimage

from .probs import ProbabilitySequence
from .spectrum import ESCAPE_TOL, RENDER_LEVELS, escape_levels, h, h_inv

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class RenderConfig:
    """Window centre and size in the complex plane, pixel grid and budget.

    When the window aspect does not match the pixel aspect the window is
    enlarged along one axis (letterboxed), so pixels stay square.
    """

    center: complex
    width: float
    height: float
    pixels_x: int = 512
    pixels_y: int = 512
    max_levels: int = RENDER_LEVELS
    coords: str = "E"

    def __post_init__(self):
        if self.pixels_x < 1 or self.pixels_y < 1:
            raise ValueError("pixel counts must be >= 1")
        if not (self.width > 0 and self.height > 0):
            raise ValueError("window has zero area")
        if self.max_levels < 1:
            raise ValueError("max_levels must be >= 1")
        if self.coords not in ("E", "K"):
            raise ValueError(f"coords must be 'E' or 'K', got {self.coords!r}")

    @property
    def pixel_size(self) -> float:
        return max(self.width / self.pixels_x, self.height / self.pixels_y)

    @property
    def extent(self) -> Tuple[float, float, float, float]:
        """(re_min, re_max, im_min, im_max) after letterboxing."""
        s = self.pixel_size
        hw, hh = s * self.pixels_x / 2, s * self.pixels_y / 2
        c = complex(self.center)
        return c.real - hw, c.real + hw, c.imag - hh, c.imag + hh

    def grid(self) -> np.ndarray:
        """Complex pixel centres; row 0 is the top of the image (largest imaginary part)."""
        x0, _, _, y1 = self.extent
        s = self.pixel_size
        re = x0 + (np.arange(self.pixels_x) + 0.5) * s
        im = y1 - (np.arange(self.pixels_y) + 0.5) * s
        return re[None, :] + 1j * im[:, None]

    def to_dict(self) -> dict:
        c = complex(self.center)
        return {"center": [c.real, c.imag], "width": self.width, "height": self.height,
                "pixels": [self.pixels_x, self.pixels_y], "max_levels": self.max_levels,
                "coords": self.coords, "extent": list(self.extent)}


def default_config(probs: ProbabilitySequence, pixels: int = 512, max_levels: int = RENDER_LEVELS,
                   coords: str = "E") -> RenderConfig:
    """The disk D(1-p_1, p_1) padded by 20% (the closed unit disk in K-coordinates)."""
    if coords == "K":
        return RenderConfig(0j, 2.4, 2.4, pixels, pixels, max_levels, "K")
    p1 = probs.p(1)
    return RenderConfig(complex(1 - p1, 0), 2.4 * p1, 2.4 * p1, pixels, pixels, max_levels, "E")


@dataclass
class Raster:
    levels: np.ndarray  # int32, 0 = inside at budget, else 1 + escape level
    config: RenderConfig
    metadata: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.levels.shape

    @property
    def inside(self) -> np.ndarray:
        return self.levels == 0

    def inside_fraction(self) -> float:
        return float(self.inside.mean())


def render(config: RenderConfig, probs: ProbabilitySequence) -> Raster:
    levels = escape_levels(config.grid(), probs, config.max_levels, config.coords, ESCAPE_TOL)
    meta = {
        "probs_digest": probs.digest(),
        "budget": config.max_levels,
        "window": config.to_dict(),
        "note": "points still bounded at the budget are reported inside (over-approximates E near its boundary)",
    }
    return Raster(levels, config, meta)


def to_E(w, probs: ProbabilitySequence):
    """K-coordinates to E-coordinates, h_1^{-1}."""
    return h_inv(w, probs.p(1))


def to_K(z, probs: ProbabilitySequence):
    return h(z, probs.p(1))


# -- output -------------------------------------------------------------------


def gray_levels(raster: Raster) -> np.ndarray:
    """Escape levels scaled so inside = 0 and the budget maps to 255."""
    top = min(raster.config.max_levels, 255)
    lv = raster.levels.astype(np.int64)
    return np.minimum(np.rint(lv * 255 / top), 255).astype(np.uint8)


def pgm_bytes(raster: Raster) -> bytes:
    rows, cols = raster.shape
    return f"P5\n{cols} {rows}\n255\n".encode("ascii") + gray_levels(raster).tobytes()


def write_pgm(raster: Raster, path) -> Path:
    path = Path(path)
    path.write_bytes(pgm_bytes(raster))
    return path


def write_levels_csv(raster: Raster, path) -> Path:
    """Exact escape levels, one row per pixel: i, j, re, im, level."""
    path = Path(path)
    pts = raster.config.grid()
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "re", "im", "level"])
        for (i, j), lv in np.ndenumerate(raster.levels):
            z = pts[i, j]
            w.writerow([i, j, f"{z.real:.17g}", f"{z.imag:.17g}", int(lv)])
    return path


# -- topology -------------------------------------------------------------------


def count_components(mask: np.ndarray) -> Tuple[int, np.ndarray]:
    """Number of 4-connected components of ``mask`` and their pixel sizes."""
    labels, n = ndimage.label(mask, structure=FOUR_CONNECTED)
    sizes = np.bincount(labels.ravel())[1:]
    return n, sizes


def is_simply_connected(mask: np.ndarray) -> bool:
    """True when ``mask`` is one 4-connected piece whose complement, padded by a
    one-pixel border, is itself 4-connected (no holes)."""
    n, _ = count_components(mask)
    if n != 1:
        return False
    outside = np.pad(~mask, 1, constant_values=True)
    m, _ = count_components(outside)
    return m == 1
