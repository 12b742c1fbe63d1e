"""Machine-readable report artifacts: simplex clouds, histograms, JSON.

Plot outputs are emitted as data files (CSV/JSON), never rendered images,
so they can be checked bit-exactly and consumed by any plotting toolchain.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dp import TrinomialSamples

__all__ = [
    "TRIANGLE_VERTICES",
    "Histogram",
    "barycentric_points",
    "barycentric_csv",
    "density_data",
    "dump_json",
]

# left, top (rope), right corners of the plotting triangle
TRIANGLE_VERTICES = np.array([
    [0.0, 0.0],
    [0.5, np.sqrt(3.0) / 2.0],
    [1.0, 0.0],
])


def barycentric_points(samples: TrinomialSamples | np.ndarray) -> np.ndarray:
    """Map theta triples to 2-d points inside the plotting triangle.

    The left vertex collects certainty for the left outcome, the apex the
    rope, the right vertex the right outcome.
    """
    t = samples.samples if isinstance(samples, TrinomialSamples) else np.asarray(samples, dtype=float)
    return t @ TRIANGLE_VERTICES


def barycentric_csv(points: np.ndarray) -> str:
    out = io.StringIO()
    out.write("x,y\n")
    for x, y in points:
        out.write(f"{float(x)!r},{float(y)!r}\n")
    return out.getvalue()


@dataclass(frozen=True)
class Histogram:
    """Equal-width histogram whose normalized densities integrate to one."""

    lo: np.ndarray
    hi: np.ndarray
    count: np.ndarray
    density: np.ndarray

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("lo,hi,count,density\n")
        for lo, hi, c, d in zip(self.lo, self.hi, self.count, self.density):
            out.write(f"{float(lo)!r},{float(hi)!r},{int(c)},{float(d)!r}\n")
        return out.getvalue()


def density_data(x, bins: int) -> Histogram:
    """Histogram of ``x`` over ``bins`` equal-width bins spanning its range.

    A constant vector yields a single unit-width bin holding all the mass.
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("cannot build a histogram from no data")
    if bins < 1:
        raise ValueError(f"bins must be at least 1, got {bins}")
    xmin, xmax = float(x.min()), float(x.max())
    if xmin == xmax:
        edges = np.array([xmin - 0.5, xmin + 0.5])
        counts = np.array([x.size])
    else:
        edges = np.linspace(xmin, xmax, bins + 1)
        counts, _ = np.histogram(x, bins=edges)
    widths = np.diff(edges)
    density = counts / (x.size * widths)
    return Histogram(lo=edges[:-1], hi=edges[1:], count=counts, density=density)


def dump_json(obj, path: str | Path | None = None) -> str:
    """Serialize deterministically (sorted keys, fixed separators)."""
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
