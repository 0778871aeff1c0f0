"""Sample lattices for the three geometries: periodic line box, torus, radial ball.

All grids are uniform and carry per-point cell measures so that quadrature,
inner products and norms are plain weighted sums.  Line and torus grids are
FFT-compatible (size n transform, exact on band-limited data).  The radial
grid uses midpoint radii on (0, 1) with the volume weight 4*pi*r^2*dr of a
radial function on the unit ball in R^3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GEOMETRY_LINE = "line"
GEOMETRY_TORUS = "torus"
GEOMETRY_BALL = "ball-radial"

#: default periodic box for line experiments (band-limited data makes the
#: truncation of R exact for the propagator)
DEFAULT_LINE_PERIOD = 64.0 * math.pi
DEFAULT_LINE_POINTS = 4096


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Grid1D:
    """A one-dimensional sample lattice with cell measures.

    Attributes:
        geometry: one of ``"line"``, ``"torus"``, ``"ball-radial"``.
        points: strictly increasing sample positions, length n >= 2.
        cell_measure: positive quadrature weight per sample (dx for the
            periodic geometries, 4*pi*r^2*dr for the radial ball).
        period: box length for line/torus geometries (2*pi on the torus).
    """

    geometry: str
    points: np.ndarray
    cell_measure: np.ndarray
    period: float | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        meas = np.asarray(self.cell_measure, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("grid needs at least 2 points")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if meas.shape != pts.shape or np.any(meas <= 0):
            raise ValueError("cell_measure must be positive, one weight per point")
        object.__setattr__(self, "points", _readonly(pts))
        object.__setattr__(self, "cell_measure", _readonly(meas))

    @property
    def n(self) -> int:
        return self.points.size

    @property
    def spacing(self) -> float:
        """Uniform step between samples."""
        return float(self.points[1] - self.points[0])

    def frequencies(self) -> np.ndarray:
        """FFT-ordered frequencies: 2*pi*k/L on the line, integer k on the torus."""
        if self.geometry == GEOMETRY_LINE:
            return 2.0 * math.pi * np.fft.fftfreq(self.n, d=self.spacing)
        if self.geometry == GEOMETRY_TORUS:
            return np.fft.fftfreq(self.n, d=1.0 / self.n)
        raise ValueError("ball-radial grids have no Fourier frequencies; use the eigenbasis")

    def total_measure(self) -> float:
        return float(np.sum(self.cell_measure))


def line_grid(n: int = DEFAULT_LINE_POINTS, period: float = DEFAULT_LINE_PERIOD) -> Grid1D:
    """Periodic box of length ``period`` standing in for the real line."""
    dx = period / n
    pts = dx * np.arange(n)
    return Grid1D(GEOMETRY_LINE, pts, np.full(n, dx), period=period)


def torus_grid(n: int = 256) -> Grid1D:
    """The torus [0, 2*pi) with n equispaced points."""
    dx = 2.0 * math.pi / n
    pts = dx * np.arange(n)
    return Grid1D(GEOMETRY_TORUS, pts, np.full(n, dx), period=2.0 * math.pi)


def ball_grid(n: int = 256) -> Grid1D:
    """Midpoint radii on (0, 1) with the radial volume measure 4*pi*r^2*dr.

    Midpoint sampling makes the quadrature exact for products of the radial
    eigenfunctions sin(m*pi*r)/r up to mode m = n - 1.
    """
    dr = 1.0 / n
    r = dr * (np.arange(n) + 0.5)
    return Grid1D(GEOMETRY_BALL, r, 4.0 * math.pi * r**2 * dr)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time samples with step dt, used for space-time fields."""

    points: np.ndarray
    dt: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 1 or self.dt <= 0:
            raise ValueError("time grid needs >= 1 point and dt > 0")
        object.__setattr__(self, "points", _readonly(pts))

    @property
    def n(self) -> int:
        return self.points.size


def uniform_time_grid(start: float, stop: float, n: int) -> TimeGrid:
    """n left-endpoint samples of [start, stop) with dt = (stop - start)/n."""
    if n < 1 or stop <= start:
        raise ValueError("need n >= 1 and stop > start")
    dt = (stop - start) / n
    return TimeGrid(start + dt * np.arange(n), dt)
