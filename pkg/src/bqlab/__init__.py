"""bqlab: a numerical laboratory for the Boussinesq propagator.

Exact frequency-space propagation of orthonormal systems on the line box,
the torus and the radial unit ball; the space-time, Lorentz, Schatten and
sequence norms the dispersive estimates are stated in; exponential-sum and
oscillatory-kernel decay scans; randomized operators and the stochastic
convergence experiments; and a config-driven CLI producing CSV/JSON reports
with figures.
"""

__version__ = "0.1.0"

from . import experiments, grids, norms, oscillatory, randomization, spectral
from .grids import Grid1D, TimeGrid, ball_grid, line_grid, torus_grid, uniform_time_grid
from .spectral import (
    CompactOperatorRep,
    DensityField,
    HomSobolev,
    L2,
    OrthonormalSystem,
    WaveFunction,
    boussinesq_symbol,
    density_function,
    gram_orthonormalize,
    homogeneous_sobolev_lift,
    operator_kernel,
    propagate,
    truncated_propagate_torus,
)

__all__ = [
    "__version__",
    "experiments",
    "grids",
    "norms",
    "oscillatory",
    "randomization",
    "spectral",
    "Grid1D",
    "TimeGrid",
    "ball_grid",
    "line_grid",
    "torus_grid",
    "uniform_time_grid",
    "CompactOperatorRep",
    "DensityField",
    "HomSobolev",
    "L2",
    "OrthonormalSystem",
    "WaveFunction",
    "boussinesq_symbol",
    "density_function",
    "gram_orthonormalize",
    "homogeneous_sobolev_lift",
    "operator_kernel",
    "propagate",
    "truncated_propagate_torus",
]
