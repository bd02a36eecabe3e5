"""Output time grids and grid quadrature."""

import numpy as np
from scipy.integrate import cumulative_trapezoid

# Relative spacing of the late-time grid; must stay below 0.1 (step <= 0.1 (1+t)).
DEFAULT_DENSITY = 0.01


def output_grid(horizon, layer=None, density=DEFAULT_DENSITY, layer_points=500):
    """Sampling times on ``[0, horizon]``.

    With ``layer`` set (the boundary-layer width, typically ``epsilon``), the
    interval ``[0, 10*layer]`` is sampled uniformly with ``layer_points``
    points. Beyond it the step grows geometrically (factor 1.05) until it
    reaches ``density * (1 + t)``.
    """
    if not 0 < density <= 0.1:
        raise ValueError("density must lie in (0, 0.1]")
    if layer is None:
        layer = 1e-3
    t_layer = min(10.0 * layer, horizon)
    ts = list(np.linspace(0.0, t_layer, layer_points, endpoint=False))
    h = t_layer / layer_points
    t = t_layer
    while t < horizon:
        ts.append(t)
        h = min(1.05 * h, density * (1.0 + t))
        t += h
    ts = np.asarray(ts)
    ts = ts[ts < horizon * (1 - 1e-12)]
    return np.append(ts, float(horizon))


def running_integral(values, times):
    """Cumulative trapezoidal integral starting at 0."""
    return cumulative_trapezoid(values, times, initial=0.0)
