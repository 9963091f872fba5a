"""Point allocation and numerical integration.

Interior rectangle points are Monte Carlo (drawn once per run, never
resampled, so the loss landscape is deterministic); one-dimensional domains
use endpoint-inclusive trapezoid rules. Axisymmetric measures such as
``2*pi*r`` belong inside the density, not the weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergedEvaluationError, InvalidConfigError


@dataclass
class SampleSet:
    points: np.ndarray        # (P,) for 1-d domains, (P, 2) for planar ones
    weights: np.ndarray       # positive, summing to region_measure
    region_measure: float


def sample_rect(a, b, n, seed):
    """Uniform random points on the centered a-by-b rectangle, weight ab/n."""
    if a <= 0 or b <= 0:
        raise InvalidConfigError("rectangle sides must be positive")
    if n < 1:
        raise InvalidConfigError("need at least one sample point")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-0.5, 0.5, size=(n, 2)) * np.array([a, b])
    w = np.full(n, a * b / n)
    return SampleSet(pts, w, a * b)


def sample_interval(lo, hi, n):
    """Uniformly spaced points on [lo, hi] with trapezoid weights."""
    if hi <= lo:
        raise InvalidConfigError("interval must have positive length")
    if n < 2:
        raise InvalidConfigError("trapezoid rule needs at least two points")
    pts = np.linspace(lo, hi, n)
    h = (hi - lo) / (n - 1)
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return SampleSet(pts, w, hi - lo)


def sample_rect_boundary(a, b, n_per_side, seed):
    """Random points on each side of the rectangle plus outward normals."""
    if n_per_side < 1:
        raise InvalidConfigError("need at least one boundary point per side")
    rng = np.random.default_rng(seed)
    t = [rng.uniform(-0.5, 0.5, size=n_per_side) for _ in range(4)]
    sides = [
        (np.column_stack([np.full(n_per_side, a / 2), t[0] * b]), (1.0, 0.0)),
        (np.column_stack([np.full(n_per_side, -a / 2), t[1] * b]), (-1.0, 0.0)),
        (np.column_stack([t[2] * a, np.full(n_per_side, b / 2)]), (0.0, 1.0)),
        (np.column_stack([t[3] * a, np.full(n_per_side, -b / 2)]), (0.0, -1.0)),
    ]
    pts = np.concatenate([s[0] for s in sides])
    normals = np.concatenate([np.tile(s[1], (n_per_side, 1)) for s in sides])
    return pts, normals


def integrate(sample_set, density):
    """Weighted sum of ``density`` over the sample set.

    ``density`` is either a callable applied to the points array or an array
    of density values aligned with the points.
    """
    vals = density(sample_set.points) if callable(density) else np.asarray(density, float)
    if vals.shape[-1] != len(sample_set.weights):
        raise InvalidConfigError("density values do not align with sample points")
    if not np.all(np.isfinite(vals)):
        bad = int(np.argmax(~np.isfinite(np.atleast_1d(vals).reshape(-1))))
        pt = sample_set.points[bad % len(sample_set.weights)]
        raise DivergedEvaluationError(f"non-finite density at point {pt}")
    return float(np.dot(vals, sample_set.weights))
