"""Divergences, the adversarial loss, and the loss-maximizing discriminator.

All integrals run over one shared evaluation grid (129 points per axis for
d <= 2, 33 for d = 3; Simpson weights) that is decoupled from density
storage. Every density is renormalized by ITS OWN quadrature mass on that
grid before any formula is applied. That convention makes the algebraic
relations between the quantities computed here (the JS-loss identity, the
nonnegativity of KL, the dominance of the ratio discriminator) hold
pointwise on the grid, i.e. to floating-point accuracy rather than
quadrature accuracy.

Deterministic reductions only: weighted sums go through np.sum (pairwise
tree order, independent of worker counts).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .density import GridDensity, axis_weights
from .errors import ConfigInvalid, DiscriminatorOutOfRange, NonPositiveDensity
from .rosenblatt import PushforwardDensity


@dataclass(frozen=True)
class DiscriminatorFn:
    """Function [0,1]^d -> (0,1) with recorded range bounds."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    lower: float
    upper: float

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.evaluator(points)


def default_eval_resolution(dim: int) -> int:
    return 129 if dim <= 2 else 33


@lru_cache(maxsize=32)
def _eval_grid_cached(dim: int, resolution: int, rule: str):
    axes = [np.linspace(0.0, 1.0, resolution)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    w1 = axis_weights(resolution, rule)
    w = np.ones(1)
    for _ in range(dim):
        w = np.multiply.outer(w, w1).ravel()
    pts.flags.writeable = False
    w.flags.writeable = False
    return pts, w


def eval_grid(dim: int, resolution: int | None = None, rule: str = "simpson"):
    """Shared evaluation nodes and tensor quadrature weights."""
    return _eval_grid_cached(dim, resolution or default_eval_resolution(dim), rule)


def _dim_of(obj) -> int:
    if isinstance(obj, (GridDensity, PushforwardDensity)):
        return obj.dim
    raise ConfigInvalid(f"not a density object: {type(obj).__name__}")


def _values_on(obj, pts: np.ndarray) -> np.ndarray:
    vals = np.asarray(obj.evaluate(pts), dtype=np.float64)
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0.0):
        raise NonPositiveDensity("density evaluated nonpositive on the grid")
    return vals


def _renormalized_pair(f, g, resolution: int | None, rule: str):
    d = _dim_of(f)
    if _dim_of(g) != d:
        raise ConfigInvalid("density dimensions differ")
    pts, w = eval_grid(d, resolution, rule)
    fv = _values_on(f, pts)
    gv = _values_on(g, pts)
    return pts, w, fv / np.sum(w * fv), gv / np.sum(w * gv)


def kl_divergence(f, g, resolution: int | None = None, rule: str = "simpson") -> float:
    """Quadrature of f log(f/g), both renormalized on the shared grid.

    With nonnegative weights the renormalized weighted sum is a discrete KL,
    so the result is nonnegative up to rounding of the masses.
    """
    _, w, fv, gv = _renormalized_pair(f, g, resolution, rule)
    return float(np.sum(w * fv * np.log(fv / gv)))


def js_divergence(f, g, resolution: int | None = None, rule: str = "simpson") -> float:
    """Symmetrized divergence to the midpoint; lies in [0, log 2]."""
    _, w, fv, gv = _renormalized_pair(f, g, resolution, rule)
    mid = 0.5 * (fv + gv)
    return float(0.5 * (np.sum(w * fv * np.log(fv / mid))
                        + np.sum(w * gv * np.log(gv / mid))))


def optimal_discriminator(f_mu, f_phi, resolution: int | None = None,
                          rule: str = "simpson") -> DiscriminatorFn:
    """The pointwise loss maximizer f_mu / (f_mu + f_phi), mass-renormalized.

    Recorded bounds come from certified density ranges when both inputs
    carry them (grid node range for stored densities, the [1/(d! K^d), K]
    range for certified generators), else from the observed grid range with
    a small widening.
    """
    pts, w, _, _ = _renormalized_pair(f_mu, f_phi, resolution, rule)
    mass_f = float(np.sum(w * _values_on(f_mu, pts)))
    mass_g = float(np.sum(w * _values_on(f_phi, pts)))

    def evaluator(x: np.ndarray) -> np.ndarray:
        fv = _values_on(f_mu, x) / mass_f
        gv = _values_on(f_phi, x) / mass_g
        return fv / (fv + gv)

    rng_f = _density_range(f_mu)
    rng_g = _density_range(f_phi)
    if rng_f is not None and rng_g is not None:
        lo = (rng_f[0] / mass_f) / (rng_f[0] / mass_f + rng_g[1] / mass_g)
        hi = (rng_f[1] / mass_f) / (rng_f[1] / mass_f + rng_g[0] / mass_g)
    else:
        observed = evaluator(pts)
        lo = float(observed.min()) * (1.0 - 1e-9)
        hi = 1.0 - (1.0 - float(observed.max())) * (1.0 - 1e-9)
    return DiscriminatorFn(evaluator=evaluator, lower=float(lo), upper=float(hi))


def _density_range(obj):
    if isinstance(obj, GridDensity):
        # multilinear interpolants attain their extremes at grid nodes
        return (obj.kappa, float(obj.values.max()))
    if isinstance(obj, PushforwardDensity):
        return obj.density_bounds
    return None


def theoretical_loss(f_mu, f_phi, disc: DiscriminatorFn | Callable,
                     resolution: int | None = None, rule: str = "simpson") -> float:
    """(1/2) integral of [f_mu log D + f_phi log(1 - D)] on the shared grid."""
    pts, w, fv, gv = _renormalized_pair(f_mu, f_phi, resolution, rule)
    dv = np.asarray(disc(pts), dtype=np.float64)
    if np.any(dv <= 0.0) or np.any(dv >= 1.0) or not np.all(np.isfinite(dv)):
        raise DiscriminatorOutOfRange("discriminator left the open interval (0, 1)")
    return float(0.5 * (np.sum(w * fv * np.log(dv)) + np.sum(w * gv * np.log1p(-dv))))


LOG2 = math.log(2.0)
