"""Positive densities on the unit cube stored on uniform tensor grids.

A density is represented by its values at the nodes of a uniform grid with
``resolution`` points per axis (endpoints included) and is interpreted as the
multilinear interpolant of those values. Quadrature, marginals, conditional
CDFs and mollification all operate on that interpolant:

* composite trapezoid quadrature integrates the interpolant exactly, which
  keeps storage and integration mutually consistent; Simpson is selectable
  for smooth integrands,
* conditional CDFs are exact cumulative integrals of the piecewise-linear
  conditional density, hence piecewise quadratic, strictly increasing, and
  invertible in closed form cell by cell,
* mollification is a per-axis circular (mod 1) convolution with a wrapped
  Gaussian, truncated at eight standard deviations.

All objects are immutable after construction and safe to share across
workers; every operation is a pure function.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BoxOutOfDomain, ConfigInvalid, NonPositiveDensity, ZeroMarginal

QUAD_RULES = ("trapezoid", "simpson")

# default points per axis for freshly built named families
def default_resolution(dim: int) -> int:
    return 129 if dim <= 2 else 33


@dataclass(frozen=True)
class GridDensity:
    """Strictly positive density sampled on a uniform tensor grid.

    values has shape (resolution,) * dim; kappa is the minimum node value
    (the lower density bound). The density between nodes is the multilinear
    interpolant of the node values.
    """

    dim: int
    resolution: int
    values: np.ndarray
    quad_rule: str = "trapezoid"
    kappa: float = field(init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigInvalid(f"dim must be >= 1, got {self.dim}")
        if self.quad_rule not in QUAD_RULES:
            raise ConfigInvalid(f"quad_rule must be one of {QUAD_RULES}")
        if self.resolution < 2:
            raise ConfigInvalid("resolution must be >= 2")
        if self.quad_rule == "simpson" and self.resolution % 2 == 0:
            raise ConfigInvalid("simpson rule needs an odd number of nodes per axis")
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.resolution,) * self.dim:
            raise ConfigInvalid(
                f"values shape {vals.shape} does not match (resolution,)*dim")
        if not np.all(np.isfinite(vals)):
            raise NonPositiveDensity("density values must be finite")
        if np.any(vals <= 0.0):
            raise NonPositiveDensity("density values must be strictly positive")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "kappa", float(vals.min()))

    @property
    def knots(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.resolution)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Multilinear interpolant at an (N, dim) array of points."""
        return _interp_multilinear(self.values, points)


@dataclass(frozen=True)
class ConditionalCDF:
    """CDF of one coordinate given a prefix context.

    cdf_values are the exact cumulative trapezoid integrals of the conditional
    density at the knots, rescaled so the first is 0 and the last is 1. The
    CDF between knots is the quadratic antiderivative of the piecewise-linear
    conditional density, so value/inverse/derivative are mutually consistent.
    """

    axis: int
    context: tuple
    knots: np.ndarray
    cdf_values: np.ndarray
    pdf_values: np.ndarray   # conditional density at the knots, integral 1

    def __post_init__(self):
        if self.cdf_values[0] != 0.0 or self.cdf_values[-1] != 1.0:
            raise ConfigInvalid("cdf endpoints must be pinned to 0 and 1")
        if np.any(np.diff(self.cdf_values) <= 0.0):
            raise NonPositiveDensity("conditional CDF must be strictly increasing")

    def _cells(self, t: np.ndarray) -> np.ndarray:
        m = self.knots.size
        return np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, m - 2)

    def value(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        h = self.knots[1] - self.knots[0]
        k = self._cells(t)
        s = t - self.knots[k]
        p0, p1 = self.pdf_values[k], self.pdf_values[k + 1]
        out = self.cdf_values[k] + p0 * s + (p1 - p0) * s * s / (2.0 * h)
        out = np.clip(out, 0.0, 1.0)
        return np.where(t >= self.knots[-1], 1.0, np.where(t <= self.knots[0], 0.0, out))

    def derivative(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        h = self.knots[1] - self.knots[0]
        k = self._cells(t)
        s = (t - self.knots[k]) / h
        return self.pdf_values[k] * (1.0 - s) + self.pdf_values[k + 1] * s

    def inverse(self, u: np.ndarray) -> np.ndarray:
        """Exact cell-wise inverse; follows the inf convention for u at cell edges."""
        u = np.asarray(u, dtype=np.float64)
        h = self.knots[1] - self.knots[0]
        m = self.knots.size
        k = np.clip(np.searchsorted(self.cdf_values, u, side="right") - 1, 0, m - 2)
        r = np.maximum(u - self.cdf_values[k], 0.0)
        p0, p1 = self.pdf_values[k], self.pdf_values[k + 1]
        # solve p0*s + (p1-p0)/(2h) s^2 = r for s in [0, h]; stable quadratic form
        disc = np.maximum(p0 * p0 + 2.0 * (p1 - p0) * r / h, 0.0)
        s = 2.0 * r / (p0 + np.sqrt(disc))
        return np.clip(self.knots[k] + s, 0.0, 1.0)


# ---------------------------------------------------------------------------
# quadrature weights


def axis_weights(m: int, rule: str) -> np.ndarray:
    """Per-node weights integrating a function over [0, 1] from m samples."""
    h = 1.0 / (m - 1)
    if rule == "trapezoid":
        w = np.full(m, h)
        w[0] = w[-1] = h / 2.0
        return w
    if rule == "simpson":
        if m % 2 == 0:
            raise ConfigInvalid("simpson rule needs an odd node count")
        w = np.full(m, 2.0 * h / 3.0)
        w[1::2] = 4.0 * h / 3.0
        w[0] = w[-1] = h / 3.0
        return w
    raise ConfigInvalid(f"unknown quadrature rule {rule!r}")


def _axis_weights_box(m: int, a: float, b: float) -> np.ndarray:
    """Weights integrating the piecewise-linear interpolant over [a, b] exactly."""
    h = 1.0 / (m - 1)
    w = np.zeros(m)
    for i in range(m - 1):
        t0, t1 = i * h, (i + 1) * h
        lo, hi = max(a, t0), min(b, t1)
        if hi <= lo:
            continue
        s0, s1 = (lo - t0) / h, (hi - t0) / h
        half_sq = 0.5 * (s1 * s1 - s0 * s0)
        w[i] += h * ((s1 - s0) - half_sq)
        w[i + 1] += h * half_sq
    return w


def _contract_trailing(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Integrate out the last axis with the given 1D weights."""
    return values @ weights


# ---------------------------------------------------------------------------
# interpolation


def _interp_multilinear(values: np.ndarray, points: np.ndarray) -> np.ndarray:
    d = values.ndim
    m = values.shape[0]
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != d:
        raise ConfigInvalid(f"points have dim {pts.shape[1]}, density has dim {d}")
    pos = np.clip(pts, 0.0, 1.0) * (m - 1)
    i0 = np.minimum(pos.astype(np.int64), m - 2)
    frac = pos - i0
    out = np.zeros(pts.shape[0])
    for corner in range(1 << d):
        weight = np.ones(pts.shape[0])
        idx = []
        for j in range(d):
            bit = (corner >> j) & 1
            weight *= frac[:, j] if bit else (1.0 - frac[:, j])
            idx.append(i0[:, j] + bit)
        out += weight * values[tuple(idx)]
    return out


def _interp_prefix(values: np.ndarray, prefix: np.ndarray) -> np.ndarray:
    """Interpolate over all axes but the last; returns shape (N, m).

    values has shape (m,)*j; prefix has shape (N, j-1). The result row i is
    the slice values[prefix_i, :] of the multilinear interpolant.
    """
    j = values.ndim
    m = values.shape[0]
    prefix = np.atleast_2d(np.asarray(prefix, dtype=np.float64))
    if j == 1:
        n = prefix.shape[0] if prefix.size else 1
        return np.broadcast_to(values, (n, m)).copy()
    if prefix.shape[1] != j - 1:
        raise ConfigInvalid("prefix length does not match values rank")
    pos = np.clip(prefix, 0.0, 1.0) * (m - 1)
    i0 = np.minimum(pos.astype(np.int64), m - 2)
    frac = pos - i0
    out = np.zeros((prefix.shape[0], m))
    for corner in range(1 << (j - 1)):
        weight = np.ones(prefix.shape[0])
        idx = []
        for ax in range(j - 1):
            bit = (corner >> ax) & 1
            weight *= frac[:, ax] if bit else (1.0 - frac[:, ax])
            idx.append(i0[:, ax] + bit)
        out += weight[:, None] * values[tuple(idx)]
    return out


# ---------------------------------------------------------------------------
# operations


def normalize(density: GridDensity) -> GridDensity:
    """Rescale by one constant so the quadrature integral over the cube is 1."""
    if np.any(density.values <= 0.0):
        raise NonPositiveDensity("cannot normalize a density with nonpositive values")
    mass = integrate(density, [(0.0, 1.0)] * density.dim)
    return GridDensity(density.dim, density.resolution,
                       density.values / mass, density.quad_rule)


def integrate(density: GridDensity, box: Sequence) -> float:
    """Integral of the density over an axis-aligned box.

    Full axes use the density's quadrature rule; partial axes integrate the
    piecewise-linear interpolant exactly, so trapezoid-rule densities get
    exact sub-box integrals of their multilinear interpolant.
    """
    box = np.asarray(box, dtype=np.float64)
    if box.shape != (density.dim, 2):
        raise ConfigInvalid(f"box must have shape ({density.dim}, 2)")
    if np.any(box < -1e-12) or np.any(box > 1.0 + 1e-12):
        raise BoxOutOfDomain(f"box {box.tolist()} exceeds the unit cube")
    if np.any(box[:, 0] > box[:, 1]):
        raise ConfigInvalid("box must satisfy a <= b on every axis")
    box = np.clip(box, 0.0, 1.0)
    m = density.resolution
    acc = density.values
    for j in range(density.dim - 1, -1, -1):
        a, b = box[j]
        if a == 0.0 and b == 1.0:
            w = axis_weights(m, density.quad_rule)
        else:
            w = _axis_weights_box(m, a, b)
        acc = _contract_trailing(acc, w)
    return float(acc)


def marginal(density: GridDensity, keep_axes: int) -> GridDensity:
    """Density of the first keep_axes coordinates (quadrature over the rest)."""
    if not 1 <= keep_axes <= density.dim:
        raise ConfigInvalid(f"keep_axes must be in 1..{density.dim}")
    acc = density.values
    w = axis_weights(density.resolution, density.quad_rule)
    for _ in range(density.dim - keep_axes):
        acc = _contract_trailing(acc, w)
    return GridDensity(keep_axes, density.resolution, acc, density.quad_rule)


def prefix_marginal_tables(density: GridDensity) -> list[np.ndarray]:
    """Trapezoid marginal value tables [V_1, ..., V_d], V_j of rank j.

    V_d is the stored values array and V_{j-1} is V_j with its last axis
    integrated out by trapezoid weights. Trapezoid is used regardless of the
    density's quadrature rule because it is the rule that commutes with the
    multilinear storage model; the conditional-density machinery built on
    these tables then reproduces the stored interpolant exactly.
    """
    w = axis_weights(density.resolution, "trapezoid")
    tables = [density.values]
    for _ in range(density.dim - 1):
        tables.append(_contract_trailing(tables[-1], w))
    return tables[::-1]


def conditional_cdf(density: GridDensity, axis: int, context: Sequence[float]) -> ConditionalCDF:
    """CDF of coordinate `axis` (1-based) given the prefix context."""
    if not 1 <= axis <= density.dim:
        raise ConfigInvalid(f"axis must be in 1..{density.dim}")
    context = tuple(float(c) for c in context)
    if len(context) != axis - 1:
        raise ConfigInvalid(f"context must have length {axis - 1}")
    if any(c < 0.0 or c > 1.0 for c in context):
        raise ConfigInvalid("context components must lie in [0, 1]")
    tables = prefix_marginal_tables(density)
    vj = tables[axis - 1]          # rank == axis
    g = _interp_prefix(vj, np.array([context]) if context else np.empty((1, 0)))[0]
    return _cdf_from_pdf_samples(axis, context, density.knots, g)


def _cdf_from_pdf_samples(axis: int, context: tuple, knots: np.ndarray,
                          g: np.ndarray) -> ConditionalCDF:
    if np.any(g <= 0.0):
        raise ZeroMarginal("conditional density hit zero; positivity violated")
    h = knots[1] - knots[0]
    raw = np.concatenate(([0.0], np.cumsum(h * (g[:-1] + g[1:]) / 2.0)))
    z = raw[-1]
    if z <= 0.0:
        raise ZeroMarginal("conditional density has zero mass")
    cdf = raw / z
    cdf[0], cdf[-1] = 0.0, 1.0
    return ConditionalCDF(axis=axis, context=context, knots=knots,
                          cdf_values=cdf, pdf_values=g / z)


def mollify(density: GridDensity, sigma: float) -> GridDensity:
    """Per-axis circular convolution with a wrapped Gaussian of scale sigma.

    Grid endpoints are the same point mod 1, so the convolution runs on the
    resolution-1 distinct nodes and the final node is re-pinned to the first;
    the output is 1-periodic per axis, strictly positive, and normalized.
    The kernel is truncated at 8 sigma (tail mass below 1e-15) and rescaled
    to sum exactly 1, so the uniform density is a fixed point.
    """
    if sigma <= 0.0:
        raise ConfigInvalid("sigma must be positive")
    m = density.resolution
    length = m - 1
    h = 1.0 / length
    reach = int(math.ceil(8.0 * sigma / h))
    offsets = np.arange(-reach, reach + 1)
    weights = np.exp(-0.5 * (offsets * h / sigma) ** 2)
    kernel = np.zeros(length)
    np.add.at(kernel, offsets % length, weights)
    kernel /= kernel.sum()

    core = density.values[(slice(0, length),) * density.dim].copy()
    nz = np.nonzero(kernel)[0]
    for ax in range(density.dim):
        out = np.zeros_like(core)
        for o in nz:
            out += kernel[o] * np.roll(core, o, axis=ax)
        core = out
    full = np.pad(core, [(0, 1)] * density.dim, mode="wrap")
    return normalize(GridDensity(density.dim, m, full, density.quad_rule))


# ---------------------------------------------------------------------------
# named analytic families


def _mesh(dim: int, m: int) -> list[np.ndarray]:
    axes = [np.linspace(0.0, 1.0, m)] * dim
    return np.meshgrid(*axes, indexing="ij")


def make_density(name: str, dim: int | None = None, resolution: int | None = None,
                 quad_rule: str = "trapezoid", params: dict | None = None) -> GridDensity:
    """Build one of the named analytic families, normalized.

    Families: "uniform" (any dim), "tilted" ((2/3)(1+y), 1D), "product"
    (coordinatewise tilted), "coupled" ((1 + a*y1*y2)/(1 + a/4), 2D),
    "bimodal-mollified" (two-bump profile per axis, wrapped-Gaussian smoothed).
    """
    params = dict(params or {})
    if name == "uniform":
        d = dim or 1
        m = resolution or default_resolution(d)
        _reject_unknown(params, set(), name)
        return GridDensity(d, m, np.ones((m,) * d), quad_rule)
    if name == "tilted":
        if dim not in (None, 1):
            raise ConfigInvalid("tilted family is one-dimensional")
        m = resolution or default_resolution(1)
        _reject_unknown(params, set(), name)
        y = np.linspace(0.0, 1.0, m)
        return normalize(GridDensity(1, m, (2.0 / 3.0) * (1.0 + y), quad_rule))
    if name == "product":
        d = dim or 2
        if d < 2:
            raise ConfigInvalid("product family needs dim >= 2")
        m = resolution or default_resolution(d)
        _reject_unknown(params, set(), name)
        grids = _mesh(d, m)
        vals = np.ones((m,) * d)
        for g in grids:
            vals = vals * (2.0 / 3.0) * (1.0 + g)
        return normalize(GridDensity(d, m, vals, quad_rule))
    if name == "coupled":
        if dim not in (None, 2):
            raise ConfigInvalid("coupled family is two-dimensional")
        a = float(params.pop("a", 0.8))
        _reject_unknown(params, set(), name)
        if a <= -1.0:
            raise NonPositiveDensity("coupled family needs a > -1 for positivity")
        m = resolution or default_resolution(2)
        y1, y2 = _mesh(2, m)
        vals = (1.0 + a * y1 * y2) / (1.0 + a / 4.0)
        return normalize(GridDensity(2, m, vals, quad_rule))
    if name == "bimodal-mollified":
        d = dim or 1
        m = resolution or default_resolution(d)
        sigma = float(params.pop("sigma", 0.05))
        floor = float(params.pop("floor", 0.1))
        _reject_unknown(params, set(), name)
        profile = lambda t: (floor + np.exp(-0.5 * ((t - 0.3) / 0.08) ** 2)
                             + 0.75 * np.exp(-0.5 * ((t - 0.72) / 0.09) ** 2))
        grids = _mesh(d, m)
        vals = np.ones((m,) * d)
        for g in grids:
            vals = vals * profile(g)
        return mollify(normalize(GridDensity(d, m, vals, quad_rule)), sigma)
    raise ConfigInvalid(f"unknown density family {name!r}")


def _reject_unknown(params: dict, allowed: set, name: str) -> None:
    if params:
        raise ConfigInvalid(f"unknown parameters {sorted(params)} for family {name!r}")


# ---------------------------------------------------------------------------
# JSON interface


def density_to_dict(density: GridDensity) -> dict:
    return {
        "dim": density.dim,
        "resolution": density.resolution,
        "values": density.values.ravel().tolist(),
        "quad_rule": density.quad_rule,
    }


def density_from_dict(payload: dict) -> GridDensity:
    required = {"dim", "resolution", "values", "quad_rule"}
    unknown = set(payload) - required
    if unknown:
        raise ConfigInvalid(f"unknown density fields {sorted(unknown)}")
    missing = required - set(payload)
    if missing:
        raise ConfigInvalid(f"missing density fields {sorted(missing)}")
    d, m = int(payload["dim"]), int(payload["resolution"])
    vals = np.asarray(payload["values"], dtype=np.float64)
    if vals.size != m**d:
        raise ConfigInvalid(f"values length {vals.size} != resolution^dim {m**d}")
    return GridDensity(d, m, vals.reshape((m,) * d), str(payload["quad_rule"]))


def save_density(density: GridDensity, path: str) -> None:
    write_json_atomic(density_to_dict(density), path)


def load_density(path: str) -> GridDensity:
    with open(path, "r", encoding="utf-8") as fh:
        return density_from_dict(json.load(fh))


def write_json_atomic(payload, path: str) -> None:
    """Serialize to JSON and rename into place; sorted keys, stable floats."""
    text = json.dumps(payload, sort_keys=True, indent=2)
    write_text_atomic(text + "\n", path)


def write_text_atomic(text: str, path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
