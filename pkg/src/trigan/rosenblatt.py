"""Triangular monotone transport maps on the unit cube.

The forward Rosenblatt map sends a target density to the uniform through
successive conditional CDFs: component j is the CDF of coordinate j given
the first j-1 coordinates. Its inverse is the generator that pushes uniform
noise to the target. Both directions share one immutable object: a
TriangularMap stores the components of ONE realization and a direction tag
saying which role (forward / inverse) this object plays; applying the map
either evaluates the components directly or solves them coordinate by
coordinate, depending on whether the stored components realize this
object's own direction.

Conditional CDFs are exact piecewise-quadratic antiderivatives of the
piecewise-linear conditional densities, so forward evaluation, inversion
(closed form per cell), and the diagonal partials are mutually consistent
to machine precision, and the Jacobian of the forward map telescopes to
the stored multilinear interpolant of the density.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from math import factorial
from typing import Protocol, Sequence

import numpy as np

from . import rng
from .density import (ConditionalCDF, GridDensity, _cdf_from_pdf_samples,
                      _interp_prefix, prefix_marginal_tables, write_text_atomic)
from .errors import ConfigInvalid, DegenerateJacobian, RootNotBracketed

_CHUNK = 16384
_JAC_FLOOR = 1e-12
_RESIDUAL_TOL = 1e-10


class MapComponent(Protocol):
    """Monotone-in-t scalar component of a triangular map."""

    def value(self, prefix: np.ndarray, t: np.ndarray) -> np.ndarray: ...

    def partial(self, prefix: np.ndarray, t: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class TableComponent:
    """Conditional-CDF component backed by prefix-marginal value tables.

    table has rank j (the component index, 1-based); trapezoid contraction
    of table over its last axis must reproduce the previous component's
    table, which is what makes the full Jacobian telescope exactly.
    """

    table: np.ndarray
    knots: np.ndarray
    _cached_1d: ConditionalCDF | None = field(default=None, compare=False)

    @property
    def rank(self) -> int:
        return self.table.ndim

    def _cdf_1d(self) -> ConditionalCDF:
        if self._cached_1d is None:
            cdf = _cdf_from_pdf_samples(1, (), self.knots, self.table)
            object.__setattr__(self, "_cached_1d", cdf)
        return self._cached_1d

    def _row_tables(self, prefix: np.ndarray):
        """Per-row conditional pdf g, raw cumulative c, and mass z."""
        g = _interp_prefix(self.table, prefix)
        h = self.knots[1] - self.knots[0]
        cells = h * (g[:, :-1] + g[:, 1:]) / 2.0
        c = np.concatenate([np.zeros((g.shape[0], 1)), np.cumsum(cells, axis=1)], axis=1)
        return g, c, c[:, -1]

    def value(self, prefix: np.ndarray, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        if self.rank == 1:
            return self._cdf_1d().value(t)
        g, c, z = self._row_tables(prefix)
        h = self.knots[1] - self.knots[0]
        m = self.knots.size
        k = np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, m - 2)
        rows = np.arange(t.size)
        s = t - self.knots[k]
        raw = c[rows, k] + g[rows, k] * s + (g[rows, k + 1] - g[rows, k]) * s * s / (2.0 * h)
        out = np.clip(raw / z, 0.0, 1.0)
        return np.where(t >= 1.0, 1.0, np.where(t <= 0.0, 0.0, out))

    def partial(self, prefix: np.ndarray, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        if self.rank == 1:
            return self._cdf_1d().derivative(t)
        g, _, z = self._row_tables(prefix)
        h = self.knots[1] - self.knots[0]
        m = self.knots.size
        k = np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, m - 2)
        rows = np.arange(t.size)
        s = (t - self.knots[k]) / h
        return (g[rows, k] * (1.0 - s) + g[rows, k + 1] * s) / z

    def inverse_exact(self, prefix: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Closed-form cell-wise inverse of the piecewise-quadratic CDF."""
        u = np.asarray(u, dtype=np.float64)
        if self.rank == 1:
            return self._cdf_1d().inverse(u)
        g, c, z = self._row_tables(prefix)
        h = self.knots[1] - self.knots[0]
        m = self.knots.size
        target = np.clip(u, 0.0, 1.0)[:, None] * z[:, None]
        k = np.clip(np.sum(c <= target, axis=1) - 1, 0, m - 2)
        rows = np.arange(u.size)
        r = np.maximum(target[:, 0] - c[rows, k], 0.0)
        p0, p1 = g[rows, k], g[rows, k + 1]
        disc = np.maximum(p0 * p0 + 2.0 * (p1 - p0) * r / h, 0.0)
        s = 2.0 * r / (p0 + np.sqrt(disc))
        return np.clip(self.knots[k] + s, 0.0, 1.0)


@dataclass(frozen=True)
class TriangularMap:
    """Lower-triangular monotone bijection of the unit cube.

    direction is the role of THIS object: "forward" sends the target
    distribution to uniform, "inverse" is the generator role. components
    always realize one fixed triangular map T; components_direct says
    whether T is this object (apply evaluates T) or its inverse (apply
    solves T coordinate-wise).
    """

    dim: int
    components: tuple
    direction: str
    components_direct: bool = True
    order: tuple = ()
    norm_bound_K: float | None = None
    meta: tuple = ()   # family serialization payload, e.g. ("bernstein", json_str)

    def __post_init__(self):
        if self.direction not in ("forward", "inverse"):
            raise ConfigInvalid("direction must be 'forward' or 'inverse'")
        if len(self.components) != self.dim:
            raise ConfigInvalid("need one component per axis")
        if not self.order:
            object.__setattr__(self, "order", tuple(range(self.dim)))

    def inverse(self) -> "TriangularMap":
        flipped = "inverse" if self.direction == "forward" else "forward"
        return replace(self, direction=flipped,
                       components_direct=not self.components_direct)

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = _as_points(points, self.dim)
        fn = self._eval_components if self.components_direct else self._solve_components
        return _in_chunks(fn, pts)

    def invert(self, points: np.ndarray) -> np.ndarray:
        pts = _as_points(points, self.dim)
        fn = self._solve_components if self.components_direct else self._eval_components
        return _in_chunks(fn, pts)

    def jacobian(self, points: np.ndarray) -> np.ndarray:
        """Product of this map's diagonal partials at the given points."""
        pts = _as_points(points, self.dim)
        if self.components_direct:
            return _in_chunks(self._jacobian_direct, pts)

        def via_inverse(chunk):
            u = self._solve_components(chunk)
            j = self._jacobian_direct(u)
            return 1.0 / j
        return _in_chunks(via_inverse, pts)

    # internal single-chunk kernels -----------------------------------------

    def _eval_components(self, pts: np.ndarray) -> np.ndarray:
        out = np.empty_like(pts)
        for j, comp in enumerate(self.components):
            out[:, j] = comp.value(pts[:, :j], pts[:, j])
        return out

    def _solve_components(self, pts: np.ndarray) -> np.ndarray:
        out = np.empty_like(pts)
        for j, comp in enumerate(self.components):
            out[:, j] = _solve_monotone(comp, out[:, :j], pts[:, j])
        return out

    def _jacobian_direct(self, pts: np.ndarray) -> np.ndarray:
        jac = np.ones(pts.shape[0])
        for j, comp in enumerate(self.components):
            part = comp.partial(pts[:, :j], pts[:, j])
            if np.any(part < _JAC_FLOOR):
                raise DegenerateJacobian("diagonal partial below positivity floor")
            jac = jac * part
        return jac


@dataclass(frozen=True)
class PushforwardDensity:
    """Density of generator(Z) for Z uniform: f(x) = 1/|J(generator^{-1}(x))|."""

    base_map: TriangularMap

    @property
    def dim(self) -> int:
        return self.base_map.dim

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        gen = self.base_map
        pts = _as_points(points, gen.dim)
        if not gen.components_direct:
            # components realize the forward map; its Jacobian IS the density
            def kernel(chunk):
                jac = np.ones(chunk.shape[0])
                for j, comp in enumerate(gen.components):
                    part = comp.partial(chunk[:, :j], chunk[:, j])
                    if np.any(part < _JAC_FLOOR):
                        raise DegenerateJacobian("diagonal partial below floor")
                    jac = jac * part
                return jac
            return _in_chunks(kernel, pts)

        def kernel(chunk):
            u = gen._solve_components(chunk)
            return 1.0 / gen._jacobian_direct(u)
        return _in_chunks(kernel, pts)

    @property
    def density_bounds(self) -> tuple[float, float] | None:
        """Certified range [1/(d! K^d), K] when the generator records K."""
        k_bound = self.base_map.norm_bound_K
        if k_bound is None:
            return None
        d = self.base_map.dim
        return (1.0 / (factorial(d) * k_bound**d), k_bound)

    def mass(self, resolution: int | None = None, rule: str | None = None) -> float:
        """Quadrature integral over the cube; defaults match the map kind."""
        from .divergence import eval_grid  # local import avoids a cycle
        d = self.base_map.dim
        if rule is None:
            table_backed = isinstance(self.base_map.components[0], TableComponent)
            rule = "trapezoid" if table_backed else "simpson"
        pts, w = eval_grid(d, resolution, rule)
        return float(np.sum(w * self.evaluate(pts)))


# ---------------------------------------------------------------------------
# operations


def build_rosenblatt(density: GridDensity, order: Sequence[int] | None = None) -> TriangularMap:
    """Forward triangular map of the density: component j is the CDF of
    coordinate j given the previous ones.

    order permutes the coordinate hierarchy: the map is built for the density
    with axes transposed by `order` and records the permutation as metadata.
    The default is the lexicographic (identity) order.
    """
    if order is None:
        order = tuple(range(density.dim))
    order = tuple(int(o) for o in order)
    if sorted(order) != list(range(density.dim)):
        raise ConfigInvalid(f"order must be a permutation of 0..{density.dim - 1}")
    values = np.transpose(density.values, order)
    permuted = GridDensity(density.dim, density.resolution, values, density.quad_rule)
    tables = prefix_marginal_tables(permuted)
    knots = density.knots
    comps = tuple(TableComponent(table=t, knots=knots) for t in tables)
    return TriangularMap(dim=density.dim, components=comps,
                         direction="forward", components_direct=True, order=order)


def invert(tri_map: TriangularMap, x: np.ndarray) -> np.ndarray:
    """Solve the triangular system; residual below 1e-10 in sup norm."""
    x = _as_points(x, tri_map.dim)
    y = tri_map.invert(x)
    residual = np.abs(tri_map.apply(y) - x).max() if x.size else 0.0
    if residual > _RESIDUAL_TOL:
        raise RootNotBracketed(f"inverse residual {residual:.3e} exceeds 1e-10")
    return y


def jacobian(tri_map: TriangularMap, y: np.ndarray) -> np.ndarray:
    return tri_map.jacobian(y)


def sample(generator: TriangularMap, n: int, seed: int, trial: int = 0) -> np.ndarray:
    """n points generator(Z_i) for Z_i uniform, Z_i keyed by (seed, index).

    The noise stream is counter-based, so any partition of the index range
    (and any worker count) yields the same points bitwise.
    """
    if generator.direction != "inverse":
        raise ConfigInvalid("sampling requires a map in the generator (inverse) role")
    if n < 0:
        raise ConfigInvalid("n must be nonnegative")
    out = np.empty((n, generator.dim))
    stream = rng.stream_id(rng.KIND_NOISE, trial)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        z = rng.uniforms(seed, stream, lo, hi - lo, generator.dim)
        out[lo:hi] = generator.apply(z)
    return out


def pushforward_density(generator: TriangularMap) -> PushforwardDensity:
    if generator.direction != "inverse":
        raise ConfigInvalid("pushforward density needs a generator-role map")
    return PushforwardDensity(base_map=generator)


# ---------------------------------------------------------------------------
# solving and chunking helpers


def _as_points(points: np.ndarray, dim: int) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None] if dim == 1 else pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise ConfigInvalid(f"points must have shape (N, {dim})")
    return pts


def _in_chunks(fn, pts: np.ndarray) -> np.ndarray:
    n = pts.shape[0]
    if n <= _CHUNK:
        return fn(pts)
    pieces = [fn(pts[lo:lo + _CHUNK]) for lo in range(0, n, _CHUNK)]
    return np.concatenate(pieces, axis=0)


def _solve_monotone(comp, prefix: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Invert a monotone component at fixed prefix.

    Components with a closed-form inverse use it; the rest get bisection to
    width ~1e-13 and a Newton polish with the analytic diagonal partial.
    """
    target = np.clip(np.asarray(target, dtype=np.float64), 0.0, 1.0)
    if hasattr(comp, "inverse_exact"):
        t = comp.inverse_exact(prefix, target)
    else:
        lo = np.zeros_like(target)
        hi = np.ones_like(target)
        flo = comp.value(prefix, lo) - target
        fhi = comp.value(prefix, hi) - target
        if np.any(flo > 1e-9) or np.any(fhi < -1e-9):
            raise RootNotBracketed("component does not bracket its target on [0, 1]")
        for _ in range(44):
            mid = 0.5 * (lo + hi)
            fmid = comp.value(prefix, mid) - target
            take_hi = fmid >= 0.0
            hi = np.where(take_hi, mid, hi)
            lo = np.where(take_hi, lo, mid)
        t = 0.5 * (lo + hi)
    for _ in range(2):
        f = comp.value(prefix, t) - target
        dp = comp.partial(prefix, t)
        step = np.where(dp > _JAC_FLOOR, f / np.where(dp > _JAC_FLOOR, dp, 1.0), 0.0)
        t = np.clip(t - step, 0.0, 1.0)
    return t


# ---------------------------------------------------------------------------
# serialization (bit-exact for table maps: floats survive JSON round trips)


def map_to_dict(tri_map: TriangularMap) -> dict:
    first = tri_map.components[0]
    if isinstance(first, TableComponent):
        return {
            "kind": "rosenblatt_table",
            "dim": tri_map.dim,
            "direction": tri_map.direction,
            "components_direct": tri_map.components_direct,
            "order": list(tri_map.order),
            "resolution": int(first.knots.size),
            "tables": [c.table.ravel().tolist() for c in tri_map.components],
        }
    if tri_map.meta and tri_map.meta[0] == "bernstein":
        payload = json.loads(tri_map.meta[1])
        payload["direction"] = tri_map.direction
        payload["components_direct"] = tri_map.components_direct
        return payload
    raise ConfigInvalid("map components do not support serialization")


def map_from_dict(payload: dict) -> TriangularMap:
    kind = payload.get("kind")
    if kind == "rosenblatt_table":
        required = {"kind", "dim", "direction", "components_direct", "order",
                    "resolution", "tables"}
        unknown = set(payload) - required
        if unknown:
            raise ConfigInvalid(f"unknown map fields {sorted(unknown)}")
        d = int(payload["dim"])
        m = int(payload["resolution"])
        knots = np.linspace(0.0, 1.0, m)
        comps = []
        for j, flat in enumerate(payload["tables"], start=1):
            arr = np.asarray(flat, dtype=np.float64).reshape((m,) * j)
            comps.append(TableComponent(table=arr, knots=knots))
        return TriangularMap(dim=d, components=tuple(comps),
                             direction=str(payload["direction"]),
                             components_direct=bool(payload["components_direct"]),
                             order=tuple(payload["order"]))
    if kind == "bernstein":
        from .hypothesis import map_from_bernstein_payload
        return map_from_bernstein_payload(payload)
    raise ConfigInvalid(f"unknown map kind {kind!r}")


def save_map(tri_map: TriangularMap, path: str) -> None:
    write_text_atomic(json.dumps(map_to_dict(tri_map), sort_keys=True) + "\n", path)


def load_map(path: str) -> TriangularMap:
    with open(path, "r", encoding="utf-8") as fh:
        return map_from_dict(json.load(fh))
