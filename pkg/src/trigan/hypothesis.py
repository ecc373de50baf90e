"""Certified finite-parameter families of monotone triangular maps.

Generators are triangular maps whose component j is a monotone Bernstein
polynomial in coordinate j, with weights that depend affinely on the
earlier coordinates (the coupling). Writing S_i for the upper Bernstein
sums (each increasing from 0 to 1, with sum_i S_i(t) = p t), component j is

    psi_j(y_1..y_j) = sum_i w_i(y_1..y_{j-1}) S_i(y_j),
    w_i = 1/p + (theta_i - mean theta) + sum_l (c_il - mean_i c_il)(2 y_l - 1).

Mean-centering forces sum_i w_i = 1, so components fix the endpoints 0 and 1
for every parameter choice, and the all-zero parameter vector is the
identity map. The diagonal partial is p * sum_i w_i B_{i-1,p-1}, a convex
combination of the p w_i scaled by p, which gives closed-form bounds on the
Jacobian from the parameter ranges alone. The parameter box is back-solved
from the norm bound K so every vector inside it yields a certified member:
analytic Jacobian range inside [1/K, K] with a safety margin, plus a
numerical Holder-norm check at the box corners.

Discriminators are the paired-generator ratios f_a / (f_a + f_b); their
range constants depend only on (d, K).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from math import comb, factorial

import numpy as np

from . import rng
from .density import write_text_atomic
from .divergence import DiscriminatorFn
from .errors import ConfigInvalid, NetTooLarge, ParamsOutOfBox
from .holder import estimate_holder_norm
from .rosenblatt import TriangularMap, pushforward_density

_SAFETY = 0.95          # certification margin for the box back-solve
_BOX_TOL = 1e-9
_NET_CAP = 1_000_000
_KNOWN_FAMILIES = ("bernstein_triangular", "spline_triangular")


# ---------------------------------------------------------------------------
# Bernstein basis machinery


@lru_cache(maxsize=16)
def _binoms(p: int) -> tuple:
    return tuple(comb(p, l) for l in range(p + 1))


def _bernstein_rows(p: int, t: np.ndarray) -> np.ndarray:
    """Basis values B_{l,p}(t), columns l = 0..p."""
    t = np.asarray(t, dtype=np.float64)
    one = 1.0 - t
    cols = [_binoms(p)[l] * t**l * one ** (p - l) for l in range(p + 1)]
    return np.stack(cols, axis=-1)


def _upper_sums(p: int, t: np.ndarray) -> np.ndarray:
    """S_i(t) = sum_{l >= i} B_{l,p}(t) for i = 1..p; S_i(0)=0, S_i(1)=1."""
    b = _bernstein_rows(p, t)
    rev = np.cumsum(b[..., ::-1], axis=-1)[..., ::-1]
    return rev[..., 1:]


def _upper_sum_derivs(p: int, t: np.ndarray) -> np.ndarray:
    """S_i'(t) = p B_{i-1,p-1}(t); the i-columns partition unity times p."""
    return p * _bernstein_rows(p - 1, t)


@lru_cache(maxsize=16)
def _param_lipschitz(p: int) -> float:
    """sup-norm response of a component to a unit move of one parameter.

    Perturbing one theta (or coupling) entry by delta changes the component
    by delta (S_i(t) - t) times a factor of modulus <= 1, so the shared
    per-parameter constant is max_i sup_t |S_i(t) - t|. Polynomial, so the
    max on a fine grid is exact to grid resolution.
    """
    t = np.linspace(0.0, 1.0, 4097)
    s = _upper_sums(p, t)
    return float(np.abs(s - t[:, None]).max())


# ---------------------------------------------------------------------------
# components


@dataclass(frozen=True)
class BernsteinComponent:
    degree: int
    theta: np.ndarray      # (p,) raw weight block
    coupling: np.ndarray   # (p, r) raw coupling block, r = prefix length used

    def __post_init__(self):
        th = np.array(self.theta, dtype=np.float64)
        cp = np.array(self.coupling, dtype=np.float64)
        th.flags.writeable = False
        cp.flags.writeable = False
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "coupling", cp)

    def weights(self, prefix: np.ndarray) -> np.ndarray:
        p = self.degree
        base = 1.0 / p + (self.theta - self.theta.mean())
        if self.coupling.size:
            centered = self.coupling - self.coupling.mean(axis=0)
            return base[None, :] + (2.0 * prefix[:, : centered.shape[1]] - 1.0) @ centered.T
        return np.broadcast_to(base, (prefix.shape[0], p))

    def value(self, prefix: np.ndarray, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        w = self.weights(np.asarray(prefix, dtype=np.float64))
        s = _upper_sums(self.degree, t)
        return np.clip(np.sum(w * s, axis=-1), 0.0, 1.0)

    def partial(self, prefix: np.ndarray, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        w = self.weights(np.asarray(prefix, dtype=np.float64))
        return np.sum(w * _upper_sum_derivs(self.degree, t), axis=-1)


@dataclass(frozen=True)
class _QuadBernstein(BernsteinComponent):
    """Degree-2 component: phi(t) = 2 w1 t + (w2 - w1) t^2 inverts in closed form."""

    def value(self, prefix: np.ndarray, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        w = self.weights(np.asarray(prefix, dtype=np.float64))
        # t + (w1 - w2) t (1 - t): endpoints and the neutral member are exact
        e = w[..., 0] - w[..., 1]
        return np.clip(t + e * t * (1.0 - t), 0.0, 1.0)

    def inverse_exact(self, prefix: np.ndarray, x: np.ndarray) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
        w = self.weights(np.asarray(prefix, dtype=np.float64))
        w1 = w[:, 0]
        a = w[:, 1] - w1
        # root of a t^2 + 2 w1 t - x in [0,1]; stable for either sign of a
        disc = np.maximum(w1 * w1 + a * x, 0.0)
        return np.clip(x / (w1 + np.sqrt(disc)), 0.0, 1.0)


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class HypothesisConfig:
    """Family description plus the derived certified parameter box.

    box_half is the half-width of the symmetric per-parameter interval; it
    is derived from K by make_config, not chosen by callers.
    """

    dim: int
    k: int
    alpha: float
    K: float
    family: str = "bernstein_triangular"
    degree: int = 2
    coupling_degree: int = 1
    box_half: float = 0.0

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigInvalid("dim must be >= 1")
        if self.k < 1 or int(self.k) != self.k:
            raise ConfigInvalid("k must be an integer >= 1")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigInvalid("alpha must lie in (0, 1]")
        if self.K <= 1.0:
            raise ConfigInvalid("K must exceed 1")
        if self.family not in _KNOWN_FAMILIES:
            raise ConfigInvalid(f"unknown family {self.family!r}")
        if self.family != "bernstein_triangular":
            raise ConfigInvalid("only the bernstein_triangular family is realized")
        if self.degree < 2:
            raise ConfigInvalid("degree must be >= 2")
        if self.coupling_degree not in (0, 1):
            raise ConfigInvalid("coupling_degree must be 0 or 1")

    @property
    def regular(self) -> bool:
        """Smoothness gate k > 1 - alpha + d/2 for the rate machinery."""
        return self.k > 1.0 - self.alpha + self.dim / 2.0

    def blocks(self) -> list[tuple[slice, slice]]:
        """Per-component (theta slice, coupling slice) into the flat vector."""
        p, out, pos = self.degree, [], 0
        for j in range(1, self.dim + 1):
            nc = p * (j - 1) * self.coupling_degree
            out.append((slice(pos, pos + p), slice(pos + p, pos + p + nc)))
            pos += p + nc
        return out

    @property
    def n_params(self) -> int:
        last = self.blocks()[-1][1]
        return last.stop

    @property
    def param_box(self) -> tuple:
        b = self.box_half
        return tuple((-b, b) for _ in range(self.n_params))


def _prefix_gain(config: HypothesisConfig, j: int) -> int:
    return 1 + (j - 1) * config.coupling_degree


def _analytic_box_ok(config: HypothesisConfig, b: float) -> bool:
    """All-corner Jacobian range inside [1/(sK), sK] for half-width b."""
    p = config.degree
    lo = hi = 1.0
    for j in range(1, config.dim + 1):
        spread = 2.0 * b * (p - 1) * _prefix_gain(config, j)
        if spread >= 1.0:
            return False
        lo *= 1.0 - spread
        hi *= 1.0 + spread
    return lo >= 1.0 / (_SAFETY * config.K) and hi <= _SAFETY * config.K


def _holder_check_resolution(config: HypothesisConfig) -> int:
    base = {1: 257, 2: 33}.get(config.dim, 9)
    return max(base, config.k + 2)


def _corner_signs(n: int) -> list[np.ndarray]:
    alt = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    half = np.where(np.arange(n) < n // 2, 1.0, -1.0)
    raw = [np.ones(n), -np.ones(n), alt, -alt, half, -half]
    uniq, seen = [], set()
    for s in raw:
        key = tuple(s)
        if key not in seen:
            seen.add(key)
            uniq.append(s)
    return uniq


def _solve_box_half(config: HypothesisConfig) -> float:
    if 1.0 / (_SAFETY * config.K) > 1.0:
        return 0.0
    lo_b, hi_b = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo_b + hi_b)
        if _analytic_box_ok(config, mid):
            lo_b = mid
        else:
            hi_b = mid
    b = lo_b
    m = _holder_check_resolution(config)
    for _ in range(60):
        if b <= 0.0:
            break
        trial = replace(config, box_half=b)
        worst = 0.0
        for signs in _corner_signs(trial.n_params):
            gen = make_generator(trial, b * signs)
            est = estimate_holder_norm(gen.apply, config.k, config.alpha,
                                       dim=config.dim, resolution=m)
            worst = max(worst, est.total)
        if worst <= _SAFETY * config.K:
            break
        b *= 0.9
    return b


@lru_cache(maxsize=64)
def make_config(dim: int, k: int = 3, alpha: float = 0.5, K: float = 3.0,
                family: str = "bernstein_triangular", degree: int = 2,
                coupling_degree: int = 1) -> HypothesisConfig:
    """Build a family config with the certified parameter box derived from K."""
    base = HypothesisConfig(int(dim), int(k), float(alpha), float(K),
                            family, int(degree), int(coupling_degree))
    return replace(base, box_half=_solve_box_half(base))


# ---------------------------------------------------------------------------
# members


@dataclass(frozen=True)
class GeneratorParams:
    """One parameter vector with its cached analytic Jacobian range."""

    coefficients: np.ndarray
    jac_lower: float    # certified lower bound on the Jacobian over the cube
    c1_upper: float     # certified upper bound on the diagonal-partial product

    def __post_init__(self):
        v = np.array(self.coefficients, dtype=np.float64).ravel()
        v.flags.writeable = False
        object.__setattr__(self, "coefficients", v)


def member_params(config: HypothesisConfig, vector) -> GeneratorParams:
    v = np.asarray(vector, dtype=np.float64).ravel()
    if v.size != config.n_params:
        raise ParamsOutOfBox(f"expected {config.n_params} parameters, got {v.size}")
    p = config.degree
    lo = hi = 1.0
    for theta_sl, coup_sl in config.blocks():
        theta = v[theta_sl]
        dev = theta - theta.mean()
        reach = np.zeros(p)
        if coup_sl.stop > coup_sl.start:
            cc = v[coup_sl].reshape(p, -1)
            reach = np.abs(cc - cc.mean(axis=0)).sum(axis=1)
        lo *= p * float((1.0 / p + dev - reach).min())
        hi *= p * float((1.0 / p + dev + reach).max())
    return GeneratorParams(coefficients=v, jac_lower=lo, c1_upper=hi)


def neutral_params(config: HypothesisConfig) -> np.ndarray:
    return np.zeros(config.n_params)


def make_generator(config: HypothesisConfig, params) -> TriangularMap:
    """Member of the family in the generator role (noise -> target).

    params may be a GeneratorParams or a bare coefficient vector.
    """
    if isinstance(params, GeneratorParams):
        params = params.coefficients
    v = np.asarray(params, dtype=np.float64).ravel()
    if v.size != config.n_params:
        raise ParamsOutOfBox(f"expected {config.n_params} parameters, got {v.size}")
    if np.any(np.abs(v) > config.box_half + _BOX_TOL):
        raise ParamsOutOfBox("a parameter leaves the certified box")
    p = config.degree
    cls = _QuadBernstein if p == 2 else BernsteinComponent
    comps = []
    for j, (theta_sl, coup_sl) in enumerate(config.blocks(), start=1):
        theta = v[theta_sl]
        width = (coup_sl.stop - coup_sl.start) // p if coup_sl.stop > coup_sl.start else 0
        coup = v[coup_sl].reshape(p, width) if width else np.zeros((p, 0))
        comps.append(cls(degree=p, theta=theta, coupling=coup))
    payload = json.dumps({"kind": "bernstein", "config": config_to_dict(config),
                          "params": v.tolist()}, sort_keys=True)
    return TriangularMap(dim=config.dim, components=tuple(comps),
                         direction="inverse", components_direct=True,
                         norm_bound_K=config.K, meta=("bernstein", payload))


@dataclass(frozen=True)
class Certification:
    jac_lower: float
    holder_total: float
    certified: bool


def certify_member(config: HypothesisConfig, params,
                   resolution: int | None = None) -> Certification:
    """Analytic Jacobian bound plus a numerical Holder-norm estimate vs K."""
    gp = params if isinstance(params, GeneratorParams) else member_params(config, params)
    gen = make_generator(config, gp.coefficients)
    m = resolution or _holder_check_resolution(config)
    est = estimate_holder_norm(gen.apply, config.k, config.alpha,
                               dim=config.dim, resolution=m)
    ok = gp.jac_lower >= 1.0 / config.K and est.total <= config.K
    return Certification(jac_lower=gp.jac_lower, holder_total=est.total, certified=ok)


def discriminator_constants(dim: int, K: float) -> tuple[float, float]:
    """Range constants of paired-generator ratios: B1 = 1/(1 + d! K^{d+1})."""
    b1 = 1.0 / (1.0 + factorial(dim) * K ** (dim + 1))
    return b1, 1.0 - b1


def make_discriminator(config: HypothesisConfig, params_a, params_b) -> DiscriminatorFn:
    """Ratio discriminator f_a / (f_a + f_b) of two member pushforwards.

    Identical parameters give the constant-1/2 discriminator bitwise, since
    x/(x + x) rounds to exactly 0.5 for every positive float x.
    """
    f_a = pushforward_density(make_generator(config, params_a))
    f_b = pushforward_density(make_generator(config, params_b))

    def evaluator(x: np.ndarray) -> np.ndarray:
        fa = f_a.evaluate(x)
        fb = f_b.evaluate(x)
        return fa / (fa + fb)

    b1, b2 = discriminator_constants(config.dim, config.K)
    return DiscriminatorFn(evaluator=evaluator, lower=b1, upper=b2)


# ---------------------------------------------------------------------------
# nets


@dataclass(frozen=True)
class EpsNet:
    epsilon: float
    members: tuple
    metric: str = "sup_norm"

    @property
    def cardinality(self) -> int:
        return len(self.members)


def build_eps_net(config: HypothesisConfig, epsilon: float,
                  cap: int = _NET_CAP) -> EpsNet:
    """Uniform lattice of cell centers over the parameter box.

    Spacing comes from the family's per-parameter sup-norm Lipschitz
    constant: q cells per axis with q >= n L b / eps puts every box point
    within eps (sup norm on maps) of some member.
    """
    if epsilon <= 0.0:
        raise ConfigInvalid("epsilon must be positive")
    n = config.n_params
    b = config.box_half
    lip = _param_lipschitz(config.degree)
    q = max(1, math.ceil(n * lip * b / epsilon - 1e-12))
    if n * math.log(q) > math.log(cap) + 1e-9 or q**n > cap:
        raise NetTooLarge(f"lattice has {q}^{n} members, cap is {cap}")
    half_cell = b / q
    axis = -b + half_cell * (2.0 * np.arange(q) + 1.0)
    members = tuple(member_params(config, np.array(combo))
                    for combo in itertools.product(axis, repeat=n))
    return EpsNet(epsilon=float(epsilon), members=members)


def random_box_params(config: HypothesisConfig, count: int, seed: int,
                      trial: int = 0) -> np.ndarray:
    """count uniform parameter vectors in the box, counter-RNG keyed."""
    u = rng.uniforms(seed, rng.stream_id(rng.KIND_MEMBER, trial),
                     0, count, config.n_params)
    return config.box_half * (2.0 * u - 1.0)


# ---------------------------------------------------------------------------
# sup distances and the family diameter


@lru_cache(maxsize=16)
def _probe_points(dim: int, resolution: int):
    axes = [np.linspace(0.0, 1.0, resolution)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    pts.flags.writeable = False
    return pts


def _probe_resolution(dim: int) -> int:
    return {1: 2049, 2: 65}.get(dim, 17)


def map_sup_distance(config: HypothesisConfig, params_a, params_b,
                     resolution: int | None = None) -> float:
    """sup-norm distance of two members, maximized over a probe grid."""
    pts = _probe_points(config.dim, resolution or _probe_resolution(config.dim))
    a = make_generator(config, params_a).apply(pts)
    b = make_generator(config, params_b).apply(pts)
    return float(np.abs(a - b).max())


def family_delta1(config: HypothesisConfig, resolution: int | None = None) -> float:
    """Family diameter under the n=1 subgaussian metric.

    Generator spread is maximized over box corner pairs on a probe grid;
    the discriminator spread uses the certified range width B2 - B1. The
    combination is (1 + d! K^{d+1}) [dD + d^2 (d!)^3 K^{3d+2} dPhi].
    """
    b = config.box_half
    corners = [b * s for s in _corner_signs(config.n_params)]
    d_phi = 0.0
    for pa, pb in itertools.combinations(corners, 2):
        d_phi = max(d_phi, map_sup_distance(config, pa, pb, resolution))
    b1, b2 = discriminator_constants(config.dim, config.K)
    d, big_k = config.dim, config.K
    lead = 1.0 + factorial(d) * big_k ** (d + 1)
    return lead * ((b2 - b1) + d**2 * factorial(d) ** 3 * big_k ** (3 * d + 2) * d_phi)


# ---------------------------------------------------------------------------
# serialization


def config_to_dict(config: HypothesisConfig) -> dict:
    return {
        "dim": config.dim,
        "k": config.k,
        "alpha": config.alpha,
        "K": config.K,
        "family": config.family,
        "degree": config.degree,
        "coupling_degree": config.coupling_degree,
    }


def config_from_dict(payload: dict) -> HypothesisConfig:
    required = {"dim", "k", "alpha", "K", "family", "degree", "coupling_degree"}
    unknown = set(payload) - required
    if unknown:
        raise ConfigInvalid(f"unknown config fields {sorted(unknown)}")
    missing = required - set(payload)
    if missing:
        raise ConfigInvalid(f"missing config fields {sorted(missing)}")
    return make_config(dim=int(payload["dim"]), k=int(payload["k"]),
                       alpha=float(payload["alpha"]), K=float(payload["K"]),
                       family=str(payload["family"]), degree=int(payload["degree"]),
                       coupling_degree=int(payload["coupling_degree"]))


def save_config(config: HypothesisConfig, path: str) -> None:
    write_text_atomic(json.dumps(config_to_dict(config), sort_keys=True) + "\n", path)


def load_config(path: str) -> HypothesisConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def net_to_lists(net: EpsNet) -> list:
    return [m.coefficients.tolist() for m in net.members]


def save_net(net: EpsNet, path: str) -> None:
    write_text_atomic(json.dumps(net_to_lists(net)) + "\n", path)


def map_from_bernstein_payload(payload: dict) -> TriangularMap:
    required = {"kind", "config", "params", "direction", "components_direct"}
    unknown = set(payload) - required
    if unknown:
        raise ConfigInvalid(f"unknown map fields {sorted(unknown)}")
    missing = required - set(payload)
    if missing:
        raise ConfigInvalid(f"missing map fields {sorted(missing)}")
    config = config_from_dict(payload["config"])
    gen = make_generator(config, np.asarray(payload["params"], dtype=np.float64))
    return replace(gen, direction=str(payload["direction"]),
                   components_direct=bool(payload["components_direct"]))
