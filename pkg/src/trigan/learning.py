"""Empirical loss, minimax learning, and sampling-error experiments.

The population suprema over generator and discriminator spaces are taken
over explicit finite nets here: a lattice net of generator members and the
ordered pairs of those members as discriminators. Per (generator, pair)
theoretical losses are computed once by quadrature and reused across all
Monte Carlo trials; per-trial work is the empirical matrix only.

Trials are independent by construction: trial t draws its real and noise
points from counter-RNG streams keyed (seed, stream(kind, t)), so any
assignment of trials to workers produces identical numbers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds, rng
from .density import GridDensity
from .divergence import DiscriminatorFn, eval_grid, js_divergence
from .errors import ConfigInvalid, DiscriminatorOutOfRange, NetTooLarge, NonConvergence
from .hypothesis import (EpsNet, GeneratorParams, HypothesisConfig, build_eps_net,
                         family_delta1, make_generator, member_params)
from .rosenblatt import (PushforwardDensity, TriangularMap, build_rosenblatt,
                         pushforward_density)

_PAIR_CAP = 1_000_000


# ---------------------------------------------------------------------------
# samples


@dataclass(frozen=True)
class TrainingSample:
    n: int
    real_points: np.ndarray    # (n, d) draws from the target
    noise_points: np.ndarray   # (n, d) uniform noise
    seed: int
    trial: int = 0

    def __post_init__(self):
        for name in ("real_points", "noise_points"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def target_sampler(target) -> TriangularMap:
    """A generator-role map whose pushforward is the target density."""
    if isinstance(target, PushforwardDensity):
        base = target.base_map
        return base if base.direction == "inverse" else base.inverse()
    if isinstance(target, GridDensity):
        return build_rosenblatt(target).inverse()
    raise ConfigInvalid(f"cannot sample from {type(target).__name__}")


def make_training_sample(target, n: int, seed: int, trial: int = 0) -> TrainingSample:
    """Draw Y_i from the target and Z_i uniform, on disjoint RNG streams."""
    if n < 1:
        raise ConfigInvalid("sample size must be >= 1")
    gen = target_sampler(target)
    d = gen.dim
    z_real = rng.uniforms(seed, rng.stream_id(rng.KIND_REAL, trial), 0, n, d)
    noise = rng.uniforms(seed, rng.stream_id(rng.KIND_NOISE, trial), 0, n, d)
    return TrainingSample(n=n, real_points=gen.apply(z_real),
                          noise_points=noise, seed=seed, trial=trial)


# ---------------------------------------------------------------------------
# losses


def empirical_loss(disc, generator: TriangularMap, sample: TrainingSample) -> float:
    """(1/2n) sum log D(Y_i) + (1/2n) sum log(1 - D(phi(Z_i)))."""
    fake = generator.apply(sample.noise_points)
    dy = np.asarray(disc(sample.real_points), dtype=np.float64)
    dx = np.asarray(disc(fake), dtype=np.float64)
    for vals in (dy, dx):
        if np.any(vals <= 0.0) or np.any(vals >= 1.0) or not np.all(np.isfinite(vals)):
            raise DiscriminatorOutOfRange("discriminator left (0, 1) on the sample")
    inv = 1.0 / (2.0 * sample.n)
    return float(inv * np.sum(np.log(dy)) + inv * np.sum(np.log1p(-dx)))


@dataclass(frozen=True)
class NetPair:
    """Generator net plus the ordered member pairs acting as discriminators."""

    config: HypothesisConfig
    generators: EpsNet
    pairs: tuple

    @property
    def vectors(self) -> tuple:
        return tuple(m.coefficients for m in self.generators.members)


def make_net_pair(config: HypothesisConfig, epsilon: float | None = None,
                  net: EpsNet | None = None) -> NetPair:
    if net is None:
        if epsilon is None:
            raise ConfigInvalid("need a net or an epsilon to build one")
        net = build_eps_net(config, epsilon)
    c = net.cardinality
    if c * c > _PAIR_CAP:
        raise NetTooLarge(f"{c * c} ordered pairs exceed the cap")
    # all ordered pairs, diagonal included: D_aa is the constant-1/2
    # discriminator, so the inner max is defined even for singleton nets
    pairs = tuple((a, b) for a in range(c) for b in range(c))
    return NetPair(config=config, generators=net, pairs=pairs)


def _target_values(target, pts: np.ndarray) -> np.ndarray:
    vals = np.asarray(target.evaluate(pts), dtype=np.float64)
    if np.any(vals <= 0.0):
        raise ConfigInvalid("target density must be positive on the grid")
    return vals


def pair_loss_matrix(config: HypothesisConfig, target, vectors, pairs,
                     resolution: int | None = None, rule: str = "simpson") -> np.ndarray:
    """Theoretical losses, rows = generators, columns = discriminator pairs.

    Same renormalization and summation order as divergence.theoretical_loss,
    so single-entry cross checks agree bitwise.
    """
    pts, w = eval_grid(config.dim, resolution, rule)
    dens = [pushforward_density(make_generator(config, v)).evaluate(pts)
            for v in vectors]
    tgt = _target_values(target, pts)
    fv = tgt / np.sum(w * tgt)
    gvs = [g / np.sum(w * g) for g in dens]
    out = np.empty((len(vectors), len(pairs)))
    for col, (a, b) in enumerate(pairs):
        dv = dens[a] / (dens[a] + dens[b])
        log_d = np.log(dv)
        log_1m = np.log1p(-dv)
        term_y = np.sum(w * fv * log_d)
        for g, gv in enumerate(gvs):
            out[g, col] = 0.5 * (term_y + np.sum(w * gv * log_1m))
    return out


def empirical_pair_matrix(config: HypothesisConfig, vectors, pairs,
                          sample: TrainingSample) -> np.ndarray:
    """Empirical losses for every (generator, pair) on one sample.

    Density evaluations are shared: f_a at the real points once per member,
    f_a at each member's fake points once per (member, generator).
    """
    maps = [make_generator(config, v) for v in vectors]
    dens = [pushforward_density(m) for m in maps]
    c, n = len(maps), sample.n
    fy = np.stack([dz.evaluate(sample.real_points) for dz in dens])
    fakes = [m.apply(sample.noise_points) for m in maps]
    fx = np.empty((c, c, n))
    for a, dz in enumerate(dens):
        for g, pts in enumerate(fakes):
            fx[a, g] = dz.evaluate(pts)
    inv = 1.0 / (2.0 * n)
    out = np.empty((c, len(pairs)))
    for col, (a, b) in enumerate(pairs):
        term_y = np.sum(np.log(fy[a] / (fy[a] + fy[b])))
        d_fake = fx[a] / (fx[a] + fx[b])
        out[:, col] = inv * (term_y + np.sum(np.log1p(-d_fake), axis=1))
    return out


# ---------------------------------------------------------------------------
# minimax


@dataclass(frozen=True)
class MinimaxResult:
    best_generator: GeneratorParams
    inner_values: dict
    achieved_value: float
    js_to_target: float
    trace: tuple
    converged: bool = True
    strategy: str = "net_exhaustive"
    # the inner maximizer: parameter vectors (a, b) of D_{ab}, so
    # achieved_value can be re-evaluated from the result alone
    inner_pair: tuple = ()


def minimax_fit(config: HypothesisConfig, target, sample: TrainingSample,
                strategy: str = "net_exhaustive", *, epsilon: float = 0.25,
                net_pair: NetPair | None = None, max_iter: int = 200,
                tol: float = 1e-6,
                raise_on_nonconvergence: bool = False) -> MinimaxResult:
    if strategy == "net_exhaustive":
        return _minimax_net(config, target, sample, net_pair, epsilon)
    if strategy == "alternating_gradient":
        return _minimax_gradient(config, target, sample, max_iter, tol,
                                 raise_on_nonconvergence)
    raise ConfigInvalid(f"unknown strategy {strategy!r}")


def _minimax_net(config, target, sample, net_pair, epsilon) -> MinimaxResult:
    pair_net = net_pair or make_net_pair(config, epsilon)
    vectors = pair_net.vectors
    emp = empirical_pair_matrix(config, vectors, pair_net.pairs, sample)
    inner = emp.max(axis=1)
    best = int(np.argmin(inner))
    top = pair_net.pairs[int(np.argmax(emp[best]))]
    gen = make_generator(config, vectors[best])
    js = js_divergence(target, pushforward_density(gen))
    trace = tuple(f"member {g}: inner max {float(inner[g])!r}"
                  for g in range(len(vectors)))
    return MinimaxResult(best_generator=pair_net.generators.members[best],
                         inner_values={g: float(inner[g]) for g in range(len(vectors))},
                         achieved_value=float(inner[best]), js_to_target=float(js),
                         trace=trace, converged=True, strategy="net_exhaustive",
                         inner_pair=(vectors[top[0]], vectors[top[1]]))


def _minimax_gradient(config, target, sample, max_iter, tol, strict) -> MinimaxResult:
    b = config.box_half
    n_par = config.n_params
    gen_v = np.zeros(n_par)
    disc_a = np.full(n_par, 0.5 * b)
    disc_b = np.full(n_par, -0.5 * b)
    h = max(1e-5 * b, 1e-8)
    step = 0.2 * b if b > 0 else 0.0

    def loss(gv, av, bv):
        from .hypothesis import make_discriminator
        disc = make_discriminator(config, av, bv)
        return empirical_loss(disc, make_generator(config, gv), sample)

    def grad(fn, x):
        g = np.zeros_like(x)
        for i in range(x.size):
            up = x.copy(); up[i] = min(up[i] + h, b)
            dn = x.copy(); dn[i] = max(dn[i] - h, -b)
            if up[i] == dn[i]:
                continue
            g[i] = (fn(up) - fn(dn)) / (up[i] - dn[i])
        return g

    inner_values, trace = {}, []
    converged = False
    value = loss(gen_v, disc_a, disc_b)
    for it in range(max_iter):
        g_gen = grad(lambda v: loss(v, disc_a, disc_b), gen_v)
        g_da = grad(lambda v: loss(gen_v, v, disc_b), disc_a)
        g_db = grad(lambda v: loss(gen_v, disc_a, v), disc_b)
        new_gen = np.clip(gen_v - step * g_gen, -b, b)
        new_da = np.clip(disc_a + step * g_da, -b, b)
        new_db = np.clip(disc_b + step * g_db, -b, b)
        move = max(np.abs(new_gen - gen_v).max(), np.abs(new_da - disc_a).max(),
                   np.abs(new_db - disc_b).max())
        gen_v, disc_a, disc_b = new_gen, new_da, new_db
        value = loss(gen_v, disc_a, disc_b)
        inner_values[it] = value
        trace.append(f"iter {it}: value {value!r} move {move:.3e}")
        if move < tol:
            converged = True
            break
        step *= 0.98
    gen = make_generator(config, gen_v)
    js = js_divergence(target, pushforward_density(gen))
    result = MinimaxResult(best_generator=member_params(config, gen_v),
                           inner_values=inner_values, achieved_value=float(value),
                           js_to_target=float(js), trace=tuple(trace),
                           converged=converged, strategy="alternating_gradient",
                           inner_pair=(disc_a.copy(), disc_b.copy()))
    if not converged and strict:
        raise NonConvergence(f"no convergence in {max_iter} iterations", result=result)
    return result


# ---------------------------------------------------------------------------
# sampling error


@dataclass(frozen=True)
class SamplingErrorSummary:
    n: int
    trials: int
    mean: float
    std: float
    q05: float
    q50: float
    q95: float
    values: tuple


def _sampling_trial(args) -> float:
    config, sampler, vectors, pairs, n, seed, trial, losses = args
    z = rng.uniforms(seed, rng.stream_id(rng.KIND_REAL, trial), 0, n, config.dim)
    noise = rng.uniforms(seed, rng.stream_id(rng.KIND_NOISE, trial), 0, n, config.dim)
    sample = TrainingSample(n=n, real_points=sampler.apply(z), noise_points=noise,
                            seed=seed, trial=trial)
    emp = empirical_pair_matrix(config, vectors, pairs, sample)
    return float(np.abs(emp - losses).max())


def sampling_error_values(config: HypothesisConfig, target, net_pair: NetPair,
                          n: int, trials: int, seed: int, threads: int = 1,
                          losses: np.ndarray | None = None) -> np.ndarray:
    """Per-trial sup |empirical - theoretical| over the net pair.

    Results are indexed by trial and independent of the worker count.
    """
    if trials < 1:
        raise ConfigInvalid("trials must be >= 1")
    vectors = net_pair.vectors
    if losses is None:
        losses = pair_loss_matrix(config, target, vectors, net_pair.pairs)
    sampler = target_sampler(target)
    tasks = [(config, sampler, vectors, net_pair.pairs, n, seed, t, losses)
             for t in range(trials)]
    if threads <= 1:
        vals = [_sampling_trial(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(_sampling_trial, tasks, chunksize=8))
    return np.asarray(vals, dtype=np.float64)


def _summarize(n: int, values: np.ndarray) -> SamplingErrorSummary:
    q05, q50, q95 = (float(np.quantile(values, q)) for q in (0.05, 0.5, 0.95))
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return SamplingErrorSummary(n=n, trials=int(values.size),
                                mean=float(np.mean(values)), std=std,
                                q05=q05, q50=q50, q95=q95,
                                values=tuple(float(v) for v in values))


def estimate_sampling_error(config: HypothesisConfig, target, net_pair: NetPair,
                            n: int, trials: int, seed: int,
                            threads: int = 1) -> SamplingErrorSummary:
    vals = sampling_error_values(config, target, net_pair, n, trials, seed, threads)
    return _summarize(n, vals)


# ---------------------------------------------------------------------------
# rate experiment


@dataclass(frozen=True)
class RateRow:
    n: int
    trials: int
    mean: float
    std: float
    q05: float
    q50: float
    q95: float
    bound_C_over_sqrt_n: float
    thm54_threshold: float
    exceed_frac: float


@dataclass(frozen=True)
class RateReport:
    rows: tuple
    slope: float
    slope_defined: bool
    full_C: float
    delta: float
    delta1: float
    regular: bool
    net_size: int
    net_epsilon: float
    pair_count: int
    warnings: tuple = field(default_factory=tuple)


def rate_experiment(config: HypothesisConfig, target, n_grid, trials: int,
                    seed: int, *, delta: float = 0.1, threads: int = 1,
                    epsilon: float = 0.25,
                    net_pair: NetPair | None = None) -> RateReport:
    """Mean sampling error across n, with the theoretical envelope and the
    concentration threshold for the configured delta."""
    n_grid = [int(n) for n in n_grid]
    if not n_grid or any(n < 1 for n in n_grid):
        raise ConfigInvalid("n_grid must be a nonempty list of positive sizes")
    pair_net = net_pair or make_net_pair(config, epsilon)
    vectors = pair_net.vectors
    losses = pair_loss_matrix(config, target, vectors, pair_net.pairs)

    warnings = []
    if config.regular:
        delta1 = family_delta1(config)
        full_c = bounds.full_C(config.dim, config.alpha, config.k, config.K, delta1)
    else:
        delta1 = float("nan")
        full_c = float("nan")
        warnings.append("regularity k > 1 - alpha + d/2 fails; bound columns are nan")

    rows = []
    for n in n_grid:
        vals = sampling_error_values(config, target, pair_net, n, trials, seed,
                                     threads, losses=losses)
        summ = _summarize(n, vals)
        if config.regular:
            bound = full_c / math.sqrt(n)
            threshold, _ = bounds.thm54_threshold_and_prob(
                config.dim, config.alpha, config.k, config.K, n, delta,
                delta1=delta1)
            exceed = float(np.sum(vals > threshold)) / vals.size
        else:
            bound = threshold = exceed = float("nan")
        rows.append(RateRow(n=n, trials=trials, mean=summ.mean, std=summ.std,
                            q05=summ.q05, q50=summ.q50, q95=summ.q95,
                            bound_C_over_sqrt_n=bound, thm54_threshold=threshold,
                            exceed_frac=exceed))

    slope_defined = len(set(n_grid)) >= 2
    means = np.asarray([r.mean for r in rows], dtype=np.float64)
    if slope_defined and not np.all(means > 0.0):
        # degenerate nets can hit the error exactly; log regression is moot
        slope_defined = False
        warnings.append("zero mean sampling error: slope undefined")
    if slope_defined:
        x = np.log(np.asarray(n_grid, dtype=np.float64))
        y = np.log(means)
        xc = x - np.mean(x)
        slope = float(np.sum(xc * (y - np.mean(y))) / np.sum(xc * xc))
    else:
        slope = float("nan")
        if len(set(n_grid)) < 2:
            warnings.append("single n: slope undefined")
    return RateReport(rows=tuple(rows), slope=slope, slope_defined=slope_defined,
                      full_C=full_c, delta=delta, delta1=delta1,
                      regular=config.regular, net_size=pair_net.generators.cardinality,
                      net_epsilon=pair_net.generators.epsilon,
                      pair_count=len(pair_net.pairs), warnings=tuple(warnings))


_RATE_COLUMNS = ("n", "trials", "mean", "std", "q05", "q50", "q95",
                 "bound_C_over_sqrt_n", "thm54_threshold", "exceed_frac")


def rate_report_csv(report: RateReport) -> str:
    lines = [",".join(_RATE_COLUMNS)]
    for r in report.rows:
        cells = [str(r.n), str(r.trials)]
        cells += [repr(float(getattr(r, c))) for c in _RATE_COLUMNS[2:]]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
