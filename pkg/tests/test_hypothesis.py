"""Generator family: configs, certified boxes, members, discriminators, nets."""

import json

import numpy as np
import pytest

import trigan.hypothesis as hyp
from trigan.errors import ConfigInvalid, NetTooLarge, ParamsOutOfBox


# ---------------------------------------------------------------------------
# config validation and derived quantities


@pytest.mark.parametrize("kwargs", [
    {"dim": 0},
    {"dim": 1, "K": 1.0},
    {"dim": 1, "K": 0.5},
    {"dim": 1, "k": 0},
    {"dim": 1, "alpha": 0.0},
    {"dim": 1, "alpha": 1.5},
    {"dim": 1, "family": "fourier_triangular"},
    {"dim": 1, "degree": 1},
    {"dim": 1, "coupling_degree": 2},
])
def test_config_rejections(kwargs):
    with pytest.raises(ConfigInvalid):
        hyp.make_config(**kwargs)


def test_spline_family_listed_but_unrealized():
    # the enum admits the name; construction refuses it
    with pytest.raises(ConfigInvalid, match="realized"):
        hyp.make_config(1, family="spline_triangular")


def test_regular_flag():
    """k > 1 - alpha + d/2 gates the rate machinery."""
    # raw configs: the flag is pure arithmetic, no box solve needed
    assert hyp.HypothesisConfig(1, 3, 0.5, 2.0).regular
    assert not hyp.HypothesisConfig(4, 1, 0.5, 2.0).regular
    assert hyp.HypothesisConfig(2, 2, 0.5, 2.0).regular
    assert not hyp.HypothesisConfig(2, 1, 0.5, 2.0).regular


def test_box_half_frozen_values(cfg1, cfg2):
    assert cfg1.box_half == pytest.approx(0.2368421052631579, rel=1e-12)
    assert cfg2.box_half == pytest.approx(0.13110524990724579, rel=1e-12)
    deg3 = hyp.make_config(1, K=6.0, degree=3)
    assert deg3.box_half == pytest.approx(0.20614035087719296, rel=1e-12)
    uncoupled = hyp.make_config(2, K=3.0, coupling_degree=0)
    assert uncoupled.box_half == pytest.approx(0.20382556112045383, rel=1e-12)
    assert uncoupled.n_params == 4 and cfg2.n_params == 6


def test_box_collapses_near_k_one():
    assert hyp.make_config(1, K=1.04).box_half == 0.0


def test_param_box_shape(cfg1):
    box = cfg1.param_box
    assert len(box) == cfg1.n_params
    assert all(lo == -hi for lo, hi in box)


# ---------------------------------------------------------------------------
# members


def test_neutral_params_give_identity(cfg1, cfg2):
    for cfg in (cfg1, cfg2):
        v = hyp.neutral_params(cfg)
        assert np.all(v == 0.0) and v.size == cfg.n_params
        gen = hyp.make_generator(cfg, v)
        pts = np.random.default_rng(7).random((64, cfg.dim))
        assert np.array_equal(gen.apply(pts), pts)


def test_degree3_increment_example():
    # palindromic increments (0.4, 0.2, 0.4); stored as centered deviations
    cfg = hyp.make_config(1, K=6.0, degree=3)
    theta = np.array([0.4, 0.2, 0.4]) - 1.0 / 3.0
    assert np.max(np.abs(theta)) <= cfg.box_half
    gen = hyp.make_generator(cfg, theta)
    pts = np.array([[0.25], [0.5]])
    vals = gen.apply(pts).ravel()
    assert vals[0] == pytest.approx(0.26875, abs=5e-15)
    assert vals[1] == pytest.approx(0.5, abs=5e-15)
    gp = hyp.member_params(cfg, theta)
    assert gp.jac_lower == pytest.approx(0.6, abs=1e-12)
    assert gp.c1_upper == pytest.approx(1.2, abs=1e-12)
    assert hyp.certify_member(cfg, gp).certified


def test_params_out_of_box(cfg1):
    with pytest.raises(ParamsOutOfBox):
        hyp.make_generator(cfg1, np.zeros(3))        # wrong length
    with pytest.raises(ParamsOutOfBox):
        hyp.make_generator(cfg1, np.array([cfg1.box_half * 1.5, 0.0]))
    hyp.make_generator(cfg1, np.array([cfg1.box_half, -cfg1.box_half]))


def test_member_params_wraps_vector(cfg1):
    gp = hyp.member_params(cfg1, [0.1, -0.1])
    assert not gp.coefficients.flags.writeable
    assert 0.0 < gp.jac_lower <= 1.0 <= gp.c1_upper
    # make_generator accepts the wrapper and the bare vector identically
    pts = np.linspace(0.0, 1.0, 33)[:, None]
    a = hyp.make_generator(cfg1, gp).apply(pts)
    b = hyp.make_generator(cfg1, np.array([0.1, -0.1])).apply(pts)
    assert np.array_equal(a, b)


def test_quadratic_closed_form_and_inverse(cfg1, rng):
    """Degree-2 components: phi(t) = 2 w1 t + (w2 - w1) t^2, stable inverse."""
    for vec in hyp.random_box_params(cfg1, 5, seed=11):
        gen = hyp.make_generator(cfg1, vec)
        e = (vec[0] - vec[1]) / 2.0
        w1, w2 = 0.5 + e, 0.5 - e
        t = rng.random((257, 1))
        x = gen.apply(t)
        assert np.abs(x - (2 * w1 * t + (w2 - w1) * t * t)).max() < 1e-15
        back = gen.invert(x)
        assert np.abs(back - t).max() < 1e-14
        ends = gen.apply(np.array([[0.0], [1.0]]))
        assert ends[0, 0] == 0.0 and ends[1, 0] == 1.0


def test_certification(cfg1, cfg2):
    for cfg in (cfg1, cfg2):
        cert = hyp.certify_member(cfg, hyp.neutral_params(cfg))
        assert cert.certified and cert.jac_lower >= 1.0 / cfg.K
        for vec in hyp.random_box_params(cfg, 3, seed=5):
            assert hyp.certify_member(cfg, vec).certified


# ---------------------------------------------------------------------------
# discriminators


def test_discriminator_constants_plugin():
    b1, b2 = hyp.discriminator_constants(1, 2.0)
    assert b1 == 0.2 and b2 == 0.8


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("K", [2.0, 3.0, 7.5])
def test_discriminator_constants_sum_exact(dim, K):
    b1, b2 = hyp.discriminator_constants(dim, K)
    assert b1 + b2 == 1.0
    assert 0.0 < b1 < 0.5 < b2 < 1.0


def test_discriminator_equal_params_is_half(cfg1, rng):
    v = hyp.random_box_params(cfg1, 1, seed=3)[0]
    disc = hyp.make_discriminator(cfg1, v, v)
    pts = rng.random((200, 1))
    assert np.all(disc(pts) == 0.5)


def test_discriminator_range(cfg1, cfg2, rng):
    for cfg in (cfg1, cfg2):
        b1, b2 = hyp.discriminator_constants(cfg.dim, cfg.K)
        pa, pb = hyp.random_box_params(cfg, 2, seed=9)
        disc = hyp.make_discriminator(cfg, pa, pb)
        vals = disc(rng.random((1000, cfg.dim)))
        assert vals.min() >= b1 - 1e-12 and vals.max() <= b2 + 1e-12
        assert (disc.lower, disc.upper) == (b1, b2)


# ---------------------------------------------------------------------------
# nets


def test_net_cardinalities(cfg1):
    assert hyp.build_eps_net(cfg1, 0.25).cardinality == 1
    assert hyp.build_eps_net(cfg1, 0.1).cardinality == 4
    assert hyp.build_eps_net(cfg1, 0.05).cardinality == 9
    assert hyp.build_eps_net(cfg1, 0.03).cardinality == 16


def test_net_halving_growth(cfg1):
    # lattice geometry: halving eps at most doubles cells per axis
    grow = 2 ** cfg1.n_params
    for eps in (0.25, 0.1, 0.05):
        big = hyp.build_eps_net(cfg1, eps).cardinality
        small = hyp.build_eps_net(cfg1, eps / 2.0).cardinality
        assert small <= grow * big


def test_net_cap(cfg1):
    with pytest.raises(NetTooLarge):
        hyp.build_eps_net(cfg1, 0.03, cap=10)


def test_net_member_invariants(cfg1):
    net = hyp.build_eps_net(cfg1, 0.1)
    assert net.cardinality == len(net.members)
    assert net.metric == "sup_norm"
    seen = {tuple(m.coefficients) for m in net.members}
    assert len(seen) == net.cardinality          # pairwise distinct vectors
    b = cfg1.box_half
    for m in net.members:
        assert np.all(np.abs(m.coefficients) <= b)
    assert hyp.certify_member(cfg1, net.members[0]).certified
    assert hyp.certify_member(cfg1, net.members[-1]).certified


def test_net_covers_box(cfg1):
    """Every box point sits within eps (map sup-norm) of some member."""
    eps = 0.1
    net = hyp.build_eps_net(cfg1, eps)
    for vec in hyp.random_box_params(cfg1, 40, seed=21):
        d = min(hyp.map_sup_distance(cfg1, vec, m) for m in net.members)
        assert d <= eps + 1e-12


def test_net_vs_greedy_cover(cfg1):
    """Lattice cardinality within factor 4 of a brute-force greedy cover.

    For the 2-parameter quadratic family the sup distance has the closed
    form |du| / 2 with u = (t1 - t2) / 2, so the greedy oracle runs on the
    exact metric without touching the implementation under test.
    """
    eps = 0.1
    b = cfg1.box_half
    ax = np.linspace(-b, b, 32)
    pts = np.array([(x, y) for x in ax for y in ax])     # ~10^3 lattice
    u = (pts[:, 0] - pts[:, 1]) / 2.0
    covered = np.zeros(len(u), dtype=bool)
    greedy = 0
    for i in np.argsort(u, kind="stable"):
        if not covered[i]:
            greedy += 1
            covered |= np.abs(u - u[i]) * 0.5 <= eps
    card = hyp.build_eps_net(cfg1, eps).cardinality
    assert card <= 4 * greedy
    assert greedy <= 4 * card


def test_map_sup_distance_closed_form(cfg1):
    a = np.array([0.1, -0.15])
    b = np.array([-0.05, 0.1])
    e = ((a[0] - b[0]) - (a[1] - b[1])) / 2.0
    d = hyp.map_sup_distance(cfg1, a, b)
    assert d == pytest.approx(abs(e) * 0.5, rel=1e-12)
    assert hyp.map_sup_distance(cfg1, b, a) == d


def test_family_delta1_frozen(cfg1):
    d1 = hyp.family_delta1(cfg1)
    assert d1 == pytest.approx(40.89473684210526, rel=1e-12)
    assert d1 > 0.0


def test_realizability_improves_with_degree():
    """Min net distance to a non-polynomial target map shrinks with degree."""
    t = np.linspace(0.0, 1.0, 513)[:, None]
    phi_mu = -1.0 + np.sqrt(1.0 + 3.0 * t)    # inverse of the tilted CDF
    best = {}
    for deg in (2, 3):
        cfg = hyp.make_config(1, K=6.0, degree=deg)
        net = hyp.build_eps_net(cfg, 0.02)
        best[deg] = min(
            float(np.abs(hyp.make_generator(cfg, m).apply(t) - phi_mu).max())
            for m in net.members)
    assert best[3] < best[2] < 0.05


# ---------------------------------------------------------------------------
# serialization and RNG helpers


def test_config_roundtrip(tmp_path, cfg2):
    payload = hyp.config_to_dict(cfg2)
    again = hyp.config_from_dict(payload)
    assert again == cfg2 and again.box_half == cfg2.box_half
    path = tmp_path / "config.json"
    hyp.save_config(cfg2, str(path))
    assert hyp.load_config(str(path)) == cfg2
    with pytest.raises(ConfigInvalid, match="unknown"):
        hyp.config_from_dict({**payload, "extra": 1})
    bad = dict(payload)
    del bad["degree"]
    with pytest.raises(ConfigInvalid, match="missing"):
        hyp.config_from_dict(bad)


def test_save_net(tmp_path, cfg1):
    net = hyp.build_eps_net(cfg1, 0.1)
    path = tmp_path / "net.json"
    hyp.save_net(net, str(path))
    rows = json.loads(path.read_text())
    assert len(rows) == net.cardinality
    assert rows[0] == net.members[0].coefficients.tolist()


def test_random_box_params_deterministic(cfg2):
    a = hyp.random_box_params(cfg2, 6, seed=17)
    b = hyp.random_box_params(cfg2, 6, seed=17)
    assert a.shape == (6, cfg2.n_params)
    assert np.array_equal(a, b)
    assert np.all(np.abs(a) <= cfg2.box_half)
    c = hyp.random_box_params(cfg2, 6, seed=17, trial=1)
    assert not np.array_equal(a, c)
