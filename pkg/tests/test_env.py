import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from mechaudit.env import (
    BoundedDensity,
    Categorical,
    ConfigError,
    DomainError,
    Environment,
    FiniteSpace,
    IntervalSpace,
    TableFn,
    TableUtility,
    TruncatedStdNormal,
    TwoAltFromFunction,
    ValuationGridSpace,
    ValuationIdentity,
    ZeroFn,
    IdentityFn,
    evaluate_utility,
    sample_profile,
    sample_type,
    tent_density,
    truncated_normal_sample,
)
from mechaudit.streams import RandomStream


def test_degenerate_categorical_always_returns_the_label():
    space = FiniteSpace(("a", "b"))
    dist = Categorical({"a": 1.0, "b": 0.0})
    rng = RandomStream(3)
    assert all(sample_type(dist, space, rng) == "a" for _ in range(200))


def test_categorical_frequencies_within_binomial_error():
    space = FiniteSpace(("a", "b"))
    dist = Categorical({"a": 0.5, "b": 0.5})
    rng = RandomStream(11)
    draws = [sample_type(dist, space, rng) for _ in range(100_000)]
    freq = draws.count("a") / len(draws)
    # binomial standard error sqrt(0.25 / 1e5) ~ 0.0016; 0.01 is > 6 SE
    assert abs(freq - 0.5) < 0.01


def test_categorical_chi_square_goodness_of_fit():
    space = FiniteSpace(("a", "b", "c", "d"))
    probs = {"a": 0.4, "b": 0.3, "c": 0.2, "d": 0.1}
    dist = Categorical(probs)
    rng = RandomStream(5)
    draws = [sample_type(dist, space, rng) for _ in range(100_000)]
    observed = np.array([draws.count(lab) for lab in space.labels])
    expected = np.array([probs[lab] for lab in space.labels]) * len(draws)
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    assert chi2 < stats.chi2.ppf(0.999, df=3)


def test_truncated_normal_support_and_moments():
    rng = RandomStream(17)
    draws = np.array([truncated_normal_sample(4.0, rng) for _ in range(100_000)])
    assert np.all(np.abs(draws) <= 4.0)
    assert abs(draws.mean()) < 0.02
    a = 4.0
    phi = math.exp(-0.5 * a * a) / math.sqrt(2 * math.pi)
    z = 2 * stats.norm.cdf(a) - 1
    target_var = 1 - 2 * a * phi / z
    assert 0.97 <= draws.var() / target_var <= 1.03

    small = np.array([truncated_normal_sample(0.5, RandomStream(2)) for _ in range(2000)])
    assert np.all(np.abs(small) <= 0.5)


def test_truncated_normal_distribution_matches_analytic_cdf():
    dist = TruncatedStdNormal(2.0)
    rng = RandomStream(23)
    space = IntervalSpace(-2, 2)
    draws = np.array([sample_type(dist, space, rng) for _ in range(50_000)])
    for x in (-1.5, -0.5, 0.0, 0.7, 1.8):
        empirical = np.mean(draws <= x)
        target = dist.cdf(x)
        se = math.sqrt(target * (1 - target) / len(draws))
        assert abs(empirical - target) < 5 * se + 1e-9


def test_truncated_normal_rejects_bad_bound():
    with pytest.raises(ConfigError):
        truncated_normal_sample(0.0, RandomStream(0))


def test_bounded_density_validation():
    with pytest.raises(ConfigError):
        BoundedDensity(xs=(0.0, 1.0), ys=(1.0, 2.0))  # integrates to 1.5
    with pytest.raises(ConfigError):
        BoundedDensity(xs=(0.0, 1.0), ys=(-0.5, 2.5))
    with pytest.raises(ConfigError):
        BoundedDensity(xs=(1.0, 0.0), ys=(1.0, 1.0))


def test_bounded_density_moments_match_quadrature():
    xs = (-1.0, -0.2, 0.5, 1.0)
    raw = (0.0, 1.2, 0.4, 0.6)
    total = quad(lambda x: np.interp(x, xs, raw), -1, 1, points=xs)[0]
    dens = BoundedDensity(xs=xs, ys=tuple(y / total for y in raw))
    mean = quad(lambda x: x * np.interp(x, dens.xs, dens.ys), -1, 1, points=xs)[0]
    second = quad(lambda x: x * x * np.interp(x, dens.xs, dens.ys), -1, 1, points=xs)[0]
    assert abs(dens.mean() - mean) < 1e-9
    assert abs(dens.variance() - (second - mean ** 2)) < 1e-9


def test_bounded_density_sampling_matches_cdf():
    dens = tent_density(0.2, 0.5)
    rng = RandomStream(31)
    space = IntervalSpace(-0.3, 0.7)
    draws = np.array([sample_type(dens, space, rng) for _ in range(50_000)])
    assert np.all(draws >= -0.3 - 1e-12)
    assert np.all(draws <= 0.7 + 1e-12)
    for x in (-0.1, 0.2, 0.45):
        target = dens.cdf(x)
        se = math.sqrt(target * (1 - target) / len(draws))
        assert abs(np.mean(draws <= x) - target) < 5 * se


def test_sample_profile_empty_and_degenerate():
    space = FiniteSpace(("a",))
    env = Environment(
        n=3, space=space, dist=Categorical({"a": 1.0}),
        alternatives=(0,), utility=TableUtility({"a": (0.0,)}), utility_bound=1.0)
    assert sample_profile(env, [], RandomStream(0)) == ()
    assert sample_profile(env, [0, 1, 2], RandomStream(0)) == ("a", "a", "a")


def test_sample_profile_marginals():
    space = FiniteSpace(("a", "b"))
    env = Environment(
        n=4, space=space, dist=Categorical({"a": 0.7, "b": 0.3}),
        alternatives=(0,), utility=TableUtility({"a": (0.0,), "b": (0.0,)}),
        utility_bound=1.0)
    rng = RandomStream(41)
    counts = np.zeros(4)
    trials = 20_000
    for _ in range(trials):
        prof = sample_profile(env, [0, 1, 2, 3], rng)
        counts += np.array([t == "a" for t in prof], dtype=float)
    freq = counts / trials
    se = math.sqrt(0.7 * 0.3 / trials)
    assert np.all(np.abs(freq - 0.7) < 5 * se)


def test_valuation_grid_sampling_shape_and_support():
    space = ValuationGridSpace(num_options=3, bound=2.0, resolution=9)
    dist = TruncatedStdNormal(2.0)
    rng = RandomStream(4)
    t = sample_type(dist, space, rng)
    assert isinstance(t, tuple) and len(t) == 3
    assert space.contains(t)


def test_sampling_is_deterministic_per_seed():
    space = FiniteSpace(("a", "b", "c"))
    dist = Categorical({"a": 0.2, "b": 0.5, "c": 0.3})
    a = [sample_type(dist, space, RandomStream(9, i)) for i in range(64)]
    b = [sample_type(dist, space, RandomStream(9, i)) for i in range(64)]
    assert a == b


def test_evaluate_utility_valuation_identity():
    space = ValuationGridSpace(num_options=2, bound=1.0, resolution=5)
    env = Environment(
        n=2, space=space, dist=TruncatedStdNormal(1.0),
        alternatives=(0, 1), utility=ValuationIdentity(), utility_bound=1.0)
    assert evaluate_utility(env, (0.3, -0.1), 1) == -0.1


def test_evaluate_utility_two_alt_functions():
    env = Environment(
        n=2, space=IntervalSpace(-1, 1), dist=TruncatedStdNormal(1.0),
        alternatives=("A", "B"),
        utility=TwoAltFromFunction(IdentityFn(), ZeroFn()), utility_bound=1.0)
    assert evaluate_utility(env, 0.7, 1) == 0.0
    assert evaluate_utility(env, 0.7, 0) == 0.7


def test_evaluate_utility_table_exact_and_domain_error():
    env = Environment(
        n=2, space=FiniteSpace(("x", "y")), dist=Categorical({"x": 0.5, "y": 0.5}),
        alternatives=(0, 1),
        utility=TableUtility({"x": (0.25, -0.5), "y": (1.0, 0.0)}), utility_bound=1.0)
    assert evaluate_utility(env, "x", 1) == -0.5
    with pytest.raises(DomainError):
        evaluate_utility(env, "z", 0)


def test_utility_boundedness_spot_check():
    from mechaudit.config import parse_config
    from mechaudit.scenarios import build_instance, builtin_scenario

    for name in ("voting", "multiple_public_projects"):
        cfg = parse_config(builtin_scenario(name))
        env, _ = build_instance(cfg.data)
        rng = RandomStream(6)
        for trial in range(10_000 // env.num_alternatives):
            t = sample_type(env.dist, env.space, rng)
            for s in range(env.num_alternatives):
                u = evaluate_utility(env, t, s, player=trial % env.n)
                assert abs(u) <= env.utility_bound + 1e-12


def test_environment_validation():
    with pytest.raises(ConfigError):
        Environment(n=1, space=FiniteSpace(("a",)), dist=Categorical({"a": 1.0}),
                    alternatives=(0,), utility=TableUtility({"a": (0.0,)}),
                    utility_bound=1.0)
    with pytest.raises(ConfigError):
        Categorical({"a": 0.5, "b": 0.4})  # sums to 0.9
    with pytest.raises(ConfigError):
        # categorical distribution over an interval space is incompatible
        Environment(n=2, space=IntervalSpace(0, 1), dist=Categorical({"a": 1.0}),
                    alternatives=(0,), utility=TableUtility({"a": (0.0,)}),
                    utility_bound=1.0)


def test_table_fn_lookup():
    fn = TableFn({"a": 1.5, "b": -2.0})
    assert fn("a") == 1.5
    with pytest.raises(DomainError):
        fn("zzz")
