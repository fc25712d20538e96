import itertools
import math

import numpy as np
import pytest

from mechaudit.env import Categorical, Environment, FiniteSpace, TableUtility
from mechaudit.mechanisms import (
    ConstantChooser,
    HistogramMechanism,
    LabelPartition,
    PluralityChooser,
    run_mechanism,
)
from mechaudit.privacy import (
    AdversaryConfig,
    BudgetExceeded,
    DistributionEngine,
    OutputDistribution,
    PrivacyParams,
    approx_max_divergence,
    audit_bdp,
    audit_group_bdp,
    delta_at_epsilon,
    exact_output_distribution,
    group_privacy_transform,
    mc_output_distribution,
    multinomial_pmf,
    statistical_distance,
)
from mechaudit.scenarios import corpus_plurality, corpus_two_alt
from mechaudit.streams import RandomStream


# ---------------------------------------------------------------------------
# independent oracles (deliberately naive implementations)
# ---------------------------------------------------------------------------

def brute_force_distribution(mech, env, fixed: dict) -> np.ndarray:
    """Law of the outcome by enumerating every profile of the honest players."""
    labels = env.space.labels
    probs = {lab: env.dist.probs[lab] for lab in labels}
    others = [p for p in range(env.n) if p not in fixed]
    out = np.zeros(env.num_alternatives)
    for assignment in itertools.product(labels, repeat=len(others)):
        profile = [None] * env.n
        for p, t in fixed.items():
            profile[p] = t
        for p, t in zip(others, assignment):
            profile[p] = t
        weight = math.prod(probs[t] for t in assignment)
        out[run_mechanism(mech, tuple(profile))] += weight
    return out


def brute_force_delta(p: np.ndarray, q: np.ndarray, eps: float) -> float:
    """max over all outcome events of P[Y] - e^eps Q[Y] (clamped)."""
    best = 0.0
    for mask in range(1 << len(p)):
        sel = [bool(mask >> j & 1) for j in range(len(p))]
        best = max(best, float(np.sum(p[sel]) - math.exp(eps) * np.sum(q[sel])))
    return min(1.0, best)


def brute_force_divergence(p: np.ndarray, q: np.ndarray, delta_prime: float) -> float:
    best = None
    for mask in range(1, 1 << len(p)):
        sel = [bool(mask >> j & 1) for j in range(len(p))]
        pw, qw = float(np.sum(p[sel])), float(np.sum(q[sel]))
        if pw <= delta_prime:
            continue
        value = math.inf if qw == 0.0 else math.log((pw - delta_prime) / qw)
        best = value if best is None else max(best, value)
    return 0.0 if best is None else best


def random_distribution_pair(rng: np.random.Generator, size: int):
    p = rng.dirichlet(np.ones(size))
    q = rng.dirichlet(np.ones(size))
    if rng.random() < 0.2:
        q[rng.integers(size)] = 0.0
        q = q / q.sum()
    P = OutputDistribution(probs=p, method="exact")
    Q = OutputDistribution(probs=q, method="exact")
    return P, Q


# ---------------------------------------------------------------------------
# multinomial pmf
# ---------------------------------------------------------------------------

def test_multinomial_pmf_values():
    assert abs(multinomial_pmf([1, 1], [0.5, 0.5]) - 0.5) < 1e-12
    assert abs(multinomial_pmf([2, 0], [0.5, 0.5]) - 0.25) < 1e-12
    assert abs(multinomial_pmf([2, 1], [0.5, 0.5]) - 0.375) < 1e-12


def test_multinomial_pmf_zero_probability_blocks():
    assert multinomial_pmf([0, 3], [0.0, 1.0]) == 1.0
    assert multinomial_pmf([1, 2], [0.0, 1.0]) == 0.0


def test_multinomial_pmf_sums_to_one():
    from mechaudit.privacy import composition_matrix, multinomial_pmf_vector

    comps = composition_matrix(6, 3)
    pmf = multinomial_pmf_vector(comps, np.array([0.5, 0.3, 0.2]))
    assert abs(pmf.sum() - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# exact output distributions
# ---------------------------------------------------------------------------

def _empty_config(pair):
    return AdversaryConfig(player=0, adversaries=(), announcements=(), pair=pair)


def test_exact_plurality_hand_case():
    env, mech = corpus_plurality(3, {"a": 0.5, "b": 0.5})
    cfg = _empty_config(("a", "b"))
    P = exact_output_distribution(mech, env, cfg, "first")
    Q = exact_output_distribution(mech, env, cfg, "second")
    assert np.allclose(P.probs, [0.75, 0.25], atol=1e-12)
    assert np.allclose(Q.probs, [0.25, 0.75], atol=1e-12)


def test_exact_constant_mechanism_point_mass():
    labels = ("a", "b")
    part = LabelPartition({"a": 0, "b": 1}, 2)
    mech = HistogramMechanism(part, ConstantChooser(0), n=4)
    env = Environment(
        n=4, space=FiniteSpace(labels), dist=Categorical({"a": 0.3, "b": 0.7}),
        alternatives=(0,), utility=TableUtility({"a": (0.0,), "b": (0.0,)}),
        utility_bound=1.0)
    P = exact_output_distribution(mech, env, _empty_config(("a", "b")), "first")
    assert P.probs.tolist() == [1.0]


@pytest.mark.parametrize("maker,kwargs", [
    (corpus_plurality, dict(probs={"a": 0.5, "b": 0.5})),
    (corpus_plurality, dict(probs={"a": 0.5, "b": 0.3, "c": 0.2})),
    (corpus_two_alt, dict(values={"lo": -0.5, "hi": 0.8},
                          probs={"lo": 0.55, "hi": 0.45}, cost=0.6)),
])
@pytest.mark.parametrize("n", [3, 5, 6])
def test_exact_distribution_matches_brute_force(maker, kwargs, n):
    env, mech = maker(n, **kwargs)
    labels = env.space.labels
    for adversaries, announcements in [((), ()), ((2,), (labels[-1],))]:
        cfg = AdversaryConfig(player=0, adversaries=adversaries,
                              announcements=announcements,
                              pair=(labels[0], labels[-1]))
        for which in ("first", "second"):
            ours = exact_output_distribution(mech, env, cfg, which)
            oracle = brute_force_distribution(mech, env, cfg.fixed(which))
            assert np.allclose(ours.probs, oracle, atol=1e-12)


def test_mc_agrees_with_exact_within_4_se():
    env, mech = corpus_plurality(7, {"a": 0.5, "b": 0.3, "c": 0.2})
    cfg = _empty_config(("a", "c"))
    exact = exact_output_distribution(mech, env, cfg, "first")
    mc = mc_output_distribution(mech, env, cfg, 100_000, RandomStream(77), "first")
    se = np.sqrt(exact.probs * (1 - exact.probs) / mc.samples)
    assert np.all(np.abs(mc.probs - exact.probs) <= 4 * se)
    assert mc.counts.sum() == mc.samples


def test_mc_degenerate_distribution_is_point_mass():
    env, mech = corpus_plurality(4, {"a": 1.0, "b": 0.0})
    cfg = _empty_config(("a", "b"))
    mc = mc_output_distribution(mech, env, cfg, 500, RandomStream(3), "first")
    assert mc.probs.tolist() == [1.0, 0.0]


def test_budget_exceeded_raises():
    env, mech = corpus_plurality(10, {"a": 0.5, "b": 0.5})
    cfg = _empty_config(("a", "b"))
    with pytest.raises(BudgetExceeded):
        exact_output_distribution(mech, env, cfg, "first", budget_states=3)


# ---------------------------------------------------------------------------
# divergences
# ---------------------------------------------------------------------------

def _dist(probs):
    return OutputDistribution(probs=np.asarray(probs, float), method="exact")


def test_delta_at_epsilon_examples():
    P = _dist([0.75, 0.25])
    Q = _dist([0.25, 0.75])
    assert delta_at_epsilon(P, P, 0.7) == 0.0
    assert abs(delta_at_epsilon(P, Q, 0.0) - 0.5) < 1e-12
    assert delta_at_epsilon(P, Q, math.log(3.0)) <= 1e-12


def test_statistical_distance_examples():
    P = _dist([0.75, 0.25])
    Q = _dist([0.25, 0.75])
    assert statistical_distance(P, P) == 0.0
    assert abs(statistical_distance(P, Q) - 0.5) < 1e-15
    assert statistical_distance(_dist([1.0, 0.0]), _dist([0.0, 1.0])) == 1.0


def test_delta_matches_event_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(300):
        P, Q = random_distribution_pair(rng, int(rng.integers(2, 6)))
        eps = float(rng.uniform(0, 1.5))
        ours = delta_at_epsilon(P, Q, eps)
        oracle = brute_force_delta(P.probs, Q.probs, eps)
        assert abs(ours - oracle) < 1e-12


def test_divergence_examples():
    P = _dist([0.75, 0.25])
    Q = _dist([0.25, 0.75])
    assert approx_max_divergence(P, P, 0.0) == 0.0
    assert abs(approx_max_divergence(P, Q, 0.0) - math.log(3.0)) < 1e-12
    assert approx_max_divergence(P, Q, 1.0) == 0.0  # no event has mass above 1


def test_divergence_matches_subset_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(300):
        P, Q = random_distribution_pair(rng, int(rng.integers(2, 6)))
        dp = float(rng.uniform(0, 0.6))
        ours = approx_max_divergence(P, Q, dp)
        oracle = brute_force_divergence(P.probs, Q.probs, dp)
        if math.isinf(oracle):
            assert math.isinf(ours)
        else:
            assert abs(ours - oracle) < 1e-12


def test_delta_divergence_equivalence():
    # delta(eps) <= d'  iff  divergence at d' is <= eps
    rng = np.random.default_rng(2)
    checked = 0
    for _ in range(1000):
        P, Q = random_distribution_pair(rng, int(rng.integers(2, 6)))
        eps = float(rng.uniform(0, 1.2))
        dp = float(rng.uniform(0, 0.8))
        delta = delta_at_epsilon(P, Q, eps)
        div = approx_max_divergence(P, Q, dp)
        if abs(delta - dp) < 1e-10 or abs(div - eps) < 1e-10:
            continue  # skip knife-edge cases where rounding decides
        assert (delta <= dp) == (div <= eps)
        checked += 1
    assert checked > 900


def test_delta_convex_and_nonincreasing_in_exp_eps():
    rng = np.random.default_rng(3)
    for _ in range(100):
        P, Q = random_distribution_pair(rng, 4)
        eps = sorted(rng.uniform(0, 2, size=3))
        d = [delta_at_epsilon(P, Q, e) for e in eps]
        assert d[0] >= d[1] >= d[2]
        x = [math.exp(e) for e in eps]
        lam = (x[1] - x[0]) / (x[2] - x[0])
        assert d[1] <= (1 - lam) * d[0] + lam * d[2] + 1e-12


# ---------------------------------------------------------------------------
# audits
# ---------------------------------------------------------------------------

def test_audit_constant_mechanism_is_perfectly_private():
    labels = ("a", "b")
    part = LabelPartition({"a": 0, "b": 1}, 2)
    mech = HistogramMechanism(part, ConstantChooser(0), n=4)
    env = Environment(
        n=4, space=FiniteSpace(labels), dist=Categorical({"a": 0.3, "b": 0.7}),
        alternatives=(0,), utility=TableUtility({"a": (0.0,), "b": (0.0,)}),
        utility_bound=1.0)
    rep = audit_bdp(mech, env, 2, eps_grid=(0.0, 0.5), stream=RandomStream(0))
    assert rep.exhaustive
    assert rep.worst_delta == (0.0, 0.0)


def test_audit_plurality_hand_values():
    env, mech = corpus_plurality(3, {"a": 0.5, "b": 0.5})
    rep = audit_bdp(mech, env, 0, eps_grid=(0.0, math.log(3.0)),
                    stream=RandomStream(0))
    assert rep.exhaustive and rep.method == "exact"
    assert abs(rep.worst_delta[0] - 0.5) < 1e-12
    assert rep.worst_delta[1] < 1e-12


def test_audit_worst_is_pointwise_scenario_max():
    env, mech = corpus_plurality(5, {"a": 0.5, "b": 0.3, "c": 0.2})
    rep = audit_bdp(mech, env, 1, eps_grid=(0.1, 0.5), stream=RandomStream(0))
    for j in range(2):
        assert rep.worst_delta[j] == max(row.deltas[j] for row in rep.rows)
    assert rep.worst_delta[1] <= rep.worst_delta[0]


def test_audit_delta0_equals_statistical_distance_per_scenario():
    env, mech = corpus_plurality(4, {"a": 0.6, "b": 0.4})
    engine = DistributionEngine(mech, env)
    labels = env.space.labels
    for t, t2 in itertools.permutations(labels, 2):
        P = engine.exact({0: t})
        Q = engine.exact({0: t2})
        assert abs(delta_at_epsilon(P, Q, 0.0) - statistical_distance(P, Q)) < 1e-12


def test_audit_falls_back_to_mc_when_budget_small():
    env, mech = corpus_plurality(9, {"a": 0.5, "b": 0.5})
    rep = audit_bdp(mech, env, 0, eps_grid=(0.2,), budget_states=2,
                    mc_samples=20_000, stream=RandomStream(5))
    assert rep.method == "mc"
    exact = audit_bdp(mech, env, 0, eps_grid=(0.2,), stream=RandomStream(5))
    assert abs(rep.worst_delta[0] - exact.worst_delta[0]) < 0.02


def test_audit_worker_count_independence():
    env, mech = corpus_plurality(6, {"a": 0.5, "b": 0.3, "c": 0.2})
    rep1 = audit_bdp(mech, env, 1, stream=RandomStream(9), workers=1)
    rep8 = audit_bdp(mech, env, 1, stream=RandomStream(9), workers=8)
    assert rep1.worst_delta == rep8.worst_delta
    assert [r.deltas for r in rep1.rows] == [r.deltas for r in rep8.rows]


# ---------------------------------------------------------------------------
# group privacy
# ---------------------------------------------------------------------------

def test_group_transform_values():
    p = group_privacy_transform(2, PrivacyParams(k=3, eps=0.1, delta=0.01))
    assert p.k == 2
    assert abs(p.eps - 0.2) < 1e-15
    assert abs(p.delta - (math.exp(0.1) + 1.0) * 0.01) < 1e-12

    ident = group_privacy_transform(1, PrivacyParams(k=3, eps=0.1, delta=0.01))
    assert (ident.k, ident.eps, ident.delta) == (3, 0.1, 0.01)

    limit = group_privacy_transform(3, PrivacyParams(k=4, eps=0.0, delta=0.01))
    assert abs(limit.delta - 0.03) < 1e-15

    from mechaudit.env import DomainError
    with pytest.raises(DomainError):
        group_privacy_transform(5, PrivacyParams(k=3, eps=0.1, delta=0.01))


def test_group_audit_size_one_matches_individual():
    env, mech = corpus_plurality(4, {"a": 0.6, "b": 0.4})
    individual = audit_bdp(mech, env, 1, eps_grid=(0.1, 0.3), stream=RandomStream(1))
    group = audit_group_bdp(mech, env, 1, 1, eps_grid=(0.1, 0.3), stream=RandomStream(1))
    assert individual.worst_delta == group.worst_delta


def test_group_audit_bounded_by_transform():
    env, mech = corpus_plurality(4, {"a": 0.6, "b": 0.4})
    grid = (0.1, 0.2, 0.5)
    k = 2
    individual = audit_bdp(mech, env, k, eps_grid=grid, stream=RandomStream(1))
    group = audit_group_bdp(mech, env, 2, k - 1,
                            eps_grid=tuple(2 * e for e in grid), stream=RandomStream(1))
    assert individual.exhaustive and group.exhaustive
    for e, g_meas, d_ind in zip(grid, group.worst_delta, individual.worst_delta):
        bound = group_privacy_transform(2, PrivacyParams(k, e, d_ind)).delta
        assert g_meas <= bound


def test_adversary_config_validation():
    from mechaudit.env import ConfigError
    with pytest.raises(ConfigError):
        AdversaryConfig(player=0, adversaries=(0,), announcements=("a",),
                        pair=("a", "b"))
    with pytest.raises(ConfigError):
        AdversaryConfig(player=0, adversaries=(1,), announcements=(),
                        pair=("a", "b"))
