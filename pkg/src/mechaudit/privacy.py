"""Empirical (k, eps, delta) Bayesian-privacy auditing.

The audited quantity: fix a player i, a set I of up to k adversarially
announcing players with announcements t'_I, and a pair of announcements
(t_i, t_i') for player i.  The remaining players J announce their true
types, drawn independently from the type distribution.  The two output
distributions P = law(M(t_i, t'_I, t_J)) and Q = law(M(t_i', t'_I, t_J))
must satisfy P[Y] <= e^eps Q[Y] + delta for every outcome event Y.

For a finite outcome set the smallest such delta at a fixed eps has the
closed form ``sum_s max(0, P(s) - e^eps Q(s))``, so audits never need to
enumerate events.  Output distributions are computed exactly (histogram-
level enumeration with multinomial weights, or type-multiset enumeration
for score mechanisms over finite spaces) or by Monte Carlo with counter-
based streams; Monte Carlo artifacts are cached per structural key so a
whole scenario sweep reuses one set of honest-player draws, exactly as the
definition's probability space prescribes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import itertools

import numpy as np
from scipy.special import gammaln

from . import kernels
from .env import (
    BoundedDensity,
    Categorical,
    ConfigError,
    DomainError,
    Environment,
    FiniteSpace,
    IntervalSpace,
    LinearFn,
    PiecewiseLinearFn,
    TableFn,
    TruncatedStdNormal,
    TypeFunction,
    ValuationGridSpace,
    encode_dist,
)
from .mechanisms import (
    HistogramMechanism,
    Mechanism,
    SocialWelfareMechanism,
    TwoAltMechanism,
    histogram_of,
)
from .streams import RandomStream

DEFAULT_EPS_GRID = (0.1, 0.2, 0.5, 1.0)
DEFAULT_BUDGET_STATES = 10_000_000
DEFAULT_MC_SAMPLES = 100_000
DEFAULT_MAX_SCENARIOS = 200_000
DEFAULT_UCB_Z = 4.0


class BudgetExceeded(RuntimeError):
    """Exact enumeration would exceed the configured state budget."""


# ---------------------------------------------------------------------------
# distributions over alternatives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OutputDistribution:
    """Probability vector over the environment's alternatives.

    Monte Carlo instances carry raw counts so that frequencies are exact
    rationals and per-cell binomial standard errors are available.
    """

    probs: np.ndarray
    method: str  # "exact" | "mc"
    samples: int | None = None
    counts: np.ndarray | None = None

    def __post_init__(self):
        p = self.probs
        if np.any(p < -1e-15):
            raise ValueError("negative probability cell")
        if self.method == "exact" and abs(float(np.sum(p)) - 1.0) > 1e-12:
            raise ValueError("exact distribution does not sum to 1")
        if self.method == "mc" and int(np.sum(self.counts)) != self.samples:
            raise ValueError("Monte Carlo counts do not sum to the sample count")

    def cell_se(self) -> np.ndarray:
        """Per-cell binomial standard error (zeros for exact distributions)."""
        if self.method != "mc":
            return np.zeros_like(self.probs)
        p = self.probs
        return np.sqrt(np.maximum(p * (1.0 - p), 0.0) / self.samples)

    def as_dict(self, env: Environment) -> dict:
        return {str(env.alternatives[s]): float(p) for s, p in enumerate(self.probs)}


def statistical_distance(P: OutputDistribution, Q: OutputDistribution) -> float:
    """Half the L1 distance between the two outcome distributions."""
    return float(0.5 * np.sum(np.abs(P.probs - Q.probs)))


def delta_at_epsilon(P: OutputDistribution, Q: OutputDistribution, eps: float) -> float:
    """Smallest delta making P[Y] <= e^eps Q[Y] + delta hold for all events Y."""
    diff = P.probs - math.exp(eps) * Q.probs
    return float(min(1.0, max(0.0, float(np.sum(diff[diff > 0])))))


def delta_ci_radius(P: OutputDistribution, Q: OutputDistribution, eps: float) -> float:
    """Delta-method one-standard-error radius for the measured delta."""
    diff = P.probs - math.exp(eps) * Q.probs
    active = diff > 0
    if not np.any(active):
        # no active cell: radius from the largest single-cell uncertainty
        var = P.cell_se() ** 2 + math.exp(2 * eps) * Q.cell_se() ** 2
        return float(np.sqrt(np.max(var))) if var.size else 0.0
    var = P.cell_se()[active] ** 2 + math.exp(2 * eps) * Q.cell_se()[active] ** 2
    return float(np.sqrt(np.sum(var)))


def approx_max_divergence(P: OutputDistribution, Q: OutputDistribution,
                          delta_prime: float) -> float:
    """max over events W with P[W] > delta' of ln((P[W] - delta') / Q[W]).

    Returns +inf when some feasible event has Q[W] = 0, and 0.0 when no
    event has P mass above delta' (the empty feasible set).
    """
    p, q = P.probs, Q.probs
    order = np.argsort(-np.where(q > 0, p / np.where(q > 0, q, 1.0), np.inf), kind="stable")
    # the maximizer is a superlevel set of the ratio p/q, i.e. a prefix of
    # the ratio-sorted outcomes (Dinkelbach argument)
    best = None
    pw = qw = 0.0
    for s in order:
        pw += float(p[s])
        qw += float(q[s])
        if pw <= delta_prime:
            continue
        if qw == 0.0:
            return math.inf
        value = math.log((pw - delta_prime) / qw)
        best = value if best is None else max(best, value)
    return 0.0 if best is None else best


# ---------------------------------------------------------------------------
# exact enumeration helpers
# ---------------------------------------------------------------------------

def multinomial_pmf(counts: Sequence[int], probs: Sequence[float]) -> float:
    """Multinomial pmf evaluated in log space."""
    counts = np.asarray(counts, dtype=np.int64)
    probs = np.asarray(probs, dtype=np.float64)
    if np.any(counts < 0):
        raise ValueError("counts must be nonnegative")
    return float(multinomial_pmf_vector(counts[None, :], probs)[0])


def multinomial_pmf_vector(count_rows: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """pmf of each histogram row under one shared probability vector."""
    totals = count_rows.sum(axis=1)
    log_coef = gammaln(totals + 1.0) - gammaln(count_rows + 1.0).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = count_rows * np.log(probs)[None, :]
    terms = np.where(count_rows == 0, 0.0, terms)
    out = np.exp(log_coef + terms.sum(axis=1))
    impossible = ((count_rows > 0) & (probs[None, :] == 0.0)).any(axis=1)
    out[impossible] = 0.0
    return out


def composition_matrix(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length `parts` summing to `total`."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for first in range(total + 1):
        rest = composition_matrix(total - first, parts - 1)
        blocks.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    return np.vstack(blocks)


def _score_function(mech: TwoAltMechanism, space) -> TypeFunction:
    """u_a - u_b collapsed into a single named function of the type."""
    if isinstance(space, FiniteSpace):
        return TableFn({lab: mech.score_one(lab) for lab in space.labels})
    knots = {space.lo, space.hi}
    for fn in (mech.u_a, mech.u_b):
        if isinstance(fn, PiecewiseLinearFn):
            knots.update(fn.xs)
    xs = tuple(sorted(knots))
    ys = tuple(float(mech.u_a(x)) - float(mech.u_b(x)) for x in xs)
    if len(xs) == 2:
        slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
        return LinearFn(slope, ys[0] - slope * xs[0])
    return PiecewiseLinearFn(xs, ys)


# ---------------------------------------------------------------------------
# the output-distribution engine
# ---------------------------------------------------------------------------

class DistributionEngine:
    """Computes laws of M(fixed announcements, random rest) with caching.

    ``fixed`` maps player index -> announced type; the complement of its
    key set announces truthfully-at-random.  All Monte Carlo draws come
    from streams derived off the engine's base stream by structural cache
    key, so results are independent of evaluation order and worker count.
    """

    def __init__(self, mech: Mechanism, env: Environment, *,
                 budget_states: int = DEFAULT_BUDGET_STATES,
                 mc_samples: int = DEFAULT_MC_SAMPLES,
                 stream: RandomStream | None = None):
        self.mech = mech
        self.env = env
        self.budget_states = int(budget_states)
        self.mc_samples = int(mc_samples)
        self.stream = stream if stream is not None else RandomStream(0)
        self._exact_cache: dict = {}
        self._mc_cache: dict = {}
        self._shared: dict = {}

    # -- structural keys ----------------------------------------------------

    def _fixed_key(self, fixed: dict):
        mech = self.mech
        if isinstance(mech, HistogramMechanism):
            base = histogram_of(mech.partition, list(fixed.values()))
            return ("hist", tuple(int(c) for c in base), self.env.n - len(fixed))
        if isinstance(mech, TwoAltMechanism):
            s0 = float(sum(mech.score_one(t) for t in fixed.values()))
            return ("twoalt", s0, self.env.n - len(fixed))
        if isinstance(mech, SocialWelfareMechanism):
            w = mech.weights.array()
            m = mech.weights.num_options
            fixed_sw = np.zeros(m)
            for i, t in fixed.items():
                fixed_sw += w[i] * np.asarray(t, dtype=np.float64)
            others = tuple(sorted(set(range(self.env.n)) - set(fixed)))
            counts = tuple(int(c) for c in w[list(others)].sum(axis=0)) if others else (0,) * m
            return ("sw", tuple(float(v) for v in fixed_sw), counts)
        raise ConfigError(f"unsupported mechanism type {type(mech)!r}")

    # -- exact path ----------------------------------------------------------

    def exact(self, fixed: dict) -> OutputDistribution:
        key = self._fixed_key(fixed)
        hit = self._exact_cache.get(key)
        if hit is None:
            hit = OutputDistribution(probs=self._exact_probs(key), method="exact")
            self._exact_cache[key] = hit
        return hit

    def _exact_probs(self, key) -> np.ndarray:
        kind = key[0]
        num_alts = self.env.num_alternatives
        if kind == "hist":
            base = np.asarray(key[1], dtype=np.int64)
            n_j = key[2]
            m = self.mech.partition.m_blocks
            states = math.comb(n_j + m - 1, m - 1)
            if states > self.budget_states:
                raise BudgetExceeded(f"{states} histogram states exceed the budget")
            comps = composition_matrix(n_j, m)
            pmf = multinomial_pmf_vector(
                comps, self.mech.partition.block_probabilities(self.env.dist, self.env.space))
            outcomes = self.mech.chooser.choose_batch(base[None, :] + comps)
            probs = np.zeros(num_alts)
            np.add.at(probs, outcomes, pmf)
            return probs
        if kind == "twoalt":
            if not isinstance(self.env.space, FiniteSpace):
                raise BudgetExceeded("continuous type space has no exact enumeration")
            s0, n_j = key[1], key[2]
            labels = self.env.space.labels
            states = math.comb(n_j + len(labels) - 1, len(labels) - 1)
            if states > self.budget_states:
                raise BudgetExceeded(f"{states} type multisets exceed the budget")
            comps = composition_matrix(n_j, len(labels))
            pmf = multinomial_pmf_vector(comps, self.env.dist.prob_vector(labels))
            g = self.mech.score_table(self.env.space)
            scores = s0 + comps.astype(np.float64) @ g
            p_a = float(np.sum(pmf[scores > self.mech.cost]))
            total = float(np.sum(pmf))
            return np.array([p_a, total - p_a])
        raise BudgetExceeded("no exact enumeration for this mechanism family")

    # -- Monte Carlo path ----------------------------------------------------

    def _shared_artifact(self, key):
        art = self._shared.get(key)
        if art is not None:
            return art
        stream = self.stream.child("mc", *[str(part) for part in key])
        n = self.mc_samples
        if key[0] == "hist":
            n_j = key[1]
            p = self.mech.partition.block_probabilities(self.env.dist, self.env.space)
            cum = np.cumsum(p)
            cum[-1] = 1.0
            rows = kernels.histogram_counts(stream.key, 0, n, n_j, cum)
            uniq, counts = np.unique(rows, axis=0, return_counts=True)
            art = (uniq, counts.astype(np.int64))
        elif key[0] == "twoalt":
            n_j = key[1]
            space = self.env.space
            if isinstance(space, FiniteSpace):
                g = self.mech.score_table(space)
                dist = encode_dist(self.env.dist, space, values=g)
                sums = kernels.score_sums(stream.key, 0, n, n_j, dist)
            else:
                fn = _score_function(self.mech, space)
                dist = encode_dist(self.env.dist, space)
                sums = kernels.score_sums(stream.key, 0, n, n_j, dist,
                                          transform=fn.kernel_transform())
            art = np.sort(sums)
        elif key[0] == "sw":
            counts = np.asarray(key[1], dtype=np.int64)
            dist = encode_dist(self.env.dist, self.env.space)
            art = kernels.option_sums(stream.key, 0, n, counts, dist)
        else:
            raise ConfigError(f"unknown shared artifact kind {key[0]!r}")
        self._shared[key] = art
        return art

    def mc(self, fixed: dict) -> OutputDistribution:
        key = self._fixed_key(fixed)
        hit = self._mc_cache.get(key)
        if hit is None:
            hit = self._mc_dist(key)
            self._mc_cache[key] = hit
        return hit

    def _mc_dist(self, key) -> OutputDistribution:
        n = self.mc_samples
        num_alts = self.env.num_alternatives
        counts = np.zeros(num_alts, dtype=np.int64)
        if key[0] == "hist":
            base = np.asarray(key[1], dtype=np.int64)
            uniq, weights = self._shared_artifact(("hist", key[2]))
            outcomes = self.mech.chooser.choose_batch(base[None, :] + uniq)
            np.add.at(counts, outcomes, weights)
        elif key[0] == "twoalt":
            s0 = key[1]
            sums = self._shared_artifact(("twoalt", key[2]))
            n_a = n - int(np.searchsorted(sums, self.mech.cost - s0, side="right"))
            counts[0] = n_a
            counts[1] = n - n_a
        elif key[0] == "sw":
            fixed_sw = np.asarray(key[1], dtype=np.float64)
            sums = self._shared_artifact(("sw", key[2]))
            outcomes = self.mech.chooser.choose_batch(sums + fixed_sw[None, :])
            np.add.at(counts, outcomes, 1)
        else:
            raise ConfigError(f"unknown mc kind {key[0]!r}")
        return OutputDistribution(
            probs=counts / n, method="mc", samples=n, counts=counts)

    def distribution(self, fixed: dict, method: str = "auto") -> OutputDistribution:
        if method == "exact":
            return self.exact(fixed)
        if method == "mc":
            return self.mc(fixed)
        try:
            return self.exact(fixed)
        except BudgetExceeded:
            return self.mc(fixed)


# ---------------------------------------------------------------------------
# adversary scenarios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdversaryConfig:
    """One quantifier instantiation of the privacy definition."""

    player: int
    adversaries: tuple[int, ...]
    announcements: tuple
    pair: tuple

    def __post_init__(self):
        if self.player in self.adversaries:
            raise ConfigError("the audited player cannot be an adversary")
        if len(self.adversaries) != len(self.announcements):
            raise ConfigError("each adversary needs exactly one announcement")

    def fixed(self, which: str) -> dict:
        t = self.pair[0] if which == "first" else self.pair[1]
        out = dict(zip(self.adversaries, self.announcements))
        out[self.player] = t
        return out


def neighbor_candidates(env: Environment, stream: RandomStream, extra_random: int = 2) -> list:
    """Candidate announcement values for neighbor pairs and adversaries."""
    space = env.space
    if isinstance(space, FiniteSpace):
        return list(space.labels)
    if isinstance(space, IntervalSpace):
        values = [space.lo, space.hi, 0.5 * (space.lo + space.hi)]
        from .env import sample_type
        values += [sample_type(env.dist, space, stream) for _ in range(extra_random)]
        return values
    m = space.num_options
    grid = space.coordinate_grid()
    values = [tuple([-space.bound] * m), tuple([space.bound] * m)]
    if m >= 2:
        alt = tuple(space.bound if j % 2 == 0 else -space.bound for j in range(m))
        values.append(alt)
    picks = stream.take_uniforms(extra_random * m)
    for r in range(extra_random):
        idx = (picks[r * m:(r + 1) * m] * len(grid)).astype(int)
        values.append(tuple(float(grid[min(i, len(grid) - 1)]) for i in idx))
    seen, out = set(), []
    for v in values:
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out


def _exhaustive_scenario_count(n: int, k: int, t: int) -> int:
    per_i = sum(math.comb(n - 1, j) * t ** j for j in range(k + 1))
    return n * per_i * t * (t - 1)


def adversary_scenarios(env: Environment, k: int, stream: RandomStream, *,
                        max_scenarios: int = DEFAULT_MAX_SCENARIOS,
                        announcement_sets: Iterable[tuple] | None = None,
                        ) -> tuple[list[AdversaryConfig], bool]:
    """The sweep over (player, adversary set, announcements, neighbor pair).

    Exhaustive for finite type spaces within the scenario budget; otherwise
    emits extremal and random announcements plus user-supplied ones and
    reports the sweep as non-exhaustive.
    """
    if k > env.n - 1:
        raise ConfigError("cannot tolerate more adversaries than other players")
    space = env.space
    scenarios: list[AdversaryConfig] = []
    if isinstance(space, FiniteSpace):
        count = _exhaustive_scenario_count(env.n, k, len(space.labels))
        if count <= max_scenarios:
            labels = space.labels
            for i in range(env.n):
                others = [p for p in range(env.n) if p != i]
                for size in range(k + 1):
                    for adv in itertools.combinations(others, size):
                        for ann in itertools.product(labels, repeat=size):
                            for t, t2 in itertools.permutations(labels, 2):
                                scenarios.append(AdversaryConfig(i, adv, ann, (t, t2)))
            return scenarios, True

    values = neighbor_candidates(env, stream.child("neighbors"))
    pairs = [(a, b) for a in values for b in values if a != b]
    players = sorted({0, env.n // 2, env.n - 1})
    sizes = sorted({0, k})
    extremes = values[:2] if len(values) >= 2 else values
    for i in players:
        others = [p for p in range(env.n) if p != i]
        for size in sizes:
            adv = tuple(others[:size])
            ann_sets: list[tuple] = [tuple([v] * size) for v in extremes] if size else [()]
            if size:
                rs = stream.child("announce", i, size)
                from .env import sample_profile
                ann_sets.append(tuple(sample_profile(env, adv, rs)))
            if announcement_sets and size:
                ann_sets += [tuple(a) for a in announcement_sets if len(a) == size]
            seen = set()
            for ann in ann_sets:
                if ann in seen:
                    continue
                seen.add(ann)
                for pair in pairs:
                    scenarios.append(AdversaryConfig(i, adv, ann, pair))
    return scenarios, False


# ---------------------------------------------------------------------------
# privacy parameters, reports, audits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrivacyParams:
    k: int
    eps: float
    delta: float

    def __post_init__(self):
        if self.k < 0:
            raise ConfigError("adversary tolerance k must be nonnegative")
        if self.eps < 0:
            raise ConfigError("eps must be nonnegative")
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigError("delta must lie in [0, 1]")


def group_privacy_transform(c: int, params: PrivacyParams) -> PrivacyParams:
    """Individual-level privacy rescaled to groups of c joint announcers."""
    if c < 1 or c > params.k + 1:
        raise DomainError(f"group size {c} outside [1, k + 1]")
    if params.eps == 0.0:
        multiplier = float(c)
    else:
        multiplier = math.expm1(c * params.eps) / math.expm1(params.eps)
    return PrivacyParams(
        k=params.k - c + 1,
        eps=c * params.eps,
        delta=min(1.0, multiplier * params.delta),
    )


@dataclass(frozen=True)
class ScenarioRow:
    scenario_id: int
    player: int
    adversary_count: int
    deltas: tuple[float, ...]
    ci_radius: tuple[float, ...]
    method: str


@dataclass
class PrivacyReport:
    """Worst-case delta(eps) measurements over a scenario sweep."""

    k: int
    eps_grid: tuple[float, ...]
    worst_delta: tuple[float, ...]
    worst_ci_radius: tuple[float, ...]
    worst_scenario: tuple[int, ...]
    rows: list[ScenarioRow]
    exhaustive: bool
    method: str
    mc_samples: int
    group_size: int = 1

    def delta_star(self, eps: float) -> float:
        for e, d in zip(self.eps_grid, self.worst_delta):
            if e == eps:
                return d
        raise KeyError(f"eps {eps} not on the audit grid")

    def upper_confidence(self, z: float = DEFAULT_UCB_Z) -> tuple[float, ...]:
        return tuple(
            min(1.0, d + z * r) for d, r in zip(self.worst_delta, self.worst_ci_radius))


def exact_output_distribution(mech: Mechanism, env: Environment, config: AdversaryConfig,
                              which: str = "first",
                              budget_states: int = DEFAULT_BUDGET_STATES) -> OutputDistribution:
    """Exact law of the mechanism under one scenario side ("first"/"second")."""
    engine = DistributionEngine(mech, env, budget_states=budget_states)
    return engine.exact(config.fixed(which))


def mc_output_distribution(mech: Mechanism, env: Environment, config: AdversaryConfig,
                           samples: int, rng: RandomStream,
                           which: str = "first") -> OutputDistribution:
    """Monte Carlo law of the mechanism under one scenario side."""
    if samples < 1:
        raise ConfigError("sample count must be at least 1")
    engine = DistributionEngine(mech, env, mc_samples=samples, stream=rng)
    return engine.mc(config.fixed(which))


def _parallel_map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _sweep(engine: DistributionEngine, fixed_pairs: list[tuple[dict, dict, int, int]],
           eps_grid: Sequence[float], method: str, workers: int,
           ) -> tuple[list[ScenarioRow], str]:
    exps = [math.exp(e) for e in eps_grid]

    def evaluate(item):
        idx, (fixed_p, fixed_q, player, adv_count) = item
        if method == "exact":
            P = engine.exact(fixed_p)
            Q = engine.exact(fixed_q)
        elif method == "mc":
            P = engine.mc(fixed_p)
            Q = engine.mc(fixed_q)
        else:
            try:
                P = engine.exact(fixed_p)
                Q = engine.exact(fixed_q)
            except BudgetExceeded:
                P = engine.mc(fixed_p)
                Q = engine.mc(fixed_q)
        deltas, radii = [], []
        for e, ee in zip(eps_grid, exps):
            diff = P.probs - ee * Q.probs
            deltas.append(float(min(1.0, max(0.0, float(np.sum(diff[diff > 0]))))))
            radii.append(delta_ci_radius(P, Q, e))
        return ScenarioRow(
            scenario_id=idx,
            player=player,
            adversary_count=adv_count,
            deltas=tuple(deltas),
            ci_radius=tuple(radii),
            method=P.method if P.method == Q.method else "mixed",
        )

    rows = _parallel_map(evaluate, list(enumerate(fixed_pairs)), workers)
    methods = {r.method for r in rows}
    overall = methods.pop() if len(methods) == 1 else "mixed"
    return rows, overall


def _merge_worst(rows: list[ScenarioRow], grid_len: int):
    worst = [0.0] * grid_len
    radius = [0.0] * grid_len
    witness = [-1] * grid_len
    for row in rows:
        for j in range(grid_len):
            if row.deltas[j] > worst[j]:
                worst[j] = row.deltas[j]
                radius[j] = row.ci_radius[j]
                witness[j] = row.scenario_id
    return tuple(worst), tuple(radius), tuple(witness)


def audit_bdp(mech: Mechanism, env: Environment, k: int, *,
              eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
              stream: RandomStream | None = None,
              budget_states: int = DEFAULT_BUDGET_STATES,
              mc_samples: int = DEFAULT_MC_SAMPLES,
              max_scenarios: int = DEFAULT_MAX_SCENARIOS,
              method: str = "auto",
              workers: int = 1,
              scenario_generator: Callable[..., tuple[list[AdversaryConfig], bool]] | None = None,
              ) -> PrivacyReport:
    """Worst-case measured delta(eps) over the adversary-scenario sweep.

    Sweeps every generated scenario and both orderings of each neighbor
    pair (the generator emits ordered pairs).  The report records whether
    the quantifier sweep was exhaustive.
    """
    stream = stream if stream is not None else RandomStream(0)
    gen = scenario_generator if scenario_generator is not None else adversary_scenarios
    scenarios, exhaustive = gen(env, k, stream.child("scenarios"),
                                max_scenarios=max_scenarios)
    engine = DistributionEngine(mech, env, budget_states=budget_states,
                                mc_samples=mc_samples, stream=stream.child("draws"))
    fixed_pairs = [
        (cfg.fixed("first"), cfg.fixed("second"), cfg.player, len(cfg.adversaries))
        for cfg in scenarios
    ]
    rows, overall = _sweep(engine, fixed_pairs, eps_grid, method, workers)
    worst, radius, witness = _merge_worst(rows, len(eps_grid))
    return PrivacyReport(
        k=k,
        eps_grid=tuple(float(e) for e in eps_grid),
        worst_delta=worst,
        worst_ci_radius=radius,
        worst_scenario=witness,
        rows=rows,
        exhaustive=exhaustive,
        method=overall,
        mc_samples=mc_samples,
    )


# ---------------------------------------------------------------------------
# group-level audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupConfig:
    group: tuple[int, ...]
    adversaries: tuple[int, ...]
    announcements: tuple
    pair: tuple  # (tuple over group, tuple over group)

    def fixed(self, which: str) -> dict:
        ts = self.pair[0] if which == "first" else self.pair[1]
        out = dict(zip(self.adversaries, self.announcements))
        out.update(zip(self.group, ts))
        return out


def group_scenarios(env: Environment, c: int, k: int, stream: RandomStream, *,
                    max_scenarios: int = DEFAULT_MAX_SCENARIOS,
                    ) -> tuple[list[GroupConfig], bool]:
    """Sweep over groups of up to c players changing announcements jointly."""
    space = env.space
    if isinstance(space, FiniteSpace):
        t = len(space.labels)
        count = 0
        for size in range(1, c + 1):
            tuples = t ** size
            per_group = sum(math.comb(env.n - size, j) * t ** j for j in range(k + 1))
            count += math.comb(env.n, size) * per_group * tuples * (tuples - 1)
        if count <= max_scenarios:
            labels = space.labels
            out = []
            for size in range(1, c + 1):
                for group in itertools.combinations(range(env.n), size):
                    others = [p for p in range(env.n) if p not in group]
                    for jsize in range(k + 1):
                        for adv in itertools.combinations(others, jsize):
                            for ann in itertools.product(labels, repeat=jsize):
                                for t_c in itertools.product(labels, repeat=size):
                                    for t_c2 in itertools.product(labels, repeat=size):
                                        if t_c == t_c2:
                                            continue
                                        out.append(GroupConfig(group, adv, ann, (t_c, t_c2)))
            return out, True

    values = neighbor_candidates(env, stream.child("neighbors"))
    extremes = values[: min(3, len(values))]
    out = []
    group = tuple(range(min(c, env.n)))
    others = [p for p in range(env.n) if p not in group]
    adv = tuple(others[:k])
    ann_sets = [tuple([v] * len(adv)) for v in extremes[:2]] if adv else [()]
    for ann in ann_sets:
        for t_c in itertools.product(extremes, repeat=len(group)):
            for t_c2 in itertools.product(extremes, repeat=len(group)):
                if t_c != t_c2:
                    out.append(GroupConfig(group, adv, ann, (t_c, t_c2)))
    return out, False


def audit_group_bdp(mech: Mechanism, env: Environment, c: int, k: int, *,
                    eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
                    stream: RandomStream | None = None,
                    budget_states: int = DEFAULT_BUDGET_STATES,
                    mc_samples: int = DEFAULT_MC_SAMPLES,
                    max_scenarios: int = DEFAULT_MAX_SCENARIOS,
                    method: str = "auto",
                    workers: int = 1) -> PrivacyReport:
    """Worst-case measured delta(eps) when groups of up to c players flip."""
    if c < 1:
        raise ConfigError("group size must be at least 1")
    stream = stream if stream is not None else RandomStream(0)
    scenarios, exhaustive = group_scenarios(env, c, k, stream.child("scenarios"),
                                            max_scenarios=max_scenarios)
    engine = DistributionEngine(mech, env, budget_states=budget_states,
                                mc_samples=mc_samples, stream=stream.child("draws"))
    fixed_pairs = [
        (cfg.fixed("first"), cfg.fixed("second"), cfg.group[0], len(cfg.adversaries))
        for cfg in scenarios
    ]
    rows, overall = _sweep(engine, fixed_pairs, eps_grid, method, workers)
    worst, radius, witness = _merge_worst(rows, len(eps_grid))
    return PrivacyReport(
        k=k,
        eps_grid=tuple(float(e) for e in eps_grid),
        worst_delta=worst,
        worst_ci_radius=radius,
        worst_scenario=witness,
        rows=rows,
        exhaustive=exhaustive,
        method=overall,
        mc_samples=mc_samples,
        group_size=c,
    )
