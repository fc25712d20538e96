"""Deviation-gain measurement and equilibrium checks.

The audited question: with up to k players announcing arbitrarily and a
coalition C of up to r players (disjoint from the deviators) considering a
joint misreport, can any coalition member raise their expected utility by
more than eps over announcing truthfully?  Expectations are over the
remaining players' honest type draws.

Gains are measured exactly (reusing the privacy engine's enumeration) or
by Monte Carlo, maximizing over a candidate announcement set: the full
type space when finite, a declared search grid otherwise (in which case
results are lower bounds on the supremum and flagged non-exhaustive).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .env import (
    ConfigError,
    DomainError,
    Environment,
    FiniteSpace,
    IntervalSpace,
    ValuationGridSpace,
)
from .mechanisms import Mechanism
from .privacy import (
    DEFAULT_BUDGET_STATES,
    DEFAULT_EPS_GRID,
    DEFAULT_MAX_SCENARIOS,
    DEFAULT_MC_SAMPLES,
    BudgetExceeded,
    DistributionEngine,
    PrivacyParams,
    PrivacyReport,
    audit_bdp,
)
from .streams import RandomStream

DEFAULT_SEARCH_GRID = 33


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeviationScenario:
    """Deviators with fixed announcements plus a coalition with true types."""

    deviators: tuple[int, ...]
    deviator_announcements: tuple
    coalition: tuple[int, ...]
    true_types: tuple

    def __post_init__(self):
        if set(self.deviators) & set(self.coalition):
            raise ConfigError("deviators and coalition must be disjoint")
        if len(self.deviators) != len(self.deviator_announcements):
            raise ConfigError("each deviator needs exactly one announcement")
        if len(self.coalition) != len(self.true_types):
            raise ConfigError("each coalition member needs exactly one true type")


@dataclass(frozen=True)
class GainWitness:
    scenario: DeviationScenario
    focal: int
    announced: tuple
    gain: float


@dataclass
class TruthfulnessReport:
    k: int
    r: int
    eps: float | None
    max_gain: float
    gain_ci_radius: float
    witness: GainWitness | None
    exhaustive: bool
    method: str
    verdict: bool | None  # None when no eps threshold was requested

    def passes(self, eps: float) -> bool:
        return self.max_gain <= eps


def deviation_candidates(env: Environment, stream: RandomStream, *,
                         grid_points: int = DEFAULT_SEARCH_GRID,
                         extra: Sequence = ()) -> tuple[list, bool]:
    """Candidate announcements for one player; (candidates, exhaustive)."""
    space = env.space
    if isinstance(space, FiniteSpace):
        return list(space.labels), True
    if isinstance(space, IntervalSpace):
        values = list(space.grid(grid_points)) + [space.lo, space.hi] + list(extra)
        out, seen = [], set()
        for v in values:
            v = float(v)
            if v not in seen:
                seen.add(v)
                out.append(v)
        return out, False
    m = space.num_options
    grid = space.coordinate_grid()
    values = [tuple([-space.bound] * m), tuple([space.bound] * m), tuple([0.0] * m)]
    picks = stream.take_uniforms(4 * m)
    for rblock in range(4):
        idx = (picks[rblock * m:(rblock + 1) * m] * len(grid)).astype(int)
        values.append(tuple(float(grid[min(i, len(grid) - 1)]) for i in idx))
    values += list(extra)
    out, seen = [], set()
    for v in values:
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out, False


def deviation_scenarios(env: Environment, k: int, r: int, stream: RandomStream, *,
                        max_scenarios: int = DEFAULT_MAX_SCENARIOS,
                        ) -> tuple[list[DeviationScenario], bool]:
    """Sweep over (deviator set, announcements, coalition, true types).

    Exhaustive for finite spaces within budget, else extremal-plus-random
    (flagged).  Candidate *announcements* for the coalition are handled by
    the gain search, not here.
    """
    if k < 0 or r < 1:
        raise ConfigError("need k >= 0 and r >= 1")
    if k + r > env.n:
        raise ConfigError("deviators plus coalition exceed the player count")
    space = env.space
    if isinstance(space, FiniteSpace):
        t = len(space.labels)
        count = 0
        for js in range(k + 1):
            for cs in range(1, r + 1):
                count += (math.comb(env.n, js) * t ** js
                          * math.comb(env.n - js, cs) * t ** cs * (t ** cs) * cs)
        if count <= max_scenarios:
            labels = space.labels
            out = []
            for js in range(k + 1):
                for deviators in itertools.combinations(range(env.n), js):
                    rest = [p for p in range(env.n) if p not in deviators]
                    for ann in itertools.product(labels, repeat=js):
                        for cs in range(1, r + 1):
                            for coalition in itertools.combinations(rest, cs):
                                for true_types in itertools.product(labels, repeat=cs):
                                    out.append(DeviationScenario(
                                        deviators, ann, coalition, true_types))
            return out, True

    candidates, _ = deviation_candidates(env, stream.child("true-types"))
    extremes = candidates[: min(4, len(candidates))]
    out = []
    for js in sorted({0, k}):
        deviators = tuple(range(js))
        rest = [p for p in range(env.n) if p not in deviators]
        ann_sets = [tuple([v] * js) for v in extremes[:2]] if js else [()]
        for ann in ann_sets:
            for cs in range(1, r + 1):
                coalition = tuple(rest[:cs])
                for true_types in itertools.product(extremes, repeat=cs):
                    out.append(DeviationScenario(deviators, ann, coalition, true_types))
    return out, False


# ---------------------------------------------------------------------------
# expected utility and deviation gains
# ---------------------------------------------------------------------------

def _eu_from_engine(engine: DistributionEngine, env: Environment, player: int,
                    true_type, announcements: dict, method: str) -> tuple[float, float]:
    """(expected utility, one-standard-error radius) for the focal player."""
    dist = engine.distribution(announcements, method=method)
    uvec = env.utility_vector(true_type, player=player)
    eu = float(np.dot(dist.probs, uvec))
    se = float(np.sqrt(np.sum((uvec * dist.cell_se()) ** 2)))
    return eu, se


def expected_utility(mech: Mechanism, env: Environment, i: int, true_t_i,
                     announcements: dict, method: str = "auto", *,
                     engine: DistributionEngine | None = None,
                     budget_states: int = DEFAULT_BUDGET_STATES,
                     mc_samples: int = DEFAULT_MC_SAMPLES,
                     stream: RandomStream | None = None) -> float:
    """E over honest draws of u_i(true type, M(announcements, honest draws)).

    ``announcements`` must include player i's own announcement; all players
    outside it announce their true (random) types.
    """
    if i not in announcements:
        raise ConfigError("announcements must include the focal player")
    if engine is None:
        engine = DistributionEngine(mech, env, budget_states=budget_states,
                                    mc_samples=mc_samples,
                                    stream=stream if stream is not None else RandomStream(0))
    eu, _ = _eu_from_engine(engine, env, i, true_t_i, announcements, method)
    return eu


def _coalition_gain(engine: DistributionEngine, env: Environment,
                    scenario: DeviationScenario, joint_candidates: Sequence[tuple],
                    method: str) -> tuple[GainWitness, float]:
    """Max over joint announcements and focal members of the per-member gain."""
    base = dict(zip(scenario.deviators, scenario.deviator_announcements))
    truthful = dict(base)
    truthful.update(zip(scenario.coalition, scenario.true_types))
    eus_truth, ses_truth = [], []
    for member, true_t in zip(scenario.coalition, scenario.true_types):
        eu, se = _eu_from_engine(engine, env, member, true_t, truthful, method)
        eus_truth.append(eu)
        ses_truth.append(se)
    best = GainWitness(scenario, scenario.coalition[0], scenario.true_types, 0.0)
    best_gain = -math.inf
    best_se = 0.0
    for joint in joint_candidates:
        announced = dict(base)
        announced.update(zip(scenario.coalition, joint))
        for idx, (member, true_t) in enumerate(zip(scenario.coalition, scenario.true_types)):
            eu, se = _eu_from_engine(engine, env, member, true_t, announced, method)
            gain = eu - eus_truth[idx]
            if gain > best_gain:
                best_gain = gain
                best_se = math.sqrt(se ** 2 + ses_truth[idx] ** 2)
                best = GainWitness(scenario, member, tuple(joint), gain)
    return best, best_se


def best_individual_deviation_gain(mech: Mechanism, env: Environment, i: int, t_i,
                                   deviators: dict | None = None,
                                   method: str = "auto", *,
                                   engine: DistributionEngine | None = None,
                                   stream: RandomStream | None = None,
                                   budget_states: int = DEFAULT_BUDGET_STATES,
                                   mc_samples: int = DEFAULT_MC_SAMPLES) -> float:
    """Max over announcements t' of EU(announce t') - EU(announce truth).

    Always nonnegative: the truthful announcement is in the candidate set.
    """
    deviators = deviators or {}
    stream = stream if stream is not None else RandomStream(0)
    if engine is None:
        engine = DistributionEngine(mech, env, budget_states=budget_states,
                                    mc_samples=mc_samples, stream=stream.child("draws"))
    scenario = DeviationScenario(
        tuple(sorted(deviators)), tuple(deviators[p] for p in sorted(deviators)),
        (i,), (t_i,))
    candidates, _ = deviation_candidates(env, stream.child("candidates"), extra=[t_i])
    witness, _ = _coalition_gain(engine, env, scenario,
                                 [(c,) for c in candidates], method)
    return max(0.0, witness.gain)


def best_coalition_deviation_gain(mech: Mechanism, env: Environment,
                                  coalition: Sequence[int], true_types: Sequence,
                                  deviators: dict | None = None,
                                  method: str = "auto", *,
                                  engine: DistributionEngine | None = None,
                                  stream: RandomStream | None = None,
                                  budget_states: int = DEFAULT_BUDGET_STATES,
                                  mc_samples: int = DEFAULT_MC_SAMPLES,
                                  max_joint_candidates: int = 100_000,
                                  ) -> GainWitness:
    """Max per-member gain over joint coalition misreports; returns the witness."""
    deviators = deviators or {}
    stream = stream if stream is not None else RandomStream(0)
    if engine is None:
        engine = DistributionEngine(mech, env, budget_states=budget_states,
                                    mc_samples=mc_samples, stream=stream.child("draws"))
    scenario = DeviationScenario(
        tuple(sorted(deviators)), tuple(deviators[p] for p in sorted(deviators)),
        tuple(coalition), tuple(true_types))
    candidates, _ = deviation_candidates(env, stream.child("candidates"),
                                         extra=list(true_types))
    joints = _joint_candidates(candidates, len(scenario.coalition),
                               max_joint_candidates, stream)
    witness, _ = _coalition_gain(engine, env, scenario, joints, method)
    if witness.gain < 0:
        witness = GainWitness(scenario, scenario.coalition[0], scenario.true_types, 0.0)
    return witness


def _joint_candidates(candidates: list, size: int, cap: int,
                      stream: RandomStream) -> list[tuple]:
    total = len(candidates) ** size
    if total <= cap:
        return list(itertools.product(candidates, repeat=size))
    # sampled joint search, deterministic in the stream
    picks = stream.child("joint-sample").take_uniforms(cap * size)
    out = []
    for row in range(cap):
        joint = tuple(
            candidates[min(int(picks[row * size + j] * len(candidates)), len(candidates) - 1)]
            for j in range(size))
        out.append(joint)
    return out


def check_truthfulness(mech: Mechanism, env: Environment, k: int, r: int,
                       eps: float | None = None, *,
                       stream: RandomStream | None = None,
                       budget_states: int = DEFAULT_BUDGET_STATES,
                       mc_samples: int = DEFAULT_MC_SAMPLES,
                       max_scenarios: int = DEFAULT_MAX_SCENARIOS,
                       method: str = "auto",
                       workers: int = 1,
                       scenario_generator: Callable | None = None,
                       ) -> TruthfulnessReport:
    """Max measured deviation gain over (k, r) scenarios; PASS iff <= eps."""
    stream = stream if stream is not None else RandomStream(0)
    gen = scenario_generator if scenario_generator is not None else deviation_scenarios
    scenarios, exhaustive = gen(env, k, r, stream.child("scenarios"),
                                max_scenarios=max_scenarios)
    engine = DistributionEngine(mech, env, budget_states=budget_states,
                                mc_samples=mc_samples, stream=stream.child("draws"))
    cand_stream = stream.child("candidates")
    base_candidates, cand_exhaustive = deviation_candidates(env, cand_stream)
    exhaustive = exhaustive and cand_exhaustive
    joint_cap = 100_000

    def evaluate(item):
        idx, scenario = item
        extra = [t for t in scenario.true_types if t not in base_candidates]
        pool = base_candidates + extra
        complete = len(pool) ** len(scenario.coalition) <= joint_cap
        joints = _joint_candidates(pool, len(scenario.coalition), joint_cap,
                                   cand_stream.child(idx))
        wit, se = _coalition_gain(engine, env, scenario, joints, method)
        return wit, se, complete

    from .privacy import _parallel_map
    results = _parallel_map(evaluate, list(enumerate(scenarios)), workers)
    max_gain, witness, radius = 0.0, None, 0.0
    used_methods = set()
    for (wit, se, complete) in results:
        exhaustive = exhaustive and complete
        used_methods.add("exact" if se == 0.0 else "mc")
        if wit.gain > max_gain:
            max_gain, witness, radius = wit.gain, wit, se
    overall = used_methods.pop() if len(used_methods) == 1 else "mixed"
    return TruthfulnessReport(
        k=k, r=r, eps=eps,
        max_gain=max_gain,
        gain_ci_radius=radius,
        witness=witness,
        exhaustive=exhaustive,
        method=overall,
        verdict=None if eps is None else (max_gain <= eps),
    )


# ---------------------------------------------------------------------------
# privacy => truthfulness bound
# ---------------------------------------------------------------------------

def truthfulness_bound_from_privacy(r: int, params: PrivacyParams, alpha: float) -> float:
    """Gain bound (r*eps + 2*r*delta) * 2*alpha implied by measured privacy."""
    if r < 1:
        raise DomainError("coalition size r must be at least 1")
    if alpha <= 0:
        raise DomainError("utility bound alpha must be positive")
    return (r * params.eps + 2.0 * r * params.delta) * (2.0 * alpha)


@dataclass
class Theorem1Result:
    k: int
    r: int
    max_gain: float
    eps_grid: tuple[float, ...]
    bounds: tuple[float, ...]
    bound_min: float
    holds: bool
    advisory: bool
    privacy: PrivacyReport
    truthfulness: TruthfulnessReport


def verify_theorem1(mech: Mechanism, env: Environment, k: int, r: int, *,
                    eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
                    stream: RandomStream | None = None,
                    budget_states: int = DEFAULT_BUDGET_STATES,
                    mc_samples: int = DEFAULT_MC_SAMPLES,
                    workers: int = 1) -> Theorem1Result:
    """Check: measured privacy at tolerance k bounds the measured max gain
    in the (k - r + 1, r) persistent setting, at every grid eps.

    The verdict is marked advisory unless both sweeps were exhaustive and
    exact.
    """
    if not 1 <= r <= k + 1:
        raise DomainError("need 1 <= r <= k + 1")
    stream = stream if stream is not None else RandomStream(0)
    privacy = audit_bdp(mech, env, k, eps_grid=eps_grid, stream=stream.child("privacy"),
                        budget_states=budget_states, mc_samples=mc_samples,
                        workers=workers)
    truth = check_truthfulness(mech, env, k - r + 1, r, stream=stream.child("gain"),
                               budget_states=budget_states, mc_samples=mc_samples,
                               workers=workers)
    alpha = env.utility_bound
    bounds = tuple(
        truthfulness_bound_from_privacy(r, PrivacyParams(k, e, d), alpha)
        for e, d in zip(privacy.eps_grid, privacy.worst_delta))
    bound_min = min(bounds)
    advisory = not (privacy.exhaustive and truth.exhaustive
                    and privacy.method == "exact" and truth.method == "exact")
    return Theorem1Result(
        k=k, r=r,
        max_gain=truth.max_gain,
        eps_grid=privacy.eps_grid,
        bounds=bounds,
        bound_min=bound_min,
        holds=truth.max_gain <= bound_min,
        advisory=advisory,
        privacy=privacy,
        truthfulness=truth,
    )
