"""Post-hoc verification with fines: the deterrent payment scheme.

After the mechanism runs, ``verifications`` players are drawn uniformly
without replacement; anyone whose announced type differs from their true
type pays the fine.  Utilities are quasilinear (utility minus payment), so
a liar's expected fine has the closed form ``verifications * fine / n``,
which the coalition audits use directly; sampling is kept only for the
cross-check of that closed form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .env import ConfigError, Environment
from .mechanisms import Mechanism, run_mechanism
from .privacy import (
    DEFAULT_BUDGET_STATES,
    DEFAULT_MAX_SCENARIOS,
    DEFAULT_MC_SAMPLES,
    DistributionEngine,
)
from .streams import RandomStream
from .truthfulness import (
    DeviationScenario,
    _eu_from_engine,
    _joint_candidates,
    deviation_candidates,
    deviation_scenarios,
)


@dataclass(frozen=True)
class DeterrentScheme:
    """m uniformly verified players, fine d per caught lie."""

    verifications: int
    fine: float

    def __post_init__(self):
        if self.verifications < 0:
            raise ConfigError("verification count must be nonnegative")
        if self.fine < 0:
            raise ConfigError("the fine must be nonnegative")


@dataclass(frozen=True)
class VerificationVector:
    """(player, caught-lying bit) pairs for the verified players."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        players = [p for p, _ in self.pairs]
        if len(set(players)) != len(players):
            raise ConfigError("verified players must be distinct")

    def caught(self) -> tuple[int, ...]:
        return tuple(p for p, bit in self.pairs if bit == 1)


@dataclass(frozen=True)
class QuasilinearOutcome:
    alternative: int
    payments: tuple[float, ...]
    realized_utilities: tuple[float, ...]


def sample_verifications(n: int, m: int, true_types: Sequence,
                         announced_types: Sequence, rng: RandomStream) -> VerificationVector:
    """m distinct players chosen uniformly; bit 1 iff announced != true."""
    if m > n:
        raise ConfigError("cannot verify more players than exist")
    if len(true_types) != n or len(announced_types) != n:
        raise ConfigError("need one true and one announced type per player")
    # ranking n iid uniforms yields a uniform m-subset without replacement
    keys = rng.take_uniforms(n)
    chosen = np.argsort(keys, kind="stable")[:m]
    pairs = tuple(
        (int(p), int(announced_types[p] != true_types[p])) for p in sorted(chosen))
    return VerificationVector(pairs)


def payments(scheme: DeterrentScheme, verification: VerificationVector,
             n: int) -> np.ndarray:
    """Fine for every caught liar, zero for everyone else."""
    out = np.zeros(n, dtype=np.float64)
    for p, bit in verification.pairs:
        if bit == 1:
            out[p] = scheme.fine
    return out


def expected_fine(scheme: DeterrentScheme, n: int, lying: bool) -> float:
    """0 when truthful; (m * d) / n when lying."""
    if not lying:
        return 0.0
    return scheme.verifications * scheme.fine / n


def deterrent_sufficiency(m: int, n: int, d: float, r: int, eps: float) -> dict:
    """Fine-scheme sufficiency conditions for a mechanism whose measured
    per-member gain is at most eps."""
    if m < 0 or n <= 0 or m > n or d < 0 or r < 1 or eps < 0:
        raise ConfigError("invalid deterrent sufficiency inputs")
    expected = m * d / n
    return {
        "expected_fine_if_lying": expected,
        "weakly_persistent": expected >= r * eps,
        "k_tolerant": expected >= eps,
    }


def run_with_deterrent(mech: Mechanism, env: Environment, scheme: DeterrentScheme,
                       true_types: Sequence, announced_types: Sequence,
                       rng: RandomStream) -> QuasilinearOutcome:
    """One full round: outcome, verification draw, payments, realized utilities."""
    alt = run_mechanism(mech, announced_types)
    verification = sample_verifications(env.n, scheme.verifications,
                                        true_types, announced_types, rng)
    pay = payments(scheme, verification, env.n)
    realized = tuple(
        float(env.utility.utility(env, true_types[i], alt, player=i)) - float(pay[i])
        for i in range(env.n))
    return QuasilinearOutcome(alt, tuple(float(p) for p in pay), realized)


# ---------------------------------------------------------------------------
# coalition-sum audit under the deterrent scheme
# ---------------------------------------------------------------------------

@dataclass
class DeterrentReport:
    k: int
    r: int
    scheme: DeterrentScheme
    max_net_gain: float
    witness: DeviationScenario | None
    witness_announced: tuple | None
    exhaustive: bool
    method: str
    verdict: bool  # True iff no coalition-sum profitable deviation was found


def audit_with_deterrent(mech: Mechanism, env: Environment, scheme: DeterrentScheme,
                         k: int, r: int, *,
                         stream: RandomStream | None = None,
                         budget_states: int = DEFAULT_BUDGET_STATES,
                         mc_samples: int = DEFAULT_MC_SAMPLES,
                         max_scenarios: int = DEFAULT_MAX_SCENARIOS,
                         method: str = "auto",
                         scenario_generator=None) -> DeterrentReport:
    """Max coalition-sum gain net of expected fines; PASS iff <= 0.

    Each lying coalition member contributes the closed-form expected fine
    ``m * d / n``; truthful members pay nothing.
    """
    stream = stream if stream is not None else RandomStream(0)
    gen = scenario_generator if scenario_generator is not None else deviation_scenarios
    scenarios, exhaustive = gen(env, k, r, stream.child("scenarios"),
                                max_scenarios=max_scenarios)
    engine = DistributionEngine(mech, env, budget_states=budget_states,
                                mc_samples=mc_samples, stream=stream.child("draws"))
    cand_stream = stream.child("candidates")
    base_candidates, cand_exhaustive = deviation_candidates(env, cand_stream)
    exhaustive = exhaustive and cand_exhaustive
    fine_rate = expected_fine(scheme, env.n, lying=True)

    max_net = -math.inf
    witness = None
    witness_joint = None
    used = set()
    for idx, scenario in enumerate(scenarios):
        base = dict(zip(scenario.deviators, scenario.deviator_announcements))
        truthful = dict(base)
        truthful.update(zip(scenario.coalition, scenario.true_types))
        eus_truth = []
        for member, true_t in zip(scenario.coalition, scenario.true_types):
            eu, se = _eu_from_engine(engine, env, member, true_t, truthful, method)
            eus_truth.append(eu)
            used.add("exact" if se == 0.0 else "mc")
        pool = base_candidates + [t for t in scenario.true_types if t not in base_candidates]
        if len(pool) ** len(scenario.coalition) > 100_000:
            exhaustive = False
        joints = _joint_candidates(pool, len(scenario.coalition), 100_000,
                                   cand_stream.child(idx))
        for joint in joints:
            announced = dict(base)
            announced.update(zip(scenario.coalition, joint))
            net = 0.0
            for pos, (member, true_t) in enumerate(
                    zip(scenario.coalition, scenario.true_types)):
                eu, _ = _eu_from_engine(engine, env, member, true_t, announced, method)
                net += eu - eus_truth[pos]
                if joint[pos] != true_t:
                    net -= fine_rate
            if net > max_net:
                max_net = net
                witness = scenario
                witness_joint = tuple(joint)
    overall = used.pop() if len(used) == 1 else "mixed"
    return DeterrentReport(
        k=k, r=r, scheme=scheme,
        max_net_gain=max_net if max_net > -math.inf else 0.0,
        witness=witness,
        witness_announced=witness_joint,
        exhaustive=exhaustive,
        method=overall,
        verdict=(max_net <= 0.0),
    )
