"""The acceptance suite: eight machine-checkable criteria.

Each criterion returns a result with a pass flag and a human-readable
detail line; ``run_all`` prints one PASS/FAIL line per criterion.  The
``mechaudit verify`` subcommand and ``tests/test_acceptance.py`` both run
exactly these checks.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bounds import histogram_privacy_bound
from .config import parse_config
from .deterrent import DeterrentScheme, audit_with_deterrent, deterrent_sufficiency
from .privacy import (
    AdversaryConfig,
    audit_bdp,
    audit_group_bdp,
    delta_at_epsilon,
    exact_output_distribution,
    group_privacy_transform,
    mc_output_distribution,
    statistical_distance,
    PrivacyParams,
)
from .report import run_scenario
from .scenarios import (
    acceptance_corpus,
    builtin_scenario,
    build_instance,
    corpus_plurality,
    corpus_two_alt,
)
from .streams import RandomStream
from .truthfulness import check_truthfulness, verify_theorem1

SEED = 2024


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _theorem_instances():
    """Exhaustively auditable instances: n <= 8, at most 3 types/alternatives."""
    graded = {
        # three candidate blocks; the weakest block's fans prefer the first
        # candidate strongly, which makes strategic voting profitable
        "a": [1.0, 0.0, -0.5],
        "b": [0.0, 1.0, -0.5],
        "c": [0.5, -1.0, 1.0],
    }
    out = [
        ("plurality2-n4",) + corpus_plurality(4, {"a": 0.6, "b": 0.4}),
        ("plurality3-n5",) + corpus_plurality(
            5, {"a": 0.5, "b": 0.3, "c": 0.2}, utility_values=graded),
        ("twoalt-n4",) + corpus_two_alt(
            4, values={"lo": -0.5, "hi": 0.8}, probs={"lo": 0.55, "hi": 0.45},
            cost=0.6),
    ]
    return out


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def criterion_1_mc_vs_exact() -> CriterionResult:
    """Monte Carlo at 1e5 samples matches exact enumeration within 4 binomial
    standard errors per cell on >= 99% of corpus cells; under 30 s."""
    start = time.perf_counter()
    base = RandomStream(SEED).child("criterion-1")
    total = ok = 0
    for name, env, mech in acceptance_corpus():
        labels = env.space.labels
        cfg = AdversaryConfig(player=0, adversaries=(), announcements=(),
                              pair=(labels[0], labels[1]))
        for which in ("first", "second"):
            exact = exact_output_distribution(mech, env, cfg, which)
            mc = mc_output_distribution(mech, env, cfg, 100_000,
                                        base.child(name, which), which)
            se = np.sqrt(np.maximum(exact.probs * (1 - exact.probs), 0.0) / mc.samples)
            for p_true, p_hat, s in zip(exact.probs, mc.probs, se):
                total += 1
                if abs(p_hat - p_true) <= 4.0 * s:
                    ok += 1
    elapsed = time.perf_counter() - start
    rate = ok / total
    passed = rate >= 0.99 and elapsed < 30.0
    return CriterionResult(
        "1 exact-oracle equivalence", passed,
        f"{ok}/{total} cells within 4 SE ({rate:.4f}); {elapsed:.1f}s", elapsed)


def criterion_2_delta0_is_tv() -> CriterionResult:
    """delta*(0) equals statistical distance to 1e-12 on every exact corpus
    pair, plus the 3-player plurality hand values; under 1 s."""
    start = time.perf_counter()
    worst_gap = 0.0
    for name, env, mech in acceptance_corpus():
        labels = env.space.labels
        cfg = AdversaryConfig(player=0, adversaries=(), announcements=(),
                              pair=(labels[0], labels[1]))
        for which_pair in (("first", "second"), ("second", "first")):
            P = exact_output_distribution(mech, env, cfg, which_pair[0])
            Q = exact_output_distribution(mech, env, cfg, which_pair[1])
            gap = abs(delta_at_epsilon(P, Q, 0.0) - statistical_distance(P, Q))
            worst_gap = max(worst_gap, gap)
    env, mech = corpus_plurality(3, {"a": 0.5, "b": 0.5})
    report = audit_bdp(mech, env, 0, eps_grid=(0.0, math.log(3.0)),
                       stream=RandomStream(SEED))
    hand_ok = (report.exhaustive
               and abs(report.worst_delta[0] - 0.5) <= 1e-12
               and abs(report.worst_delta[1] - 0.0) <= 1e-12)
    elapsed = time.perf_counter() - start
    passed = worst_gap <= 1e-12 and hand_ok and elapsed < 1.0
    return CriterionResult(
        "2 delta*(0) = statistical distance", passed,
        f"max |gap| {worst_gap:.2e}; hand case delta*(0)={report.worst_delta[0]:.3f}, "
        f"delta*(ln3)={report.worst_delta[1]:.2e}; {elapsed:.2f}s", elapsed)


def criterion_3_privacy_implies_truthfulness() -> CriterionResult:
    """Measured max persistent gain <= (r eps + 2 r delta)(2 alpha) at every
    grid eps, exactly, on every corpus instance and (k, r) cell; under 5 min."""
    start = time.perf_counter()
    cells = [(0, 1), (1, 1), (1, 2), (2, 1), (2, 2)]
    failures = []
    checked = 0
    for name, env, mech in _theorem_instances():
        for k, r in cells:
            if r > k + 1:
                continue
            res = verify_theorem1(mech, env, k, r,
                                  stream=RandomStream(SEED).child("c3", name, k, r))
            checked += 1
            if not res.holds or res.advisory:
                failures.append(f"{name} (k={k}, r={r}): gain {res.max_gain:.4g} "
                                f"vs bound {res.bound_min:.4g}, advisory={res.advisory}")
    elapsed = time.perf_counter() - start
    passed = not failures and elapsed < 300.0
    detail = f"{checked} instance-cells, all exact and within bound; {elapsed:.1f}s"
    if failures:
        detail = "; ".join(failures)
    return CriterionResult("3 privacy => truthfulness inequality", passed, detail, elapsed)


def criterion_4_group_transform() -> CriterionResult:
    """Exhaustive pair-level audit at 2*eps is bounded by the group transform
    of the individual audit, exactly; under 5 min."""
    start = time.perf_counter()
    grid = (0.1, 0.2, 0.5, 1.0)
    failures = []
    checked = 0
    instances = [
        ("plurality2-n4",) + corpus_plurality(4, {"a": 0.6, "b": 0.4}),
        ("plurality3-n5",) + corpus_plurality(5, {"a": 0.5, "b": 0.3, "c": 0.2}),
    ]
    for name, env, mech in instances:
        for k in (1, 2):
            individual = audit_bdp(mech, env, k, eps_grid=grid,
                                   stream=RandomStream(SEED).child("c4i", name, k))
            group = audit_group_bdp(mech, env, 2, k - 1,
                                    eps_grid=tuple(2.0 * e for e in grid),
                                    stream=RandomStream(SEED).child("c4g", name, k))
            if not (individual.exhaustive and group.exhaustive):
                failures.append(f"{name} k={k}: sweep not exhaustive")
                continue
            bounds = [
                group_privacy_transform(2, PrivacyParams(k, e, d)).delta
                for e, d in zip(grid, individual.worst_delta)
            ]
            checked += 1
            for e, g, b in zip(grid, group.worst_delta, bounds):
                if g > b:
                    failures.append(f"{name} k={k} eps={e}: group {g:.6g} > bound {b:.6g}")
    elapsed = time.perf_counter() - start
    passed = not failures and elapsed < 300.0
    detail = f"{checked} audits, group delta within transform bound; {elapsed:.1f}s"
    if failures:
        detail = "; ".join(failures)
    return CriterionResult("4 group-privacy transform inequality", passed, detail, elapsed)


def criterion_5_histogram_trend() -> CriterionResult:
    """Exhaustive delta*(n) for 2-candidate plurality at eps=0.2 strictly
    decreases over n in {5, 9, 17, 33} with negative log-slope; under 10 s."""
    start = time.perf_counter()
    ns = (5, 9, 17, 33)
    deltas = []
    shape_ok = True
    for n in ns:
        env, mech = corpus_plurality(n, {"a": 0.5, "b": 0.5})
        rep = audit_bdp(mech, env, 0, eps_grid=(0.2,), stream=RandomStream(SEED))
        if not rep.exhaustive or rep.method != "exact":
            shape_ok = False
        deltas.append(rep.worst_delta[0])
        bound = histogram_privacy_bound(0.5, n, 0, 0.2).delta
        if rep.worst_delta[0] > bound:
            shape_ok = False
    decreasing = all(b < a for a, b in zip(deltas, deltas[1:]))
    slope = float(np.polyfit(ns, np.log(deltas), 1)[0])
    elapsed = time.perf_counter() - start
    passed = shape_ok and decreasing and slope < 0 and elapsed < 10.0
    return CriterionResult(
        "5 histogram delta trend", passed,
        f"delta* = {[f'{d:.5f}' for d in deltas]}, log-slope {slope:.4f}; "
        f"{elapsed:.1f}s", elapsed)


def criterion_6_two_alt_trend() -> CriterionResult:
    """Public-project Monte Carlo delta upper-confidence at eps=0.5 decreases
    over n in {100, 400, 1600} with ratio delta(100)/delta(1600) in [2, 8]."""
    start = time.perf_counter()
    ns = (100, 400, 1600)
    ucbs = []
    for n in ns:
        cfg = parse_config(builtin_scenario("public_project", n=n))
        env, mech = build_instance(cfg.data)
        rep = audit_bdp(mech, env, 0, eps_grid=(0.5,), mc_samples=1_000_000,
                        method="mc", stream=RandomStream(SEED).child("c6", n))
        ucbs.append(rep.upper_confidence()[0])
    decreasing = ucbs[2] < ucbs[1] < ucbs[0]
    ratio = ucbs[0] / ucbs[2] if ucbs[2] > 0 else math.inf
    elapsed = time.perf_counter() - start
    passed = decreasing and 2.0 <= ratio <= 8.0 and elapsed < 300.0
    return CriterionResult(
        "6 two-alternative delta trend", passed,
        f"UCB = {[f'{u:.4f}' for u in ucbs]}, ratio {ratio:.2f} (ideal 4); "
        f"{elapsed:.1f}s", elapsed)


def criterion_7_deterrent_sufficiency() -> CriterionResult:
    """Fines meeting (m/n) d >= r * measured-eps make every coalition-sum
    deviation unprofitable; the worked verification-rate arithmetic holds."""
    start = time.perf_counter()
    graded = {
        "a": [1.0, 0.0, -0.5],
        "b": [0.0, 1.0, -0.5],
        "c": [0.5, -1.0, 1.0],
    }
    instances = [
        ("plurality3-n5", (0, 1)) + corpus_plurality(
            5, {"a": 0.5, "b": 0.3, "c": 0.2}, utility_values=graded),
        ("twoalt-n4", (1, 2)) + corpus_two_alt(
            4, values={"lo": -0.5, "hi": 0.8}, probs={"lo": 0.55, "hi": 0.45},
            cost=0.6),
    ]
    failures = []
    details = []
    for name, (k, r), env, mech in instances:
        rep = check_truthfulness(mech, env, k, r,
                                 stream=RandomStream(SEED).child("c7", name))
        eps_hat = rep.max_gain
        m = 2
        fine = 0.0 if eps_hat == 0.0 else (env.n / m) * r * eps_hat * (1.0 + 1e-9)
        suff = deterrent_sufficiency(m, env.n, fine, r, eps_hat)
        det = audit_with_deterrent(mech, env, DeterrentScheme(m, fine), k, r,
                                   stream=RandomStream(SEED).child("c7d", name))
        details.append(f"{name}: eps_hat={eps_hat:.4g}, net_gain={det.max_net_gain:.3g}")
        if not suff["weakly_persistent"]:
            failures.append(f"{name}: scheme not sufficient")
        if not det.verdict or not det.exhaustive:
            failures.append(f"{name}: coalition-sum gain {det.max_net_gain:.6g} > 0")
    worked = deterrent_sufficiency(10, 10_000, 1e4 * 0.5, 10, 0.5)
    if not worked["weakly_persistent"]:
        failures.append("verify-0.1%-of-players arithmetic is not sufficient")
    elapsed = time.perf_counter() - start
    passed = not failures and elapsed < 60.0
    detail = "; ".join(details + [f"{elapsed:.1f}s"])
    if failures:
        detail = "; ".join(failures)
    return CriterionResult("7 deterrent sufficiency", passed, detail, elapsed)


def criterion_8_reproducibility() -> CriterionResult:
    """Builtin reports are byte-identical across runs and worker counts."""
    start = time.perf_counter()
    failures = []
    for name in ("voting", "facility_location"):
        raw = builtin_scenario(name)
        raw["seed"] = SEED
        doc_w1 = run_scenario(parse_config({**raw, "workers": 1}))
        doc_w1_again = run_scenario(parse_config({**raw, "workers": 1}))
        doc_w8 = run_scenario(parse_config({**raw, "workers": 8}))
        if doc_w1.to_json() != doc_w1_again.to_json():
            failures.append(f"{name}: same-seed reruns differ")
        if doc_w1.to_json() != doc_w8.to_json():
            failures.append(f"{name}: workers 1 vs 8 differ")
    elapsed = time.perf_counter() - start
    passed = not failures and elapsed < 120.0
    detail = f"voting + facility_location byte-identical; {elapsed:.1f}s"
    if failures:
        detail = "; ".join(failures)
    return CriterionResult("8 reproducibility", passed, detail, elapsed)


CRITERIA: tuple[Callable[[], CriterionResult], ...] = (
    criterion_1_mc_vs_exact,
    criterion_2_delta0_is_tv,
    criterion_3_privacy_implies_truthfulness,
    criterion_4_group_transform,
    criterion_5_histogram_trend,
    criterion_6_two_alt_trend,
    criterion_7_deterrent_sufficiency,
    criterion_8_reproducibility,
)


def run_all(printer=print) -> list[CriterionResult]:
    results = []
    for criterion in CRITERIA:
        result = criterion()
        results.append(result)
        if printer is not None:
            status = "PASS" if result.passed else "FAIL"
            printer(f"{status} criterion {result.name}: {result.detail}")
    return results
