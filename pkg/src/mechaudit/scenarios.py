"""Built-in scenario configurations and config-to-instance construction.

The six builtins mirror the worked settings the audit families come from:
plurality voting, discrete facility location, a binary public project,
a two-option utilization choice, multi-option budget allocation with
demographic weights, and a group auction with per-organization weights.
Each returns a plain config dict that validates against the shipped JSON
schema; ``build_instance`` turns a resolved config into an
``(Environment, Mechanism)`` pair.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .env import (
    BoundedDensity,
    Categorical,
    ConfigError,
    Environment,
    FiniteSpace,
    IdentityFn,
    IntervalSpace,
    LinearFn,
    PiecewiseLinearFn,
    TableFn,
    TableUtility,
    TruncatedStdNormal,
    TwoAltFromFunction,
    ValuationGridSpace,
    ValuationIdentity,
    WeightedAdditive,
    ZeroFn,
    tent_density,
)
from .mechanisms import (
    AverageWelfareChooser,
    ConstantChooser,
    HistogramMechanism,
    LabelPartition,
    PluralityChooser,
    SingletonMaxWelfareChooser,
    SocialWelfareMechanism,
    TopKWelfareChooser,
    TwoAltMechanism,
    WeightMatrix,
    grid_placement_chooser,
)

BUILTIN_NAMES = (
    "voting",
    "facility_location",
    "public_project",
    "golf_vs_pool",
    "multiple_public_projects",
    "group_auction",
)


# ---------------------------------------------------------------------------
# scalar function (de)serialization
# ---------------------------------------------------------------------------

def function_from_config(data: dict):
    kind = data.get("kind")
    if kind == "identity":
        return IdentityFn()
    if kind == "zero":
        return ZeroFn()
    if kind == "linear":
        return LinearFn(float(data["slope"]), float(data.get("intercept", 0.0)))
    if kind == "piecewise_linear":
        return PiecewiseLinearFn(tuple(data["xs"]), tuple(data["ys"]))
    if kind == "table":
        return TableFn({str(k): float(v) for k, v in data["values"].items()})
    raise ConfigError(f"mechanism: unknown function kind {kind!r}")


# ---------------------------------------------------------------------------
# config -> (Environment, Mechanism)
# ---------------------------------------------------------------------------

def _space_from_config(data: dict):
    kind = data.get("kind")
    if kind == "finite":
        return FiniteSpace(tuple(str(x) for x in data["labels"]))
    if kind == "interval":
        return IntervalSpace(float(data["lo"]), float(data["hi"]))
    if kind == "valuation_grid":
        return ValuationGridSpace(int(data["options"]), float(data["bound"]),
                                  int(data["resolution"]))
    raise ConfigError(f"environment.space: unknown kind {kind!r}")


def _dist_from_config(data: dict):
    kind = data.get("kind")
    if kind == "categorical":
        return Categorical({str(k): float(v) for k, v in data["probs"].items()})
    if kind == "truncated_std_normal":
        return TruncatedStdNormal(float(data["bound"]))
    if kind == "bounded_density":
        return BoundedDensity(tuple(float(x) for x in data["xs"]),
                              tuple(float(y) for y in data["ys"]))
    raise ConfigError(f"environment.distribution: unknown kind {kind!r}")


def _mechanism_from_config(data: dict, n: int):
    family = data.get("family")
    if family == "histogram":
        part = data["partition"]
        if part.get("kind") == "labels":
            block_of = {}
            for b, labels in enumerate(part["blocks"]):
                for lab in labels:
                    block_of[str(lab)] = b
            partition = LabelPartition(block_of, len(part["blocks"]))
        else:
            raise ConfigError(f"mechanism.partition: unknown kind {part.get('kind')!r}")
        ch = data["chooser"]
        name = ch.get("name")
        if name == "plurality":
            chooser = PluralityChooser()
            alternatives = tuple(range(partition.m_blocks))
        elif name == "constant":
            chooser = ConstantChooser(int(ch.get("alternative", 0)))
            alternatives = tuple(range(chooser.alternative + 1))
        elif name == "min_total_distance":
            rows, cols = int(ch["rows"]), int(ch["cols"])
            facilities = int(ch["facilities"])
            if rows * cols != partition.m_blocks:
                raise ConfigError("mechanism.chooser: grid shape does not match the partition")
            chooser = grid_placement_chooser(rows, cols, facilities)
            alternatives = tuple(itertools.combinations(range(rows * cols), facilities))
        else:
            raise ConfigError(f"mechanism.chooser: unknown name {name!r}")
        return HistogramMechanism(partition, chooser, n), alternatives
    if family == "two_alt":
        mech = TwoAltMechanism(
            u_a=function_from_config(data["u_a"]),
            u_b=function_from_config(data["u_b"]),
            cost=float(data["cost"]),
            n=n,
        )
        return mech, ("A", "B")
    if family == "social_welfare":
        weights = WeightMatrix(
            tuple(tuple(int(v) for v in row) for row in data["weights"]),
            min_column_fraction=float(data.get("min_column_fraction", 0.0)),
        )
        if weights.num_players != n:
            raise ConfigError("mechanism.weights: row count must equal n")
        ch = data["chooser"]
        name = ch.get("name")
        m = weights.num_options
        if name == "max_welfare":
            chooser = TopKWelfareChooser(num_options=m,
                                         cardinality=int(ch.get("cardinality", 1)))
            alternatives = tuple(chooser.alternatives())
        elif name == "max_welfare_single":
            chooser = SingletonMaxWelfareChooser(num_options=m)
            alternatives = tuple(chooser.alternatives())
        elif name == "max_average_welfare":
            chooser = AverageWelfareChooser(
                column_sums=tuple(int(c) for c in weights.column_sums()))
            alternatives = tuple(chooser.alternatives())
        else:
            raise ConfigError(f"mechanism.chooser: unknown name {name!r}")
        return SocialWelfareMechanism(weights, chooser), alternatives
    raise ConfigError(f"mechanism.family: unknown family {family!r}")


def _utility_from_config(data: dict, mech, alternatives):
    kind = data.get("kind")
    if kind == "table":
        values = {str(k): tuple(float(x) for x in v) for k, v in data["values"].items()}
        for lab, row in values.items():
            if len(row) != len(alternatives):
                raise ConfigError(
                    f"environment.utility: row for {lab!r} has {len(row)} entries, "
                    f"expected {len(alternatives)}")
        return TableUtility(values)
    if kind == "valuation_identity":
        return ValuationIdentity()
    if kind == "weighted_additive":
        if not isinstance(mech, SocialWelfareMechanism):
            raise ConfigError("environment.utility: weighted_additive needs a "
                              "social_welfare mechanism")
        return WeightedAdditive(mech.weights.w)
    if kind == "two_alt_functions":
        if not isinstance(mech, TwoAltMechanism):
            raise ConfigError("environment.utility: two_alt_functions needs a "
                              "two_alt mechanism")
        return TwoAltFromFunction(mech.u_a, mech.u_b)
    raise ConfigError(f"environment.utility: unknown kind {kind!r}")


def build_instance(config: dict) -> tuple[Environment, object]:
    """Construct the environment and mechanism from a resolved config dict."""
    env_cfg = config["environment"]
    n = int(env_cfg["n"])
    space = _space_from_config(env_cfg["space"])
    dist = _dist_from_config(env_cfg["distribution"])
    mech, alternatives = _mechanism_from_config(config["mechanism"], n)
    utility = _utility_from_config(env_cfg["utility"], mech, alternatives)
    env = Environment(
        n=n,
        space=space,
        dist=dist,
        alternatives=alternatives,
        utility=utility,
        utility_bound=float(env_cfg["utility_bound"]),
    )
    return env, mech


# ---------------------------------------------------------------------------
# builtins
# ---------------------------------------------------------------------------

def _candidate_labels(count: int) -> list[str]:
    return [f"c{j}" for j in range(count)]


def builtin_scenario(name: str, **overrides) -> dict:
    """A runnable config dict for a named built-in scenario."""
    builders = {
        "voting": _voting,
        "facility_location": _facility_location,
        "public_project": _public_project,
        "golf_vs_pool": _golf_vs_pool,
        "multiple_public_projects": _multiple_public_projects,
        "group_auction": _group_auction,
    }
    try:
        builder = builders[name]
    except KeyError:
        raise ConfigError(
            f"unknown builtin {name!r}; valid names: {', '.join(BUILTIN_NAMES)}") from None
    return builder(**overrides)


def _voting(n: int = 9, candidates: int = 3, probs: tuple = (0.45, 0.35, 0.2),
            k: int = 1) -> dict:
    if len(probs) != candidates:
        raise ConfigError("voting: need one probability per candidate")
    labels = _candidate_labels(candidates)
    # 0/1 utility: a voter is happy iff their top choice wins
    values = {lab: [1.0 if i == j else 0.0 for j in range(candidates)]
              for i, lab in enumerate(labels)}
    return {
        "name": "voting",
        "environment": {
            "n": n,
            "space": {"kind": "finite", "labels": labels},
            "distribution": {"kind": "categorical",
                             "probs": {lab: p for lab, p in zip(labels, probs)}},
            "utility": {"kind": "table", "values": values},
            "utility_bound": 1.0,
        },
        "mechanism": {
            "family": "histogram",
            "partition": {"kind": "labels", "blocks": [[lab] for lab in labels]},
            "chooser": {"name": "plurality"},
        },
        "audits": {
            "privacy": {"k": k},
            "truthfulness": {"cells": [[k, 1]]},
        },
    }


def _facility_location(n: int = 8, rows: int = 3, cols: int = 3,
                       facilities: int = 1, k: int = 1) -> dict:
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    labels = [f"{r},{c}" for r, c in cells]
    # residents cluster toward the center of the grid
    weights = np.array([1.0 / (1.0 + abs(r - (rows - 1) / 2) + abs(c - (cols - 1) / 2))
                        for r, c in cells])
    probs = weights / weights.sum()
    placements = list(itertools.combinations(range(len(cells)), facilities))
    max_dist = (rows - 1) + (cols - 1)
    values = {}
    for lab, (r, c) in zip(labels, cells):
        row = []
        for placement in placements:
            d = min(abs(r - cells[f][0]) + abs(c - cells[f][1]) for f in placement)
            row.append(-d / max_dist)
        values[lab] = row
    return {
        "name": "facility_location",
        "environment": {
            "n": n,
            "space": {"kind": "finite", "labels": labels},
            "distribution": {"kind": "categorical",
                             "probs": {lab: float(p) for lab, p in zip(labels, probs)}},
            "utility": {"kind": "table", "values": values},
            "utility_bound": 1.0,
        },
        "mechanism": {
            "family": "histogram",
            "partition": {"kind": "labels", "blocks": [[lab] for lab in labels]},
            "chooser": {"name": "min_total_distance", "rows": rows, "cols": cols,
                        "facilities": facilities},
        },
        "audits": {
            "privacy": {"k": k},
            "truthfulness": {"cells": [[k, 1]]},
            "deterrent": {"verifications": 2, "fine": 1.0},
        },
        "budgets": {"mc_samples": 20000},
    }


def _public_project(n: int = 100, cost: float = 0.0,
                    value_spread: float = 0.05, k: int = 0) -> dict:
    # Types are per-person net values (benefit minus tax share) in [-1, 1].
    # The tent density concentrates mass near zero: spread = sd / bound.
    half_width = value_spread * math.sqrt(6.0)
    tent = tent_density(0.0, half_width)
    return {
        "name": "public_project",
        "environment": {
            "n": n,
            "space": {"kind": "interval", "lo": -1.0, "hi": 1.0},
            "distribution": {"kind": "bounded_density",
                             "xs": list(tent.xs), "ys": list(tent.ys)},
            "utility": {"kind": "two_alt_functions"},
            "utility_bound": 1.0,
        },
        "mechanism": {
            "family": "two_alt",
            "u_a": {"kind": "identity"},
            "u_b": {"kind": "zero"},
            "cost": cost,
        },
        "audits": {
            "privacy": {"k": k},
            "truthfulness": {"cells": [[k, 1]]},
        },
    }


def _golf_vs_pool(n: int = 50, cost: float = 0.0, k: int = 0) -> dict:
    # Types are normalized incomes in [0, 1]; expected utilization of the
    # golf course rises with income while the pool's falls.
    return {
        "name": "golf_vs_pool",
        "environment": {
            "n": n,
            "space": {"kind": "interval", "lo": 0.0, "hi": 1.0},
            "distribution": {"kind": "bounded_density",
                             "xs": [0.0, 0.4, 1.0], "ys": [0.0, 2.0, 0.0]},
            "utility": {"kind": "two_alt_functions"},
            "utility_bound": 1.0,
        },
        "mechanism": {
            "family": "two_alt",
            "u_a": {"kind": "linear", "slope": 1.0, "intercept": 0.0},
            "u_b": {"kind": "linear", "slope": -1.0, "intercept": 1.0},
            "cost": cost,
        },
        "audits": {
            "privacy": {"k": k},
            "truthfulness": {"cells": [[k, 1]]},
        },
        "budgets": {"mc_samples": 50000},
    }


def _multiple_public_projects(n: int = 40, k: int = 1) -> dict:
    # Four options; per-player relevance weights follow simple demographic
    # rules (the library column is always on) and every column stays above
    # a fifth of the population.
    bound = round(n ** 0.25, 2)
    weights = []
    for i in range(n):
        senior = 1 if i % 5 == 0 else 0
        adult = 1 if i % 10 != 0 else 0
        low_income = 1 if i % 3 == 0 else 0
        weights.append([senior, adult, low_income, 1])
    return {
        "name": "multiple_public_projects",
        "environment": {
            "n": n,
            "space": {"kind": "valuation_grid", "options": 4, "bound": bound,
                      "resolution": 9},
            "distribution": {"kind": "truncated_std_normal", "bound": bound},
            "utility": {"kind": "weighted_additive"},
            "utility_bound": 2.0 * bound,
        },
        "mechanism": {
            "family": "social_welfare",
            "weights": weights,
            "min_column_fraction": 0.2,
            "chooser": {"name": "max_welfare", "cardinality": 2},
        },
        "audits": {
            "privacy": {"k": k},
            "truthfulness": {"cells": [[k, 1]]},
        },
        "budgets": {"mc_samples": 20000},
    }


def _group_auction(n: int = 30, organizations: int = 3, k: int = 1) -> dict:
    if n % organizations != 0:
        raise ConfigError("group_auction: n must split evenly across organizations")
    bound = round(n ** 0.25, 2)
    size = n // organizations
    weights = [[1 if i // size == j else 0 for j in range(organizations)]
               for i in range(n)]
    return {
        "name": "group_auction",
        "environment": {
            "n": n,
            "space": {"kind": "valuation_grid", "options": organizations,
                      "bound": bound, "resolution": 9},
            "distribution": {"kind": "truncated_std_normal", "bound": bound},
            "utility": {"kind": "weighted_additive"},
            "utility_bound": bound,
        },
        "mechanism": {
            "family": "social_welfare",
            "weights": weights,
            "min_column_fraction": 1.0 / organizations,
            "chooser": {"name": "max_average_welfare"},
        },
        "audits": {
            "privacy": {"k": k},
            "truthfulness": {"cells": [[k, 1]]},
        },
        "budgets": {"mc_samples": 20000},
    }


# ---------------------------------------------------------------------------
# the exact-audit corpus used by the acceptance suite and tests
# ---------------------------------------------------------------------------

def corpus_plurality(n: int, probs: dict[str, float],
                     utility_values: dict[str, list[float]] | None = None,
                     ) -> tuple[Environment, HistogramMechanism]:
    """Plurality over one block per label with a 0/1 (or given) utility table."""
    labels = tuple(sorted(probs))
    space = FiniteSpace(labels)
    partition = LabelPartition({lab: i for i, lab in enumerate(labels)}, len(labels))
    mech = HistogramMechanism(partition, PluralityChooser(), n)
    if utility_values is None:
        utility_values = {lab: [1.0 if i == j else 0.0 for j in range(len(labels))]
                          for i, lab in enumerate(labels)}
    env = Environment(
        n=n,
        space=space,
        dist=Categorical(probs),
        alternatives=tuple(range(len(labels))),
        utility=TableUtility({k: tuple(v) for k, v in utility_values.items()}),
        utility_bound=1.0,
    )
    return env, mech


def corpus_two_alt(n: int, values: dict[str, float], probs: dict[str, float],
                   cost: float) -> tuple[Environment, TwoAltMechanism]:
    """Two-alternative mechanism over a finite type space: score vs zero."""
    labels = tuple(sorted(probs))
    space = FiniteSpace(labels)
    u_a = TableFn({lab: values[lab] for lab in labels})
    u_b = TableFn({lab: 0.0 for lab in labels})
    mech = TwoAltMechanism(u_a=u_a, u_b=u_b, cost=cost, n=n)
    env = Environment(
        n=n,
        space=space,
        dist=Categorical(probs),
        alternatives=("A", "B"),
        utility=TwoAltFromFunction(u_a, u_b),
        utility_bound=1.0,
    )
    return env, mech


def acceptance_corpus() -> list[tuple[str, Environment, object]]:
    """Small exhaustively-auditable instances exercised by the acceptance suite."""
    out = []
    for n in range(3, 13):
        env, mech = corpus_plurality(n, {"a": 0.5, "b": 0.5})
        out.append((f"plurality2-n{n}", env, mech))
    for n in range(3, 13):
        env, mech = corpus_plurality(n, {"a": 0.5, "b": 0.3, "c": 0.2})
        out.append((f"plurality3-n{n}", env, mech))
    for n in range(3, 13):
        env, mech = corpus_two_alt(
            n, values={"lo": -0.5, "hi": 0.8}, probs={"lo": 0.55, "hi": 0.45},
            cost=0.6)
        out.append((f"twoalt-n{n}", env, mech))
    return out
