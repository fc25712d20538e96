"""The three deterministic mechanism families and their choosers.

All mechanisms map full announced-type profiles to an alternative *index*
(into the owning environment's alternative list).  Tie-breaking is the
lowest index everywhere, which keeps every mechanism deterministic.

* Histogram mechanisms factor through block counts of a type-space
  partition.
* Two-alternative mechanisms factor through the score
  ``sum_i u_a(t_i) - sum_i u_b(t_i)`` and choose A iff the score strictly
  exceeds a cost threshold.
* Social-welfare mechanisms factor through the per-option weighted welfare
  sums ``sw_j = sum_i w[i][j] * t_i[j]``.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .env import (
    ConfigError,
    DomainError,
    FiniteSpace,
    TypeFunction,
    TableFn,
)

# ---------------------------------------------------------------------------
# partitions and histograms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LabelPartition:
    """Partition of a finite type space given as label -> block index."""

    block_of: Mapping[str, int]
    m_blocks: int

    def __post_init__(self):
        blocks = set(self.block_of.values())
        if not blocks <= set(range(self.m_blocks)):
            raise ConfigError("partition blocks must be indices below m_blocks")
        if blocks != set(range(self.m_blocks)):
            raise ConfigError("every partition block must contain some type")

    def block_index(self, value) -> int:
        try:
            return self.block_of[value]
        except KeyError:
            raise DomainError(f"type {value!r} not mapped by the partition") from None

    def block_probabilities(self, dist, space) -> np.ndarray:
        p = dist.prob_vector(space.labels)
        out = np.zeros(self.m_blocks)
        for lab, prob in zip(space.labels, p):
            out[self.block_of[lab]] += prob
        return out


@dataclass(frozen=True)
class IntervalPartition:
    """Partition of an interval space into consecutive cells.

    ``edges`` are the m+1 cell boundaries; cell j is [edges[j], edges[j+1])
    with the last cell closed on the right.
    """

    edges: tuple[float, ...]

    def __post_init__(self):
        if len(self.edges) < 2 or any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ConfigError("interval partition edges must be strictly increasing")

    @property
    def m_blocks(self) -> int:
        return len(self.edges) - 1

    def block_index(self, value) -> int:
        if not (self.edges[0] <= value <= self.edges[-1]):
            raise DomainError(f"type {value!r} outside the partitioned interval")
        idx = int(np.searchsorted(self.edges, value, side="right") - 1)
        return min(idx, self.m_blocks - 1)

    def block_probabilities(self, dist, space) -> np.ndarray:
        cdf = np.array([dist.cdf(e) for e in self.edges])
        return np.diff(cdf)


Partition = LabelPartition | IntervalPartition


def histogram_of(partition: Partition, profile: Sequence) -> np.ndarray:
    """Block counts of a profile; permutation invariant by construction."""
    counts = np.zeros(partition.m_blocks, dtype=np.int64)
    for t in profile:
        counts[partition.block_index(t)] += 1
    return counts


def plurality_winner(hist: Sequence[int]) -> int:
    """Index of a maximal count; ties broken by the lowest index."""
    hist = np.asarray(hist)
    if hist.size == 0:
        raise ConfigError("plurality needs a non-empty histogram")
    return int(np.argmax(hist))


# ---------------------------------------------------------------------------
# histogram choosers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PluralityChooser:
    """Candidate per block; the block with the most announcements wins."""

    name = "plurality"

    def choose(self, hist: np.ndarray) -> int:
        return plurality_winner(hist)

    def choose_batch(self, hists: np.ndarray) -> np.ndarray:
        return np.argmax(hists, axis=1).astype(np.int64)

    def num_alternatives(self, m_blocks: int) -> int:
        return m_blocks


@dataclass(frozen=True)
class ConstantChooser:
    name = "constant"
    alternative: int = 0

    def choose(self, hist: np.ndarray) -> int:
        return self.alternative

    def choose_batch(self, hists: np.ndarray) -> np.ndarray:
        return np.full(len(hists), self.alternative, dtype=np.int64)

    def num_alternatives(self, m_blocks: int) -> int:
        return self.alternative + 1


@dataclass(frozen=True)
class MinTotalDistanceChooser:
    """Facility placement minimizing count-weighted distance to block centroids.

    ``cost_matrix[p, b]`` is the distance from block b's centroid to the
    nearest facility of placement p; the chooser picks the placement with
    the smallest total cost, lowest placement index on ties.
    """

    name = "min_total_distance"
    cost_matrix: tuple[tuple[float, ...], ...] = ()

    def _costs(self) -> np.ndarray:
        return np.asarray(self.cost_matrix, dtype=np.float64)

    def choose(self, hist: np.ndarray) -> int:
        return int(np.argmin(self._costs() @ np.asarray(hist, dtype=np.float64)))

    def choose_batch(self, hists: np.ndarray) -> np.ndarray:
        totals = hists.astype(np.float64) @ self._costs().T
        return np.argmin(totals, axis=1).astype(np.int64)

    def num_alternatives(self, m_blocks: int) -> int:
        return len(self.cost_matrix)


def grid_placement_chooser(rows: int, cols: int, num_facilities: int) -> MinTotalDistanceChooser:
    """Chooser for a rows x cols city grid with L1 centroid distances.

    Blocks are cells in row-major order; alternatives are all
    ``num_facilities``-subsets of cells in lexicographic order.
    """
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    placements = list(itertools.combinations(range(len(cells)), num_facilities))
    cost = []
    for placement in placements:
        row = []
        for (r, c) in cells:
            row.append(min(abs(r - cells[f][0]) + abs(c - cells[f][1]) for f in placement))
        cost.append(tuple(float(v) for v in row))
    return MinTotalDistanceChooser(cost_matrix=tuple(cost))


@dataclass(frozen=True)
class HistogramMechanism:
    """M(t) = chooser(block counts of t)."""

    partition: Partition
    chooser: PluralityChooser | ConstantChooser | MinTotalDistanceChooser
    n: int

    def run(self, profile: Sequence) -> int:
        if len(profile) != self.n:
            raise ConfigError(f"profile has {len(profile)} entries, expected {self.n}")
        return int(self.chooser.choose(histogram_of(self.partition, profile)))


def run_histogram_mechanism(mech: HistogramMechanism, profile: Sequence) -> int:
    return mech.run(profile)


# ---------------------------------------------------------------------------
# two-alternative mechanisms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoAltMechanism:
    """Choose A (index 0) iff sum_i [u_a(t_i) - u_b(t_i)] strictly exceeds cost."""

    u_a: TypeFunction
    u_b: TypeFunction
    cost: float
    n: int

    def score_one(self, t) -> float:
        return float(self.u_a(t)) - float(self.u_b(t))

    def score(self, profile: Sequence) -> float:
        return float(sum(self.score_one(t) for t in profile))

    def run(self, profile: Sequence) -> int:
        if len(profile) != self.n:
            raise ConfigError(f"profile has {len(profile)} entries, expected {self.n}")
        return 0 if self.score(profile) > self.cost else 1

    def score_table(self, space: FiniteSpace) -> np.ndarray:
        """Per-label score values (finite spaces only)."""
        out = np.empty(len(space.labels))
        for k, lab in enumerate(space.labels):
            out[k] = self.score_one(lab)
        return out


def two_alt_score(mech: TwoAltMechanism, profile: Sequence) -> float:
    """The decision statistic: additive and permutation invariant."""
    return mech.score(profile)


def run_two_alt(mech: TwoAltMechanism, profile: Sequence) -> int:
    return mech.run(profile)


# ---------------------------------------------------------------------------
# social-welfare mechanisms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightMatrix:
    """Binary player x option relevance weights."""

    w: tuple[tuple[int, ...], ...]
    min_column_fraction: float = 0.0

    def __post_init__(self):
        rows = {len(r) for r in self.w}
        if len(rows) != 1:
            raise ConfigError("weight matrix rows must have equal length")
        if any(v not in (0, 1) for r in self.w for v in r):
            raise ConfigError("weights must be binary")
        if self.min_column_fraction > 0:
            cols = self.column_sums()
            floor = self.min_column_fraction * self.num_players
            if np.any(cols < floor):
                warnings.warn(
                    "weight matrix column sums fall below the declared fraction "
                    f"{self.min_column_fraction} of n",
                    stacklevel=2,
                )

    @property
    def num_players(self) -> int:
        return len(self.w)

    @property
    def num_options(self) -> int:
        return len(self.w[0])

    def array(self) -> np.ndarray:
        return np.asarray(self.w, dtype=np.int64)

    def column_sums(self) -> np.ndarray:
        return self.array().sum(axis=0)


def social_welfare_vector(weights: WeightMatrix, profile: Sequence[tuple]) -> np.ndarray:
    """sw_j = sum_i w[i][j] * t_i[j] over the full valuation profile."""
    w = weights.array()
    if len(profile) != weights.num_players:
        raise ConfigError("valuation profile length does not match the weight matrix")
    vals = np.asarray(profile, dtype=np.float64)
    if vals.shape[1] != weights.num_options:
        raise ConfigError("valuation arity does not match the weight matrix")
    return np.sum(w * vals, axis=0)


def select_max_welfare(sw: Sequence[float], cardinality: int) -> tuple[int, ...]:
    """The `cardinality` option indices with largest welfare, lowest index on ties."""
    sw = np.asarray(sw, dtype=np.float64)
    if cardinality > sw.size:
        raise ConfigError("cannot select more options than exist")
    order = np.argsort(-sw, kind="stable")
    return tuple(sorted(int(j) for j in order[:cardinality]))


def _subset_alternatives(num_options: int, cardinality: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(num_options), cardinality))


@dataclass(frozen=True)
class TopKWelfareChooser:
    """Choose the option subset of fixed size with maximal total welfare."""

    name = "max_welfare"
    num_options: int = 1
    cardinality: int = 1
    _index: Mapping[tuple[int, ...], int] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        alts = _subset_alternatives(self.num_options, self.cardinality)
        object.__setattr__(self, "_index", {alt: k for k, alt in enumerate(alts)})

    def alternatives(self) -> list[tuple[int, ...]]:
        return _subset_alternatives(self.num_options, self.cardinality)

    def choose(self, sw: np.ndarray) -> int:
        return self._index[select_max_welfare(sw, self.cardinality)]

    def choose_batch(self, sws: np.ndarray) -> np.ndarray:
        order = np.argsort(-sws, axis=1, kind="stable")[:, : self.cardinality]
        order.sort(axis=1)
        out = np.empty(len(sws), dtype=np.int64)
        for k, row in enumerate(order):
            out[k] = self._index[tuple(int(j) for j in row)]
        return out


@dataclass(frozen=True)
class SingletonMaxWelfareChooser:
    """Choose the single option with maximal welfare (alternatives = options)."""

    name = "max_welfare_single"
    num_options: int = 1

    def alternatives(self) -> list[int]:
        return list(range(self.num_options))

    def choose(self, sw: np.ndarray) -> int:
        return int(np.argmax(sw))

    def choose_batch(self, sws: np.ndarray) -> np.ndarray:
        return np.argmax(sws, axis=1).astype(np.int64)


@dataclass(frozen=True)
class AverageWelfareChooser:
    """Choose the option with maximal welfare per relevant player.

    Options whose weight column is all zero are excluded (their average is
    undefined); ties break to the lowest index.
    """

    name = "max_average_welfare"
    column_sums: tuple[int, ...] = ()

    def alternatives(self) -> list[int]:
        return list(range(len(self.column_sums)))

    def _divisors(self) -> np.ndarray:
        cols = np.asarray(self.column_sums, dtype=np.float64)
        return np.where(cols > 0, cols, np.inf)

    def choose(self, sw: np.ndarray) -> int:
        return int(np.argmax(np.asarray(sw) / self._divisors()))

    def choose_batch(self, sws: np.ndarray) -> np.ndarray:
        return np.argmax(sws / self._divisors()[None, :], axis=1).astype(np.int64)


WelfareChooser = TopKWelfareChooser | SingletonMaxWelfareChooser | AverageWelfareChooser


@dataclass(frozen=True)
class SocialWelfareMechanism:
    """M(t) = chooser(sw_1(t), ..., sw_m(t))."""

    weights: WeightMatrix
    chooser: WelfareChooser

    @property
    def n(self) -> int:
        return self.weights.num_players

    def run(self, profile: Sequence[tuple]) -> int:
        if len(profile) != self.n:
            raise ConfigError(f"profile has {len(profile)} entries, expected {self.n}")
        return int(self.chooser.choose(social_welfare_vector(self.weights, profile)))


Mechanism = HistogramMechanism | TwoAltMechanism | SocialWelfareMechanism


def run_mechanism(mech: Mechanism, profile: Sequence) -> int:
    """Family dispatch; every mechanism is a pure function of the profile."""
    return mech.run(profile)


def table_two_alt(space: FiniteSpace, values_a: Mapping[str, float],
                  values_b: Mapping[str, float], cost: float, n: int) -> TwoAltMechanism:
    """Two-alternative mechanism over a finite space from per-label utilities."""
    return TwoAltMechanism(
        u_a=TableFn(dict(values_a)),
        u_b=TableFn(dict(values_b)),
        cost=cost,
        n=n,
    )
