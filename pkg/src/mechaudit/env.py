"""The mechanism-design environment: players, type spaces, distributions,
utility functions, and seeded sampling.

A type value is a ``str`` label (finite spaces), a ``float`` (interval
spaces) or a tuple of per-option floats (valuation spaces).  Alternatives
are referenced everywhere by their index into ``Environment.alternatives``;
the stored labels are only used for reporting and utility tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .streams import RandomStream


class ConfigError(ValueError):
    """Invalid environment / mechanism / scenario configuration."""


class DomainError(ValueError):
    """A value outside the declared type space or alternative set."""


# ---------------------------------------------------------------------------
# type spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteSpace:
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) < 1:
            raise ConfigError("finite type space needs at least one label")
        if len(set(self.labels)) != len(self.labels):
            raise ConfigError("finite type space labels must be distinct")

    def contains(self, value) -> bool:
        return value in self.labels

    def index(self, value) -> int:
        try:
            return self.labels.index(value)
        except ValueError:
            raise DomainError(f"type {value!r} not in finite space") from None


@dataclass(frozen=True)
class IntervalSpace:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigError("interval type space needs lo < hi")

    def contains(self, value) -> bool:
        return isinstance(value, (int, float)) and self.lo <= value <= self.hi

    def grid(self, points: int = 33) -> np.ndarray:
        return np.linspace(self.lo, self.hi, points)


@dataclass(frozen=True)
class ValuationGridSpace:
    """Valuation functions over ``num_options`` options, each coordinate in
    ``[-bound, bound]``.  ``resolution`` fixes the search grid used by
    exhaustive deviation and neighbor generators; sampling stays continuous.
    """

    num_options: int
    bound: float
    resolution: int

    def __post_init__(self):
        if self.num_options < 1:
            raise ConfigError("valuation space needs at least one option")
        if self.bound <= 0:
            raise ConfigError("valuation bound must be positive")
        if self.resolution < 2:
            raise ConfigError("valuation grid resolution must be >= 2")

    def contains(self, value) -> bool:
        return (
            isinstance(value, tuple)
            and len(value) == self.num_options
            and all(-self.bound <= v <= self.bound for v in value)
        )

    def coordinate_grid(self) -> np.ndarray:
        return np.linspace(-self.bound, self.bound, self.resolution)


TypeSpace = FiniteSpace | IntervalSpace | ValuationGridSpace


# ---------------------------------------------------------------------------
# type distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Categorical:
    probs: Mapping[str, float]

    def __post_init__(self):
        total = math.fsum(self.probs.values())
        if any(p < 0 for p in self.probs.values()):
            raise ConfigError("categorical probabilities must be nonnegative")
        if abs(total - 1.0) > 1e-12:
            raise ConfigError(f"categorical probabilities sum to {total!r}, not 1")

    def prob_vector(self, labels: Sequence[str]) -> np.ndarray:
        missing = set(self.probs) - set(labels)
        if missing:
            raise ConfigError(f"categorical labels {sorted(missing)} not in type space")
        return np.array([self.probs.get(lab, 0.0) for lab in labels], dtype=np.float64)


@dataclass(frozen=True)
class TruncatedStdNormal:
    """Standard normal conditioned on [-bound, bound]."""

    bound: float

    def __post_init__(self):
        if self.bound <= 0:
            raise ConfigError("truncation bound must be positive")

    def cdf(self, x: float) -> float:
        a = self.bound
        if x <= -a:
            return 0.0
        if x >= a:
            return 1.0
        lo = kernels.normal_cdf(-a)
        return (kernels.normal_cdf(x) - lo) / (kernels.normal_cdf(a) - lo)

    def mean(self) -> float:
        return 0.0

    def variance(self) -> float:
        a = self.bound
        phi = math.exp(-0.5 * a * a) / math.sqrt(2.0 * math.pi)
        z = 2.0 * kernels.normal_cdf(a) - 1.0
        return 1.0 - 2.0 * a * phi / z


@dataclass(frozen=True)
class BoundedDensity:
    """Piecewise-linear pdf with explicit knots on [xs[0], xs[-1]].

    Sampling inverts the piecewise-quadratic CDF.  The density must be
    nonnegative and integrate to 1 (trapezoid rule is exact here).
    """

    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def __post_init__(self):
        xs, ys = np.asarray(self.xs, float), np.asarray(self.ys, float)
        if len(xs) != len(ys) or len(xs) < 2:
            raise ConfigError("piecewise density needs matching xs/ys with >= 2 knots")
        if np.any(np.diff(xs) <= 0):
            raise ConfigError("piecewise density knots must be strictly increasing")
        if np.any(ys < 0):
            raise ConfigError("piecewise density must be nonnegative")
        total = float(np.sum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)))
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"piecewise density integrates to {total!r}, not 1")

    def knot_cdf(self) -> np.ndarray:
        xs, ys = np.asarray(self.xs, float), np.asarray(self.ys, float)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs))])
        cdf[-1] = 1.0
        return cdf

    def cdf(self, x: float) -> float:
        xs, ys = np.asarray(self.xs, float), np.asarray(self.ys, float)
        knots = self.knot_cdf()
        if x <= xs[0]:
            return 0.0
        if x >= xs[-1]:
            return 1.0
        seg = int(np.searchsorted(xs, x, side="right") - 1)
        h = x - xs[seg]
        slope = (ys[seg + 1] - ys[seg]) / (xs[seg + 1] - xs[seg])
        return float(knots[seg] + ys[seg] * h + 0.5 * slope * h * h)

    def mean(self) -> float:
        xs, ys = np.asarray(self.xs, float), np.asarray(self.ys, float)
        x0, x1, y0, y1 = xs[:-1], xs[1:], ys[:-1], ys[1:]
        # exact first moment of each linear segment
        seg = (x1 - x0) * (y0 * (2 * x0 + x1) + y1 * (x0 + 2 * x1)) / 6.0
        return float(np.sum(seg))

    def variance(self) -> float:
        xs, ys = np.asarray(self.xs, float), np.asarray(self.ys, float)
        x0, x1, y0, y1 = xs[:-1], xs[1:], ys[:-1], ys[1:]
        h = x1 - x0
        # exact second moment of each linear segment
        seg = h * (y0 * (3 * x0 * x0 + 2 * x0 * x1 + x1 * x1)
                   + y1 * (x0 * x0 + 2 * x0 * x1 + 3 * x1 * x1)) / 12.0
        return float(np.sum(seg)) - self.mean() ** 2


TypeDistribution = Categorical | TruncatedStdNormal | BoundedDensity


def tent_density(center: float, half_width: float) -> BoundedDensity:
    """Symmetric triangular density on [center - w, center + w]."""
    if half_width <= 0:
        raise ConfigError("tent half width must be positive")
    peak = 1.0 / half_width
    return BoundedDensity(
        xs=(center - half_width, center, center + half_width),
        ys=(0.0, peak, 0.0),
    )


def _check_compatible(dist: TypeDistribution, space: TypeSpace) -> None:
    if isinstance(space, FiniteSpace):
        if not isinstance(dist, Categorical):
            raise ConfigError("finite type spaces need a categorical distribution")
        dist.prob_vector(space.labels)
        return
    if isinstance(dist, Categorical):
        raise ConfigError("categorical distribution needs a finite type space")
    if isinstance(space, IntervalSpace):
        if isinstance(dist, TruncatedStdNormal):
            if not (space.lo <= -dist.bound and dist.bound <= space.hi):
                raise ConfigError("truncated normal support exceeds the interval space")
        else:
            if dist.xs[0] < space.lo - 1e-12 or dist.xs[-1] > space.hi + 1e-12:
                raise ConfigError("density support exceeds the interval space")
        return
    # valuation grid: per-coordinate scalar distribution within the bound
    hi = space.bound
    if isinstance(dist, TruncatedStdNormal):
        if dist.bound > hi + 1e-12:
            raise ConfigError("truncated normal bound exceeds the valuation bound")
    else:
        if dist.xs[0] < -hi - 1e-12 or dist.xs[-1] > hi + 1e-12:
            raise ConfigError("density support exceeds the valuation bound")


def encode_dist(dist: TypeDistribution, space: TypeSpace, values=None):
    """Kernel encoding of a scalar distribution (see :mod:`mechaudit.kernels`).

    For finite spaces, ``values`` maps support indices to the number fed to
    the kernels (defaults to the support index itself).
    """
    if isinstance(dist, Categorical):
        assert isinstance(space, FiniteSpace)
        p = dist.prob_vector(space.labels)
        cum = np.cumsum(p)
        cum[-1] = 1.0
        vals = np.arange(len(p), dtype=np.float64) if values is None else np.asarray(values, float)
        return (kernels.DIST_TABLE, cum, vals, np.empty(0))
    if isinstance(dist, TruncatedStdNormal):
        a = dist.bound
        lo = kernels.normal_cdf(-a)
        return (kernels.DIST_TRUNCNORM, np.array([a, lo, kernels.normal_cdf(a) - lo]),
                np.empty(0), np.empty(0))
    cdf = dist.knot_cdf()
    return (kernels.DIST_PWL, np.asarray(dist.xs, float), np.asarray(dist.ys, float), cdf)


# ---------------------------------------------------------------------------
# utility specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TableUtility:
    """Explicit (type label -> per-alternative utility vector) table."""

    values: Mapping[str, tuple[float, ...]]

    def utility(self, env: "Environment", t, alt_index: int, player=None) -> float:
        try:
            row = self.values[t]
        except KeyError:
            raise DomainError(f"type {t!r} not in utility table") from None
        return float(row[alt_index])


@dataclass(frozen=True)
class ValuationIdentity:
    """u(t, option_j) = t[j]; alternatives are single options."""

    def utility(self, env: "Environment", t, alt_index: int, player=None) -> float:
        option = env.alternatives[alt_index]
        return float(t[option])


@dataclass(frozen=True)
class WeightedAdditive:
    """u_i(t, s) = sum over options j in s of w[i][j] * t[j].

    Alternatives are tuples of option indices.  The weight matrix makes
    this utility player-specific, so evaluation requires ``player``.
    """

    weights: tuple[tuple[int, ...], ...]

    def utility(self, env: "Environment", t, alt_index: int, player=None) -> float:
        if player is None:
            raise ConfigError("weighted-additive utility needs a player index")
        row = self.weights[player]
        subset = env.alternatives[alt_index]
        if isinstance(subset, (int, np.integer)):
            subset = (subset,)
        return float(sum(row[j] * t[j] for j in subset))


@dataclass(frozen=True)
class TwoAltFromFunction:
    """Utilities for a binary choice given as two bounded functions of the type."""

    u_a: "TypeFunction"
    u_b: "TypeFunction"

    def utility(self, env: "Environment", t, alt_index: int, player=None) -> float:
        fn = self.u_a if alt_index == 0 else self.u_b
        return float(fn(t))


UtilitySpec = TableUtility | ValuationIdentity | WeightedAdditive | TwoAltFromFunction


# --- named scalar functions (serializable, vectorizable) -------------------

@dataclass(frozen=True)
class IdentityFn:
    kind: str = field(default="identity", init=False)

    def __call__(self, t):
        return t

    def batch(self, values: np.ndarray) -> np.ndarray:
        return values

    def kernel_transform(self):
        return (kernels.TF_IDENTITY, np.empty(0), np.empty(0))


@dataclass(frozen=True)
class ZeroFn:
    kind: str = field(default="zero", init=False)

    def __call__(self, t):
        return 0.0

    def batch(self, values: np.ndarray) -> np.ndarray:
        return np.zeros_like(values)

    def kernel_transform(self):
        return (kernels.TF_LINEAR, np.array([0.0, 0.0]), np.empty(0))


@dataclass(frozen=True)
class LinearFn:
    slope: float
    intercept: float = 0.0
    kind: str = field(default="linear", init=False)

    def __call__(self, t):
        return self.slope * t + self.intercept

    def batch(self, values: np.ndarray) -> np.ndarray:
        return self.slope * values + self.intercept

    def kernel_transform(self):
        return (kernels.TF_LINEAR, np.array([self.slope, self.intercept]), np.empty(0))


@dataclass(frozen=True)
class PiecewiseLinearFn:
    xs: tuple[float, ...]
    ys: tuple[float, ...]
    kind: str = field(default="piecewise_linear", init=False)

    def __post_init__(self):
        if len(self.xs) != len(self.ys) or len(self.xs) < 2:
            raise ConfigError("piecewise function needs matching xs/ys with >= 2 knots")
        if any(b <= a for a, b in zip(self.xs, self.xs[1:])):
            raise ConfigError("piecewise function knots must be strictly increasing")

    def __call__(self, t):
        return float(self.batch(np.asarray([t], float))[0])

    def batch(self, values: np.ndarray) -> np.ndarray:
        xs = np.asarray(self.xs, float)
        ys = np.asarray(self.ys, float)
        seg = np.clip(np.searchsorted(xs, values, side="right") - 1, 0, len(xs) - 2)
        x0, y0 = xs[seg], ys[seg]
        slope = (ys[seg + 1] - y0) / (xs[seg + 1] - x0)
        return y0 + (np.clip(values, xs[0], xs[-1]) - x0) * slope

    def kernel_transform(self):
        return (kernels.TF_PWL, np.asarray(self.xs, float), np.asarray(self.ys, float))


@dataclass(frozen=True)
class TableFn:
    """Per-label values for finite type spaces."""

    values: Mapping[str, float]
    kind: str = field(default="table", init=False)

    def __call__(self, t):
        try:
            return float(self.values[t])
        except KeyError:
            raise DomainError(f"type {t!r} not in function table") from None

    def value_vector(self, labels: Sequence[str]) -> np.ndarray:
        return np.array([self.values[lab] for lab in labels], dtype=np.float64)


TypeFunction = IdentityFn | ZeroFn | LinearFn | PiecewiseLinearFn | TableFn


# ---------------------------------------------------------------------------
# environment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Environment:
    """Players, types, alternatives and utilities for one audited instance."""

    n: int
    space: TypeSpace
    dist: TypeDistribution
    alternatives: tuple
    utility: UtilitySpec
    utility_bound: float

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError("an environment needs at least two players")
        if self.utility_bound <= 0:
            raise ConfigError("utility bound must be positive")
        if len(self.alternatives) < 1:
            raise ConfigError("an environment needs at least one alternative")
        _check_compatible(self.dist, self.space)

    @property
    def num_alternatives(self) -> int:
        return len(self.alternatives)

    def alt_index(self, label) -> int:
        try:
            return self.alternatives.index(label)
        except ValueError:
            raise DomainError(f"alternative {label!r} not in environment") from None

    def utility_vector(self, t, player=None) -> np.ndarray:
        """u(t, s) for every alternative s, as an aligned vector."""
        return np.array(
            [evaluate_utility(self, t, s, player=player) for s in range(self.num_alternatives)],
            dtype=np.float64,
        )


# ---------------------------------------------------------------------------
# sampling and evaluation operations
# ---------------------------------------------------------------------------

def truncated_normal_sample(alpha: float, rng: RandomStream) -> float:
    """One draw from the standard normal conditioned on [-alpha, alpha]."""
    if alpha <= 0:
        raise ConfigError("truncation bound must be positive")
    dist = TruncatedStdNormal(alpha)
    code, d1, d2, d3 = encode_dist(dist, IntervalSpace(-alpha, alpha))
    value = kernels.value_block(rng.key, rng.counter, 1, (code, d1, d2, d3))
    rng.take_words(1)
    return float(value[0])


def sample_type(dist: TypeDistribution, space: TypeSpace, rng: RandomStream):
    """One draw from the type distribution; returns a value in ``space``."""
    _check_compatible(dist, space)
    if isinstance(space, FiniteSpace):
        code, cum, _, _ = encode_dist(dist, space)
        idx = kernels.categorical_block(rng.key, rng.counter, 1, cum)
        rng.take_words(1)
        return space.labels[int(idx[0])]
    if isinstance(space, IntervalSpace):
        enc = encode_dist(dist, space)
        value = kernels.value_block(rng.key, rng.counter, 1, enc)
        rng.take_words(1)
        return float(value[0])
    enc = encode_dist(dist, space)
    m = space.num_options
    values = kernels.value_block(rng.key, rng.counter, m, enc)
    rng.take_words(m)
    return tuple(float(v) for v in values)


def sample_profile(env: Environment, players: Sequence[int], rng: RandomStream) -> tuple:
    """Independent type draws for the listed players, in ascending player order."""
    players = sorted(players)
    if any(p < 0 or p >= env.n for p in players):
        raise ConfigError("player indices out of range")
    return tuple(sample_type(env.dist, env.space, rng) for _ in players)


def evaluate_utility(env: Environment, t, s: int, player=None) -> float:
    """Deterministic utility of type ``t`` under alternative index ``s``."""
    if not env.space.contains(t):
        raise DomainError(f"type {t!r} not in the declared type space")
    if not 0 <= s < env.num_alternatives:
        raise DomainError(f"alternative index {s} out of range")
    return env.utility.utility(env, t, s, player=player)
