"""Asymptotic privacy-bound shapes for the three mechanism families.

The underlying guarantees are stated with unspecified big-O constants, so
these calculators plug in explicit, conservative defaults and label every
result "shape, non-certified": they describe how delta should scale, not
a certified ceiling.  Measured audits are the ground truth; trend tests
compare the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .env import ConfigError

SHAPE_LABEL = "shape, non-certified"

# Chernoff-style exponent constant covering both binomial tails in the
# histogram bound; conservative on the audited corpus.
HISTOGRAM_EXPONENT_CONSTANT = 1.0 / 12.0


@dataclass(frozen=True)
class BoundShape:
    eps_prime: float
    delta: float
    in_range: bool
    label: str = SHAPE_LABEL
    note: str = ""


def histogram_privacy_bound(p_min: float, n: int, k: int, eps: float, *,
                            constant: float = HISTOGRAM_EXPONENT_CONSTANT) -> BoundShape:
    """delta shape exp(-C * (n - k) * p_min * eps^2) for histogram mechanisms.

    The guarantee's hypothesis restricts eps to
    [4 / (p_min * (n - k - 1)), 1]; outside that range the shape is still
    computed but flagged out-of-range.
    """
    if not 0 < p_min <= 1:
        raise ConfigError("p_min must lie in (0, 1]")
    if k < 0 or k > n - 2:
        raise ConfigError("need 0 <= k <= n - 2")
    lo = 4.0 / (p_min * (n - k - 1))
    in_range = lo <= eps <= 1.0
    delta = math.exp(-constant * (n - k) * p_min * eps * eps)
    note = "" if in_range else f"eps outside [{lo:.6g}, 1]"
    return BoundShape(eps_prime=eps, delta=min(1.0, delta), in_range=in_range, note=note)


def two_alt_privacy_bound(n: int, k: int, eps: float, *,
                          c1: float = 1.0, c2: float = 1.0) -> BoundShape:
    """(eps', delta) shape for score-threshold mechanisms over two alternatives:
    eps' = eps + c1 * sqrt(ln(n - k) / (n - k)), delta = c2 / (eps * sqrt(n - k)).
    """
    if k < 0 or k > n - 2:
        raise ConfigError("need 0 <= k <= n - 2")
    in_range = 0.0 < eps <= 1.0
    nk = n - k
    eps_prime = eps + c1 * math.sqrt(math.log(nk) / nk) if nk > 1 else math.inf
    delta = c2 / (eps * math.sqrt(nk)) if eps > 0 else math.inf
    return BoundShape(eps_prime=eps_prime, delta=min(1.0, delta), in_range=in_range)


def sw_privacy_bound(n: int, k: int, m: int, eps: float, variant: str, *,
                     c1: float = 1.0, c2: float = 1.0) -> BoundShape:
    """(eps', delta) shape for welfare-sum mechanisms over m options.

    variant "truncated_normal": valuation coordinates are truncated standard
    normals with the bound growing like n^(1/4); delta shape
    exp(-c1 * (eps^2 / m^2) * sqrt(n) + ln(m * sqrt(n))) at unchanged eps.

    variant "general": bounded coordinates with arbitrary smooth densities;
    eps' = eps + c1 * m * sqrt(ln n) / sqrt(n), delta = c2 * m^2 / (eps * sqrt(n)).
    """
    if m < 1:
        raise ConfigError("need at least one option")
    if k < 0 or k >= n:
        raise ConfigError("need 0 <= k < n")
    in_range = 0.0 < eps <= 1.0
    if variant == "truncated_normal":
        exponent = -c1 * (eps * eps / (m * m)) * math.sqrt(n) + math.log(m * math.sqrt(n))
        return BoundShape(eps_prime=eps, delta=min(1.0, math.exp(exponent)),
                          in_range=in_range, note="valuation bound ~ n^(1/4)")
    if variant == "general":
        eps_prime = eps + c1 * m * math.sqrt(math.log(n)) / math.sqrt(n)
        delta = c2 * m * m / (eps * math.sqrt(n)) if eps > 0 else math.inf
        return BoundShape(eps_prime=eps_prime, delta=min(1.0, delta),
                          in_range=in_range, note="constant valuation bound")
    raise ConfigError(f"unknown variant {variant!r}")
