import numpy as np
import pytest
from scipy.special import ndtri

from mechaudit import kernels
from mechaudit.env import (
    Categorical,
    FiniteSpace,
    IntervalSpace,
    TruncatedStdNormal,
    encode_dist,
    tent_density,
)

pytestmark = pytest.mark.skipif(
    not kernels.numba_available(), reason="numba unavailable; single-backend build")


@pytest.fixture
def both_backends():
    original = kernels.backend()

    def run(fn):
        kernels.set_backend("numba")
        fast = fn()
        kernels.set_backend("numpy")
        slow = fn()
        return fast, slow

    yield run
    kernels.set_backend(original)


TRUNC = encode_dist(TruncatedStdNormal(2.0), IntervalSpace(-2, 2))
TENT = encode_dist(tent_density(0.0, 0.3), IntervalSpace(-1, 1))
TABLE = encode_dist(Categorical({"a": 0.3, "b": 0.45, "c": 0.25}),
                    FiniteSpace(("a", "b", "c")), values=[1.0, -2.0, 0.5])


def test_score_sums_backends_identical(both_backends):
    for dist in (TRUNC, TENT, TABLE):
        fast, slow = both_backends(lambda: kernels.score_sums(987654321, 17, 2000, 23, dist))
        assert np.array_equal(fast, slow)


def test_score_sums_with_transforms_identical(both_backends):
    linear = (kernels.TF_LINEAR, np.array([2.0, -0.5]), np.empty(0))
    pwl = (kernels.TF_PWL, np.array([-2.0, 0.0, 2.0]), np.array([1.0, 0.0, 1.5]))
    for tf in (linear, pwl):
        fast, slow = both_backends(
            lambda: kernels.score_sums(42, 0, 1500, 9, TRUNC, transform=tf))
        assert np.array_equal(fast, slow)


def test_histogram_counts_backends_identical(both_backends):
    cum = np.array([0.2, 0.2, 0.75, 1.0])  # middle block has zero probability
    fast, slow = both_backends(lambda: kernels.histogram_counts(31337, 0, 3000, 12, cum))
    assert np.array_equal(fast, slow)
    assert np.all(fast.sum(axis=1) == 12)
    assert np.all(fast[:, 1] == 0)  # zero-probability block never drawn


def test_option_sums_backends_identical(both_backends):
    counts = np.array([4, 0, 11])
    fast, slow = both_backends(lambda: kernels.option_sums(2 ** 63 + 11, 5, 800, counts, TRUNC))
    assert np.array_equal(fast, slow)
    assert np.all(fast[:, 1] == 0.0)


def test_large_keys_accepted():
    # stream keys occupy the full uint64 range
    out = kernels.score_sums((1 << 64) - 3, 0, 10, 5, TRUNC)
    assert out.shape == (10,)


def test_norm_ppf_against_scipy():
    u = np.linspace(1e-9, 1 - 1e-9, 20001)
    ours = kernels.norm_ppf(u)
    ref = ndtri(u)
    # Acklam's approximation: relative error below 1.2e-9
    scale = np.maximum(np.abs(ref), 1.0)
    assert np.max(np.abs(ours - ref) / scale) < 2e-9


def test_value_block_supports_and_determinism():
    v = kernels.value_block(123, 0, 50_000, TRUNC)
    assert np.all(np.abs(v) <= 2.0)
    again = kernels.value_block(123, 0, 50_000, TRUNC)
    assert np.array_equal(v, again)

    t = kernels.value_block(99, 0, 50_000, TENT)
    assert np.all(np.abs(t) <= 0.3 + 1e-12)


def test_categorical_block_frequencies():
    code, cum, _, _ = TABLE
    idx = kernels.categorical_block(1234, 0, 100_000, cum)
    freq = np.bincount(idx, minlength=3) / 100_000
    assert np.allclose(freq, [0.3, 0.45, 0.25], atol=0.01)


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        kernels.set_backend("jax")
