import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kmvc import entropy as E
from kmvc.errors import DomainError, OverflowGuardError

LN2 = math.log(2)


def subset_entropy(s, n, k):
    """Entropy of the k least of a uniform n-subset of [1, s], by enumeration with exact weights."""
    counts = Counter(c[:k] for c in itertools.combinations(range(1, s + 1), n))
    total = math.comb(s, n)
    return -sum(float(Fraction(c, total)) * math.log(Fraction(c, total)) for c in counts.values())


def discretized_beta_entropy(s, n):
    """Exact bin masses of the Beta(1, n) CDF as fractions, then -sum q ln q."""
    F = [1 - Fraction(s - i, s) ** n for i in range(s + 1)]
    q = [F[i + 1] - F[i] for i in range(s)]
    return -sum(float(p) * math.log(p) for p in q if p), q


# -- basic formulas -------------------------------------------------------


def test_h_uniform():
    assert E.h_uniform(1).nats == 0.0
    assert E.h_uniform(2**63).nats == pytest.approx(43.6682, abs=1e-4)
    assert E.h_uniform(2**63).bits == pytest.approx(63.0, abs=1e-12)
    assert E.h_uniform(10).nats == pytest.approx(2.302585, abs=1e-6)


@given(st.floats(0, 1e6), st.integers(1, 10**4))
def test_unit_conversions(nats, keys):
    est = E.EntropyEstimate.from_nats(nats, keys)
    assert est.bits == pytest.approx(nats / LN2)
    assert est.bytes == pytest.approx(est.bits / 8)
    assert est.bits_per_key == pytest.approx(est.bits / keys)


def test_hbs_approx_examples():
    s = 2**40
    assert E.hbs_approx(s, 1).nats == pytest.approx(E.h_uniform(s).nats)
    big = E.hbs_approx(2**64, 2**30)
    assert big.nats == pytest.approx(34 * LN2 + (2**30 - 1) / 2**30, rel=1e-12)
    assert big.nats == pytest.approx(24.566, abs=2e-3)
    assert big.bits == pytest.approx(35.44, abs=0.01)
    assert E.hbs_approx(2**20, 2**6).nats == pytest.approx(14 * LN2 + 63 / 64, rel=1e-12)
    assert E.hbs_approx(2**20, 2**6).nats == pytest.approx(10.688, abs=1e-3)


def test_hbs_exact_four_bins():
    h_ref, q = discretized_beta_entropy(4, 2)
    assert q == [Fraction(7, 16), Fraction(5, 16), Fraction(3, 16), Fraction(1, 16)]
    assert E.hbs_probabilities(4, 2).tolist() == pytest.approx([float(v) for v in q], abs=1e-15)
    # -sum q ln q for these masses is 1.2124 nats
    assert E.hbs_exact(4, 2).nats == pytest.approx(h_ref, abs=1e-12)
    assert h_ref == pytest.approx(1.21231, abs=1e-5)


@pytest.mark.parametrize("s, n", [(7, 3), (16, 5), (50, 10), (64, 64)])
def test_hbs_exact_against_fractions(s, n):
    h_ref, _ = discretized_beta_entropy(s, n)
    assert E.hbs_exact(s, n).nats == pytest.approx(h_ref, abs=1e-11)


def test_hbs_exact_single_draw_is_uniform():
    assert E.hbs_exact(1000, 1).nats == pytest.approx(math.log(1000), abs=1e-12)


def test_hbs_exact_within_tolerance_of_approx():
    s, n = 2**16, 2**6
    gap = abs(E.hbs_exact(s, n).nats - E.hbs_approx(s, n).nats)
    assert gap <= 10 * n * math.log(n) / s


def test_hbs_probabilities_sum_to_one():
    for s, n in [(2**12, 16), (2**20, 1024), (2**22, 7)]:
        assert math.fsum(E.hbs_probabilities(s, n)) == pytest.approx(1.0, abs=1e-12)


def test_hkn_approx_examples():
    est = E.hkn_approx(2**63, 2**23, 2**12)
    assert est.nats / 2**12 == pytest.approx(43.6682 - 15.9424 + 1, abs=1e-3)
    assert est.bits_per_key == pytest.approx(41.44, abs=0.01)
    assert est.bytes == pytest.approx(21219, rel=1e-3)
    assert (est.bytes + 24) / 32792 == pytest.approx(0.65, abs=0.005)
    s = 2**30
    assert E.hkn_approx(s, 1, 1).nats == pytest.approx(math.log(s) + 1 - LN2)


def test_hkn_exact_identities():
    s = 97
    assert E.hkn_exact(s, 1, 1).nats == pytest.approx(math.log(s), abs=1e-12)
    for n in (1, 2, 5, 30):
        assert E.hkn_exact(s, n, n).nats == pytest.approx(math.log(math.comb(s, n)), abs=1e-10)


def test_hkn_exact_against_subset_enumeration():
    assert E.hkn_exact(16, 4, 2).nats == pytest.approx(subset_entropy(16, 4, 2), abs=1e-9)
    for s, n, k in [(10, 3, 1), (12, 6, 3), (9, 9, 4), (14, 5, 5)]:
        assert E.hkn_exact(s, n, k).nats == pytest.approx(subset_entropy(s, n, k), abs=1e-9)
        assert E.hkn_bruteforce(s, n, k).nats == pytest.approx(subset_entropy(s, n, k), abs=1e-12)


def test_kth_least_pmf_against_big_integers():
    s, n, k = 40, 6, 3
    j, p = E.kth_least_distribution(s, n, k)
    total = math.comb(s, n)
    ref = [math.comb(int(v) - 1, k - 1) * math.comb(s - int(v), n - k) / total for v in j]
    assert p.tolist() == pytest.approx(ref, rel=1e-11)


@pytest.mark.parametrize("s, n, k", [(2**20, 2**10, 128), (2**14, 64, 8), (10**6, 5000, 100)])
def test_pmf_normalization(s, n, k):
    _, p = E.kth_least_distribution(s, n, k)
    assert abs(math.fsum(p) - 1) <= 1e-10


def test_hkn_approx_within_tolerance():
    s, n, k = 2**18, 2**8, 32
    gap = abs(E.hkn_approx(s, n, k).bits_per_key - E.hkn_exact(s, n, k).bits_per_key)
    assert gap <= 10 * max(n * math.log(n) / s, math.log(k) / k) / LN2


# -- log_choose -----------------------------------------------------------


def test_log_choose_examples():
    assert E.log_choose(5, 0) == 0.0
    assert E.log_choose(5, 2) == pytest.approx(math.log(10), rel=1e-15)


@pytest.mark.parametrize(
    "a, b",
    [(10**6, 10**3), (10**6, 2 * 10**4), (2**63, 7), (2**63, 2**12), (2**40, 2**11), (120, 60), (51, 1)],
)
def test_log_choose_against_big_integers(a, b):
    ref = math.log(math.comb(a, b))  # math.log accepts arbitrarily large ints
    assert abs(E.log_choose(a, b) - ref) <= 1e-10 * ref


def test_log_choose_vectorized_matches_scalar():
    a = np.array([10, 500, 10**6, 2.0**63])
    b = np.array([3, 250, 999, 4096])
    vec = E.log_choose(a, b)
    assert vec.tolist() == pytest.approx([E.log_choose(int(x), int(y)) for x, y in zip(a, b)], rel=1e-13)


def test_log_choose_domain():
    with pytest.raises(DomainError):
        E.log_choose(3, 4)
    with pytest.raises(DomainError):
        E.log_choose(3, -1)


# -- leading zeros ----------------------------------------------------------


def test_predicted_min_leading_zeros():
    assert E.predicted_min_leading_zeros(10**6) == pytest.approx(14.14, abs=0.01)
    assert E.predicted_min_leading_zeros(2**23) == pytest.approx(17.0, abs=0.01)
    values = [E.predicted_min_leading_zeros(n) for n in range(8, 5000)]
    assert all(b > a for a, b in zip(values, values[1:]))
    with pytest.raises(DomainError):
        E.predicted_min_leading_zeros(2)


# -- guards ---------------------------------------------------------------


def test_domain_errors():
    with pytest.raises(DomainError):
        E.hbs_approx(4, 5)
    with pytest.raises(DomainError):
        E.hkn_approx(100, 5, 6)
    with pytest.raises(DomainError):
        E.hkn_exact(100, 0, 0)
    with pytest.raises(DomainError):
        E.empirical_hkn(100, 5, 3, samples=0)


def test_overflow_guard():
    with pytest.raises(OverflowGuardError):
        E.hbs_exact(2**30, 4)
    with pytest.raises(OverflowGuardError):
        E.hkn_exact(2**30, 4, 2)
    with pytest.raises(OverflowGuardError):
        E.hkn_bruteforce(60, 10, 2)


# -- sampler --------------------------------------------------------------


def test_empirical_single_key_is_constant():
    rep = E.empirical_hkn(2**40, 1, 1, samples=50, seed=1)
    assert rep.mean_bits_per_key == pytest.approx(40.0, abs=1e-9)
    assert rep.std_bits_per_key == 0.0
    assert rep.diff == pytest.approx(rep.mean_bits_per_key - rep.approx_bits_per_key)


def test_empirical_is_reproducible():
    a = E.empirical_hkn(2**64, 2**12, 2**6, samples=200, seed=5)
    b = E.empirical_hkn(2**64, 2**12, 2**6, samples=200, seed=5)
    assert a == b


def test_empirical_large_space_example():
    rep = E.empirical_hkn(2**64, 2**16, 2**10, samples=5000, seed=2024)
    assert rep.mean_bits_per_key == pytest.approx(49, abs=0.5)
    assert rep.std_bits_per_key == pytest.approx(0.045, abs=0.02)
    assert rep.resampled == 0


def test_empirical_exact_tail_matches_exact_oracle():
    s, n, k, samples = 2**16, 64, 8, 10**5
    rep = E.empirical_hkn(s, n, k, samples=samples, seed=77, exact_tail=True)
    exact = E.hkn_exact(s, n, k).bits_per_key
    assert abs(rep.mean_bits_per_key - exact) <= 3 * rep.std_bits_per_key / math.sqrt(samples)


def test_closed_form_bias_matches_prediction():
    # the closed form uses the largest tail factor for every term, overstating by
    # about m(m-1) / (2(s - j)) nats with m = n - k
    s, n, k, samples = 2**16, 64, 8, 10**5
    closed = E.empirical_hkn(s, n, k, samples=samples, seed=78)
    exact_tail = E.empirical_hkn(s, n, k, samples=samples, seed=78, exact_tail=True)
    m = n - k
    t = k / (n + 1)
    predicted = m * (m - 1) / (2 * s * (1 - t)) / k / LN2
    bias = closed.mean_bits_per_key - exact_tail.mean_bits_per_key
    assert bias == pytest.approx(predicted, rel=0.05)


def test_closed_form_bias_vanishes_for_large_spaces():
    a = E.empirical_hkn(2**64, 2**12, 2**6, samples=500, seed=3)
    b = E.empirical_hkn(2**64, 2**12, 2**6, samples=500, seed=3, exact_tail=True)
    assert abs(a.mean_bits_per_key - b.mean_bits_per_key) < 1e-9


def test_empirical_mean_error_shrinks_like_root_samples():
    # quadrupling the sample count should halve the spread of the mean
    def spread(samples):
        ss = np.random.SeedSequence(314 + samples)
        means = [
            E.empirical_hkn(2**64, 2**12, 2**6, samples=samples, seed=child).mean_bits_per_key
            for child in ss.spawn(300)
        ]
        return np.std(means, ddof=1)

    ratio = spread(250) / spread(1000)
    assert ratio == pytest.approx(2.0, rel=0.3)
