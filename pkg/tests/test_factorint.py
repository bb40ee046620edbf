"""Tests for order finding, factoring, and prime set encodings."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qperiod.factorint import (
    NoQuantumSplitNeeded,
    decode_set,
    encode_set,
    factorize,
    is_prime,
    nth_prime,
    order_find,
    order_find_exact,
    prime_encode,
    prime_index,
    primes_below,
    shor_factor,
)
from qperiod.periodfind import PromiseViolation


def brute_force_order(a, N):
    """Test oracle: scan powers until the identity."""
    v, r = a % N, 1
    while v != 1:
        v = v * a % N
        r += 1
    return r


class TestPrimeHelpers:
    def test_is_prime_small(self):
        primes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31}
        for n in range(2, 32):
            assert is_prime(n) == (n in primes)

    def test_nth_prime(self):
        assert [nth_prime(i) for i in range(1, 7)] == [2, 3, 5, 7, 11, 13]

    def test_prime_index_inverts_nth_prime(self):
        for i in range(1, 30):
            assert prime_index(nth_prime(i)) == i - 1

    def test_primes_below(self):
        assert primes_below(32) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31]


class TestOrderFind:
    @pytest.mark.parametrize("a,N", [(2, 15), (4, 15), (7, 15), (2, 21), (5, 21), (10, 33)])
    def test_matches_brute_force(self, a, N):
        for seed in range(5):
            assert order_find(a, N, np.random.default_rng(seed)) == brute_force_order(a, N)

    def test_identity_element(self):
        assert order_find(1, 15, np.random.default_rng(0)) == 1

    def test_rejects_shared_factor(self):
        with pytest.raises(ValueError):
            order_find(6, 15, np.random.default_rng(0))

    def test_result_verified_and_minimal(self):
        for a, N in [(2, 15), (5, 21), (2, 33), (7, 33)]:
            r = order_find(a, N, np.random.default_rng(0))
            assert pow(a, r, N) == 1
            for p in {p for p in range(2, r + 1) if r % p == 0 and is_prime(p)}:
                assert pow(a, r // p, N) != 1


class TestOrderFindExact:
    @pytest.mark.parametrize("a,N,multiple,expected", [(2, 15, 4, 4), (7, 15, 12, 4), (1, 15, 6, 1)])
    def test_examples(self, a, N, multiple, expected):
        assert order_find_exact(a, N, multiple) == expected
        assert expected == brute_force_order(a, N)

    def test_seed_independent(self):
        outs = {order_find_exact(2, 21, 12, np.random.default_rng(s)) for s in range(10)}
        assert outs == {brute_force_order(2, 21)}

    def test_non_multiple_raises(self):
        # order of 2 mod 15 is 4, which does not divide 6
        with pytest.raises(PromiseViolation):
            order_find_exact(2, 15, 6)


class TestShorFactor:
    def test_fifteen(self):
        d = shor_factor(15, np.random.default_rng(0))
        assert d in (3, 5) and 15 % d == 0

    def test_twentyone(self):
        d = shor_factor(21, np.random.default_rng(1))
        assert d in (3, 7) and 21 % d == 0

    def test_prime_rejected(self):
        with pytest.raises(NoQuantumSplitNeeded):
            shor_factor(7, np.random.default_rng(0))

    def test_prime_power_rejected(self):
        with pytest.raises(NoQuantumSplitNeeded):
            shor_factor(27, np.random.default_rng(0))

    def test_even_rejected(self):
        with pytest.raises(ValueError):
            shor_factor(30, np.random.default_rng(0))


class TestFactorize:
    def test_sixty(self):
        assert factorize(60, np.random.default_rng(0)).factors == (2, 2, 3, 5)

    def test_one(self):
        assert factorize(1).factors == ()

    def test_105_by_divisor_check(self):
        result = factorize(105, np.random.default_rng(2))
        assert math.prod(result.factors) == 105
        assert all(105 % p == 0 for p in result.factors)
        assert result.factors == (3, 5, 7)

    def test_quantum_path_tagged(self):
        result = factorize(15, np.random.default_rng(1))
        assert result.factors == (3, 5)
        assert set(result.methods) == {"quantum-order-finding"}
        assert result.trials >= 1

    def test_classical_only_without_rng(self):
        result = factorize(15)
        assert result.factors == (3, 5)
        assert set(result.methods) == {"trial-division"}

    def test_large_cofactor_falls_back_to_trial_division(self):
        result = factorize(30030, np.random.default_rng(0))  # 2*3*5*7*11*13
        assert result.factors == (2, 3, 5, 7, 11, 13)

    @pytest.mark.parametrize("n", [2, 4, 9, 16, 128, 243, 1001, 5040])
    def test_product_and_primality_invariants(self, n):
        result = factorize(n, np.random.default_rng(n))
        assert math.prod(result.factors) == n
        assert all(is_prime(p) for p in result.factors)
        assert len(result.methods) == len(result.factors)


class TestSetEncoding:
    def test_prime_encode_first_three(self):
        assert [prime_encode(u) for u in (0, 1, 2)] == [2, 3, 5]

    def test_encode_pair(self):
        assert encode_set({0, 2}) == 10

    def test_decode_pair(self):
        assert decode_set(10) == frozenset({0, 2})

    def test_empty_set(self):
        assert encode_set(set()) == 1
        assert decode_set(1) == frozenset()

    def test_roundtrip_all_subsets_of_six_universe(self):
        for bits in range(64):
            subset = {u for u in range(6) if bits >> u & 1}
            assert decode_set(encode_set(subset), 6) == frozenset(subset)

    def test_prime_outside_universe_rejected(self):
        with pytest.raises(ValueError):
            decode_set(encode_set({5}), universe_size=4)

    def test_non_squarefree_rejected(self):
        with pytest.raises(ValueError):
            decode_set(12)

    def test_negative_element_rejected(self):
        with pytest.raises(ValueError):
            prime_encode(-1)


class TestSuccessRate:
    def test_single_attempt_rate_meets_bound(self):
        # k = 2 distinct odd prime factors: bound 1 - 1/2^{k-1} - 0.05 = 0.45
        from qperiod.factorint import _shor_split_attempt

        for N in (15, 21, 33):
            hits = sum(
                _shor_split_attempt(N, np.random.default_rng(seed)) is not None
                for seed in range(300)
            )
            assert hits / 300 >= 1 - 0.5 - 0.05, N


@settings(max_examples=25, deadline=None)
@given(st.sets(st.integers(0, 9), max_size=6))
def test_encode_decode_roundtrip_property(subset):
    assert decode_set(encode_set(subset), 10) == frozenset(subset)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(2, 3000), seed=st.integers(0, 50))
def test_factorize_property(n, seed):
    result = factorize(n, np.random.default_rng(seed))
    assert math.prod(result.factors) == n
    assert all(is_prime(p) for p in result.factors)
    assert tuple(sorted(result.factors)) == result.factors
