"""Order finding, integer factorization, and prime set encodings.

Factoring reduces to order finding: for random a coprime to N, the order r
of a mod N is even with good probability, and gcd(a^{r/2} - 1, N) then
splits N.  Order finding itself is simulated two ways:

* :func:`order_find` runs the standard probabilistic pipeline, sampling
  from the exact simulated index marginal: Fourier sampling over Z_{2^t}
  with 2^t >= N^2, continued-fraction recovery of the denominator,
  candidate repair, and classical verification.
* :func:`order_find_exact` runs the exact period finder, which needs a known
  multiple of the order and then returns it deterministically.

Sets over a finite universe encode as products of primes (element u maps to
the (u+1)-th prime), which turns union into lcm and intersection into gcd;
decoding is factorization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .periodfind import PeriodicFunction, eqpa, fourier_sampling_program

# Deterministic Miller-Rabin witnesses, valid far beyond desk scale.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

# Quantum order finding is simulated only up to this modulus; the Fourier
# register has dimension 2^t >= N^2.
QUANTUM_SIM_LIMIT = 128
DEFAULT_QUANTUM_BOUND = 64

_MAX_ATTEMPTS = 10_000


class NoQuantumSplitNeeded(ValueError):
    """The input is prime or a prime power; no quantum splitting applies."""


# ---------------------------------------------------------------------------
# classical number theory


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


_PRIME_CACHE: list[int] = [2, 3, 5, 7, 11, 13]


def _extend_primes(limit_count: int | None = None, limit_value: int | None = None) -> None:
    candidate = _PRIME_CACHE[-1]
    while (limit_count is not None and len(_PRIME_CACHE) < limit_count) or (
        limit_value is not None and _PRIME_CACHE[-1] < limit_value
    ):
        candidate += 2
        if is_prime(candidate):
            _PRIME_CACHE.append(candidate)


def nth_prime(i: int) -> int:
    """1-based: nth_prime(1) == 2."""
    if i < 1:
        raise ValueError("prime index must be >= 1")
    _extend_primes(limit_count=i)
    return _PRIME_CACHE[i - 1]


def prime_index(p: int) -> int:
    """0-based position of a prime in the prime sequence (2 -> 0, 3 -> 1)."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    _extend_primes(limit_value=p)
    return _PRIME_CACHE.index(p)


def primes_below(limit: int) -> list[int]:
    if limit <= 2:
        return []
    _extend_primes(limit_value=limit)
    return [p for p in _PRIME_CACHE if p < limit]


def _perfect_power(n: int) -> tuple[int, int] | None:
    """Return (base, exponent >= 2) when n is a perfect power, else None."""
    for e in range(2, n.bit_length() + 1):
        root = round(n ** (1.0 / e))
        for b in (root - 1, root, root + 1):
            if b >= 2 and b**e == n:
                return b, e
    return None


def _trial_division_factor(n: int) -> int:
    """Smallest prime factor of composite odd n."""
    f = 3
    while f * f <= n:
        if n % f == 0:
            return f
        f += 2
    return n


# ---------------------------------------------------------------------------
# order finding


def _power_table(a: int, N: int, length: int) -> np.ndarray:
    table = np.empty(length, dtype=np.int64)
    v = 1
    for x in range(length):
        table[x] = v
        v = v * a % N
    return table


_MARGINAL_CACHE: dict[tuple[int, int], tuple[int, np.ndarray]] = {}


def _fourier_index_cdf(a: int, N: int) -> tuple[int, np.ndarray]:
    """Exact index-register measurement cdf for f(x) = a^x mod N over Z_{2^t}.

    Runs the actual Fourier-sampling program on the sparse simulator once
    per (a, N) and caches the cumulative distribution.
    """
    key = (a, N)
    if key in _MARGINAL_CACHE:
        return _MARGINAL_CACHE[key]
    t = max(N * N - 1, 2).bit_length()  # smallest t with 2^t >= N^2
    m = 1 << t
    f = PeriodicFunction.from_table(_power_table(a, N, m))
    state = fourier_sampling_program(f).run()
    dense = np.zeros(m)
    np.add.at(dense, state.values_column("index"), state.probabilities())
    cdf = np.cumsum(dense)
    _MARGINAL_CACHE[key] = (m, cdf)
    return m, cdf


def _order_from_multiple(a: int, N: int, multiple: int) -> int:
    """Exact order of a mod N given any multiple of it (strip prime factors)."""
    r = multiple
    for p in _prime_factors(r):
        while r % p == 0 and pow(a, r // p, N) == 1:
            r //= p
    return r


def _prime_factors(n: int) -> list[int]:
    out = []
    m = n
    f = 2
    while f * f <= m:
        if m % f == 0:
            out.append(f)
            while m % f == 0:
                m //= f
        f += 1 if f == 2 else 2
    if m > 1:
        out.append(m)
    return out


def order_find(a: int, N: int, rng: np.random.Generator) -> int:
    """Multiplicative order of a mod N via simulated Fourier sampling.

    Samples the exact index marginal, recovers a denominator candidate by
    continued fractions (capped at N), repairs it with small multiples, and
    verifies classically; resamples until the verified order is found.
    """
    if N < 2:
        raise ValueError("modulus must be >= 2")
    a %= N
    if math.gcd(a, N) != 1:
        raise ValueError(f"{a} is not coprime to {N}")
    if N > QUANTUM_SIM_LIMIT:
        raise ValueError(f"quantum order finding simulated only for N <= {QUANTUM_SIM_LIMIT}")
    m, cdf = _fourier_index_cdf(a, N)
    for _ in range(_MAX_ATTEMPTS):
        k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        k = min(k, m - 1)
        q = Fraction(k, m).limit_denominator(N).denominator
        for mult in range(1, 7):
            candidate = q * mult
            if candidate >= 1 and pow(a, candidate, N) == 1:
                return _order_from_multiple(a, N, candidate)
    raise RuntimeError("order finding did not converge")  # pragma: no cover


def order_find_exact(a: int, N: int, multiple: int, rng: np.random.Generator | None = None) -> int:
    """Exact order of a mod N from a known multiple, via the exact period finder.

    Deterministic: the result does not depend on the rng.  Raises if the
    supplied value is not actually a multiple of the order (promise failure).
    """
    if N < 2:
        raise ValueError("modulus must be >= 2")
    a %= N
    if math.gcd(a, N) != 1:
        raise ValueError(f"{a} is not coprime to {N}")
    if multiple < 1:
        raise ValueError("multiple must be positive")

    def evaluate(xs):
        flat = np.asarray(xs, dtype=np.int64).ravel()
        out = np.fromiter((pow(a, int(x), N) for x in flat), dtype=np.int64, count=flat.size)
        return out.reshape(np.shape(xs))

    f = PeriodicFunction(modulus=multiple, evaluator=evaluate)
    order, _ = eqpa(f, rng if rng is not None else np.random.default_rng(0))
    return order


# ---------------------------------------------------------------------------
# factoring


def _shor_split_attempt(N: int, rng: np.random.Generator) -> int | None:
    """One factoring attempt: random base, order finding, gcd extraction."""
    a = int(rng.integers(2, N - 1))
    g = math.gcd(a, N)
    if g > 1:
        return g  # lucky draw already shares a factor
    r = order_find(a, N, rng)
    if r % 2:
        return None
    x = pow(a, r // 2, N)
    if x == N - 1:
        return None
    g = math.gcd(x - 1, N)
    return g if 1 < g < N else None


def shor_factor(N: int, rng: np.random.Generator) -> int:
    """Nontrivial divisor of an odd composite N that is not a prime power."""
    divisor, _ = _shor_split(N, rng)
    return divisor


def _shor_split(N: int, rng: np.random.Generator) -> tuple[int, int]:
    if N % 2 == 0:
        raise ValueError("N must be odd")
    if is_prime(N):
        raise NoQuantumSplitNeeded(f"{N} is prime")
    if _perfect_power(N) is not None:
        raise NoQuantumSplitNeeded(f"{N} is a prime power or perfect power")
    for attempt in range(1, _MAX_ATTEMPTS + 1):
        d = _shor_split_attempt(N, rng)
        if d is not None:
            return d, attempt
    raise RuntimeError("factoring did not converge")  # pragma: no cover


@dataclass(frozen=True)
class FactorizationResult:
    n: int
    factors: tuple[int, ...]
    methods: tuple[str, ...]
    trials: int

    def as_multiset(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for p in self.factors:
            out[p] = out.get(p, 0) + 1
        return out


METHOD_TRIAL = "trial-division"
METHOD_QUANTUM = "quantum-order-finding"


def factorize(
    N: int,
    rng: np.random.Generator | None = None,
    quantum_bound: int = DEFAULT_QUANTUM_BOUND,
) -> FactorizationResult:
    """Full prime factorization.

    Even parts and perfect powers are stripped classically.  Odd composite
    cofactors up to ``quantum_bound`` are split by simulated order finding
    when an rng is supplied; everything else falls back to deterministic
    trial division, so protocol runs never stall on a large cofactor.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    found: list[tuple[int, str]] = []
    trials = 0

    def recurse(n: int, tag: str) -> None:
        nonlocal trials
        if n == 1:
            return
        if n % 2 == 0:
            found.append((2, METHOD_TRIAL))
            recurse(n // 2, tag)
            return
        if is_prime(n):
            found.append((n, tag))
            return
        power = _perfect_power(n)
        if power is not None:
            base, exponent = power
            for _ in range(exponent):
                recurse(base, tag)
            return
        if rng is not None and n <= quantum_bound:
            divisor, attempts = _shor_split(n, rng)
            trials += attempts
            recurse(divisor, METHOD_QUANTUM)
            recurse(n // divisor, METHOD_QUANTUM)
            return
        divisor = _trial_division_factor(n)
        recurse(divisor, METHOD_TRIAL)
        recurse(n // divisor, METHOD_TRIAL)

    recurse(N, METHOD_TRIAL)
    found.sort()
    return FactorizationResult(
        n=N,
        factors=tuple(p for p, _ in found),
        methods=tuple(m for _, m in found),
        trials=trials,
    )


# ---------------------------------------------------------------------------
# prime encodings of sets


def prime_encode(u: int) -> int:
    """Universe element u (0-based) maps to the (u+1)-th prime."""
    if u < 0:
        raise ValueError("universe elements are non-negative")
    return nth_prime(u + 1)


def encode_set(elements: Iterable[int]) -> int:
    """Product of the element primes; the empty set encodes as 1."""
    return math.prod(prime_encode(u) for u in sorted(set(int(e) for e in elements)))


def decode_set(x: int, universe_size: int | None = None) -> frozenset[int]:
    """Invert :func:`encode_set` by factorization.

    Raises if the integer is not squarefree or contains a prime outside the
    universe map.
    """
    if x < 1:
        raise ValueError("encoded set must be >= 1")
    if x == 1:
        return frozenset()
    result = factorize(x)
    counts = result.as_multiset()
    if any(c > 1 for c in counts.values()):
        raise ValueError(f"{x} is not squarefree; not a valid set encoding")
    indices = {prime_index(p) for p in counts}
    if universe_size is not None and any(i >= universe_size for i in indices):
        raise ValueError(f"{x} contains a prime outside the universe of size {universe_size}")
    return frozenset(indices)
