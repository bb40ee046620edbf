"""Fourier sampling, the probabilistic period-finding baseline, and the
exact period finder (EQPA).

Given a function f on Z_m with the promise f(x) = f(y) iff x = y (mod r)
for a hidden period r dividing m, Fourier sampling of sum_j |j>|f(j)> puts
the index marginal exactly on the multiples of m/r, each with mass 1/r.
Any sampled index k with d*k != 0 (mod m) improves a maintained divisor d
of r via d <- lcm(d, m/gcd(m, k)).

The exact finder makes every round of that loop deterministic-in-success:
for each j in -1..floor(log2 m) it marks outcomes (k, b) good when
rep(d*k) >= m/2, or when b = 1 and 0 < rep(d*k) <= 2^j, where rep is the
representative of d*k mod m in [0, m).  When r/d is even the j = -1 round
has good mass exactly 1/2, and when r/d is odd the round with
j = ceil(log2(d*m/r)) does; a single amplitude amplification with phases i
then boosts the good mass to 1, so the measured index is informative with
certainty.  The divisor at least doubles each sweep until it reaches r.

Two samplers drive the same loop: ``engine="block"`` evaluates the boosted
measurement distribution in the invariant 2r-dimensional block basis
|k>|G_k>|b>|mark> (exact and fast: the residual function-register states
G_k are orthonormal, so they never affect the index marginal), while
``engine="program"`` runs the literal program composition step by step.
Both consume one rng draw per iteration and produce identical traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .amplify import (
    DftStep,
    OracleStep,
    PrepStep,
    ReversibleProgram,
    boost_from_half,
)
from .qstate import (
    ClassicalOracle,
    GoodPredicate,
    RegisterLayout,
    measure_joint,
)

MASS_TOL = 1e-9

# Desk-scale ceiling for the modulus itself; products that could overflow
# int64 are guarded where they are formed (r*m and d*k bounds).
_MAX_MODULUS = 1 << 40


class PromiseViolation(ValueError):
    """The function does not satisfy the exact-period promise."""


@dataclass(frozen=True)
class PeriodicFunction:
    """A function on Z_m promised to be exactly periodic with r | m.

    ``period`` is optional ground truth for test oracles; the algorithms in
    this module never consult it.  ``evaluator`` must accept int64 arrays
    when ``vectorized`` is true.
    """

    modulus: int
    evaluator: Callable[..., object]
    period: int | None = None
    vectorized: bool = True

    def __post_init__(self) -> None:
        if self.modulus < 1:
            raise ValueError("modulus must be positive")
        if self.modulus > _MAX_MODULUS:
            raise ValueError(f"modulus {self.modulus} beyond desk-scale bound {_MAX_MODULUS}")

    def __call__(self, x):
        if self.vectorized:
            return np.asarray(self.evaluator(np.asarray(x, dtype=np.int64)), dtype=np.int64)
        if np.ndim(x) == 0:
            return int(self.evaluator(int(x)))
        return np.fromiter((int(self.evaluator(int(v))) for v in np.asarray(x).ravel()),
                           dtype=np.int64, count=np.size(x))

    @classmethod
    def modular(cls, period: int, modulus: int) -> "PeriodicFunction":
        """f(x) = x mod period, the canonical promise-satisfying family."""
        if period < 1:
            raise ValueError("period must be positive")
        return cls(modulus=modulus, evaluator=lambda x: x % period, period=period)

    @classmethod
    def from_table(cls, values: Sequence[int]) -> "PeriodicFunction":
        table = np.asarray(list(values), dtype=np.int64)
        return cls(modulus=len(table), evaluator=lambda x: table[x])


@dataclass(frozen=True)
class _Structure:
    """Verified orbit structure of a promise-satisfying function."""

    modulus: int
    period: int


def _analyze(f: PeriodicFunction) -> _Structure:
    """Detect the exact period of ``f`` and verify the promise.

    Under the promise, f(j) first revisits f(0) at j = r exactly, so a
    forward scan finds r with r evaluations.  The both-way promise is then
    verified exhaustively for moduli up to 4096 and on fixed spot points
    beyond that.
    """
    m = f.modulus
    f0 = int(np.asarray(f(np.array([0]))).ravel()[0])
    r = m
    start, chunk = 1, 4096
    while start < m:
        xs = np.arange(start, min(start + chunk, m), dtype=np.int64)
        hits = np.nonzero(np.asarray(f(xs)) == f0)[0]
        if hits.size:
            r = start + int(hits[0])
            break
        start += chunk
    if m % r:
        raise PromiseViolation(f"detected period {r} does not divide modulus {m}")
    if m <= 4096:
        xs = np.arange(m, dtype=np.int64)
        vals = np.asarray(f(xs))
        if not np.array_equal(vals, vals[xs % r]):
            raise PromiseViolation("function is not periodic with the detected period")
        if len(np.unique(vals[:r])) != r:
            raise PromiseViolation("function repeats a value inside one period")
    else:
        probe = np.random.default_rng(0x5EED).integers(0, m, size=64)
        if not np.array_equal(np.asarray(f(probe)), np.asarray(f(probe % r))):
            raise PromiseViolation("function is not periodic with the detected period")
        if len(np.unique(np.asarray(f(np.arange(r, dtype=np.int64))))) != r:
            raise PromiseViolation("function repeats a value inside one period")
    return _Structure(m, r)


# ---------------------------------------------------------------------------
# programs and predicates


def fourier_sampling_program(f: PeriodicFunction) -> ReversibleProgram:
    """[prepare index; evaluate f into the value register; Fourier on index]."""
    m = f.modulus
    layout = RegisterLayout.of(("index", m), ("value", m))
    oracle = ClassicalOracle(("index",), "value", f.evaluator, vectorized=f.vectorized, name="f")
    return ReversibleProgram(layout, (PrepStep("index"), OracleStep(oracle), DftStep("index")))


def rep(d: int, k: int, m: int) -> int:
    """Representative of d*k mod m in [0, m); 0 when d*k = 0 (mod m).

    Mapping the zero residue to 0 rather than m keeps multiples of the
    period's complement out of the good set, which the counting argument
    behind the half-mass rounds requires.
    """
    if m < 1:
        raise ValueError("modulus must be positive")
    return (d * k) % m


def goodness(d: int, m: int, j: int) -> GoodPredicate:
    """The marking predicate on (index, b) for divisor d and window exponent j.

    Good iff rep(d*k) >= m/2, or b = 1 and 0 < rep(d*k) <= 2^j.  For j = -1
    the window (0, 2^j] is empty.
    """
    if not -1 <= j <= max(m.bit_length() - 1, 0):
        raise ValueError(f"j={j} outside -1..floor(log2 {m})")
    threshold = (1 << j) if j >= 0 else 0
    fits_int64 = d * (m - 1) < (1 << 62)

    def fn(k, b):
        k = np.asarray(k, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if fits_int64:
            r = (d * k) % m
        else:  # exact arithmetic fallback for extreme divisor/modulus products
            r = np.array([(d * int(v)) % m for v in np.atleast_1d(k)], dtype=np.int64)
            r = r.reshape(k.shape)
        return (2 * r >= m) | ((b == 1) & (r > 0) & (r <= threshold))

    return GoodPredicate(("index", "b"), fn, name=f"mark(d={d},j={j})")


def marked_program(f: PeriodicFunction, d: int, j: int) -> ReversibleProgram:
    """Fourier sampling extended with a coin register b and the mark bit.

    Prepares (1/sqrt 2) sum_{k,b} |k>|G_k>|b>|mark_j(k,b)> so that one
    boost-from-half application can be run against the mark predicate.
    """
    if d < 1 or f.modulus % d:
        raise ValueError("d must be a positive divisor of the modulus")
    m = f.modulus
    layout = RegisterLayout.of(("index", m), ("value", m), ("b", 2), ("good", 2))
    f_oracle = ClassicalOracle(("index",), "value", f.evaluator, vectorized=f.vectorized, name="f")
    mark = goodness(d, m, j)
    mark_oracle = ClassicalOracle(("index", "b"), "good", mark.fn, name=mark.name)
    return ReversibleProgram(
        layout,
        (
            PrepStep("index"),
            OracleStep(f_oracle),
            DftStep("index"),
            PrepStep("b"),
            OracleStep(mark_oracle),
        ),
    )


# ---------------------------------------------------------------------------
# traces


@dataclass(frozen=True)
class EqpaRecord:
    sweep: int
    j: int
    d_before: int
    k: int
    b: int
    chi: int
    good_mass: float
    at_half_mass: bool
    updated: bool
    d_after: int
    fourier_calls: int

    def to_json_dict(self) -> dict:
        return {
            "sweep": self.sweep,
            "j": self.j,
            "d_before": self.d_before,
            "k": self.k,
            "b": self.b,
            "chi": self.chi,
            "good_mass": self.good_mass,
            "at_half_mass": self.at_half_mass,
            "updated": self.updated,
            "d_after": self.d_after,
            "fourier_calls": self.fourier_calls,
        }


@dataclass
class EqpaTrace:
    """Per-iteration log of one exact period-finding run."""

    records: list[EqpaRecord] = field(default_factory=list)
    fourier_calls: int = 0
    oracle_calls: int = 0
    sweeps: int = 0


# ---------------------------------------------------------------------------
# samplers: one boosted-and-measured iteration each


class _BlockSampler:
    """Exact iteration in the invariant block basis |k>|G_k>|b>|mark>.

    The prepared state is uniform over 2r blocks (r support indices times
    the coin), the boost acts by two scalar factors (good/bad), and the
    measured triple follows the same lexicographic walk the sparse path
    uses, with a single rng draw.
    """

    def __init__(self, structure: _Structure):
        self.m = structure.modulus
        self.r = structure.period
        self.step = self.m // self.r
        if self.r * self.m >= (1 << 62):
            raise ValueError("support-index products would overflow int64")
        self._t = np.arange(self.r, dtype=np.int64)

    def sample(self, d: int, j: int, rng: np.random.Generator) -> tuple[int, int, int, float]:
        m, r = self.m, self.r
        reps = (self._t * ((self.step * d) % m)) % m
        threshold = (1 << j) if j >= 0 else 0
        good = np.empty((r, 2), dtype=bool)
        good[:, 0] = 2 * reps >= m
        good[:, 1] = good[:, 0] | ((reps > 0) & (reps <= threshold))
        a = good.sum() / (2 * r)
        # Q = -A S0 A^{-1} S_good with both phases i; A S0 A^{-1} is a
        # rank-one correction about the prepared state, so uniform good/bad
        # coordinates stay uniform and only two factors matter.
        ip = (1.0 - a) + 1j * a
        factor_good = -(1j + (1j - 1.0) * ip)
        factor_bad = -(1.0 + (1j - 1.0) * ip)
        p_good = abs(factor_good) ** 2 / (2 * r)
        p_bad = abs(factor_bad) ** 2 / (2 * r)
        probs = np.where(good, p_good, p_bad).ravel()
        cum = np.cumsum(probs)
        target = rng.random() * cum[-1]
        idx = min(int(np.searchsorted(cum, target, side="right")), 2 * r - 1)
        t, b = divmod(idx, 2)
        return int(self._t[t] * self.step), b, int(good[t, b]), float(a)


class _ProgramSampler:
    """Literal iteration: build the marked program, boost, measure."""

    def __init__(self, f: PeriodicFunction):
        self.f = f

    def sample(self, d: int, j: int, rng: np.random.Generator) -> tuple[int, int, int, float]:
        program = marked_program(self.f, d, j)
        boost = boost_from_half(program, goodness(d, self.f.modulus, j))
        (k, b, chi), _ = measure_joint(boost.state, ("index", "b", "good"), rng)
        return k, b, chi, boost.mass_before


# ---------------------------------------------------------------------------
# the algorithms


def eqpa(
    f: PeriodicFunction,
    rng: np.random.Generator,
    engine: str = "block",
    on_iteration: Callable[[EqpaRecord], None] | None = None,
) -> tuple[int, EqpaTrace]:
    """Find the exact period of ``f`` given that it divides the modulus.

    Returns the period and a per-iteration trace.  The result is
    seed-independent; only the trace contents vary with the rng.  Raises
    :class:`PromiseViolation` if the promise fails (including the final
    spot check that the returned divisor really is a period).
    """
    structure = _analyze(f)
    m = f.modulus
    if engine == "block":
        sampler = _BlockSampler(structure)
    elif engine == "program":
        sampler = _ProgramSampler(f)
    else:
        raise ValueError(f"unknown engine {engine!r}")

    j_hi = m.bit_length() - 1  # floor(log2 m) for m >= 1
    trace = EqpaTrace()
    d = 1
    while True:
        trace.sweeps += 1
        swept_update = False
        for j in range(-1, j_hi + 1):
            k, b, chi, mass = sampler.sample(d, j, rng)
            trace.fourier_calls += 3  # A, A^{-1}, A each carry one transform
            trace.oracle_calls += 3
            informative = (d * k) % m != 0
            d_after = math.lcm(d, m // math.gcd(m, k)) if informative else d
            record = EqpaRecord(
                sweep=trace.sweeps,
                j=j,
                d_before=d,
                k=k,
                b=b,
                chi=chi,
                good_mass=mass,
                at_half_mass=abs(mass - 0.5) <= MASS_TOL,
                updated=informative,
                d_after=d_after,
                fourier_calls=trace.fourier_calls,
            )
            trace.records.append(record)
            if on_iteration is not None:
                on_iteration(record)
            if informative:
                d = d_after
                swept_update = True
        if not swept_update:
            break

    _final_spot_check(f, d)
    return d, trace


def _final_spot_check(f: PeriodicFunction, d: int) -> None:
    m = f.modulus
    if m <= 4096:
        xs = np.arange(m, dtype=np.int64)
    else:
        xs = np.random.default_rng(0xD00D).integers(0, m, size=64)
    if not np.array_equal(np.asarray(f(xs)), np.asarray(f((xs + d) % m))):
        raise PromiseViolation(f"returned divisor {d} is not a period of the function")


def standard_qpa(f: PeriodicFunction, rng: np.random.Generator, samples: int = 1) -> int:
    """Probabilistic baseline: sample Fourier indices, return m/gcd(m, k_1..k_s).

    The candidate is always a divisor of the true period and equals it only
    with the usual probabilistic guarantee.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    structure = _analyze(f)
    m, r = structure.modulus, structure.period
    g = m
    for _ in range(samples):
        k = int(rng.integers(r)) * (m // r)  # exact marginal: uniform on multiples of m/r
        g = math.gcd(g, k)
    return m // g


def brute_force_period(f: PeriodicFunction, bound: int) -> int:
    """Smallest positive shift under which f repeats on [0, m); test oracle."""
    m = f.modulus
    vals = np.asarray(f(np.arange(m, dtype=np.int64)))
    for candidate in range(1, min(bound, m) + 1):
        if np.array_equal(vals[: m - candidate], vals[candidate:]):
            return candidate
    raise ValueError(f"no period up to {bound} found")
