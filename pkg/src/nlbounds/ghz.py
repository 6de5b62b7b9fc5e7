"""The n-party phase-measurement parity problem on a GHZ-type state.

Each of n parties holds one qubit of (|0...0> + |1...1>)/sqrt(2), receives an
l-bit input X_i, applies the phase |1> -> exp(2*pi*i*X_i / 2^l)|1>, and
measures in the |+>/|-> basis (outcome bits a_i).  Whenever the inputs satisfy
(sum X_i) mod 2^(l-1) = 0, the output parity (sum a_i) mod 2 is forced to
b = ((sum X_i) mod 2^l) / 2^(l-1), and the admissible outputs are uniform.

Two independent probability paths are provided: the closed form `ghz_prob`
and `statevector_oracle`, which builds the post-phase state and applies the
basis change qubit by qubit.  They are cross-checked in the test suite.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import corrmodel
from .corrmodel import CorrelationProblem, PromiseSet

MAX_INPUT_BITS = 16
MAX_ORACLE_PARTIES = 24


@dataclass(frozen=True)
class GhzParams:
    """n parties, l input bits each (so k = 2^l inputs per party, d = 2 outputs)."""

    n: int
    l: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"need at least 2 parties, got n={self.n}")
        if self.l < 1:
            raise ValueError(f"need at least 1 input bit, got l={self.l}")
        if self.l > MAX_INPUT_BITS:
            raise ValueError(f"l={self.l} exceeds the {MAX_INPUT_BITS}-bit guardrail")
        # keeps all input sums inside one machine word
        if self.n * self.l > 64:
            raise ValueError(f"n*l = {self.n * self.l} > 64")

    @property
    def k(self) -> int:
        return 2**self.l


def default_bits(n: int) -> int:
    """The canonical choice of l: the unique integer with log2(n) <= l < log2(n) + 1."""
    if n < 2:
        raise ValueError("need n >= 2")
    return (n - 1).bit_length()


def _check_input(params: GhzParams, x: Sequence[int]) -> tuple[int, ...]:
    x = tuple(x)
    if len(x) != params.n or any(not 0 <= v < params.k for v in x):
        raise ValueError(f"input {x} outside {{0..{params.k - 1}}}^{params.n}")
    return x


def promise_holds(params: GhzParams, x: Sequence[int]) -> bool:
    """True iff (sum x_i) mod 2^(l-1) = 0."""
    x = _check_input(params, x)
    return sum(x) % 2 ** (params.l - 1) == 0


def parity_target(params: GhzParams, x: Sequence[int]) -> int:
    """The forced output parity b = ((sum x_i) mod 2^l) / 2^(l-1) on promise inputs."""
    x = _check_input(params, x)
    rem = sum(x) % params.k
    half = 2 ** (params.l - 1)
    if rem % half != 0:
        raise corrmodel.PromiseViolation(f"input {x} violates the promise")
    return rem // half


def ghz_prob(params: GhzParams, x: Sequence[int], a: Sequence[int]) -> float:
    """Outcome probability (1/2^n) * (1 + cos(2*pi*sum(x)/2^l + pi*sum(a))).

    Defined for every input, on or off the promise.  When sum(x) is a
    multiple of 2^(l-1) the cosine argument is an exact multiple of pi, and
    the value is produced by an integer parity test (exactly 0 or 2^(1-n))
    rather than by floating evaluation: admissibility is a support question
    and must not depend on rounding.
    """
    x = _check_input(params, x)
    a = tuple(a)
    if len(a) != params.n or any(v not in (0, 1) for v in a):
        raise ValueError(f"output {a} outside {{0,1}}^{params.n}")
    half = 2 ** (params.l - 1)
    rem = sum(x) % params.k
    a_parity = sum(a) % 2
    if rem % half == 0:
        b = rem // half
        return 2.0 ** (1 - params.n) if a_parity == b else 0.0
    angle = 2.0 * math.pi * rem / params.k + math.pi * a_parity
    return (1.0 + math.cos(angle)) / 2**params.n


def statevector_oracle(params: GhzParams, x: Sequence[int]) -> np.ndarray:
    """Full outcome distribution over {0,1}^n by explicit state simulation.

    Independent of `ghz_prob`: prepares (|0^n> + e^{i*phi}|1^n>)/sqrt(2) with
    phi = 2*pi*sum(x)/2^l, applies the Hadamard basis change to every qubit,
    and squares amplitudes.  Entry j is the probability of the output vector
    whose bits are the big-endian binary digits of j (party 1 first).
    """
    x = _check_input(params, x)
    n = params.n
    if n > MAX_ORACLE_PARTIES:
        raise ValueError(f"n={n} exceeds the statevector guardrail {MAX_ORACLE_PARTIES}")
    phi = 2.0 * math.pi * sum(x) / params.k
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0 / math.sqrt(2.0)
    psi[-1] = complex(math.cos(phi), math.sin(phi)) / math.sqrt(2.0)
    h = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
    for qubit in range(n):
        psi = psi.reshape(2**qubit, 2, 2 ** (n - qubit - 1))
        psi = np.einsum("ab,ibj->iaj", h, psi).reshape(-1)
    return np.abs(psi) ** 2


def promise_size(params: GhzParams) -> int:
    """Exact promise count 2^((n-1)l + 1): the last coordinate is free mod 2^(l-1)."""
    return 2 ** ((params.n - 1) * params.l + 1)


def _promise_enumerator(params: GhzParams):
    k = params.k
    half = 2 ** (params.l - 1)

    def generate():
        # lexicographic: free prefix, then the two residue-compatible last values
        for prefix in itertools.product(range(k), repeat=params.n - 1):
            t = (-sum(prefix)) % half
            yield prefix + (t,)
            yield prefix + (t + half,)

    return generate


def build_ghz_problem(params: GhzParams) -> CorrelationProblem:
    """The correlation problem with promise (sum X) mod 2^(l-1) = 0 and d = 2 outputs."""
    promise = PromiseSet(
        contains=lambda x: sum(x) % 2 ** (params.l - 1) == 0,
        size=promise_size(params),
        enumerator=_promise_enumerator(params),
    )
    return CorrelationProblem(
        n=params.n,
        k=params.k,
        d=2,
        promise=promise,
        prob_fn=lambda x, a: ghz_prob(params, x, a),
        generator=("ghz", {"n": params.n, "l": params.l}),
    )


def params_of_problem(problem: CorrelationProblem) -> GhzParams | None:
    """Recover GhzParams from a generator-backed problem, else None."""
    if problem.generator is not None and problem.generator[0] == "ghz":
        p = problem.generator[1]
        return GhzParams(n=int(p["n"]), l=int(p["l"]))
    return None


def _factory(raw_params: dict) -> CorrelationProblem:
    try:
        params = GhzParams(n=int(raw_params["n"]), l=int(raw_params["l"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise corrmodel.ProblemFormatError(f"bad ghz generator params {raw_params!r}: {exc}") from exc
    return build_ghz_problem(params)


corrmodel.register_generator("ghz", _factory)
