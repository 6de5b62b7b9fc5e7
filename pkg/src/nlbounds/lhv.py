"""Deterministic local strategies, error-freeness, and the exact click LP.

A deterministic strategy gives each party a function from its input to an
output or to "no click" (encoded as the integer d).  A probabilistic local
model is a distribution over such strategies, so the largest achievable
all-click probability against an error-free model is a linear program over
the strategy simplex.  `max_click_probability` solves it exactly for small
problems; this is the independent check on the closed-form efficiency
bounds, so nothing here may depend on them.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import simplex
from .corrmodel import (
    BudgetError,
    CorrelationProblem,
    DEFAULT_SCAN_LIMIT,
    admissible,
    enumerate_promise,
    output_index,
)

DEFAULT_STRATEGY_BUDGET = 10**8
MAX_OUTPUT_SPACE = 2**20


class StrategyBudgetError(BudgetError):
    """Strategy enumeration would visit more candidates than the budget allows."""


@dataclass(frozen=True)
class DeterministicLhv:
    """Per-party lookup tables; entry d means that input produces no click."""

    tables: tuple[tuple[int, ...], ...]
    d: int

    def __post_init__(self) -> None:
        if not self.tables:
            raise ValueError("need at least one party")
        k = len(self.tables[0])
        for t in self.tables:
            if len(t) != k or any(not 0 <= v <= self.d for v in t):
                raise ValueError("malformed strategy table")

    @property
    def n(self) -> int:
        return len(self.tables)

    @property
    def k(self) -> int:
        return len(self.tables[0])

    def outputs(self, x: Sequence[int]) -> tuple[int, ...]:
        return tuple(t[v] for t, v in zip(self.tables, x))

    def encode(self) -> int:
        """Base-(d+1) integer over all n*k table entries, party 0 most significant."""
        code = 0
        for t in self.tables:
            for v in t:
                code = code * (self.d + 1) + v
        return code

    @classmethod
    def decode(cls, code: int, n: int, k: int, d: int) -> DeterministicLhv:
        digits = []
        for _ in range(n * k):
            code, v = divmod(code, d + 1)
            digits.append(v)
        digits.reverse()
        tables = tuple(tuple(digits[i * k : (i + 1) * k]) for i in range(n))
        return cls(tables, d)


def all_click(strategy: DeterministicLhv, x: Sequence[int]) -> bool:
    """True iff no party answers "no click" on this input."""
    return all(t[v] != strategy.d for t, v in zip(strategy.tables, x))


def enumerate_strategies(
    n: int,
    k: int,
    d: int,
    predicate: Callable[[DeterministicLhv], bool] | None = None,
    max_visited: int = DEFAULT_STRATEGY_BUDGET,
) -> Iterator[DeterministicLhv]:
    """Stream all (d+1)^(n*k) strategies in ascending encoding order."""
    total = (d + 1) ** (n * k)
    if total > max_visited:
        raise StrategyBudgetError(
            f"(d+1)^(n*k) = {total} strategies exceeds the budget {max_visited}"
        )
    per_party = list(itertools.product(range(d + 1), repeat=k))
    for tables in itertools.product(per_party, repeat=n):
        strategy = DeterministicLhv(tables, d)
        if predicate is None or predicate(strategy):
            yield strategy


def is_error_free(
    problem: CorrelationProblem,
    strategy: DeterministicLhv,
    limit: int = DEFAULT_SCAN_LIMIT,
) -> bool:
    """True iff every promise input on which all parties click gets an admissible output.

    Inputs with any no-click are never judged: non-click runs are discarded
    in the detection setting, so they cannot make a model erroneous.
    """
    for x in enumerate_promise(problem, limit=limit):
        outs = strategy.outputs(x)
        if strategy.d in outs:
            continue
        if not admissible(problem, x, outs):
            return False
    return True


@dataclass
class LhvDistribution:
    """Sparse distribution over deterministic strategies."""

    weights: dict[DeterministicLhv, Fraction]

    def total(self) -> Fraction:
        return sum(self.weights.values(), Fraction(0))

    def support(self) -> list[DeterministicLhv]:
        return [s for s, w in self.weights.items() if w > 0]

    def click_probability(self, x: Sequence[int]) -> Fraction:
        return sum(
            (w for s, w in self.weights.items() if all_click(s, x)), Fraction(0)
        )


@dataclass
class ClickOptimum:
    objective: str  # "average" | "worst_case"
    q: float
    distribution: LhvDistribution
    column_count: int
    promise_size: int
    exact_q: Fraction | None = None
    certified: bool = False


def _admissibility_table(problem: CorrelationProblem, promise: list[tuple[int, ...]]) -> np.ndarray:
    n, d = problem.n, problem.d
    if d**n > MAX_OUTPUT_SPACE:
        raise StrategyBudgetError(f"output space d^n = {d**n} too large to tabulate")
    adm = np.zeros((len(promise), d**n), dtype=bool)
    for row, x in enumerate(promise):
        for a in itertools.product(range(d), repeat=n):
            adm[row, output_index(a, d)] = problem.prob_fn(x, a) > 0.0
    return adm


def _error_free_columns(
    problem: CorrelationProblem,
    promise: list[tuple[int, ...]],
    max_strategies: int,
) -> tuple[list[np.ndarray], list[DeterministicLhv]]:
    """Distinct click-indicator vectors over the promise, one representative each.

    Enumerates every strategy (vectorized over the last party), keeps the
    error-free ones, and deduplicates by click vector: only the click
    pattern enters the linear program, so merging strategies that click on
    the same promise inputs cannot change any optimum.  Representatives are
    the first strategy in encoding order with each pattern.
    """
    n, k, d = problem.n, problem.k, problem.d
    m = (d + 1) ** k
    if m**n > max_strategies:
        raise StrategyBudgetError(
            f"(d+1)^(n*k) = {m**n} strategies exceeds the budget {max_strategies}"
        )
    adm = _admissibility_table(problem, promise)
    npromise = len(promise)
    xcols = np.array(promise, dtype=np.int64)  # (|D|, n)
    tables = np.array(
        list(itertools.product(range(d + 1), repeat=k)), dtype=np.int64
    )  # (m, k)

    # per party: all m tables evaluated on that party's promise column
    evals = [tables[:, xcols[:, i]] for i in range(n)]  # each (m, |D|)
    clicks = [e != d for e in evals]

    last_out = evals[-1]
    last_click = clicks[-1]
    columns: dict[bytes, int] = {}
    col_vectors: list[np.ndarray] = []
    reps: list[DeterministicLhv] = []
    per_party = [tuple(map(int, tables[t])) for t in range(m)]

    for prefix in itertools.product(range(m), repeat=n - 1):
        pre_click = np.ones(npromise, dtype=bool)
        pre_out = np.zeros(npromise, dtype=np.int64)
        for i, t in enumerate(prefix):
            pre_click &= clicks[i][t]
            pre_out = pre_out * d + evals[i][t]
        click_mat = last_click & pre_click[None, :]  # (m, |D|)
        out_idx = pre_out[None, :] * d + last_out  # garbage where not clicked
        ok = adm[np.arange(npromise)[None, :], np.minimum(out_idx, adm.shape[1] - 1)]
        valid = np.all(ok | ~click_mat, axis=1)
        packed = np.packbits(click_mat, axis=1)
        for t in np.nonzero(valid)[0]:
            key = packed[t].tobytes()
            if key not in columns:
                columns[key] = len(col_vectors)
                col_vectors.append(click_mat[t].astype(np.int8))
                reps.append(
                    DeterministicLhv(
                        tuple(per_party[i] for i in prefix) + (per_party[t],), d
                    )
                )
    return col_vectors, reps


def max_click_probability(
    problem: CorrelationProblem,
    objective: str = "average",
    max_strategies: int = DEFAULT_STRATEGY_BUDGET,
    limit: int = DEFAULT_SCAN_LIMIT,
    rational_check: bool = False,
) -> ClickOptimum:
    """Exact maximum all-click probability over error-free local models.

    objective="average": the optimum of the LP maximizing the mean click
    indicator over uniformly random promise inputs; attained at a single
    strategy, returned as a point mass (first optimal strategy in encoding
    order).  objective="worst_case": maximize q subject to every promise
    input clicking with probability at least q; the simplex certificate
    distribution is returned.  With ``rational_check`` the optimal basis is
    re-derived in exact rational arithmetic and ``exact_q`` is set.
    """
    if objective not in ("average", "worst_case"):
        raise ValueError(f"unknown objective {objective!r}")
    promise = sorted(enumerate_promise(problem, limit=limit))
    if not promise:
        blank = DeterministicLhv(((problem.d,) * problem.k,) * problem.n, problem.d)
        return ClickOptimum(
            objective=objective,
            q=1.0,
            distribution=LhvDistribution({blank: Fraction(1)}),
            column_count=0,
            promise_size=0,
            exact_q=Fraction(1),
            certified=True,
        )
    cols, reps = _error_free_columns(problem, promise, max_strategies)
    npromise = len(promise)
    ncols = len(cols)
    counts = [int(v.sum()) for v in cols]

    if objective == "average":
        best = max(range(ncols), key=lambda j: (counts[j], -j))
        q_exact = Fraction(counts[best], npromise)
        # cross-check through the LP route: one normalization constraint
        A = np.ones((1, ncols))
        lp = simplex.solve_lp([cnt / npromise for cnt in counts], A, [1.0], basis=[0])
        if lp.status != "optimal" or abs(lp.objective - float(q_exact)) > 1e-9:
            raise simplex.SimplexError(
                f"average-objective LP disagrees with direct maximum: "
                f"{lp.status} {lp.objective} vs {float(q_exact)}"
            )
        certified = False
        if rational_check:
            cert = simplex.certify_basis(
                [Fraction(cnt, npromise) for cnt in counts],
                [[1] * ncols],
                [1],
                [best],
            )
            if not (cert.feasible and cert.optimal and cert.objective == q_exact):
                raise simplex.SimplexError("rational certification failed")
            certified = True
        return ClickOptimum(
            objective=objective,
            q=float(q_exact),
            distribution=LhvDistribution({reps[best]: Fraction(1)}),
            column_count=ncols,
            promise_size=npromise,
            exact_q=q_exact if rational_check else None,
            certified=certified,
        )

    # worst_case: variables [nu (ncols), q, slack (npromise)]
    # rows: sum_j A[X,j] nu_j - q - s_X = 0 for each X;  sum_j nu_j = 1
    nvars = ncols + 1 + npromise
    A = np.zeros((npromise + 1, nvars))
    for j, v in enumerate(cols):
        A[:npromise, j] = v
    A[:npromise, ncols] = -1.0
    for i in range(npromise):
        A[i, ncols + 1 + i] = -1.0
    A[npromise, :ncols] = 1.0
    b = np.zeros(npromise + 1)
    b[npromise] = 1.0
    c = np.zeros(nvars)
    c[ncols] = 1.0
    zero_col = next(j for j in range(ncols) if counts[j] == 0)
    start_basis = [ncols + 1 + i for i in range(npromise)] + [zero_col]
    lp = simplex.solve_lp(c, A, b, basis=start_basis)
    if lp.status != "optimal":
        raise simplex.SimplexError(f"worst-case LP ended with status {lp.status}")
    weights: dict[DeterministicLhv, Fraction] = {}
    exact_q: Fraction | None = None
    certified = False
    if rational_check:
        A_exact = [[0] * nvars for _ in range(npromise + 1)]
        for j, v in enumerate(cols):
            for i in range(npromise):
                A_exact[i][j] = int(v[i])
        for i in range(npromise):
            A_exact[i][ncols] = -1
            A_exact[i][ncols + 1 + i] = -1
        for j in range(ncols):
            A_exact[npromise][j] = 1
        b_exact = [0] * npromise + [1]
        c_exact = [0] * nvars
        c_exact[ncols] = 1
        cert = simplex.certify_basis(c_exact, A_exact, b_exact, lp.basis)
        if not (cert.feasible and cert.optimal):
            raise simplex.SimplexError("rational certification of worst-case basis failed")
        exact_q = cert.objective
        certified = True
        for var, value in cert.x.items():
            if var < ncols and value > 0:
                weights[reps[var]] = value
    if not weights:
        for j in range(ncols):
            if lp.x[j] > 1e-12:
                weights[reps[j]] = Fraction(lp.x[j]).limit_denominator(10**12)
    q = float(exact_q) if exact_q is not None else lp.objective
    return ClickOptimum(
        objective=objective,
        q=q,
        distribution=LhvDistribution(weights),
        column_count=ncols,
        promise_size=npromise,
        exact_q=exact_q,
        certified=certified,
    )


def exact_eta_star(
    problem: CorrelationProblem,
    objective: str = "average",
    **kwargs,
) -> float:
    """The exact threshold efficiency q*^(1/n) for the chosen click objective."""
    result = max_click_probability(problem, objective=objective, **kwargs)
    return result.q ** (1.0 / problem.n)


def verify_certificate(
    problem: CorrelationProblem,
    optimum: ClickOptimum,
    tol: float = 1e-9,
    limit: int = DEFAULT_SCAN_LIMIT,
) -> bool:
    """Re-evaluate a returned optimum from scratch, trusting nothing from the solver.

    Checks that the distribution is a genuine distribution, that its support
    is error-free, and that it attains the reported objective value over the
    enumerated promise.
    """
    dist = optimum.distribution
    if any(w < -Fraction(1, 10**12) for w in dist.weights.values()):
        return False
    if abs(float(dist.total()) - 1.0) > tol:
        return False
    if optimum.promise_size == 0:
        return True
    for strategy in dist.weights:
        if not is_error_free(problem, strategy, limit=limit):
            return False
    promise = sorted(enumerate_promise(problem, limit=limit))
    click = [float(dist.click_probability(x)) for x in promise]
    if optimum.objective == "average":
        attained = sum(click) / len(click)
    else:
        attained = min(click)
    return abs(attained - optimum.q) <= tol
