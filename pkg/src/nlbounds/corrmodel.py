"""Data model for (n, k, d) correlation problems with an input promise.

A correlation problem is a family of conditional output distributions
P(a | X), one per joint input X inside a promise set D.  Problems are either
extensional (an explicit probability table) or intensional (a registered
generator id plus parameters, so large instances never get tabulated).

All admissibility questions are support questions: P(a | X) > 0 must be
decided exactly, so generators are required to return exact zeros for
impossible outcomes instead of relying on floating-point cancellation.
"""

from __future__ import annotations

import itertools
import json
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field

NORMALIZATION_TOL = 1e-12
DEFAULT_SCAN_LIMIT = 2**24

PROBLEM_SCHEMA_VERSION = 1

InputVector = tuple[int, ...]
OutputVector = tuple[int, ...]


class ProblemError(Exception):
    """Base class for correlation-problem errors."""


class PromiseViolation(ProblemError):
    """A probability or admissibility query for an input outside the promise."""


class ProblemFormatError(ProblemError):
    """A problem file that does not conform to the schema."""


class BudgetError(RuntimeError):
    """Base class for 'would exceed the configured budget' failures."""


class EnumerationLimitError(BudgetError):
    """Promise enumeration would exceed the configured scan limit."""


@dataclass(frozen=True)
class PromiseSet:
    """Membership predicate over {0..k-1}^n, with optional exact size and enumerator.

    The predicate must be total; ``size`` and ``enumerator`` are optional
    accelerators and must agree with the predicate when present.
    """

    contains: Callable[[InputVector], bool]
    size: int | None = None
    enumerator: Callable[[], Iterator[InputVector]] | None = None

    def __contains__(self, x: Sequence[int]) -> bool:
        return self.contains(tuple(x))


@dataclass(frozen=True)
class CorrelationProblem:
    """An (n, k, d) correlation problem restricted to its promise set.

    ``prob_fn`` is only defined on promise members; `probability` enforces
    that.  ``generator`` identifies intensional problems for serialization;
    ``table`` holds the explicit rows of extensional ones.
    """

    n: int
    k: int
    d: int
    promise: PromiseSet
    prob_fn: Callable[[InputVector, OutputVector], float]
    generator: tuple[str, dict] | None = None
    table: dict[InputVector, tuple[float, ...]] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.n < 1 or self.k < 1 or self.d < 1:
            raise ProblemError(f"invalid dimensions n={self.n} k={self.k} d={self.d}")

    def probability(self, x: Sequence[int], a: Sequence[int]) -> float:
        x = tuple(x)
        a = tuple(a)
        if len(x) != self.n or any(not 0 <= v < self.k for v in x):
            raise ProblemError(f"input vector {x} outside {{0..{self.k - 1}}}^{self.n}")
        if len(a) != self.n or any(not 0 <= v < self.d for v in a):
            raise ProblemError(f"output vector {a} outside {{0..{self.d - 1}}}^{self.n}")
        if x not in self.promise:
            raise PromiseViolation(f"input {x} is outside the promise")
        return self.prob_fn(x, a)


def output_index(a: Sequence[int], d: int) -> int:
    """Lexicographic rank of an output vector (first party most significant)."""
    idx = 0
    for v in a:
        idx = idx * d + v
    return idx


def output_vector(idx: int, n: int, d: int) -> OutputVector:
    out = [0] * n
    for i in range(n - 1, -1, -1):
        idx, out[i] = divmod(idx, d)
    return tuple(out)


def admissible(problem: CorrelationProblem, x: Sequence[int], a: Sequence[int]) -> bool:
    """True iff output ``a`` has strictly positive probability on promise input ``x``.

    Raises PromiseViolation for inputs outside the promise; that is a
    different condition from "inadmissible".
    """
    return problem.probability(x, a) > 0.0


def enumerate_promise(
    problem: CorrelationProblem, limit: int = DEFAULT_SCAN_LIMIT
) -> Iterator[InputVector]:
    """Yield every promise member exactly once, in lexicographic order.

    Uses the promise's own enumerator when available; otherwise scans the
    full input space, which is refused above ``limit`` total vectors.
    """
    if problem.promise.enumerator is not None:
        yield from problem.promise.enumerator()
        return
    total = problem.k**problem.n
    if total > limit:
        raise EnumerationLimitError(
            f"promise of {problem.k}^{problem.n} = {total} inputs has no enumerator "
            f"and exceeds the scan limit {limit}"
        )
    for x in itertools.product(range(problem.k), repeat=problem.n):
        if x in problem.promise:
            yield x


def promise_size(problem: CorrelationProblem, limit: int = DEFAULT_SCAN_LIMIT) -> int:
    if problem.promise.size is not None:
        return problem.promise.size
    return sum(1 for _ in enumerate_promise(problem, limit=limit))


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    promise_size: int
    max_residual: float
    failures: tuple[tuple[InputVector, float], ...]
    support_min: int
    support_max: int

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (
            f"{status}: {self.promise_size} promise points, "
            f"max normalization residual {self.max_residual:.3e}, "
            f"support sizes {self.support_min}..{self.support_max}"
        )


def validate_problem(
    problem: CorrelationProblem, limit: int = DEFAULT_SCAN_LIMIT
) -> ValidationReport:
    """Check normalization and ranges over the whole promise; never raises on bad data."""
    count = 0
    max_residual = 0.0
    failures: list[tuple[InputVector, float]] = []
    support_min = problem.d**problem.n
    support_max = 0
    for x in enumerate_promise(problem, limit=limit):
        count += 1
        total = 0.0
        support = 0
        for a in itertools.product(range(problem.d), repeat=problem.n):
            p = problem.prob_fn(x, a)
            total += p
            if p > 0.0:
                support += 1
            if p < 0.0 or p > 1.0:
                failures.append((x, p))
        residual = abs(total - 1.0)
        max_residual = max(max_residual, residual)
        if residual > NORMALIZATION_TOL:
            failures.append((x, residual))
        support_min = min(support_min, support)
        support_max = max(support_max, support)
    if count == 0:
        support_min = 0
    declared = problem.promise.size
    if declared is not None and declared != count:
        failures.append(((), float(declared - count)))
    return ValidationReport(
        passed=not failures,
        promise_size=count,
        max_residual=max_residual,
        failures=tuple(failures[:16]),
        support_min=support_min,
        support_max=support_max,
    )


# --- intensional problems: generator registry -------------------------------

_GENERATORS: dict[str, Callable[[dict], CorrelationProblem]] = {}


def register_generator(gid: str, factory: Callable[[dict], CorrelationProblem]) -> None:
    _GENERATORS[gid] = factory


def build_generated(gid: str, params: dict) -> CorrelationProblem:
    if gid not in _GENERATORS:
        raise ProblemFormatError(f"unknown problem generator {gid!r}")
    return _GENERATORS[gid](params)


# --- extensional problems ----------------------------------------------------


def table_problem(
    n: int,
    k: int,
    d: int,
    rows: dict[InputVector, Sequence[float]],
) -> CorrelationProblem:
    """Build an extensional problem whose promise is exactly the table's row set."""
    table: dict[InputVector, tuple[float, ...]] = {}
    for x, ps in rows.items():
        x = tuple(int(v) for v in x)
        if len(x) != n or any(not 0 <= v < k for v in x):
            raise ProblemError(f"table row input {x} out of range")
        ps = tuple(float(p) for p in ps)
        if len(ps) != d**n:
            raise ProblemError(
                f"table row for {x} has {len(ps)} entries, expected d^n = {d**n}"
            )
        table[x] = ps
    members = sorted(table)

    def prob_fn(x: InputVector, a: OutputVector) -> float:
        return table[x][output_index(a, d)]

    promise = PromiseSet(
        contains=table.__contains__,
        size=len(members),
        enumerator=lambda: iter(members),
    )
    return CorrelationProblem(n=n, k=k, d=d, promise=promise, prob_fn=prob_fn, table=table)


# --- problem files -----------------------------------------------------------


def save_problem(problem: CorrelationProblem, path: str) -> None:
    """Write a problem file; intensional problems round-trip via their generator id."""
    doc: dict = {
        "schema_version": PROBLEM_SCHEMA_VERSION,
        "n": problem.n,
        "k": problem.k,
        "d": problem.d,
    }
    if problem.generator is not None:
        gid, params = problem.generator
        doc["promise"] = {"type": "generator", "id": gid, "params": params}
        doc["prob"] = {"type": "generator", "id": gid, "params": params}
    elif problem.table is not None:
        members = sorted(problem.table)
        doc["promise"] = {
            "type": "explicit",
            "members": [list(x) for x in members],
        }
        doc["prob"] = {
            "type": "table",
            "rows": [{"x": list(x), "p": list(problem.table[x])} for x in members],
        }
    else:
        raise ProblemError(
            "problem is neither generated nor tabulated; materialize it first"
        )
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ProblemFormatError(msg)


def load_problem(path: str) -> CorrelationProblem:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemFormatError(f"not valid JSON: {exc}") from exc
    _require(isinstance(doc, dict), "top-level document must be an object")
    for key in ("n", "k", "d", "promise", "prob"):
        _require(key in doc, f"missing required field {key!r}")
    n, k, d = doc["n"], doc["k"], doc["d"]
    _require(
        all(isinstance(v, int) and v >= 1 for v in (n, k, d)),
        "n, k, d must be positive integers",
    )
    prob = doc["prob"]
    promise = doc["promise"]
    _require(isinstance(prob, dict) and "type" in prob, "prob must be a typed object")
    _require(isinstance(promise, dict) and "type" in promise, "promise must be a typed object")

    if prob["type"] == "generator":
        _require(
            promise["type"] == "generator",
            "generator-backed prob requires a generator-backed promise",
        )
        _require(promise.get("id") == prob.get("id"), "promise/prob generator ids differ")
        problem = build_generated(prob["id"], dict(prob.get("params", {})))
        _require(
            (problem.n, problem.k, problem.d) == (n, k, d),
            f"declared (n,k,d)=({n},{k},{d}) but generator produced "
            f"({problem.n},{problem.k},{problem.d})",
        )
        return problem

    _require(prob["type"] == "table", f"unknown prob type {prob['type']!r}")
    _require(promise["type"] == "explicit", "table-backed prob requires an explicit promise")
    members = promise.get("members")
    _require(isinstance(members, list), "explicit promise needs a members list")
    member_set = set()
    for m in members:
        _require(
            isinstance(m, list) and len(m) == n and all(isinstance(v, int) for v in m),
            f"promise member {m!r} is not a length-{n} integer vector",
        )
        _require(all(0 <= v < k for v in m), f"promise member {m} has a symbol outside 0..{k - 1}")
        member_set.add(tuple(m))
    _require(len(member_set) == len(members), "duplicate promise members")
    if "size" in promise:
        _require(promise["size"] == len(member_set), "declared promise size is inconsistent")

    rows = prob.get("rows")
    _require(isinstance(rows, list), "table prob needs a rows list")
    table: dict[InputVector, list[float]] = {}
    for row in rows:
        _require(isinstance(row, dict) and "x" in row and "p" in row, "bad table row")
        x = tuple(row["x"])
        _require(x in member_set, f"table row input {x} is not a promise member")
        ps = row["p"]
        _require(
            isinstance(ps, list) and len(ps) == d**n,
            f"row for {x} must list d^n = {d**n} probabilities (is d declared correctly?)",
        )
        for p in ps:
            _require(isinstance(p, (int, float)) and 0.0 <= p <= 1.0, f"probability {p!r} outside [0,1]")
        _require(x not in table, f"duplicate table row for {x}")
        table[x] = [float(p) for p in ps]
    _require(set(table) == member_set, "table rows do not cover the promise exactly")
    return table_problem(n, k, d, table)


def materialize(problem: CorrelationProblem, limit: int = DEFAULT_SCAN_LIMIT) -> CorrelationProblem:
    """Expand any problem into an equivalent extensional table problem."""
    rows = {}
    for x in enumerate_promise(problem, limit=limit):
        rows[x] = [
            problem.prob_fn(x, a)
            for a in itertools.product(range(problem.d), repeat=problem.n)
        ]
    return table_problem(problem.n, problem.k, problem.d, rows)
