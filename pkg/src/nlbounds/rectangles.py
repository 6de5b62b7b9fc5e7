"""Monochromatic-rectangle machinery over correlation problems.

A rectangle is a product R_1 x ... x R_n of per-party input subsets (bitsets
over 0..k-1).  It is a-monochromatic when every promise input inside it
admits output a.  The key quantity is the largest promise overlap any
monochromatic rectangle can have; `max_monochromatic_overlap` computes it
exactly by branch and bound (never heuristically), and `analytic_r_bound`
gives the closed-form ((2^l - 2)/n + 1)^n ceiling for the parity problem.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass

from . import ghz as ghz_mod
from .corrmodel import BudgetError, CorrelationProblem, DEFAULT_SCAN_LIMIT, enumerate_promise
from .lhv import DeterministicLhv

DEFAULT_MAX_NODES = 2_000_000
MAX_SEARCH_ALPHABET = 16


class SearchBudgetError(BudgetError):
    """The exact search would exceed its node budget; no heuristic value is returned."""


@dataclass(frozen=True)
class Rectangle:
    """Per-party input subsets stored as bitmasks (bit v of masks[i] <=> v in R_i).

    Sizes use Python integers, so the product |R| = prod |R_i| cannot
    silently overflow.
    """

    masks: tuple[int, ...]
    k: int

    def __post_init__(self) -> None:
        if any(m < 0 or m >> self.k for m in self.masks):
            raise ValueError(f"mask out of range for k={self.k}")

    @classmethod
    def from_lists(cls, sets: Sequence[Sequence[int]], k: int) -> Rectangle:
        masks = []
        for vals in sets:
            m = 0
            for v in vals:
                if not 0 <= v < k:
                    raise ValueError(f"value {v} outside 0..{k - 1}")
                m |= 1 << v
            masks.append(m)
        return cls(tuple(masks), k)

    def to_lists(self) -> list[list[int]]:
        return [[v for v in range(self.k) if m >> v & 1] for m in self.masks]

    def size(self) -> int:
        return math.prod(m.bit_count() for m in self.masks)

    def contains(self, x: Sequence[int]) -> bool:
        return all(m >> v & 1 for m, v in zip(self.masks, x))

    def iter_points(self):
        yield from itertools.product(*self.to_lists())


def full_rectangle(n: int, k: int) -> Rectangle:
    return Rectangle(((1 << k) - 1,) * n, k)


def promise_points(
    problem: CorrelationProblem, rect: Rectangle, limit: int = DEFAULT_SCAN_LIMIT
):
    """Iterate the promise inputs inside a rectangle."""
    if rect.size() > limit:
        raise SearchBudgetError(f"rectangle has {rect.size()} points, limit {limit}")
    for x in rect.iter_points():
        if x in problem.promise:
            yield x


def is_monochromatic(
    problem: CorrelationProblem,
    rect: Rectangle,
    a: Sequence[int],
    limit: int = DEFAULT_SCAN_LIMIT,
) -> bool:
    """True iff every promise input in the rectangle admits output ``a``.

    Vacuously true when the rectangle misses the promise entirely.
    """
    a = tuple(a)
    return all(problem.probability(x, a) > 0.0 for x in promise_points(problem, rect, limit))


def b_monochromatic(
    problem: CorrelationProblem,
    rect: Rectangle,
    b: int,
    limit: int = DEFAULT_SCAN_LIMIT,
) -> bool:
    """Parity-class monochromaticity for the GHZ parity problem.

    Any a-monochromatic set is automatically (sum a mod 2)-monochromatic,
    so for these problems the two-label classification is exhaustive.
    """
    params = ghz_mod.params_of_problem(problem)
    if params is None:
        raise ValueError("b-monochromaticity is defined for ghz-generated problems only")
    return all(
        ghz_mod.parity_target(params, x) == b for x in promise_points(problem, rect, limit)
    )


@dataclass(frozen=True)
class OverlapResult:
    overlap: int
    witness: Rectangle
    label: tuple[str, object] | None  # ("b", bit) or ("a", output vector)
    nodes: int


class _Search:
    """Exact branch and bound for the largest single-label promise overlap.

    Party by party, candidate subsets are restricted to values that actually
    occur among the allowed points (dropping others never shrinks the
    overlap and never hurts feasibility), the last party's subset is closed
    off directly, and branches whose remaining allowed count cannot beat the
    incumbent are pruned.  Shrinking a subset never breaks monochromaticity,
    which is what makes the count bound sound.
    """

    def __init__(self, n: int, k: int, max_nodes: int):
        self.n = n
        self.k = k
        self.max_nodes = max_nodes
        self.nodes = 0
        self.best = 0
        self.best_masks: tuple[int, ...] | None = None

    def _tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.max_nodes:
            raise SearchBudgetError(
                f"rectangle search exceeded {self.max_nodes} nodes; "
                "raise rect.max_nodes for an exact answer"
            )

    def run(self, allowed: list[tuple[int, ...]], forbidden: list[tuple[int, ...]]) -> None:
        if len(allowed) > self.best:
            self._descend(0, (), allowed, forbidden)

    def _descend(
        self,
        party: int,
        prefix: tuple[int, ...],
        allowed: list[tuple[int, ...]],
        forbidden: list[tuple[int, ...]],
    ) -> None:
        if party == self.n - 1:
            self._tick()
            bad = 0
            for f in forbidden:
                bad |= 1 << f[party]
            mask = 0
            count = 0
            for s in allowed:
                if not bad >> s[party] & 1:
                    mask |= 1 << s[party]
                    count += 1
            if count > self.best:
                self.best = count
                self.best_masks = prefix + (mask,)
            return
        useful = sorted({s[party] for s in allowed})
        full = 0
        for v in useful:
            full |= 1 << v
        for mask in range(1, 1 << self.k):
            if mask & ~full:
                continue
            self._tick()
            sub_allowed = [s for s in allowed if mask >> s[party] & 1]
            if len(sub_allowed) <= self.best:
                continue
            sub_forbidden = [f for f in forbidden if mask >> f[party] & 1]
            self._descend(party + 1, prefix + (mask,), sub_allowed, sub_forbidden)


def max_monochromatic_overlap(
    problem: CorrelationProblem,
    max_nodes: int = DEFAULT_MAX_NODES,
    limit: int = DEFAULT_SCAN_LIMIT,
) -> OverlapResult:
    """Exact largest promise overlap over all monochromatic rectangles.

    For ghz-generated problems the label space is the two parity classes
    (admissibility depends on the output only through its parity); generic
    problems are searched per output vector.  Ties are resolved toward the
    earliest rectangle in ascending bitmask order, so results are
    reproducible.  Raises SearchBudgetError rather than ever returning an
    approximate overlap.
    """
    if problem.k > MAX_SEARCH_ALPHABET:
        raise SearchBudgetError(
            f"exact search supports k <= {MAX_SEARCH_ALPHABET}, got k={problem.k}"
        )
    promise = list(enumerate_promise(problem, limit=limit))
    if not promise:
        return OverlapResult(0, full_rectangle(problem.n, problem.k), None, 0)

    params = ghz_mod.params_of_problem(problem)
    labels: list[tuple[tuple[str, object], list[tuple[int, ...]]]] = []
    if params is not None:
        for b in (0, 1):
            pts = [x for x in promise if ghz_mod.parity_target(params, x) == b]
            labels.append((("b", b), pts))
    else:
        for a in itertools.product(range(problem.d), repeat=problem.n):
            pts = [x for x in promise if problem.prob_fn(x, a) > 0.0]
            labels.append((("a", a), pts))

    search = _Search(problem.n, problem.k, max_nodes)
    promise_set = set(promise)
    best_label = None
    best_overlap = 0
    best_masks = None
    for label, pts in labels:
        forbidden = [x for x in promise_set.difference(pts)]
        forbidden.sort()
        search.best = best_overlap  # strict-improvement pruning carries across labels
        search.best_masks = None
        search.run(pts, forbidden)
        if search.best_masks is not None and search.best > best_overlap:
            best_overlap = search.best
            best_masks = search.best_masks
            best_label = label
    if best_masks is None:
        # every label class is empty on the promise: impossible for normalized
        # problems, but keep the degenerate answer well-defined
        return OverlapResult(0, full_rectangle(problem.n, problem.k), None, search.nodes)
    return OverlapResult(best_overlap, Rectangle(best_masks, problem.k), best_label, search.nodes)


def analytic_r_bound(n: int, l: int) -> float:
    """Closed-form ceiling ((2^l - 2)/n + 1)^n on parity-class overlaps."""
    if n < 1 or l < 1:
        raise ValueError("need n >= 1 and l >= 1")
    return ((2**l - 2) / n + 1.0) ** n


def analytic_r_bound_floor(n: int, l: int) -> int:
    """floor of the closed-form bound, computed in exact integer arithmetic."""
    if n < 1 or l < 1:
        raise ValueError("need n >= 1 and l >= 1")
    return (2**l - 2 + n) ** n // n**n


def log2_analytic_r_bound(n: int, l: int) -> float:
    """log2 of the closed-form bound; safe where the plain value overflows."""
    if n < 1 or l < 1:
        raise ValueError("need n >= 1 and l >= 1")
    return n * math.log2((2**l - 2) / n + 1.0)


def cover_lower_bound(d_size: int, r: float | int) -> int:
    """ceil(|D| / r): no fewer monochromatic rectangles can cover the promise."""
    if d_size < 0:
        raise ValueError("promise size cannot be negative")
    if d_size == 0:
        return 0
    if r <= 0:
        raise ValueError(f"r={r} is inconsistent with a nonempty promise")
    if isinstance(r, int):
        return -(-d_size // r)
    return math.ceil(d_size / r)


def rectangle_of_strategy(strategy: DeterministicLhv, a: Sequence[int]) -> Rectangle:
    """The preimage rectangle of inputs on which the strategy outputs exactly ``a``."""
    a = tuple(a)
    if len(a) != strategy.n or any(not 0 <= v < strategy.d for v in a):
        raise ValueError(f"output {a} outside {{0..{strategy.d - 1}}}^{strategy.n}")
    masks = []
    for table, target in zip(strategy.tables, a):
        m = 0
        for x, out in enumerate(table):
            if out == target:
                m |= 1 << x
        masks.append(m)
    return Rectangle(tuple(masks), strategy.k)
