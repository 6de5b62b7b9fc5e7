"""Closed-form threshold-efficiency and communication bounds.

For an (n, k, d) correlation problem with promise D and largest
monochromatic overlap r, an error-free local model needs detector
efficiency eta <= d * (r/|D|)^(1/n), and reproducing the correlations over
a broadcast channel with shared randomness needs at least
log2(|D| / (d^n r)) bits.  For the GHZ parity problem both are evaluated in
log2 space from the analytic overlap bound, under two promise-counting
conventions:

  mode="paper":  |D| = 2^((n-1)l), the published convention (the last input
                 coordinate is counted as fully determined);
  mode="exact":  |D| = 2^((n-1)l + 1), the exact enumeration count (the last
                 coordinate is only fixed modulo 2^(l-1)).

The exact mode tightens eta by 2^(-1/n) and adds one bit of communication.
Integer bit counts are reported both as floor(real) -- the convention behind
the published worked values -- and as ceil(real), the strongest integer
bound the real value implies.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from .ghz import default_bits
from .rectangles import log2_analytic_r_bound

MODES = ("paper", "exact")
_EPS = 1e-9


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def eta_upper_bound(n: int, d: int, r: float, d_size: float) -> float:
    """min(1, d * (r / |D|)^(1/n)): no error-free local model above this efficiency."""
    if n < 1 or d < 1:
        raise ValueError(f"invalid n={n}, d={d}")
    if not r > 0:
        raise ValueError(f"need r > 0, got {r}")
    if not d_size > 0:
        raise ValueError(f"need |D| > 0, got {d_size}")
    return min(1.0, d * (r / d_size) ** (1.0 / n))


def comm_lower_bound_real(n: int, d: int, r: float, d_size: float) -> float:
    """log2(|D| / (d^n r)) as a real; may be negative when the bound is vacuous."""
    if n < 1 or d < 1:
        raise ValueError(f"invalid n={n}, d={d}")
    if not r > 0:
        raise ValueError(f"need r > 0, got {r}")
    if not d_size > 0:
        raise ValueError(f"need |D| > 0, got {d_size}")
    return math.log2(d_size) - n * math.log2(d) - math.log2(r)


def comm_lower_bound(n: int, d: int, r: float, d_size: float) -> int:
    """The strongest integer bit count implied by the real bound, clamped at 0."""
    return max(0, math.ceil(comm_lower_bound_real(n, d, r, d_size) - _EPS))


def middle_expression(n: int, l: int) -> float:
    """2 * 2^(l/n) * (1/n - 2/(n 2^l) + 1/2^l), the uncapped efficiency bound."""
    if n < 2 or l < 1:
        raise ValueError(f"need n >= 2 and l >= 1, got n={n}, l={l}")
    k = 2.0**l
    return 2.0 * 2.0 ** (l / n) * (1.0 / n - 2.0 / (n * k) + 1.0 / k)


@dataclass(frozen=True)
class BoundReport:
    """Efficiency and communication bounds for one (n, l) parity instance."""

    n: int
    l: int
    d: int
    mode: str
    log2_promise_size: int
    log2_overlap_bound: float
    eta_upper_raw: float
    eta_upper: float
    vacuous: bool
    rpub_lower_real: float
    rpub_lower_bits_floor: int
    rpub_lower_bits_ceil: int


def _log2_promise(n: int, l: int, mode: str) -> int:
    return (n - 1) * l + (0 if mode == "paper" else 1)


def _raw_values(n: int, l: int, mode: str) -> tuple[float, float]:
    log2_r = log2_analytic_r_bound(n, l)
    log2_dsize = _log2_promise(n, l, mode)
    eta_raw = 2.0 * 2.0 ** ((log2_r - log2_dsize) / n)
    rpub_real = log2_dsize - n - log2_r  # d = 2, so n*log2(d) = n
    return eta_raw, rpub_real


def ghz_bounds(n: int, l: int, mode: str = "paper") -> BoundReport:
    """Bounds for the parity problem at a fixed l, computed in log2 space."""
    _check_mode(mode)
    if n < 2 or l < 1:
        raise ValueError(f"need n >= 2 and l >= 1, got n={n}, l={l}")
    eta_raw, rpub_real = _raw_values(n, l, mode)
    return BoundReport(
        n=n,
        l=l,
        d=2,
        mode=mode,
        log2_promise_size=_log2_promise(n, l, mode),
        log2_overlap_bound=log2_analytic_r_bound(n, l),
        eta_upper_raw=eta_raw,
        eta_upper=min(1.0, eta_raw),
        vacuous=eta_raw >= 1.0,
        rpub_lower_real=rpub_real,
        rpub_lower_bits_floor=max(0, math.floor(rpub_real + _EPS)),
        rpub_lower_bits_ceil=max(0, math.ceil(rpub_real - _EPS)),
    )


@dataclass(frozen=True)
class OptimizedBounds:
    """Independently optimized bounds: eta minimized over l, communication maximized."""

    n: int
    mode: str
    eta: BoundReport  # at the l minimizing the efficiency bound
    rpub: BoundReport  # at the l maximizing the communication bound


def default_l_range(n: int) -> range:
    return range(1, default_bits(n) + 5)


def ghz_bounds_optimized(
    n: int, mode: str = "paper", l_range: Iterable[int] | None = None
) -> OptimizedBounds:
    """Scan l over a finite range; the bounds are cheap closed forms, so no
    continuous relaxation is used.  Ties resolve toward smaller l."""
    _check_mode(mode)
    ls = list(l_range) if l_range is not None else list(default_l_range(n))
    if not ls:
        raise ValueError("l_range must be nonempty")
    best_eta_l = best_rpub_l = None
    best_eta = math.inf
    best_rpub = -math.inf
    for l in ls:
        eta_raw, rpub_real = _raw_values(n, l, mode)
        if eta_raw < best_eta:
            best_eta = eta_raw
            best_eta_l = l
        if rpub_real > best_rpub:
            best_rpub = rpub_real
            best_rpub_l = l
    return OptimizedBounds(
        n=n,
        mode=mode,
        eta=ghz_bounds(n, best_eta_l, mode),
        rpub=ghz_bounds(n, best_rpub_l, mode),
    )


def asymptotic_scaling_check(n: int) -> bool:
    """With l chosen so log2(n) <= l < log2(n)+1, the efficiency bound is at
    most 8/n, and the optimized communication bound is at least n(log2(n) - 3)."""
    if n < 3:
        raise ValueError("the 8/n form needs n >= 3")
    report = ghz_bounds(n, default_bits(n), mode="paper")
    if report.eta_upper_raw > 8.0 / n + 1e-12:
        return False
    opt = ghz_bounds_optimized(n, mode="paper")
    return opt.rpub.rpub_lower_real >= n * (math.log2(n) - 3.0) - 1e-9


SWEEP_COLUMNS = ("n", "l_eta", "eta_upper", "l_rpub", "rpub_lower_real", "rpub_lower_bits", "mode")


def sweep(n_values: Sequence[int], mode: str = "paper") -> list[OptimizedBounds]:
    return [ghz_bounds_optimized(n, mode=mode) for n in sorted(n_values)]


def write_sweep_csv(rows: Iterable[OptimizedBounds], fh) -> None:
    """Emit one optimized row per n; floats carry 17 significant digits."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row.n,
                row.eta.l,
                format(row.eta.eta_upper, ".17g"),
                row.rpub.l,
                format(row.rpub.rpub_lower_real, ".17g"),
                row.rpub.rpub_lower_bits_floor,
                row.mode,
            ]
        )
