"""Rectangle-balance verification, exhaustive and sampled.

The balance property quantifies over all color sets A of size M/D and all
S x S rectangles; for a fixed rectangle the worst A is the M/D most
frequent colors, so each rectangle needs one histogram and a top-k sum
(the dominant-subset check) instead of a C(M, M/D) enumeration.  Checking
rectangles of side exactly S suffices: a larger rectangle's color fraction
is the average of its S x S sub-rectangles' fractions.

Exhaustive mode walks every S-subset pair in lexicographic order with
stack-incremental histograms (entering/leaving a row or column updates
per-column counts in O(S) work).  Sampled mode draws seeded random
rectangles (rows and columns by partial Fisher-Yates, sample j from
streams 2j and 2j+1 of the verification seed) and is vectorized over the
table's cell array; it is a Monte-Carlo relaxation with no certificate.

Reports are reproducible: the witness is the first violating rectangle in
enumeration/sample order and the worst ratio is a max over checked
rectangles, both independent of the worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from .core import InvalidParams, TableParams, TooLarge
from .mixing import GAMMA, MASK64, partial_shuffle_batch, scramble_np
from .tables import BalancedTable, keyed_colors_grid

DEFAULT_ENUM_CAP = 10**8


@dataclass(frozen=True)
class Rectangle:
    rows: tuple[int, ...]
    cols: tuple[int, ...]


@dataclass(frozen=True)
class ColorSet:
    colors: tuple[int, ...]


@dataclass(frozen=True)
class VerificationReport:
    mode: str                      # "exhaustive" or "sampled"
    samples: int | None
    passed: bool
    rectangles_checked: int
    worst_ratio: Fraction
    witness: tuple[Rectangle, ColorSet] | None
    check_s_exp: int
    check_d_exp: int
    prefix_mode: bool
    table_params: TableParams
    table_digest: str

    def to_json_dict(self) -> dict:
        w = None
        if self.witness is not None:
            rect, colors = self.witness
            w = {
                "rows": list(rect.rows),
                "cols": list(rect.cols),
                "colors": list(colors.colors),
            }
        d = {
            "mode": self.mode,
            "passed": self.passed,
            "rectangles_checked": self.rectangles_checked,
            "worst_ratio": {
                "num": self.worst_ratio.numerator,
                "den": self.worst_ratio.denominator,
            },
            "witness": w,
            "params": {
                "n_exp": self.table_params.n_exp,
                "m_exp": self.table_params.m_exp,
                "s_exp": self.check_s_exp,
                "d_exp": self.check_d_exp,
            },
            "prefix_mode": self.prefix_mode,
            "table_digest": self.table_digest,
        }
        if self.samples is not None:
            d["samples"] = self.samples
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# Per-rectangle checks
# ---------------------------------------------------------------------------


def _dominant_check(hist, m_colors, kdom, d_div, area):
    """(ratio, offending colorset or None) for the dominant-subset rule."""
    order = sorted(range(m_colors), key=lambda c: (-hist[c], c))
    mass = sum(hist[c] for c in order[:kdom])
    ratio = Fraction(mass * d_div, 2 * area)
    if mass * d_div > 2 * area:
        return ratio, tuple(order[:kdom])
    return ratio, None


def _prefix_check(hist, m_exp, area):
    """Worst (ratio, bad colorset) over all prefix lengths 1..m_exp.

    Level l partitions colors by their top l bits; the count of any bucket
    must be <= 2 * area / 2^l.  Buckets are produced by pairwise folding
    from the full histogram.
    """
    worst = Fraction(0)
    bad = None
    level_hist = list(hist)
    size = len(level_hist)
    for level in range(m_exp, 0, -1):
        scale = 1 << level
        top = max(range(size), key=lambda v: (level_hist[v], -v))
        count = level_hist[top]
        ratio = Fraction(count * scale, 2 * area)
        if ratio > worst:
            worst = ratio
            if count * scale > 2 * area:
                width = m_exp - level
                bad = tuple(
                    c for c in range(top << width, (top + 1) << width) if hist[c] > 0
                )
        if size > 1:
            level_hist = [
                level_hist[2 * i] + level_hist[2 * i + 1] for i in range(size // 2)
            ]
            size //= 2
    return worst, bad


# ---------------------------------------------------------------------------
# Exhaustive enumeration
# ---------------------------------------------------------------------------


def _iter_exhaustive(cells, n_side, m_colors, s_rows, s_cols) -> Iterator[
    tuple[tuple[int, ...], tuple[int, ...], list[int]]
]:
    """Yield (rows, cols, histogram) for every rows x cols rectangle with
    |rows| = s_rows, |cols| = s_cols, in lexicographic order.

    Histograms are maintained incrementally: entering a row adds its colors
    to per-column counts, entering a column adds that column's counts to
    the rectangle histogram.
    """
    colhist = [[0] * n_side for _ in range(m_colors)]
    hist = [0] * m_colors
    rows_stack: list[int] = []
    cols_stack: list[int] = []

    def cols_rec(start: int):
        if len(cols_stack) == s_cols:
            yield tuple(rows_stack), tuple(cols_stack), hist
            return
        remaining = s_cols - len(cols_stack)
        for c in range(start, n_side - remaining + 1):
            cols_stack.append(c)
            for m in range(m_colors):
                hist[m] += colhist[m][c]
            yield from cols_rec(c + 1)
            for m in range(m_colors):
                hist[m] -= colhist[m][c]
            cols_stack.pop()

    def rows_rec(start: int):
        if len(rows_stack) == s_rows:
            yield from cols_rec(0)
            return
        remaining = s_rows - len(rows_stack)
        for r in range(start, n_side - remaining + 1):
            rows_stack.append(r)
            rowvals = cells[r]
            for c in range(n_side):
                colhist[rowvals[c]][c] += 1
            yield from rows_rec(r + 1)
            for c in range(n_side):
                colhist[rowvals[c]][c] -= 1
            rows_stack.pop()

    yield from rows_rec(0)


def _explicit_cells_lists(table: BalancedTable) -> list[list[int]]:
    if table.cells is None:
        raise TooLarge("exhaustive verification requires an explicit table")
    return table.cells.tolist()


def _check_enum_cap(n_side: int, s_side: int, enum_cap: int) -> int:
    count = math.comb(n_side, s_side) ** 2
    if count > enum_cap:
        raise TooLarge(f"{count} rectangles exceed the enumeration cap {enum_cap}")
    return count


def _run_exhaustive(
    table: BalancedTable,
    s_exp: int,
    check: Callable[[list[int], int], tuple[Fraction, tuple[int, ...] | None]],
    enum_cap: int,
    sides: tuple[int, int] | None = None,
):
    p = table.params
    n_side = p.n_side
    s_rows, s_cols = sides if sides is not None else (1 << s_exp, 1 << s_exp)
    if max(s_rows, s_cols) > n_side:
        raise InvalidParams("rectangle side exceeds N")
    if sides is None:
        _check_enum_cap(n_side, s_rows, enum_cap)
    cells = _explicit_cells_lists(table)
    area = s_rows * s_cols
    worst = Fraction(0)
    witness = None
    checked = 0
    for rows, cols, hist in _iter_exhaustive(cells, n_side, p.m_colors, s_rows, s_cols):
        checked += 1
        ratio, bad = check(hist, area)
        if ratio > worst:
            worst = ratio
        if bad is not None and witness is None:
            witness = (Rectangle(rows, cols), ColorSet(bad))
    return worst, witness, checked


def verify_exhaustive(
    table: BalancedTable,
    s_exp: int,
    d_exp: int,
    *,
    enum_cap: int = DEFAULT_ENUM_CAP,
    threads: int = 1,
) -> VerificationReport:
    """Check every S x S rectangle against the dominant-subset bound.

    ``threads`` is accepted for interface uniformity; enumeration order is
    fixed, so the report is identical for any value.
    """
    p = table.params
    if not 0 <= d_exp <= p.m_exp:
        raise InvalidParams("need 0 <= d_exp <= m_exp")
    kdom = 1 << (p.m_exp - d_exp)
    d_div = 1 << d_exp
    m_colors = p.m_colors

    def check(hist, area):
        return _dominant_check(hist, m_colors, kdom, d_div, area)

    worst, witness, checked = _run_exhaustive(table, s_exp, check, enum_cap)
    return VerificationReport(
        mode="exhaustive", samples=None, passed=witness is None,
        rectangles_checked=checked, worst_ratio=worst, witness=witness,
        check_s_exp=s_exp, check_d_exp=d_exp, prefix_mode=False,
        table_params=p, table_digest=table.digest(),
    )


def balance_holds(table: BalancedTable, s_exp: int, d_exp: int) -> bool:
    """Early-exit exhaustive pass/fail (used by the canonical search)."""
    p = table.params
    kdom = 1 << (p.m_exp - d_exp)
    d_div = 1 << d_exp
    s_side = 1 << s_exp
    area = s_side * s_side
    cells = _explicit_cells_lists(table)
    for _, _, hist in _iter_exhaustive(cells, p.n_side, p.m_colors, s_side, s_side):
        mass = sum(sorted(hist)[-kdom:])
        if mass * d_div > 2 * area:
            return False
    return True


def check_rectangle_sides(
    table: BalancedTable, side_rows: int, side_cols: int, d_exp: int
) -> bool:
    """Pass/fail over all rectangles of the given (possibly unequal) sides.

    Supports the averaging property tests: balance verified at side S
    should persist at any larger sides.
    """
    p = table.params
    kdom = 1 << (p.m_exp - d_exp)
    d_div = 1 << d_exp
    area = side_rows * side_cols
    cells = _explicit_cells_lists(table)
    for _, _, hist in _iter_exhaustive(
        cells, p.n_side, p.m_colors, side_rows, side_cols
    ):
        mass = sum(sorted(hist)[-kdom:])
        if mass * d_div > 2 * area:
            return False
    return True


# ---------------------------------------------------------------------------
# Sampled verification
# ---------------------------------------------------------------------------


def _sample_rect_indices(seed: int, start: int, count: int, n_side: int, s_side: int):
    """Row/col index arrays for samples start..start+count-1 (batched FY)."""
    j = np.arange(start, start + count, dtype=np.uint64)
    row_states = scramble_np(
        np.uint64(seed & MASK64) + (2 * j + 1) * np.uint64(GAMMA)
    )
    col_states = scramble_np(
        np.uint64(seed & MASK64) + (2 * j + 2) * np.uint64(GAMMA)
    )
    rows = partial_shuffle_batch(row_states, n_side, s_side)
    cols = partial_shuffle_batch(col_states, n_side, s_side)
    return rows, cols


def _rect_colors(table: BalancedTable, rows: np.ndarray, cols: np.ndarray):
    if table.cells is not None:
        return table.cells[np.ix_(rows, cols)]
    p = table.params
    if p.n_exp <= 64 and p.m_exp <= 64:
        return keyed_colors_grid(table.seed_or_key, p.n_exp, p.m_exp, rows, cols)
    return np.array(
        [[table.lookup(int(r), int(c)) for c in cols] for r in rows], dtype=object
    )


def _hist_of_grid(grid, m_colors: int):
    """Histogram as (counts ndarray over [M]) or (values, counts) for huge M."""
    if m_colors <= 1 << 20 and grid.dtype != object:
        return np.bincount(grid.ravel().astype(np.int64), minlength=m_colors), None
    values, counts = np.unique(np.asarray(grid).ravel(), return_counts=True)
    return counts, values


def _sampled_chunk(table, s_exp, d_exp, seed, start, count, prefix):
    p = table.params
    n_side = p.n_side
    s_side = 1 << s_exp
    area = s_side * s_side
    m_colors = p.m_colors
    kdom = 1 << (p.m_exp - d_exp)
    d_div = 1 << d_exp
    worst = Fraction(0)
    witness = None
    rows_all, cols_all = _sample_rect_indices(seed, start, count, n_side, s_side)
    for b in range(count):
        rows = rows_all[b]
        cols = cols_all[b]
        grid = _rect_colors(table, rows, cols)
        if prefix:
            counts, values = _hist_of_grid(grid, m_colors)
            if values is None:
                ratio, bad = _prefix_check(counts.tolist(), p.m_exp, area)
            else:
                hist_map = {int(v): int(c) for v, c in zip(values, counts)}
                ratio, bad = _prefix_check_sparse(hist_map, p.m_exp, area)
        else:
            counts, values = _hist_of_grid(grid, m_colors)
            if values is None:
                ratio, bad = _dominant_check(counts.tolist(), m_colors, kdom, d_div, area)
            else:
                ratio, bad = _dominant_check_sparse(
                    counts.tolist(), [int(v) for v in values], kdom, d_div, area
                )
        if ratio > worst:
            worst = ratio
        if bad is not None and witness is None:
            witness = (
                Rectangle(tuple(int(r) for r in rows), tuple(int(c) for c in cols)),
                ColorSet(bad),
            )
    return worst, witness


def _dominant_check_sparse(counts, values, kdom, d_div, area):
    order = sorted(range(len(values)), key=lambda i: (-counts[i], values[i]))[:kdom]
    mass = sum(counts[i] for i in order)
    ratio = Fraction(mass * d_div, 2 * area)
    if mass * d_div > 2 * area:
        return ratio, tuple(sorted(values[i] for i in order))
    return ratio, None


def _prefix_check_sparse(hist_map: dict, m_exp: int, area: int):
    worst = Fraction(0)
    bad = None
    level = {int(v): int(c) for v, c in hist_map.items()}
    for l in range(m_exp, 0, -1):
        scale = 1 << l
        top = max(level, key=lambda v: (level[v], -v))
        count = level[top]
        ratio = Fraction(count * scale, 2 * area)
        if ratio > worst:
            worst = ratio
            if count * scale > 2 * area:
                width = m_exp - l
                lo, hi = top << width, (top + 1) << width
                bad = tuple(sorted(v for v in hist_map if lo <= v < hi))
        folded: dict[int, int] = {}
        for v, c in level.items():
            folded[v >> 1] = folded.get(v >> 1, 0) + c
        level = folded
    return worst, bad


def _run_sampled(table, s_exp, d_exp, samples, seed, threads, prefix):
    if samples < 1:
        raise InvalidParams("need samples >= 1")
    chunks = []
    per = (samples + threads - 1) // threads
    starts = list(range(0, samples, per))
    if threads <= 1 or len(starts) == 1:
        results = [
            _sampled_chunk(table, s_exp, d_exp, seed, s0, min(per, samples - s0), prefix)
            for s0 in starts
        ]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = [
                pool.submit(
                    _sampled_chunk, table, s_exp, d_exp, seed, s0,
                    min(per, samples - s0), prefix,
                )
                for s0 in starts
            ]
            results = [f.result() for f in futs]
    worst = Fraction(0)
    witness = None
    for w, wit in results:  # merged in chunk order: first witness is deterministic
        if w > worst:
            worst = w
        if wit is not None and witness is None:
            witness = wit
    return worst, witness


def verify_sampled(
    table: BalancedTable,
    s_exp: int,
    d_exp: int,
    samples: int,
    seed: int,
    *,
    threads: int = 1,
) -> VerificationReport:
    """Dominant-subset check on ``samples`` seeded random S x S rectangles."""
    p = table.params
    if not 0 <= d_exp <= p.m_exp:
        raise InvalidParams("need 0 <= d_exp <= m_exp")
    if (1 << s_exp) > p.n_side:
        raise InvalidParams("rectangle side exceeds N")
    worst, witness = _run_sampled(table, s_exp, d_exp, samples, seed, threads, False)
    return VerificationReport(
        mode="sampled", samples=samples, passed=witness is None,
        rectangles_checked=samples, worst_ratio=worst, witness=witness,
        check_s_exp=s_exp, check_d_exp=d_exp, prefix_mode=False,
        table_params=p, table_digest=table.digest(),
    )


def verify_prefix_balance(
    table: BalancedTable,
    s_exp: int,
    *,
    mode: str = "exhaustive",
    samples: int = 1000,
    seed: int = 0,
    enum_cap: int = DEFAULT_ENUM_CAP,
    threads: int = 1,
) -> VerificationReport:
    """Check, per rectangle, every color-prefix bucket of every length.

    Applies in the D = M regime: for each prefix v of length l in
    [1, m_exp], the cells whose color starts with v must number at most
    2 * 2^-l * area.  At l = m_exp this is exactly the single-color
    dominant check.
    """
    p = table.params
    if mode == "exhaustive":
        def check(hist, area):
            return _prefix_check(hist, p.m_exp, area)

        worst, witness, checked = _run_exhaustive(table, s_exp, check, enum_cap)
        samples_out = None
    elif mode == "sampled":
        worst, witness = _run_sampled(table, s_exp, p.m_exp, samples, seed, threads, True)
        checked = samples
        samples_out = samples
    else:
        raise InvalidParams(f"unknown mode {mode!r}")
    return VerificationReport(
        mode=mode, samples=samples_out, passed=witness is None,
        rectangles_checked=checked, worst_ratio=worst, witness=witness,
        check_s_exp=s_exp, check_d_exp=p.m_exp, prefix_mode=True,
        table_params=p, table_digest=table.digest(),
    )
