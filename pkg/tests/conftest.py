"""Shared test helpers: structured balanced micro tables and the naive
all-colorset balance oracle."""

from itertools import combinations

import numpy as np
import pytest

from balext.core import TableParams
from balext.mixing import bounded, stream_value
from balext.tables import BACKEND_RANDOM, BalancedTable


def structured_table(seed: int, n_exp: int = 3, m_exp: int = 2) -> BalancedTable:
    """A seeded micro table that provably satisfies (S, M)-balance at S = N/2.

    Base pattern (a*r + b*c + e) mod M with odd a, b spreads every color
    evenly across residue classes; seeded row/column permutations and a
    color relabeling (all balance-preserving bijections) give distinct
    tables per seed.  Random tables at these parameters essentially never
    pass, so these are the test corpus for balance-implies-X properties.
    """
    n_side, m_colors = 1 << n_exp, 1 << m_exp
    a = 1 + 2 * bounded(stream_value(seed, 0), m_colors // 2)
    b = 1 + 2 * bounded(stream_value(seed, 1), m_colors // 2)
    e = bounded(stream_value(seed, 2), m_colors)
    perm_r = sorted(range(n_side), key=lambda r: stream_value(seed, 10 + r))
    perm_c = sorted(range(n_side), key=lambda c: stream_value(seed, 200 + c))
    recolor = sorted(range(m_colors), key=lambda m: stream_value(seed, 400 + m))
    cells = np.array(
        [
            [recolor[(a * perm_r[r] + b * perm_c[c] + e) % m_colors]
             for c in range(n_side)]
            for r in range(n_side)
        ],
        dtype=np.uint8,
    )
    cells.setflags(write=False)
    params = TableParams(n_exp, m_exp, n_exp - 1, m_exp)
    return BalancedTable(params, BACKEND_RANDOM, seed, cells)


def constant_table(n_exp: int = 3, m_exp: int = 2, color: int = 0) -> BalancedTable:
    n_side = 1 << n_exp
    cells = np.full((n_side, n_side), color, dtype=np.uint8)
    cells.setflags(write=False)
    params = TableParams(n_exp, m_exp, n_exp - 1, m_exp)
    return BalancedTable(params, BACKEND_RANDOM, 0, cells)


def naive_balance_oracle(table: BalancedTable, s_exp: int, d_exp: int) -> bool:
    """Definition-verbatim check: every size-M/D color set against every
    S x S rectangle, no histogram shortcuts."""
    p = table.params
    n_side, m_colors = p.n_side, p.m_colors
    s_side = 1 << s_exp
    kdom = m_colors >> d_exp
    bound_rhs = 2 * s_side * s_side  # compare mass * D <= 2 * area
    d_div = 1 << d_exp
    for rows in combinations(range(n_side), s_side):
        for cols in combinations(range(n_side), s_side):
            counts = {}
            for r in rows:
                for c in cols:
                    v = int(table.cells[r, c])
                    counts[v] = counts.get(v, 0) + 1
            for colorset in combinations(range(m_colors), kdom):
                mass = sum(counts.get(a, 0) for a in colorset)
                if mass * d_div > bound_rhs:
                    return False
    return True


@pytest.fixture
def micro_params() -> TableParams:
    return TableParams(3, 2, 2, 2)
