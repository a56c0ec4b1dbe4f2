"""The two string extractors: unconditional and conditional.

Both index a color table with the two input strings (rows by the first
input, columns by the second, bits read most-significant-first) and return
the cell's color as an m_exp-bit string, most significant bit first.  The
complexity guarantee itself is uncomputable and is never a postcondition;
the sources module provides the statistical stand-in.

Table policy: "canonical" works at micro scale only, "random" materializes
a seeded explicit table up to the explicit cap, "keyed" computes colors on
demand at any size, and "auto" picks random when the shape fits the cap
and keyed otherwise (keyed key expanded from the seed).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    BitString,
    InvalidParams,
    TableParams,
    derive_cond_params,
    derive_string_params,
)
from .tables import (
    EXPLICIT_M_EXP_CAP,
    EXPLICIT_N_EXP_CAP,
    MICRO_DESCRIPTION_CAP,
    BalancedTable,
    canonical_table,
    key_from_seed,
    keyed_table,
    random_table,
)


@dataclass(frozen=True)
class TablePolicy:
    """How extractors obtain their table."""

    kind: str = "auto"            # auto | random | keyed | canonical
    seed: int = 0
    key: int | None = None        # keyed backend; derived from seed when None
    explicit_cap: int = EXPLICIT_N_EXP_CAP
    micro_cap: int = MICRO_DESCRIPTION_CAP
    allow_keyed_fallback: bool = True

    def effective_key(self) -> int:
        return self.key if self.key is not None else key_from_seed(self.seed)

    def fits_explicit(self, params: TableParams) -> bool:
        return (
            params.n_exp <= self.explicit_cap and params.m_exp <= EXPLICIT_M_EXP_CAP
        )


_table_cache: dict[tuple, BalancedTable] = {}
_table_cache_lock = threading.Lock()
_TABLE_CACHE_MAX = 8


def table_for(params: TableParams, policy: TablePolicy) -> BalancedTable:
    """Construct (or fetch from a small cache) the policy's table.

    Cached instances are immutable, so this is observationally identical
    to reconstructing the table on every call.
    """
    kind = policy.kind
    if kind == "auto":
        kind = "random" if policy.fits_explicit(params) else "keyed"
    if kind == "random":
        key = (params, "random", policy.seed, policy.explicit_cap)
    elif kind == "keyed":
        key = (params, "keyed", policy.effective_key())
    elif kind == "canonical":
        key = (params, "canonical", policy.micro_cap)
    else:
        raise InvalidParams(f"unknown table policy kind {policy.kind!r}")
    with _table_cache_lock:
        if key in _table_cache:
            return _table_cache[key]
    if kind == "random":
        table = random_table(params, policy.seed, explicit_cap=policy.explicit_cap)
    elif kind == "keyed":
        table = keyed_table(params, policy.effective_key())
    else:
        table = canonical_table(params, micro_cap=policy.micro_cap)
    with _table_cache_lock:
        if len(_table_cache) >= _TABLE_CACHE_MAX:
            _table_cache.pop(next(iter(_table_cache)))
        _table_cache[key] = table
    return table


def _lookup_bits(table: BalancedTable, x: BitString, y: BitString) -> BitString:
    color = table.lookup(x.value, y.value)
    return BitString(color, table.params.m_exp)


def extract_string(
    x: BitString,
    y: BitString,
    sigma: Fraction,
    alpha: Fraction,
    policy: TablePolicy = TablePolicy(),
) -> BitString:
    """Unconditional extraction: the table color at (row x, column y).

    Parameters are derived non-strictly: input lengths too small for the
    complexity guarantee still extract (the derivation flags them as
    guarantee-degenerate), but shapes with no output bits are rejected.
    """
    if len(x) != len(y):
        raise InvalidParams(f"input lengths differ: {len(x)} != {len(y)}")
    params = derive_string_params(len(x), sigma, alpha, strict=False)
    table = table_for(params.table_params(), policy)
    return _lookup_bits(table, x, y)


def extract_conditional(
    x: BitString,
    y: BitString,
    s_of_n: int,
    alpha_of_n: int,
    policy: TablePolicy = TablePolicy(),
) -> BitString:
    """Conditional extraction (D = M parameterization)."""
    if len(x) != len(y):
        raise InvalidParams(f"input lengths differ: {len(x)} != {len(y)}")
    params = derive_cond_params(len(x), s_of_n, alpha_of_n)
    table = table_for(params.table_params(), policy)
    return _lookup_bits(table, x, y)
