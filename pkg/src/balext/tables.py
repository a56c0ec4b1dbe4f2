"""Color-table construction backends, existence check, and serialization.

Three backends produce a table T : [N] x [N] -> [M]:

* explicit-random: cells drawn from seeded SplitMix64 streams, one stream
  per row.  Row r's stream is ``substream(seed, r)``; the color of cell
  (r, c) is the low m_exp bits of that stream's c-th output.  Bit-exact
  across platforms and runs.
* explicit-canonical: exhaustive search, in lexicographic order of the
  row-major color sequence, for the first table passing exhaustive
  (S, D)-balance verification.  Only feasible at micro scale.
* keyed: an implicit table whose colors are computed on demand by a fixed
  128-bit-keyed mixing function (see :func:`keyed_color`).  A stand-in for
  tables too large to materialize; no balance guarantee, only sampled
  verification applies.

The binary file format (little-endian) is:

    magic "BTAB" | version u16 | backend u8 | n_exp u8 | m_exp u8 |
    s_exp u8 | d_exp u8 | seed/key 16 bytes zero-padded |
    row-major cells at 8 or 16 bits per cell (explicit backends only)

Cells use 1 byte when m_exp <= 8, else 2 bytes.  Readers reject unknown
versions and backend tags.  Exponents beyond 255 cannot be serialized.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import InvalidParams, NotFound, OutOfRange, TableParams, TooLarge
from .mixing import GAMMA, MASK64, scramble, scramble_np, stream_value

MAGIC = b"BTAB"
FORMAT_VERSION = 1

BACKEND_RANDOM = 0
BACKEND_CANONICAL = 1
BACKEND_KEYED = 2
_BACKEND_NAMES = {BACKEND_RANDOM: "random",
                  BACKEND_CANONICAL: "canonical",
                  BACKEND_KEYED: "keyed"}

EXPLICIT_N_EXP_CAP = 12      # default cap: at most 2**24 explicit cells
EXPLICIT_M_EXP_CAP = 16      # colors must fit the 1/2-byte cell storage
MICRO_DESCRIPTION_CAP = 24   # canonical search cap on N*N*m_exp bits


# ---------------------------------------------------------------------------
# Existence condition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExistenceCheck:
    """Outcome of the balanced-table existence inequality

        S^2 > 3M + 3M ln D + 6SD + 6SD ln(N/S).

    ``lhs`` is exact; the right-hand side is irrational whenever a log term
    survives, so it is bracketed by exact rationals tight enough that the
    comparison is provably on the correct side (and the midpoint is within
    1e-9 relative of the true value).
    """

    holds: bool
    lhs: int
    rhs_lower: Fraction
    rhs_upper: Fraction

    @property
    def rhs(self) -> Fraction:
        return (self.rhs_lower + self.rhs_upper) / 2


def _ln2_bounds(terms: int) -> tuple[Fraction, Fraction]:
    # ln 2 = 2 atanh(1/3) = 2 * sum_{k>=0} 3^-(2k+1) / (2k+1); the tail after
    # `terms` terms is below (9/4) * 3^-(2*terms+1) / (2*terms+1).
    s = Fraction(0)
    for k in range(terms):
        s += Fraction(1, (2 * k + 1) * 3 ** (2 * k + 1))
    lo = 2 * s
    tail = Fraction(9, 4 * (2 * terms + 1) * 3 ** (2 * terms + 1))
    return lo, lo + tail


def existence_condition_exponents(
    n_exp: int, m_exp: int, s_exp: int, d_exp: int
) -> ExistenceCheck:
    """Check the existence inequality for N=2^n, M=2^m, S=2^s, D=2^d.

    Accepts m_exp = 0 (a single color), unlike :class:`TableParams`, since
    the inequality itself is defined for any positive sizes.
    """
    if n_exp < 0 or m_exp < 0 or not 0 <= s_exp <= n_exp or not 0 <= d_exp <= m_exp:
        raise InvalidParams("need 0 <= s_exp <= n_exp and 0 <= d_exp <= m_exp")
    big_s = 1 << s_exp
    big_m = 1 << m_exp
    big_d = 1 << d_exp
    lhs = big_s * big_s
    # rhs = A + B ln 2 with A, B exact integers
    coeff_a = 3 * big_m + 6 * big_s * big_d
    coeff_b = 3 * big_m * d_exp + 6 * big_s * big_d * (n_exp - s_exp)
    if coeff_b == 0:
        rhs = Fraction(coeff_a)
        return ExistenceCheck(lhs > rhs, lhs, rhs, rhs)
    terms = 16
    while True:
        lo2, hi2 = _ln2_bounds(terms)
        rhs_lo = coeff_a + coeff_b * lo2
        rhs_hi = coeff_a + coeff_b * hi2
        decided = lhs > rhs_hi or lhs <= rhs_lo
        tight = (rhs_hi - rhs_lo) * 10**12 <= rhs_lo
        if decided and tight:
            return ExistenceCheck(lhs > rhs_hi, lhs, rhs_lo, rhs_hi)
        terms *= 2


def existence_condition(params: TableParams) -> ExistenceCheck:
    return existence_condition_exponents(
        params.n_exp, params.m_exp, params.s_exp, params.d_exp
    )


# ---------------------------------------------------------------------------
# The keyed mixing function
# ---------------------------------------------------------------------------


def _absorb(h: int, word: int) -> int:
    return scramble(((h ^ word) + GAMMA) & MASK64)


def keyed_color(key: int, n_exp: int, m_exp: int, row: int, col: int) -> int:
    """Color of cell (row, col) under the fixed keyed mixing function.

    The 128-bit key splits into k0 (low) and k1 (high 64 bits).  A 64-bit
    state absorbs, in order: k0, n_exp, m_exp, the row's little-endian
    64-bit words (ceil(n_exp/64) of them), k1, then the column's words;
    each absorption is ``scramble((h ^ word) + GAMMA)``.  The color is the
    low m_exp bits of the state's output stream (64-bit outputs
    ``stream_value(h, t)`` concatenated low-word-first).
    """
    words = (n_exp + 63) // 64
    h = _absorb(0, key & MASK64)
    h = _absorb(h, n_exp)
    h = _absorb(h, m_exp)
    for t in range(words):
        h = _absorb(h, (row >> (64 * t)) & MASK64)
    h = _absorb(h, key >> 64)
    for t in range(words):
        h = _absorb(h, (col >> (64 * t)) & MASK64)
    out_words = (m_exp + 63) // 64
    color = 0
    for t in range(out_words):
        color |= stream_value(h, t) << (64 * t)
    return color & ((1 << m_exp) - 1)


def _keyed_state_through_key(key: int, n_exp: int, m_exp: int) -> int:
    h = _absorb(0, key & MASK64)
    h = _absorb(h, n_exp)
    h = _absorb(h, m_exp)
    return h


def keyed_colors_grid(
    key: int, n_exp: int, m_exp: int, rows: np.ndarray, cols: np.ndarray
) -> np.ndarray:
    """Vectorized :func:`keyed_color` over a rows x cols grid.

    Only for n_exp <= 64 and m_exp <= 64 (single-word absorb and output).
    """
    if n_exp > 64 or m_exp > 64:
        raise TooLarge("vectorized keyed lookup needs n_exp, m_exp <= 64")
    g = np.uint64(GAMMA)
    h0 = np.uint64(_keyed_state_through_key(key, n_exp, m_exp))
    hr = scramble_np((h0 ^ rows.astype(np.uint64)) + g)
    hr = scramble_np((hr ^ np.uint64(key >> 64)) + g)
    grid = scramble_np((hr[:, None] ^ cols.astype(np.uint64)[None, :]) + g)
    out = scramble_np(grid + g)  # stream_value(h, 0)
    if m_exp == 64:
        return out
    return out & np.uint64((1 << m_exp) - 1)


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


def _cell_dtype(m_exp: int) -> np.dtype:
    return np.dtype(np.uint8) if m_exp <= 8 else np.dtype(np.uint16)


@dataclass(frozen=True, eq=False)
class BalancedTable:
    """An (N, M) color table with one of the three backends.

    Explicit backends store the full row-major cell array (read-only);
    the keyed backend computes colors on demand.  Instances are immutable
    and safe to share across threads.
    """

    params: TableParams
    backend: int
    seed_or_key: int
    cells: np.ndarray | None

    @property
    def backend_name(self) -> str:
        return _BACKEND_NAMES[self.backend]

    @property
    def is_explicit(self) -> bool:
        return self.cells is not None

    def lookup(self, row: int, col: int) -> int:
        n_side = self.params.n_side
        if not (0 <= row < n_side and 0 <= col < n_side):
            raise OutOfRange(f"cell ({row}, {col}) outside [{n_side}]^2")
        if self.cells is not None:
            return int(self.cells[row, col])
        return keyed_color(
            self.seed_or_key, self.params.n_exp, self.params.m_exp, row, col
        )

    def to_bytes(self) -> bytes:
        p = self.params
        for name, e in (("n_exp", p.n_exp), ("m_exp", p.m_exp),
                        ("s_exp", p.s_exp), ("d_exp", p.d_exp)):
            if e > 0xFF:
                raise InvalidParams(f"{name} = {e} exceeds file-format range (255)")
        header = MAGIC + struct.pack(
            "<HBBBBB", FORMAT_VERSION, self.backend, p.n_exp, p.m_exp, p.s_exp, p.d_exp
        )
        header += self.seed_or_key.to_bytes(16, "little")
        if self.cells is None:
            return header
        if self.params.m_exp <= 8:
            body = self.cells.astype(np.uint8).tobytes()
        else:
            body = self.cells.astype("<u2").tobytes()
        return header + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "BalancedTable":
        if data[:4] != MAGIC:
            raise InvalidParams("not a table file (bad magic)")
        version, backend, n_exp, m_exp, s_exp, d_exp = struct.unpack(
            "<HBBBBB", data[4:11]
        )
        if version != FORMAT_VERSION:
            raise InvalidParams(f"unsupported table format version {version}")
        if backend not in _BACKEND_NAMES:
            raise InvalidParams(f"unknown backend tag {backend}")
        seed_or_key = int.from_bytes(data[11:27], "little")
        params = TableParams(n_exp, m_exp, s_exp, d_exp)
        body = data[27:]
        if backend == BACKEND_KEYED:
            if body:
                raise InvalidParams("keyed table file carries unexpected cell data")
            return cls(params, backend, seed_or_key, None)
        n_side = params.n_side
        width = 1 if m_exp <= 8 else 2
        if len(body) != n_side * n_side * width:
            raise InvalidParams("cell payload size does not match header")
        dt = np.uint8 if width == 1 else np.dtype("<u2")
        cells = np.frombuffer(body, dtype=dt).reshape(n_side, n_side).copy()
        if int(cells.max(initial=0)) >= params.m_colors:
            raise InvalidParams("cell payload contains out-of-range colors")
        cells.setflags(write=False)
        return cls(params, backend, seed_or_key, cells)

    def write(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def read(cls, path) -> "BalancedTable":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()


def _random_cells(seed: int, n_exp: int, m_exp: int) -> np.ndarray:
    n_side = 1 << n_exp
    mask = np.uint64((1 << m_exp) - 1)
    out = np.empty((n_side, n_side), dtype=_cell_dtype(m_exp))
    # row r's stream state is output r of the master stream
    row_states = scramble_np(
        np.uint64(seed & MASK64)
        + np.arange(1, n_side + 1, dtype=np.uint64) * np.uint64(GAMMA)
    )
    ks = np.arange(1, n_side + 1, dtype=np.uint64) * np.uint64(GAMMA)
    chunk = max(1, (1 << 22) // n_side)
    for r0 in range(0, n_side, chunk):
        r1 = min(n_side, r0 + chunk)
        vals = scramble_np(row_states[r0:r1, None] + ks[None, :])
        out[r0:r1] = (vals & mask).astype(out.dtype)
    out.setflags(write=False)
    return out


def random_table(
    params: TableParams, seed: int, *, explicit_cap: int = EXPLICIT_N_EXP_CAP
) -> BalancedTable:
    """Explicit table with independently uniform seeded-pseudorandom colors."""
    if params.n_exp > explicit_cap:
        raise TooLarge(
            f"n_exp = {params.n_exp} exceeds the explicit-backend cap {explicit_cap}"
        )
    if params.m_exp > EXPLICIT_M_EXP_CAP:
        raise TooLarge(f"m_exp = {params.m_exp} exceeds explicit color storage (16)")
    cells = _random_cells(seed & MASK64, params.n_exp, params.m_exp)
    return BalancedTable(params, BACKEND_RANDOM, seed & MASK64, cells)


def keyed_table(params: TableParams, key: int) -> BalancedTable:
    """Implicit table backed by the fixed keyed mixing function."""
    if not 0 <= key < (1 << 128):
        raise InvalidParams("key must be a 128-bit value")
    return BalancedTable(params, BACKEND_KEYED, key, None)


def canonical_table(
    params: TableParams,
    verifier=None,
    *,
    micro_cap: int = MICRO_DESCRIPTION_CAP,
) -> BalancedTable:
    """First table, in lexicographic row-major color order, passing the
    exhaustive balance check.

    ``verifier`` is a predicate BalancedTable -> bool; by default the
    exhaustive (S, D)-balance check at the table's own (s_exp, d_exp).
    """
    n_side = params.n_side
    ncells = n_side * n_side
    description_bits = ncells * params.m_exp
    if description_bits > micro_cap:
        raise TooLarge(
            f"table description is {description_bits} bits, cap is {micro_cap}"
        )
    if verifier is None:
        from .verify import balance_holds

        def verifier(t: BalancedTable) -> bool:
            return balance_holds(t, params.s_exp, params.d_exp)

    m_colors = params.m_colors
    mask = m_colors - 1
    dtype = _cell_dtype(params.m_exp)
    for value in range(1 << description_bits):
        flat = [
            (value >> (params.m_exp * (ncells - 1 - i))) & mask for i in range(ncells)
        ]
        cells = np.array(flat, dtype=dtype).reshape(n_side, n_side)
        cells.setflags(write=False)
        candidate = BalancedTable(params, BACKEND_CANONICAL, 0, cells)
        if verifier(candidate):
            return candidate
    raise NotFound("no balanced table exists at these parameters")


def key_from_seed(seed: int) -> int:
    """Expand a 64-bit seed into the 128-bit key (seed, scramble(seed))."""
    seed &= MASK64
    return seed | (scramble(seed) << 64)
