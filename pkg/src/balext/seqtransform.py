"""Block-wise transformation of two bit streams into one output stream.

Input streams split into consecutive blocks of geometrically growing
length n_i = B**i.  Block i of each stream indexes a per-block table T_i
and contributes that table's color (m_i bits) to the output; the output is
the concatenation of the valid blocks' colors.  Blocks whose output length
rounds to zero still consume their input bits, so stream offsets track the
schedule exactly.

Computing any output bit reads both input streams from position 0 through
the end of the containing block and nothing else; the read set depends only
on the schedule and the position, never on stream contents (the transform
is a truth-table reduction).

Per-block tables are reproducible: block i's seed is output i of the
master seed's stream; blocks that fit the explicit cap get explicit random
tables (sampled-verified on construction, logging a warning on failure),
larger blocks fall back to the keyed backend unless the policy forbids it.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

from .core import BitString, InvalidParams, OutOfRange, SeqSchedule, TooLarge
from .extract import TablePolicy
from .mixing import stream_value
from .tables import BalancedTable, key_from_seed, keyed_table, random_table

logger = logging.getLogger(__name__)


class BlockTooLarge(TooLarge):
    """A block needs a table beyond the explicit cap and keyed fallback is off."""


@runtime_checkable
class BitStream(Protocol):
    """A repeatable, position-addressable source of bits."""

    def bit(self, pos: int) -> int: ...


class SeededBitStream:
    """Infinite pseudorandom stream: bit p is bit p%64 (MSB-first) of the
    seed stream's output p//64."""

    def __init__(self, seed: int):
        self.seed = seed

    def bit(self, pos: int) -> int:
        if pos < 0:
            raise OutOfRange("negative stream position")
        word = stream_value(self.seed, pos // 64)
        return (word >> (63 - pos % 64)) & 1


class BitStringStream:
    """Finite stream over a BitString; reads past the end raise OutOfRange."""

    def __init__(self, bits: BitString):
        self.bits = bits

    def bit(self, pos: int) -> int:
        return self.bits.bit(pos)


class CountingBitStream:
    """Instrumented wrapper recording every position read."""

    def __init__(self, inner: BitStream):
        self.inner = inner
        self.positions: set[int] = set()
        self.reads = 0

    def bit(self, pos: int) -> int:
        self.positions.add(pos)
        self.reads += 1
        return self.inner.bit(pos)


def read_prefix(stream: BitStream, count: int) -> BitString:
    return BitString.from_bits(stream.bit(i) for i in range(count))


@dataclass(frozen=True)
class BlockLayout:
    """Cumulative input/output offsets for a schedule.

    ``input_ends[i-1]`` is the total input bits consumed per stream through
    block i; output offsets cover only emitting blocks.
    """

    schedule: SeqSchedule
    first_block: int | None
    input_ends: tuple[int, ...]
    output_starts: tuple[int, ...] = field(repr=False)

    @classmethod
    def from_schedule(cls, schedule: SeqSchedule) -> "BlockLayout":
        input_ends = []
        total = 0
        for b in schedule.blocks:
            total += b.n_bits
            input_ends.append(total)
        out_starts = []
        out = 0
        for b in schedule.blocks:
            out_starts.append(out)
            if b.valid:
                out += b.m_bits
        return cls(
            schedule=schedule,
            first_block=schedule.first_emitting_block,
            input_ends=tuple(input_ends),
            output_starts=tuple(out_starts),
        )

    @property
    def total_output_bits(self) -> int:
        last = self.schedule.blocks[-1]
        return self.output_starts[-1] + (last.m_bits if last.valid else 0)

    def input_range(self, i: int) -> tuple[int, int]:
        end = self.input_ends[i - 1]
        return end - self.schedule.block(i).n_bits, end

    def output_range(self, i: int) -> tuple[int, int]:
        b = self.schedule.block(i)
        if not b.valid:
            raise InvalidParams(f"block {i} emits no output")
        start = self.output_starts[i - 1]
        return start, start + b.m_bits

    def block_of_output(self, pos: int) -> int:
        if pos < 0 or pos >= self.total_output_bits:
            raise OutOfRange(
                f"output position {pos} outside the schedule "
                f"(covers {self.total_output_bits} bits)"
            )
        i = bisect.bisect_right(self.output_starts, pos)
        # skip back over non-emitting blocks that share the same start
        while not self.schedule.block(i).valid:
            i -= 1
        return i


def block_seed(master_seed: int, i: int) -> int:
    """Block i's table seed: output i of the master seed's stream."""
    return stream_value(master_seed, i)


def block_table(
    schedule: SeqSchedule,
    i: int,
    policy: TablePolicy = TablePolicy(),
    *,
    verify_samples: int = 16,
) -> BalancedTable:
    """Construct block i's table under the policy's backend escalation."""
    spec = schedule.block(i)
    params = spec.table_params()
    seed = block_seed(policy.seed, i)
    if policy.fits_explicit(params):
        table = random_table(params, seed, explicit_cap=policy.explicit_cap)
        if verify_samples > 0:
            # D = M per block, so the prefix check is the relevant one: it
            # covers every output-prefix length, not just whole colors
            from .verify import verify_prefix_balance

            report = verify_prefix_balance(
                table, params.s_exp, mode="sampled", samples=verify_samples,
                seed=seed,
            )
            if not report.passed:
                logger.warning(
                    "block %d explicit table failed sampled prefix-balance check "
                    "(worst ratio %s)", i, report.worst_ratio,
                )
        return table
    if not policy.allow_keyed_fallback:
        raise BlockTooLarge(
            f"block {i} needs n_exp = {params.n_exp} > cap {policy.explicit_cap} "
            "and keyed fallback is disabled"
        )
    return keyed_table(params, key_from_seed(seed))


class SequenceTransformer:
    """Binds (x, y, schedule, policy) and memoizes per-block tables."""

    def __init__(
        self,
        x: BitStream,
        y: BitStream,
        schedule: SeqSchedule,
        policy: TablePolicy = TablePolicy(),
        *,
        verify_samples: int = 16,
    ):
        self.x = x
        self.y = y
        self.schedule = schedule
        self.policy = policy
        self.verify_samples = verify_samples
        self.layout = BlockLayout.from_schedule(schedule)
        self._tables: dict[int, BalancedTable] = {}
        import threading

        self._lock = threading.Lock()

    def _table(self, i: int) -> BalancedTable:
        with self._lock:
            t = self._tables.get(i)
        if t is not None:
            return t
        t = block_table(
            self.schedule, i, self.policy, verify_samples=self.verify_samples
        )
        with self._lock:
            return self._tables.setdefault(i, t)

    def _block_output(self, i: int, x_prefix: BitString, y_prefix: BitString) -> BitString:
        a, b = self.layout.input_range(i)
        x_i = x_prefix.substring(a, b)
        y_i = y_prefix.substring(a, b)
        table = self._table(i)
        return BitString(table.lookup(x_i.value, y_i.value), table.params.m_exp)

    def output_bit(self, pos: int) -> int:
        i = self.layout.block_of_output(pos)
        read_to = self.layout.input_ends[i - 1]
        x_prefix = read_prefix(self.x, read_to)
        y_prefix = read_prefix(self.y, read_to)
        z_i = self._block_output(i, x_prefix, y_prefix)
        start, _ = self.layout.output_range(i)
        return z_i.bit(pos - start)

    def transform_prefix(self, out_len: int) -> BitString:
        if out_len < 0:
            raise InvalidParams("out_len must be >= 0")
        if out_len == 0:
            return BitString.zeros(0)
        if out_len > self.layout.total_output_bits:
            raise InvalidParams(
                f"schedule covers only {self.layout.total_output_bits} output bits"
            )
        i_max = self.layout.block_of_output(out_len - 1)
        read_to = self.layout.input_ends[i_max - 1]
        x_prefix = read_prefix(self.x, read_to)
        y_prefix = read_prefix(self.y, read_to)
        out = BitString.zeros(0)
        first = self.layout.first_block
        for i in range(first, i_max + 1):
            out = out.concat(self._block_output(i, x_prefix, y_prefix))
        return out.prefix(out_len)


def output_bit(
    x: BitStream,
    y: BitStream,
    schedule: SeqSchedule,
    pos: int,
    policy: TablePolicy = TablePolicy(),
) -> int:
    """One output bit; reads both streams through the containing block."""
    return SequenceTransformer(x, y, schedule, policy).output_bit(pos)


def transform_prefix(
    x: BitStream,
    y: BitStream,
    schedule: SeqSchedule,
    out_len: int,
    policy: TablePolicy = TablePolicy(),
) -> BitString:
    """First ``out_len`` output bits; reads each stream once, through the
    last needed block (at most 2 * sum of those blocks' lengths in total)."""
    return SequenceTransformer(x, y, schedule, policy).transform_prefix(out_len)
