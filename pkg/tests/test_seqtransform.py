from fractions import Fraction as F

import pytest

from balext.core import BitString, InvalidParams, OutOfRange, derive_seq_schedule
from balext.extract import TablePolicy
from balext.seqtransform import (
    BitStringStream,
    BlockLayout,
    BlockTooLarge,
    CountingBitStream,
    SeededBitStream,
    SequenceTransformer,
    block_seed,
    block_table,
    output_bit,
    read_prefix,
    transform_prefix,
)
from balext.mixing import stream_value

GOLDEN_TRANSFORM_11 = "00101101000"  # tau=1/2 delta=1/2 B=2, x=seed101, y=seed202, tables seed 3


def b2_schedule(max_block=4):
    return derive_seq_schedule(F(1, 2), F(1, 2), 2, max_block)


class TestStreams:
    def test_seeded_stream_is_repeatable_and_addressable(self):
        s = SeededBitStream(42)
        first = [s.bit(i) for i in range(100)]
        assert [s.bit(i) for i in range(100)] == first
        assert s.bit(77) == first[77]
        # documented rule: bit p is bit p%64 (MSB-first) of output p//64
        assert s.bit(0) == stream_value(42, 0) >> 63
        assert s.bit(64) == stream_value(42, 1) >> 63

    def test_bitstring_stream_bounds(self):
        s = BitStringStream(BitString.from01("101"))
        assert [s.bit(i) for i in range(3)] == [1, 0, 1]
        with pytest.raises(OutOfRange):
            s.bit(3)

    def test_read_prefix(self):
        s = SeededBitStream(1)
        p = read_prefix(s, 70)
        assert len(p) == 70
        assert list(p) == [s.bit(i) for i in range(70)]


class TestLayout:
    def test_b2_example(self):
        layout = BlockLayout.from_schedule(b2_schedule())
        assert layout.first_block == 2
        assert layout.input_ends == (2, 6, 14, 30)
        # output positions 0, 1..3, 4..10 map to blocks 2, 3, 4
        assert layout.block_of_output(0) == 2
        assert [layout.block_of_output(p) for p in (1, 2, 3)] == [3, 3, 3]
        assert [layout.block_of_output(p) for p in (4, 10)] == [4, 4]
        assert layout.total_output_bits == 11
        with pytest.raises(OutOfRange):
            layout.block_of_output(11)

    def test_input_ranges_cover_invalid_blocks(self):
        layout = BlockLayout.from_schedule(b2_schedule())
        assert layout.input_range(1) == (0, 2)  # consumed though it emits nothing
        assert layout.input_range(4) == (14, 30)

    def test_output_range_of_invalid_block(self):
        layout = BlockLayout.from_schedule(b2_schedule())
        with pytest.raises(InvalidParams):
            layout.output_range(1)


class TestTransform:
    def test_golden_prefix(self):
        z = transform_prefix(
            SeededBitStream(101), SeededBitStream(202), b2_schedule(), 11,
            TablePolicy(seed=3),
        )
        assert z.to01() == GOLDEN_TRANSFORM_11

    def test_output_bit_agrees_with_prefix(self):
        sched = b2_schedule()
        x, y = SeededBitStream(101), SeededBitStream(202)
        pol = TablePolicy(seed=3)
        bits = [output_bit(x, y, sched, p, pol) for p in range(11)]
        assert BitString.from_bits(bits).to01() == GOLDEN_TRANSFORM_11

    def test_empty_prefix(self):
        z = transform_prefix(SeededBitStream(1), SeededBitStream(2), b2_schedule(), 0)
        assert len(z) == 0

    def test_single_block_prefix_equals_block_color(self):
        sched = b2_schedule()
        x, y = SeededBitStream(101), SeededBitStream(202)
        pol = TablePolicy(seed=3)
        z = transform_prefix(x, y, sched, 1, pol)  # m_2 = 1
        t2 = block_table(sched, 2, pol, verify_samples=0)
        x2 = read_prefix(x, 6).substring(2, 6)
        y2 = read_prefix(y, 6).substring(2, 6)
        assert z.value == t2.lookup(x2.value, y2.value)

    def test_prefix_consistency(self):
        sched = b2_schedule()
        pol = TablePolicy(seed=3)
        x, y = SeededBitStream(5), SeededBitStream(6)
        full = transform_prefix(x, y, sched, 11, pol)
        for k in range(12):
            assert transform_prefix(x, y, sched, min(k, 11), pol) == full.prefix(min(k, 11))

    def test_interleaved_cursors_identical(self):
        sched = b2_schedule()
        pol = TablePolicy(seed=9)
        x, y = SeededBitStream(7), SeededBitStream(8)
        tr1 = SequenceTransformer(x, y, sched, pol)
        tr2 = SequenceTransformer(x, y, sched, pol)
        a = [tr1.output_bit(p) for p in range(11)]
        b = []
        for p in range(0, 11, 2):
            b.append((p, tr2.output_bit(p)))
        for p in range(1, 11, 2):
            b.append((p, tr2.output_bit(p)))
        assert [bit for _, bit in sorted(b)] == a

    def test_out_len_beyond_schedule(self):
        with pytest.raises(InvalidParams):
            transform_prefix(SeededBitStream(1), SeededBitStream(2), b2_schedule(), 12)


class TestTruthTableProperty:
    @pytest.mark.parametrize("pos,block,expect_read", [(0, 2, 6), (1, 3, 14), (5, 4, 30)])
    def test_reads_exactly_block_prefix(self, pos, block, expect_read):
        sched = b2_schedule()
        cx = CountingBitStream(SeededBitStream(101))
        cy = CountingBitStream(SeededBitStream(202))
        SequenceTransformer(cx, cy, sched, TablePolicy(seed=3)).output_bit(pos)
        assert sorted(cx.positions) == list(range(expect_read))
        assert sorted(cy.positions) == list(range(expect_read))

    def test_read_set_is_content_independent(self):
        sched = b2_schedule()
        pol = TablePolicy(seed=3)
        reads = []
        for xs, ys in ((11, 22), (1 << 40, 17)):
            cx = CountingBitStream(SeededBitStream(xs))
            cy = CountingBitStream(SeededBitStream(ys))
            SequenceTransformer(cx, cy, sched, pol).output_bit(7)
            reads.append((tuple(sorted(cx.positions)), tuple(sorted(cy.positions))))
        assert reads[0] == reads[1]

    def test_transform_prefix_total_reads_bounded(self):
        sched = b2_schedule()
        cx = CountingBitStream(SeededBitStream(1))
        cy = CountingBitStream(SeededBitStream(2))
        SequenceTransformer(cx, cy, sched, TablePolicy(seed=3)).transform_prefix(11)
        total = len(cx.positions) + len(cy.positions)
        assert total <= 2 * sum(b.n_bits for b in sched.blocks)
        assert cx.reads == 30  # one pass, no re-reads

    def test_block_isolation(self):
        # changing input bits after block i's region leaves blocks <= i alone
        sched = b2_schedule()
        pol = TablePolicy(seed=3)
        base_x = read_prefix(SeededBitStream(101), 30)
        base_y = read_prefix(SeededBitStream(202), 30)
        z_base = transform_prefix(
            BitStringStream(base_x), BitStringStream(base_y), sched, 11, pol
        )
        # flip a bit inside block 4's input region (positions 14..29)
        flipped = base_x.value ^ (1 << (30 - 1 - 20))
        z_flip = transform_prefix(
            BitStringStream(BitString(flipped, 30)), BitStringStream(base_y), sched,
            11, pol,
        )
        assert z_flip.prefix(4) == z_base.prefix(4)  # blocks 2..3 untouched


class TestBlockTables:
    def test_block_seed_rule(self):
        assert block_seed(77, 3) == stream_value(77, 3)

    def test_backend_escalation(self):
        sched = b2_schedule()
        pol = TablePolicy(seed=3)
        assert block_table(sched, 2, pol, verify_samples=0).is_explicit
        assert block_table(sched, 3, pol, verify_samples=0).is_explicit
        assert not block_table(sched, 4, pol, verify_samples=0).is_explicit  # n=16 > cap 12

    def test_block_too_large_when_keyed_forbidden(self):
        sched = b2_schedule()
        pol = TablePolicy(seed=3, allow_keyed_fallback=False)
        with pytest.raises(BlockTooLarge):
            block_table(sched, 4, pol)

    def test_construction_warning_on_unbalanced_block(self, caplog):
        # tiny blocks pass vacuously; force a warning via an adversarial cap
        sched = derive_seq_schedule(F(1), F(1, 2), 3, 2)  # m_2 = 8 with n_2 = 9
        pol = TablePolicy(seed=0)
        import logging

        with caplog.at_level(logging.WARNING):
            block_table(sched, 2, pol, verify_samples=64)
        # warning may or may not fire depending on the draw; the call itself
        # must succeed either way
        assert block_table(sched, 2, pol, verify_samples=0).is_explicit
