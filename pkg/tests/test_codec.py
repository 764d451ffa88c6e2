"""Bit I/O, transform, intra prediction, entropy coding and the codec
round trip, each against an independent oracle where one exists."""

import numpy as np
import pytest

import rdo_oracle
from rdmc import BlockRegion, CodecConfig, Frame, decode_frame, encode_frame, rdo_select
from rdmc.codec.bitio import (
    BitReader,
    BitstreamError,
    BitWriter,
    code_to_signed,
    se_length,
    signed_to_code,
    ue_length,
)
from rdmc.codec.decoder import decode_frame_details
from rdmc.codec.encoder import CodecError, rdo_lambda
from rdmc.codec.entropy import coeff_bits, read_coeffs, scan_events, write_coeffs, zigzag_order
from rdmc.codec.intra import (
    MODE_DC,
    MODE_HORIZONTAL,
    MODE_PLANAR,
    MODE_VERTICAL,
    gather_references,
    predict_intra,
)
from rdmc.codec.stream import (
    HEADER_SIZE,
    StreamHeader,
    child_origins,
    classify_cu,
    CU_FORCED_SPLIT,
    CU_INSIDE,
    CU_OUTSIDE,
    pack_header,
    padded_dims,
    pad_frame,
    unpack_header,
)
from rdmc.codec.transform import (
    dequantize_inverse,
    forward_dct,
    inverse_dct,
    qstep,
    reconstruct_block,
    transform_quantize,
)
from rdmc.features import FeatureProviderConfig, get_provider


class TestBitIo:
    def test_msb_first_layout(self):
        w = BitWriter()
        w.write_bits(0b101, 3)
        assert w.getvalue() == bytes([0b10100000])
        assert w.bit_count == 3

    def test_single_bit_pads_to_byte(self):
        w = BitWriter()
        w.write_bit(1)
        assert w.getvalue() == b"\x80"

    def test_exp_golomb_code_table(self):
        # ue: 0 -> '1', 1 -> '010', 2 -> '011', 3 -> '00100'
        for value, bits in [(0, "1"), (1, "010"), (2, "011"), (3, "00100"), (4, "00101")]:
            w = BitWriter()
            w.write_ue(value)
            assert w.bit_count == len(bits)
            got = "".join(
                str((w.getvalue()[i // 8] >> (7 - i % 8)) & 1) for i in range(w.bit_count)
            )
            assert got == bits

    def test_signed_mapping(self):
        assert [signed_to_code(v) for v in (0, 1, -1, 2, -2, 3)] == [0, 1, 2, 3, 4, 5]
        for code in range(200):
            assert signed_to_code(code_to_signed(code)) == code

    def test_length_helpers_match_writer(self):
        for v in range(0, 300, 7):
            w = BitWriter()
            w.write_ue(v)
            assert ue_length(v) == w.bit_count
        for v in range(-40, 41):
            w = BitWriter()
            w.write_se(v)
            assert se_length(v) == w.bit_count

    def test_mixed_round_trip(self):
        rng = np.random.default_rng(0)
        ops = []
        w = BitWriter()
        for _ in range(500):
            kind = rng.integers(0, 4)
            if kind == 0:
                v = int(rng.integers(0, 2))
                w.write_bit(v)
            elif kind == 1:
                v = int(rng.integers(0, 2**12))
                w.write_bits(v, 12)
            elif kind == 2:
                v = int(rng.integers(0, 900))
                w.write_ue(v)
            else:
                v = int(rng.integers(-900, 900))
                w.write_se(v)
            ops.append((int(kind), v))
        r = BitReader(w.getvalue())
        for kind, v in ops:
            got = [r.read_bit, lambda: r.read_bits(12), r.read_ue, r.read_se][kind]()
            assert got == v
        assert r.bits_read == w.bit_count

    def test_unary_round_trip(self):
        w = BitWriter()
        for n in (0, 1, 7, 30):
            w.write_unary(n)
        r = BitReader(w.getvalue())
        assert [r.read_unary() for _ in range(4)] == [0, 1, 7, 30]

    def test_read_past_end(self):
        r = BitReader(b"\xff")
        r.read_bits(8)
        with pytest.raises(BitstreamError, match="past end"):
            r.read_bit()

    def test_unary_sanity_limit(self):
        r = BitReader(b"\xff" * 8)
        with pytest.raises(BitstreamError, match="unary run"):
            r.read_unary(limit=30)

    def test_ue_prefix_sanity_limit(self):
        with pytest.raises(BitstreamError, match="prefix exceeds"):
            BitReader(bytes(12)).read_ue()

    def test_write_ue_rejects_negative(self):
        with pytest.raises(ValueError, match="non-negative"):
            BitWriter().write_ue(-1)

    def test_reader_honors_bit_offset(self):
        w = BitWriter()
        w.write_bits(0, 8)
        w.write_ue(5)
        r = BitReader(w.getvalue(), bit_offset=8)
        assert r.read_ue() == 5


def dct_matrix(n):
    c = np.zeros((n, n))
    for k in range(n):
        for i in range(n):
            scale = np.sqrt(1.0 / n) if k == 0 else np.sqrt(2.0 / n)
            c[k, i] = scale * np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    return c


class TestTransform:
    def test_qstep_ladder(self):
        assert qstep(4) == 1.0
        assert qstep(10) == 2.0
        assert qstep(16) == 4.0
        assert qstep(28) == 16.0
        for qp in range(0, 46):
            assert qstep(qp + 6) == pytest.approx(2.0 * qstep(qp), rel=1e-12)

    def test_forward_matches_matrix_oracle(self):
        rng = np.random.default_rng(1)
        for n in (4, 8, 16):
            c = dct_matrix(n)
            x = rng.integers(-255, 256, (n, n)).astype(np.float64)
            np.testing.assert_allclose(forward_dct(x), c @ x @ c.T, atol=1e-9)

    def test_inverse_matches_matrix_oracle(self):
        rng = np.random.default_rng(2)
        c = dct_matrix(8)
        y = rng.standard_normal((8, 8))
        np.testing.assert_allclose(inverse_dct(y), c.T @ y @ c, atol=1e-9)

    def test_round_trip_identity(self):
        rng = np.random.default_rng(3)
        x = rng.integers(-255, 256, (16, 16)).astype(np.float64)
        np.testing.assert_allclose(inverse_dct(forward_dct(x)), x, atol=1e-10)

    def test_flat_block_concentrates_in_dc(self):
        y = forward_dct(np.full((8, 8), 3.0))
        assert y[0, 0] == pytest.approx(24.0)
        assert np.max(np.abs(y.ravel()[1:])) < 1e-12

    def test_quantize_rounds_half_away(self):
        rng = np.random.default_rng(4)
        x = rng.integers(-255, 256, (8, 8))
        levels = transform_quantize(x, 4)  # step 1.0
        coeffs = forward_dct(x)
        expect = np.sign(coeffs) * np.floor(np.abs(coeffs) + 0.5)
        assert np.array_equal(levels, expect.astype(np.int32))

    def test_quantize_error_bound(self):
        rng = np.random.default_rng(5)
        for qp in (10, 28, 40):
            x = rng.integers(-255, 256, (8, 8))
            err = np.abs(
                forward_dct(x) - transform_quantize(x, qp).astype(np.float64) * qstep(qp)
            )
            assert err.max() <= qstep(qp) / 2 + 1e-9

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError, match="square"):
            transform_quantize(np.zeros((8, 4)), 30)
        with pytest.raises(ValueError, match="square"):
            transform_quantize(np.zeros((12, 12)), 30)

    def test_reconstruct_rounds_and_clips(self):
        pred = np.array([[250, 10], [128, 0]], dtype=np.uint8)
        residual = np.array([[10.0, -20.0], [0.5, -0.4]])
        out = reconstruct_block(pred, residual)
        assert out.dtype == np.uint8
        assert np.array_equal(out, [[255, 0], [129, 0]])

    def test_high_qp_coarsens_levels(self):
        rng = np.random.default_rng(6)
        x = rng.integers(-100, 101, (8, 8))
        fine = np.count_nonzero(transform_quantize(x, 10))
        coarse = np.count_nonzero(transform_quantize(x, 46))
        assert coarse <= fine


class TestIntraPrediction:
    def make_recon(self, seed=7, size=32):
        rng = np.random.default_rng(seed)
        return rng.integers(0, 256, (size, size), dtype=np.uint8)

    def test_references_default_at_frame_origin(self):
        recon = self.make_recon()
        top, left, tr, bl = gather_references(recon, BlockRegion(0, 0, 8, 8))
        assert np.all(top == 128) and np.all(left == 128)
        assert (tr, bl) == (128, 128)

    def test_references_read_neighbors(self):
        recon = self.make_recon()
        top, left, tr, bl = gather_references(recon, BlockRegion(8, 8, 8, 8))
        assert np.array_equal(top, recon[7, 8:16])
        assert np.array_equal(left, recon[8:16, 7])
        assert tr == recon[7, 16]
        assert bl == recon[16, 7]

    def test_diagonal_extensions_replicate_at_edges(self):
        recon = self.make_recon(size=16)
        top, left, tr, bl = gather_references(recon, BlockRegion(8, 8, 8, 8))
        assert tr == top[-1]
        assert bl == left[-1]

    def test_dc_rounding(self):
        recon = np.full((16, 16), 0, dtype=np.uint8)
        recon[3, 4:8] = 10
        recon[4:8, 3] = 20
        pred = predict_intra(recon, BlockRegion(4, 4, 4, 4), MODE_DC)
        assert np.all(pred == (4 * 10 + 4 * 20 + 4) // 8)

    def test_horizontal_repeats_left_column(self):
        recon = self.make_recon()
        region = BlockRegion(8, 8, 8, 8)
        pred = predict_intra(recon, region, MODE_HORIZONTAL)
        for col in range(8):
            assert np.array_equal(pred[:, col], recon[8:16, 7])

    def test_vertical_repeats_top_row(self):
        recon = self.make_recon()
        region = BlockRegion(8, 8, 8, 8)
        pred = predict_intra(recon, region, MODE_VERTICAL)
        for row in range(8):
            assert np.array_equal(pred[row], recon[7, 8:16])

    def test_planar_matches_loop_oracle(self):
        recon = self.make_recon(seed=8)
        for w in (4, 8, 16):
            region = BlockRegion(8, 8, w, w)
            top, left, tr, bl = gather_references(recon, region)
            pred = predict_intra(recon, region, MODE_PLANAR)
            shift = int(np.log2(w) + 1)
            for y in range(w):
                for x in range(w):
                    horiz = (w - 1 - x) * int(left[y]) + (x + 1) * tr
                    vert = (w - 1 - y) * int(top[x]) + (y + 1) * bl
                    assert pred[y, x] == min(255, max(0, (horiz + vert + w) >> shift))

    def test_first_block_predicts_mid_gray(self):
        recon = np.full((16, 16), 128, dtype=np.uint8)
        for mode in (MODE_DC, MODE_HORIZONTAL, MODE_VERTICAL, MODE_PLANAR):
            assert np.all(predict_intra(recon, BlockRegion(0, 0, 8, 8), mode) == 128)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError, match="unknown intra mode"):
            predict_intra(self.make_recon(), BlockRegion(8, 8, 8, 8), 4)


class TestEntropy:
    def test_zigzag_4x4_reference_order(self):
        assert zigzag_order(4) == (
            (0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2), (0, 3), (1, 2),
            (2, 1), (3, 0), (3, 1), (2, 2), (1, 3), (2, 3), (3, 2), (3, 3),
        )

    def test_zigzag_visits_each_position_once(self):
        for n in (4, 8, 16, 32, 64):
            order = zigzag_order(n)
            assert len(set(order)) == n * n

    def test_scan_events_hand_case(self):
        block = np.zeros((4, 4), dtype=np.int32)
        block[0, 0] = 3
        block[1, 0] = -1
        assert scan_events(block) == [(0, 3), (1, -1)]

    def test_hand_counted_bit_length(self):
        # (0,3): 1 + 1 + 5 bits; (1,-1): 1 + 2 + 3 bits; end marker: 1
        block = np.zeros((4, 4), dtype=np.int32)
        block[0, 0] = 3
        block[1, 0] = -1
        assert coeff_bits(block) == 14

    def test_all_zero_block_is_one_bit(self):
        assert coeff_bits(np.zeros((8, 8), dtype=np.int32)) == 1

    def test_coeff_bits_matches_writer(self):
        rng = np.random.default_rng(9)
        for n in (4, 8, 16, 32, 64):
            for _ in range(10):
                block = np.zeros((n, n), dtype=np.int32)
                count = int(rng.integers(0, n))
                idx = rng.integers(0, n, (count, 2))
                for r, c in idx:
                    block[r, c] = int(rng.integers(-40, 41)) or 1
                w = BitWriter()
                write_coeffs(w, block)
                assert w.bit_count == coeff_bits(block)

    def test_round_trip(self):
        rng = np.random.default_rng(10)
        for n in (4, 8, 16, 32):
            block = np.zeros((n, n), dtype=np.int32)
            mask = rng.random((n, n)) < 0.2
            block[mask] = rng.integers(-100, 101, int(mask.sum()))
            w = BitWriter()
            write_coeffs(w, block)
            got = read_coeffs(BitReader(w.getvalue()), n)
            assert np.array_equal(got, block)

    def test_run_past_block_end_rejected(self):
        w = BitWriter()
        w.write_bit(1)
        w.write_unary(16)  # run of 16 in a 16-slot block
        w.write_se(5)
        w.write_bit(0)
        with pytest.raises(BitstreamError, match="run past end"):
            read_coeffs(BitReader(w.getvalue()), 4)

    def test_zero_level_rejected(self):
        w = BitWriter()
        w.write_bit(1)
        w.write_unary(0)
        w.write_se(0)
        w.write_bit(0)
        with pytest.raises(BitstreamError, match="zero level"):
            read_coeffs(BitReader(w.getvalue()), 4)


class TestStreamLayout:
    def test_header_is_18_bytes(self):
        assert HEADER_SIZE == 18
        assert len(pack_header(StreamHeader(640, 480, 64, 32))) == 18

    def test_header_round_trip(self):
        h = StreamHeader(123, 457, 32, 45, flags=3)
        assert unpack_header(pack_header(h)) == h

    def test_rejects_short_buffer(self):
        with pytest.raises(CodecError, match="too short"):
            unpack_header(b"RDMC")

    def test_rejects_bad_magic(self):
        data = b"XXXX" + pack_header(StreamHeader(8, 8, 64, 30))[4:]
        with pytest.raises(CodecError, match="bad magic"):
            unpack_header(data)

    def test_rejects_unknown_version(self):
        data = bytearray(pack_header(StreamHeader(8, 8, 64, 30)))
        data[4] = 9
        with pytest.raises(CodecError, match="unsupported stream version"):
            unpack_header(bytes(data))

    def test_rejects_zero_dimensions(self):
        with pytest.raises(CodecError, match="bad frame dimensions"):
            unpack_header(pack_header(StreamHeader(0, 8, 64, 30)))

    def test_rejects_out_of_range_qp(self):
        with pytest.raises(CodecError, match="base QP 52"):
            unpack_header(pack_header(StreamHeader(8, 8, 64, 52)))

    def test_padded_dims(self):
        assert padded_dims(100, 76) == (100, 76)
        assert padded_dims(99, 75) == (100, 76)
        assert padded_dims(1, 1) == (4, 4)

    def test_pad_frame_replicates_edges(self):
        arr = np.array([[1, 2], [3, 4]], dtype=np.uint8)
        out = pad_frame(arr, 4, 4)
        assert np.array_equal(out, [[1, 2, 2, 2], [3, 4, 4, 4], [3, 4, 4, 4], [3, 4, 4, 4]])

    def test_classify_cu(self):
        assert classify_cu(0, 0, 64, 64, 64) == CU_INSIDE
        assert classify_cu(32, 0, 64, 64, 64) == CU_FORCED_SPLIT
        assert classify_cu(64, 0, 64, 64, 64) == CU_OUTSIDE
        assert classify_cu(0, 60, 8, 64, 64) == CU_FORCED_SPLIT

    def test_child_origins_coding_order(self):
        assert child_origins(16, 32, 16) == ((16, 32), (24, 32), (16, 40), (24, 40))


def smooth_test_frame(seed, h, w):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:h, 0:w]
    img = 60 + 0.7 * xx + 0.5 * yy + rng.normal(0, 6, (h, w))
    return Frame(np.clip(np.round(img), 0, 255).astype(np.uint8))


class TestCodecRoundTrip:
    def test_fixed_qp_round_trip_single_ctu(self):
        frame = smooth_test_frame(11, 64, 64)
        result = encode_frame(frame, None, CodecConfig(ctu_size=64, base_qp=34))
        decoded = decode_frame(result.data)
        assert decoded == result.recon
        assert np.all(result.qp_map == 34)

    def test_round_trip_non_multiple_dimensions(self):
        frame = smooth_test_frame(12, 19, 51)
        result = encode_frame(frame, None, CodecConfig(ctu_size=32, base_qp=30))
        decoded = decode_frame(result.data)
        assert decoded == result.recon
        assert (decoded.width, decoded.height) == (51, 19)

    def test_rate_controlled_round_trip_with_qp_map(self):
        frame = smooth_test_frame(13, 128, 128)
        result = encode_frame(frame, None, CodecConfig(ctu_size=64, target_bpp=0.2))
        decoded, qp_map = decode_frame_details(result.data)
        assert decoded == result.recon
        assert np.array_equal(qp_map, result.qp_map)

    def test_total_bits_counts_payload_only(self):
        frame = smooth_test_frame(14, 64, 64)
        result = encode_frame(frame, None, CodecConfig(ctu_size=64, base_qp=40))
        assert result.total_bits == sum(s.actual_bits for s in result.stats)
        assert len(result.data) == HEADER_SIZE + -(-result.total_bits // 8)

    def test_fixed_qp_stats_mark_no_allocation(self):
        frame = smooth_test_frame(15, 64, 64)
        result = encode_frame(frame, None, CodecConfig(ctu_size=64, base_qp=34))
        s = result.stats[0]
        assert s.target_bits == 0 and s.anchor_index == -1
        assert np.isnan(s.m_c)
        assert result.target_pic is None and not result.overrun

    def test_decoding_truncated_stream_fails(self):
        frame = smooth_test_frame(16, 64, 64)
        result = encode_frame(frame, None, CodecConfig(ctu_size=64, base_qp=40))
        with pytest.raises(ValueError):
            decode_frame(result.data[: len(result.data) // 2])

    def test_decoding_garbage_fails(self):
        with pytest.raises(CodecError, match="bad magic"):
            decode_frame(b"not a stream at all")

    def test_reconstruction_error_bounded_at_low_qp(self):
        frame = smooth_test_frame(17, 64, 64)
        result = encode_frame(frame, None, CodecConfig(ctu_size=64, base_qp=10))
        err = np.abs(
            result.recon.samples.astype(np.int64) - frame.samples.astype(np.int64)
        )
        assert err.max() <= 8

    def test_config_validation(self):
        with pytest.raises(CodecError, match="ctu_size"):
            CodecConfig(ctu_size=48)
        with pytest.raises(CodecError, match="base_qp"):
            CodecConfig(base_qp=52)
        with pytest.raises(CodecError, match="target_bpp"):
            CodecConfig(target_bpp=-0.1)
        with pytest.raises(CodecError, match="rdo_lambda_scale"):
            CodecConfig(rdo_lambda_scale=0.0)

    def test_roim_grid_mismatch_rejected(self):
        from rdmc import BoxSet, build_roim, partition_ctus

        frame = smooth_test_frame(18, 128, 128)
        other = partition_ctus(Frame(np.zeros((128, 192), dtype=np.uint8)), 64)
        roim = build_roim(other, BoxSet([], 192, 128))
        with pytest.raises(CodecError, match="does not match"):
            encode_frame(frame, roim, CodecConfig(ctu_size=64, target_bpp=0.1))


class TestRdoAgainstOracle:
    def toy_case(self, seed):
        rng = np.random.default_rng(seed)
        size = 48
        base = rng.integers(0, 200, (size, size))
        yy, xx = np.mgrid[0:size, 0:size]
        textured = base * 0.3 + 80 + 30 * np.sin(xx / 3.0) * np.cos(yy / 4.0)
        orig = np.clip(np.round(textured), 0, 255).astype(np.uint8)
        recon = np.full((size, size), 128, dtype=np.uint8)
        recon[:16, :] = orig[:16, :]  # rows above the toy CTU already coded
        recon[:, :16] = orig[:, :16]
        return orig, recon

    @pytest.mark.parametrize("seed", range(5))
    def test_tree_cost_matches_plain_recursion(self, seed):
        orig, recon = self.toy_case(seed)
        qp = [28, 34, 38, 42, 46][seed % 5]
        cfg = CodecConfig(ctu_size=16, base_qp=qp)
        provider = get_provider(cfg.features)
        oracle_recon = recon.copy()
        tree = rdo_select(
            orig, recon, BlockRegion(16, 16, 16, 16), qp, cfg, provider
        )
        cost, bits = rdo_oracle.search(
            orig, oracle_recon, 16, 16, 16, qp, cfg.msfd, provider, cfg.rdo_lambda_scale
        )
        assert tree.cost == cost
        assert tree.bits == bits
        assert np.array_equal(recon, oracle_recon)


class TestRdoLambda:
    def test_doubles_every_three_qp(self):
        for qp in (10, 22, 37):
            assert rdo_lambda(qp + 3) == pytest.approx(2 * rdo_lambda(qp), rel=1e-12)

    def test_scale_is_linear(self):
        assert rdo_lambda(30, 2e-4) == pytest.approx(2 * rdo_lambda(30, 1e-4), rel=1e-12)
