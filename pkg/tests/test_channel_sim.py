import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polarium.bp import pe_updates_per_iteration
from polarium.channel import (awgn, bpsk_modulate, frame_streams, hard_slice, llr_from_channel,
                              sigma_from_ebn0)
from polarium.crc import CRC16
from polarium.polar import construct_bhattacharyya
from polarium.sim import (CSV_COLUMNS, DecoderSpec, SimConfig, SimStats, code_for_decoder, csv_rows,
                          default_workers, format_csv, parse_sweep, run_frames, run_simulation)


class TestChannel:
    def test_sigma(self):
        assert sigma_from_ebn0(2.0, 0.5) == pytest.approx(0.79433, abs=1e-5)
        assert sigma_from_ebn0(0.0, 1.0) == pytest.approx(math.sqrt(0.5), abs=1e-12)
        assert sigma_from_ebn0(400.0, 0.5) < 1e-19
        with pytest.raises(ValueError):
            sigma_from_ebn0(1.0, 0.0)

    def test_bpsk(self):
        assert bpsk_modulate([0, 1, 1]).tolist() == [1.0, -1.0, -1.0]
        assert bpsk_modulate(np.zeros(5, dtype=np.uint8)).tolist() == [1.0] * 5

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=64))
    def test_slice_inverts_bpsk(self, x):
        assert hard_slice(bpsk_modulate(x)).tolist() == x

    def test_awgn(self):
        s = bpsk_modulate(np.zeros(4))
        assert np.array_equal(awgn(s, 0.0, None), s)
        a = awgn(s, 0.7, np.random.default_rng(3))
        b = awgn(s, 0.7, np.random.default_rng(3))
        assert np.array_equal(a, b)

    def test_awgn_moments(self):
        sigma = 0.8
        n = awgn(np.zeros(10 ** 6), sigma, np.random.default_rng(7))
        assert abs(n.mean()) < 0.01 * sigma
        assert n.var() == pytest.approx(sigma ** 2, rel=0.01)

    def test_llr(self):
        assert llr_from_channel([0.5], math.sqrt(0.63096))[0] == pytest.approx(1.5849, abs=1e-4)
        assert llr_from_channel([0.0], 0.5)[0] == 0.0
        assert llr_from_channel([0.3, -0.2, 0.0], 0.0, clip=40).tolist() == [40, -40, 0]

    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=20), st.floats(0.05, 3))
    def test_llr_sign(self, y, sigma):
        assert np.array_equal(np.sign(llr_from_channel(y, sigma)), np.sign(y))

    def test_frame_streams_independent_of_order(self):
        a = frame_streams(5, 1, 9)[1].standard_normal(4)
        frame_streams(5, 1, 8)[1].standard_normal(100)
        assert np.array_equal(frame_streams(5, 1, 9)[1].standard_normal(4), a)
        assert not np.array_equal(frame_streams(5, 2, 9)[1].standard_normal(4), a)
        p, q = frame_streams(5, 1, 9)
        assert not np.array_equal(p.standard_normal(4), q.standard_normal(4))


class TestSweepAndConfig:
    def test_parse_sweep(self):
        assert parse_sweep("1:0.5:3") == (1.0, 1.5, 2.0, 2.5, 3.0)
        assert parse_sweep("2") == (2.0,)
        assert parse_sweep("2.0:0.6:3.2") == (2.0, 2.6, 3.2)
        for bad in ("1:0:2", "3:1:2", "a", "1:2"):
            with pytest.raises(ValueError):
                parse_sweep(bad)

    def test_config_validation(self):
        code = construct_bhattacharyya(8, 4)
        with pytest.raises(ValueError):
            SimConfig(code, DecoderSpec("bp"), (1.0,), max_frames=0)
        with pytest.raises(ValueError):
            SimConfig(code, DecoderSpec("bp"), (1.0,), min_block_errors=0)
        with pytest.raises(ValueError):
            SimConfig(code, DecoderSpec("bp"), ())
        with pytest.raises(ValueError):
            DecoderSpec("ldpc")

    def test_workers_env(self, monkeypatch):
        monkeypatch.setenv("POLARIUM_THREADS", "3")
        assert default_workers() == 3
        monkeypatch.setenv("POLARIUM_THREADS", "zero")
        with pytest.raises(ValueError):
            default_workers()

    def test_scl_crc_gets_crc(self):
        code = construct_bhattacharyya(64, 32)
        assert code_for_decoder(code, DecoderSpec("scl-crc")).crc == CRC16
        assert code_for_decoder(code, DecoderSpec("scl")).crc is None


class TestSimulation:
    def test_noiseless_point(self):
        code = construct_bhattacharyya(64, 32)
        for name in ("sc", "scl", "bp", "bpl"):
            cfg = SimConfig(code, DecoderSpec(name, list_size=2), (math.inf,), max_frames=20)
            st_ = run_simulation(cfg)[0]
            assert st_.frames == 20 and st_.bler == 0 and st_.ber == 0

    def test_very_low_snr_fails(self):
        code = construct_bhattacharyya(64, 32)
        cfg = SimConfig(code, DecoderSpec("bp", iters=50), (-10.0,), max_frames=1000,
                        min_block_errors=1000)
        st_ = run_simulation(cfg)[0]
        assert st_.frames == 1000
        assert 0.9 <= st_.bler <= 1.0

    def test_stops_at_block_errors(self):
        code = construct_bhattacharyya(64, 32)
        cfg = SimConfig(code, DecoderSpec("sc"), (0.0,), min_block_errors=17, chunk=5)
        st_ = run_simulation(cfg)[0]
        assert st_.block_errors == 17 and st_.completed
        # the stopping frame is the last one consumed
        last = run_frames(code, DecoderSpec("sc"), 0.0, [st_.frames - 1], 0)[0]
        assert last.block_error

    def test_thread_count_independent(self):
        code = construct_bhattacharyya(64, 32)
        outs = []
        for workers, chunk in ((1, 32), (4, 3), (8, 1)):
            cfg = SimConfig(code, DecoderSpec("bpl", list_size=4, iters=40), (1.0, 2.0),
                            min_block_errors=15, master_seed=99, workers=workers, chunk=chunk)
            outs.append(format_csv(csv_rows(cfg, run_simulation(cfg))))
        assert outs[0] == outs[1] == outs[2]

    @pytest.mark.parametrize("name", ["bp", "bpl"])
    def test_pe_counter_consistency(self, name):
        code = construct_bhattacharyya(64, 32)
        spec = DecoderSpec(name, list_size=4, iters=30)
        cfg = SimConfig(code, spec, (2.0,), max_frames=60, min_block_errors=10 ** 6)
        st_ = run_simulation(cfg)[0]
        assert st_.total_pe_updates == st_.total_iterations * pe_updates_per_iteration(code)
        assert st_.total_pe_updates == st_.total_iterations * 2 * 32 * 6

    def test_stats_invariants(self):
        code = construct_bhattacharyya(64, 32)
        for name in ("sc", "scl-crc", "bp"):
            cfg = SimConfig(code, DecoderSpec(name, list_size=4, iters=30), (0.0, 1.5),
                            max_frames=300, min_block_errors=40)
            for s in run_simulation(cfg):
                k = code_for_decoder(code, cfg.decoder).k
                assert s.block_errors <= s.frames and s.bit_errors <= s.frames * k
                assert s.bit_errors >= s.block_errors
                assert s.ber == s.bit_errors / (s.frames * k)
                assert s.bler == s.block_errors / s.frames

    def test_until_hook(self):
        code = construct_bhattacharyya(32, 16)
        cfg = SimConfig(code, DecoderSpec("sc"), (0.0, 1.0, 2.0), max_frames=50)
        assert len(run_simulation(cfg, until=lambda s: True)) == 1

    def test_all_zero_matches_random_payload(self):
        # symmetric channel and decoder: all-zero BLER estimates the same quantity
        code = construct_bhattacharyya(64, 32)
        spec = DecoderSpec("scl", list_size=1)
        frames = range(3000)
        a = sum(o.block_error for o in run_frames(code, spec, 2.0, frames, 1))
        b = sum(o.block_error for o in run_frames(code, spec, 2.0, frames, 2, all_zero=True))
        p = (a + b) / (2 * len(frames))
        sd = math.sqrt(2 * p * (1 - p) / len(frames))
        assert abs(a - b) / len(frames) < 4 * sd

    def test_bler_decreases_with_snr(self):
        code = construct_bhattacharyya(64, 32)
        cfg = SimConfig(code, DecoderSpec("scl", list_size=1), (0.0, 1.5, 3.0), min_block_errors=100)
        blers = [s.bler for s in run_simulation(cfg)]
        assert blers[0] > blers[1] > blers[2]

    def test_csv(self):
        code = construct_bhattacharyya(32, 16)
        cfg = SimConfig(code, DecoderSpec("bpl", list_size=2, iters=20), (1.0,), max_frames=10)
        text = format_csv(csv_rows(cfg, run_simulation(cfg)))
        header, row = text.strip().split("\n")
        assert header.split(",") == list(CSV_COLUMNS)
        fields = dict(zip(CSV_COLUMNS, row.split(",")))
        assert fields["decoder"] == "bpl" and fields["list"] == "2" and fields["iters_max"] == "20"
        assert fields["frames"] == "10" and fields["construction"] == "bhattacharyya"

    def test_stats_empty(self):
        s = SimStats(1.0, 4)
        assert s.ber == s.bler == s.avg_iterations == s.valid_fraction == 0.0
