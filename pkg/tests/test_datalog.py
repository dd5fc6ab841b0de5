"""Log container round-trips, fail-closed reads, splits, and sequence windows."""
import numpy as np
import pytest

from ftl.datalog import (
    FrameRecord,
    LogFormatError,
    LogHeader,
    dequantize_image,
    denormalize_targets,
    make_sequences,
    normalize_targets,
    quantize_image,
    read_log,
    split_frames,
    split_laps,
    write_log,
)

SHAPE = (6, 8, 10)


def record(tick, steering=0.0, throttle=0.0, present=True, ped="A", seed=None):
    rng = np.random.default_rng(tick if seed is None else seed)
    img = rng.integers(0, 256, size=SHAPE, dtype=np.uint8)
    return FrameRecord(tick=tick, timestamp=tick * 0.1, image_u8=img,
                       steering=steering, throttle=throttle,
                       present=present, ped_id=ped)


def header(**kw):
    return LogHeader(image_shape=SHAPE, **kw)


class TestRoundTrip:
    def test_empty_log(self, tmp_path):
        path = tmp_path / "empty.ftl"
        write_log(path, [], header(scenario="script = mcn_stills"))
        hdr, records = read_log(path)
        assert records == []
        assert hdr.image_shape == SHAPE
        assert hdr.scenario == "script = mcn_stills"

    def test_hundred_random_records_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        records = [
            record(t,
                   steering=float(rng.uniform(-100, 100)),
                   throttle=float(rng.uniform(0, 100)),
                   present=bool(rng.integers(2)),
                   ped=[None, "A", "B"][int(rng.integers(3))])
            for t in range(100)
        ]
        path = tmp_path / "r.ftl"
        write_log(path, records, header())
        _, got = read_log(path)
        assert len(got) == 100
        for a, b in zip(records, got):
            assert a.tick == b.tick
            assert a.timestamp == b.timestamp
            assert a.steering == b.steering  # float64 stored verbatim
            assert a.throttle == b.throttle
            assert a.present == b.present
            assert a.ped_id == b.ped_id
            assert np.array_equal(a.image_u8, b.image_u8)

    def test_quantization_error_bound(self):
        rng = np.random.default_rng(1)
        img = rng.uniform(size=(6, 4, 4))
        back = dequantize_image(quantize_image(img))
        assert np.max(np.abs(back - img)) <= 1.0 / 255.0

    def test_header_metadata_round_trip(self, tmp_path):
        hdr = header(dt=0.05, scenario="script = clock_lap\nseed = 9",
                     extra={"lap": "3", "direction": "cw"})
        path = tmp_path / "h.ftl"
        write_log(path, [record(0)], hdr)
        got, _ = read_log(path)
        assert got.dt == 0.05
        assert got.extra["lap"] == "3"
        assert got.scenario == "script = clock_lap\nseed = 9"


class TestFailClosed:
    def test_truncated_record_reports_offset(self, tmp_path):
        path = tmp_path / "t.ftl"
        write_log(path, [record(0), record(1)], header())
        raw = path.read_bytes()
        cut = len(raw) - 17
        path.write_bytes(raw[:cut])
        with pytest.raises(LogFormatError) as err:
            read_log(path)
        assert err.value.byte_offset > 0
        assert "truncated record 1" in str(err.value)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.ftl"
        write_log(path, [], header())
        raw = bytearray(path.read_bytes())
        raw[0] = ord("X")
        path.write_bytes(bytes(raw))
        with pytest.raises(LogFormatError, match="magic"):
            read_log(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "v.ftl"
        write_log(path, [], header())
        raw = bytearray(path.read_bytes())
        raw[8] = 99
        path.write_bytes(bytes(raw))
        with pytest.raises(LogFormatError, match="version"):
            read_log(path)

    def test_out_of_order_ticks_rejected_on_write(self, tmp_path):
        with pytest.raises(ValueError, match="strictly increasing"):
            write_log(tmp_path / "o.ftl", [record(3), record(2)], header())

    def test_range_invariants_enforced(self):
        with pytest.raises(ValueError):
            record(0, steering=150.0)
        with pytest.raises(ValueError):
            record(0, throttle=-1.0)


class TestSplits:
    def test_frame_split_sizes_disjoint_complete(self):
        records = list(range(1000))
        train, test = split_frames(records, 0.20, seed=3)
        assert len(train) == 800 and len(test) == 200
        assert set(train) | set(test) == set(records)
        assert set(train) & set(test) == set()

    def test_lap_split_holds_out_whole_laps(self):
        # the published protocol: 18 base logs split 16 train / 2 test
        laps = [f"lap{i}" for i in range(18)]
        train, test = split_laps(laps, test_fraction=2 / 18, seed=4)
        assert len(train) == 16 and len(test) == 2
        assert set(train) & set(test) == set()

    def test_lap_split_default_fraction(self):
        laps = [f"lap{i}" for i in range(10)]
        train, test = split_laps(laps, 0.20, seed=5)
        assert len(train) == 8 and len(test) == 2

    def test_same_seed_same_split(self):
        records = list(range(200))
        assert split_frames(records, 0.2, seed=6) == split_frames(records, 0.2, seed=6)
        laps = list(range(15))
        assert split_laps(laps, 0.2, seed=7) == split_laps(laps, 0.2, seed=7)

    def test_too_few_laps_rejected(self):
        with pytest.raises(ValueError):
            split_laps(["only"], 0.2, seed=0)


class TestSequences:
    def lap(self, n):
        return [record(t, steering=float(t), throttle=float(t) / 2.0)
                for t in range(n)]

    def test_five_frame_lap_single_sequence(self):
        seqs = make_sequences(self.lap(5), t=5)
        assert len(seqs) == 1
        assert seqs[0][0] == (0, 1, 2, 3, 4)

    def test_window_count_is_length_minus_four(self):
        for n in (5, 9, 30):
            assert len(make_sequences(self.lap(n), t=5)) == n - 4

    def test_short_lap_rejected(self):
        with pytest.raises(ValueError, match="shorter"):
            make_sequences(self.lap(4), t=5)

    def test_target_is_final_frame_normalized(self):
        lap = self.lap(8)
        seqs = make_sequences(lap, t=5)
        idx, target = seqs[-1]
        assert idx[-1] == 7
        assert np.array_equal(target, [7.0 / 100.0, 3.5 / 100.0])
        back = denormalize_targets(target)
        # binary floating point cannot scale by 100 losslessly; the round
        # trip is exact to 1 ulp of the actuator range
        assert back[0] == pytest.approx(7.0, abs=1e-12)
        assert back[1] == pytest.approx(3.5, abs=1e-12)

    def test_windows_never_cross_lap_boundaries(self):
        laps = [self.lap(7), self.lap(9), self.lap(6)]
        for lap in laps:
            for idx, _ in make_sequences(lap, t=5):
                assert max(idx) - min(idx) == 4
                assert max(idx) < len(lap)

    def test_normalize_round_trip(self):
        pair = normalize_targets(-37.5, 62.5)
        back = denormalize_targets(pair)
        assert back[0] == pytest.approx(-37.5, abs=1e-12)
        assert back[1] == pytest.approx(62.5, abs=1e-12)
