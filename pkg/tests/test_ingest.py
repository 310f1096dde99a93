import itertools

import numpy as np
import pytest

from strokesense.core import Alphabet, CharacterLabel, Dataset, LabeledSequence, Origin
from strokesense.ingest import (
    FRAME_SIZE,
    SYNC_BYTE,
    CalibrationScale,
    CorruptFrameError,
    DatasetIOError,
    DesyncError,
    Frame,
    FrameError,
    TruncatedFrameError,
    encode_frame,
    frames_to_samples,
    parse_frame,
    read_dataset,
    scan_stream,
    segment_sessions,
    write_dataset,
)
from conftest import make_dataset, make_sequence


def random_frame(rng, t_ms=None):
    return Frame(
        button=bool(rng.integers(2)),
        t_ms=int(rng.integers(0, 2**32)) if t_ms is None else t_ms,
        raw=tuple(int(w) for w in rng.integers(-32768, 32768, size=6)),
    )


def button_frames(bits):
    """Valid frame run with the given button pattern at 10 ms steps."""
    return [
        Frame(button=bool(b), t_ms=10 * i, raw=(0, 0, 16384, 0, 0, 0))
        for i, b in enumerate(bits)
    ]


# -- frame wire format -------------------------------------------------------

def test_parse_zero_payload_frame():
    f = Frame(button=True, t_ms=0, raw=(0, 0, 0, 0, 0, 0))
    buf = encode_frame(f)
    assert len(buf) == FRAME_SIZE
    assert buf[0] == SYNC_BYTE
    assert buf[1] == 0x01
    assert parse_frame(buf) == f


def test_parse_accepts_sync_stripped_tail():
    f = Frame(button=False, t_ms=12345, raw=(1, -2, 3, -4, 5, -6))
    buf = encode_frame(f)
    assert parse_frame(buf[1:]) == f


def test_checksum_flip_rejected():
    buf = bytearray(encode_frame(Frame(button=True, t_ms=0, raw=(0,) * 6)))
    buf[-1] ^= 0xFF
    with pytest.raises(CorruptFrameError):
        parse_frame(bytes(buf))


def test_bad_sync_and_truncation():
    buf = bytearray(encode_frame(Frame(button=False, t_ms=9, raw=(0,) * 6)))
    buf[0] = 0x00
    with pytest.raises(DesyncError):
        parse_frame(bytes(buf))
    with pytest.raises(TruncatedFrameError):
        parse_frame(bytes(buf[:10]))


def test_reserved_flag_bits_rejected():
    f = Frame(button=False, t_ms=0, raw=(0,) * 6)
    buf = bytearray(encode_frame(f))
    buf[1] |= 0x40
    buf[-1] ^= 0x40  # keep the checksum consistent so only the flags rule fires
    with pytest.raises(CorruptFrameError, match="reserved"):
        parse_frame(bytes(buf))


def test_round_trip_random_frames(rng):
    for _ in range(2000):
        f = random_frame(rng)
        assert parse_frame(encode_frame(f)) == f


def test_distinct_frames_encode_distinctly(rng):
    seen = set()
    for _ in range(500):
        seen.add(encode_frame(random_frame(rng)))
    assert len(seen) == 500


def test_every_single_byte_corruption_rejected(rng):
    # any one-byte change must fail parsing at the frame's own position
    f = random_frame(rng)
    buf = encode_frame(f)
    for pos in range(FRAME_SIZE):
        for delta in (0x01, 0x80, 0xFF):
            bad = bytearray(buf)
            bad[pos] ^= delta
            with pytest.raises(FrameError):
                parse_frame(bytes(bad))


def test_frame_raw_word_range_checked():
    with pytest.raises(ValueError, match="i16"):
        Frame(button=False, t_ms=0, raw=(40000, 0, 0, 0, 0, 0))
    with pytest.raises(ValueError, match="6 sensor words"):
        Frame(button=False, t_ms=0, raw=(0, 0, 0))


# -- stream scanning ---------------------------------------------------------

def test_scan_clean_stream(rng):
    frames = [random_frame(rng, t_ms=10 * i) for i in range(50)]
    data = b"".join(encode_frame(f) for f in frames)
    out, skipped = scan_stream(data)
    assert out == frames
    assert skipped == 0


def test_scan_resynchronizes_after_garbage(rng):
    frames = [random_frame(rng, t_ms=10 * i) for i in range(10)]
    chunks = [encode_frame(f) for f in frames]
    data = b"\x00\x17\x2a" + b"".join(chunks[:5]) + b"junkjunk" + b"".join(chunks[5:])
    out, skipped = scan_stream(data)
    assert out == frames
    assert skipped == 3 + 8


def test_scan_drops_corrupted_frame(rng):
    frames = [random_frame(rng, t_ms=10 * i) for i in range(6)]
    chunks = [encode_frame(f) for f in frames]
    hurt = bytearray(chunks[2])
    hurt[7] ^= 0xFF
    data = b"".join(chunks[:2]) + bytes(hurt) + b"".join(chunks[3:])
    out, _ = scan_stream(data)
    assert frames[2] not in out
    assert out[:2] == frames[:2]
    assert out[-3:] == frames[3:]


def test_scan_reports_trailing_partial_frame(rng):
    f = random_frame(rng)
    data = encode_frame(f) + encode_frame(f)[:7]
    out, skipped = scan_stream(data)
    assert out == [f]
    assert skipped == 7


# -- unit conversion ---------------------------------------------------------

def test_frames_to_samples_sensitivity():
    cal = CalibrationScale()
    fs = [Frame(button=True, t_ms=1000, raw=(16384, 0, 0, 131, 0, 0))]
    (s,) = frames_to_samples(fs, cal)
    assert s.ax == 1.0
    assert s.gx == 1.0
    assert s.t_ms == 0  # rebased


def test_frames_to_samples_zero_and_custom_scale():
    fs = [Frame(button=False, t_ms=50, raw=(0,) * 6),
          Frame(button=False, t_ms=60, raw=(200, 0, 0, 0, 0, 0))]
    out = frames_to_samples(fs, CalibrationScale(accel_lsb_per_g=100.0, gyro_lsb_per_dps=10.0))
    assert out[0].channels() == (0.0,) * 6
    assert out[1].ax == 2.0
    assert (out[0].t_ms, out[1].t_ms) == (0, 10)
    assert frames_to_samples([], CalibrationScale()) == []


def test_calibration_scale_positive():
    with pytest.raises(ValueError):
        CalibrationScale(accel_lsb_per_g=0.0)
    with pytest.raises(ValueError):
        CalibrationScale(gyro_lsb_per_dps=-1.0)


# -- session segmentation ----------------------------------------------------

def rising_edge_oracle(bits, min_len):
    """Independent count of maximal 1-runs meeting min_len."""
    runs = []
    n = 0
    for b in bits:
        if b:
            n += 1
        else:
            if n >= min_len:
                runs.append(n)
            n = 0
    if n >= min_len:
        runs.append(n)
    return runs


@pytest.mark.parametrize("min_len", [1, 2, 3])
def test_segment_sessions_exhaustive_short_strings(min_len):
    cal = CalibrationScale()
    for length in range(1, 11):
        for bits in itertools.product((0, 1), repeat=length):
            expected = rising_edge_oracle(bits, min_len)
            seqs = segment_sessions(button_frames(bits), cal, min_len=min_len)
            assert [len(s) for s in seqs] == expected, (bits, min_len)


def test_segment_sessions_rebases_timestamps():
    frames = button_frames([0, 0, 1, 1, 1, 0, 1, 1])
    seqs = segment_sessions(frames, CalibrationScale(), min_len=2)
    assert len(seqs) == 2
    assert seqs[0].t_ms == (0, 10, 20)
    assert seqs[1].t_ms == (0, 10)


def test_segment_sessions_examples():
    cal = CalibrationScale()
    assert [len(s) for s in segment_sessions(button_frames([0, 1, 1, 1, 0]), cal, 2)] == [3]
    assert [len(s) for s in segment_sessions(button_frames([1, 0, 1]), cal, 1)] == [1, 1]
    assert segment_sessions(button_frames([0, 0, 0]), cal, 1) == []


# -- dataset files -----------------------------------------------------------

def test_write_read_round_trip(rng, tmp_path):
    ds = make_dataset(rng, glyphs="abcd", writers=("w1", "w2", "w3"), per_writer=2)
    manifest = write_dataset(ds, tmp_path / "ds")
    back = read_dataset(manifest)
    assert back.metadata == ds.metadata
    assert back.class_list == ds.class_list
    assert len(back.items) == len(ds.items)
    for a, b in zip(ds.items, back.items):
        assert a.seq_id == b.seq_id
        assert a.writer_id == b.writer_id
        assert a.label == b.label
        assert a.origin == b.origin
        ma, mb = np.array([s.channels() for s in a.sequence.samples]), np.array(
            [s.channels() for s in b.sequence.samples])
        denom = np.maximum(np.abs(ma), 1e-30)
        assert (np.abs(ma - mb) / denom).max() <= 1e-7
        assert a.sequence.t_ms == b.sequence.t_ms


def test_round_trip_preserves_lineage(rng, tmp_path):
    base = make_dataset(rng, glyphs="ab", writers=("w1",), per_writer=1)
    child = LabeledSequence(
        seq_id=base.items[0].seq_id + "#noise0",
        sequence=base.items[0].sequence,
        label=base.items[0].label,
        writer_id="w1",
        origin=Origin.AUGMENTED,
        parent_id=base.items[0].seq_id,
    )
    ds = base.with_items(base.items + (child,))
    back = read_dataset(write_dataset(ds, tmp_path / "ds"))
    got = back.items[-1]
    assert got.origin is Origin.AUGMENTED
    assert got.parent_id == base.items[0].seq_id


def test_read_missing_sequence_file(rng, tmp_path):
    ds = make_dataset(rng, glyphs="ab", writers=("w1",), per_writer=2)
    manifest = write_dataset(ds, tmp_path / "ds")
    (tmp_path / "ds" / "seq_00001.csv").unlink()
    with pytest.raises(DatasetIOError, match="row 2"):
        read_dataset(manifest)


def test_read_duplicate_id(rng, tmp_path):
    ds = make_dataset(rng, glyphs="ab", writers=("w1",), per_writer=1)
    manifest = write_dataset(ds, tmp_path / "ds")
    lines = manifest.read_text().splitlines()
    lines.append(lines[1])
    manifest.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetIOError, match="duplicate id"):
        read_dataset(manifest)


def test_read_malformed_sequence_csv(rng, tmp_path):
    ds = make_dataset(rng, glyphs="ab", writers=("w1",), per_writer=1)
    manifest = write_dataset(ds, tmp_path / "ds")
    seq = tmp_path / "ds" / "seq_00000.csv"
    seq.write_text("t_ms,ax_g,ay_g,az_g,gx_dps,gy_dps,gz_dps\n0,1,2\n")
    with pytest.raises(DatasetIOError, match="line 2"):
        read_dataset(manifest)


def test_read_missing_manifest(tmp_path):
    with pytest.raises(DatasetIOError):
        read_dataset(tmp_path / "nope" / "manifest.csv")


def test_class_order_preserved_over_round_trip(rng, tmp_path):
    # class_list order defines the model output index, so it must not be
    # silently re-sorted by the file layer
    alphabet = Alphabet.LATIN
    class_list = tuple(CharacterLabel.from_glyph(g, alphabet) for g in "cab")
    base = make_dataset(rng, glyphs="abc", writers=("w1",), per_writer=1)
    ds = Dataset(items=base.items, class_list=class_list, metadata={})
    back = read_dataset(write_dataset(ds, tmp_path / "ds"))
    assert back.class_list == class_list
