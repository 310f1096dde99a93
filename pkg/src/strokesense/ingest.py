"""Pen-device frame stream parsing and the on-disk dataset format.

Wire format (19-byte framed unit, little-endian):

    byte 0      sync 0xA5
    byte 1      flags: bit0 = button pressed, bits 1-7 reserved zero
    bytes 2-5   t_ms, u32
    bytes 6-17  six i16 sensor words in order ax, ay, az, gx, gy, gz
    byte 18     checksum: XOR of bytes 0-17

The stream scanner strips the sync byte and hands the remaining 18 bytes
to the parser; parse_frame also accepts the full 19-byte unit directly.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path

from .core import (
    Alphabet,
    CharacterLabel,
    Dataset,
    LabeledSequence,
    Origin,
    SensorSample,
    SensorSequence,
    root_id,
)

SYNC_BYTE = 0xA5
FRAME_SIZE = 19  # full framed unit including sync and checksum

_BODY = struct.Struct("<BI6h")  # flags, t_ms, six sensor words

SEQUENCE_HEADER = ["t_ms", "ax_g", "ay_g", "az_g", "gx_dps", "gy_dps", "gz_dps"]
MANIFEST_HEADER = ["id", "writer_id", "alphabet", "label_index", "glyph", "origin", "file"]


class FrameError(ValueError):
    pass


class DesyncError(FrameError):
    pass


class CorruptFrameError(FrameError):
    pass


class TruncatedFrameError(FrameError):
    pass


class DatasetIOError(ValueError):
    pass


@dataclass(frozen=True)
class Frame:
    button: bool
    t_ms: int
    raw: tuple[int, ...]  # six i16 words, [ax, ay, az, gx, gy, gz]

    def __post_init__(self):
        if len(self.raw) != 6:
            raise ValueError("frame carries exactly 6 sensor words")
        for w in self.raw:
            if not -32768 <= w <= 32767:
                raise ValueError(f"sensor word {w} outside i16 range")


@dataclass(frozen=True)
class CalibrationScale:
    """Raw-word-to-physical-unit sensitivities; defaults match the sensor
    family's narrowest full-scale settings (+/-2 g, +/-250 deg/s)."""

    accel_lsb_per_g: float = 16384.0
    gyro_lsb_per_dps: float = 131.0

    def __post_init__(self):
        if self.accel_lsb_per_g <= 0 or self.gyro_lsb_per_dps <= 0:
            raise ValueError("calibration sensitivities must be positive")


def encode_frame(f: Frame) -> bytes:
    """Serialize to the 19-byte framed unit (sync first, checksum last)."""
    flags = 0x01 if f.button else 0x00
    body = _BODY.pack(flags, f.t_ms & 0xFFFFFFFF, *f.raw)
    head = bytes([SYNC_BYTE]) + body
    checksum = 0
    for b in head:
        checksum ^= b
    return head + bytes([checksum])


def parse_frame(buf: bytes) -> Frame:
    """Decode one frame; accepts the 19-byte unit or its 18-byte tail."""
    if len(buf) == FRAME_SIZE:
        if buf[0] != SYNC_BYTE:
            raise DesyncError(f"desync: expected sync 0x{SYNC_BYTE:02X}, got 0x{buf[0]:02X}")
        tail = buf[1:]
    elif len(buf) == FRAME_SIZE - 1:
        tail = bytes(buf)
    else:
        raise TruncatedFrameError(f"truncated: {len(buf)} bytes")
    checksum = SYNC_BYTE
    for b in tail[:-1]:
        checksum ^= b
    if checksum != tail[-1]:
        raise CorruptFrameError("corrupt frame: checksum mismatch")
    flags, t_ms, *raw = _BODY.unpack(tail[:-1])
    if flags & 0xFE:
        raise CorruptFrameError("corrupt frame: reserved flag bits set")
    return Frame(button=bool(flags & 0x01), t_ms=t_ms, raw=tuple(raw))


def scan_stream(data: bytes) -> tuple[list[Frame], int]:
    """Extract every valid frame from a byte stream, resynchronizing on
    corruption by scanning forward for the next sync byte that yields a
    valid checksum. Returns (frames, bytes skipped)."""
    frames = []
    skipped = 0
    pos = 0
    n = len(data)
    while pos + FRAME_SIZE <= n:
        if data[pos] != SYNC_BYTE:
            pos += 1
            skipped += 1
            continue
        try:
            frames.append(parse_frame(data[pos + 1 : pos + FRAME_SIZE]))
            pos += FRAME_SIZE
        except FrameError:
            pos += 1
            skipped += 1
    return frames, skipped + (n - pos)


def frames_to_samples(frames, cal: CalibrationScale) -> list[SensorSample]:
    """Convert raw words to physical units, rebasing time to the first frame."""
    if not frames:
        return []
    t0 = frames[0].t_ms
    samples = []
    for f in frames:
        a = [w / cal.accel_lsb_per_g for w in f.raw[:3]]
        g = [w / cal.gyro_lsb_per_dps for w in f.raw[3:]]
        samples.append(SensorSample(f.t_ms - t0, *a, *g))
    return samples


def segment_sessions(frames, cal: CalibrationScale, min_len: int = 10) -> list[SensorSequence]:
    """One sequence per maximal button-held run; short runs are discarded."""
    sequences = []
    run: list[Frame] = []
    for f in frames:
        if f.button:
            run.append(f)
        elif run:
            if len(run) >= min_len:
                sequences.append(SensorSequence(tuple(frames_to_samples(run, cal))))
            run = []
    if len(run) >= min_len:
        sequences.append(SensorSequence(tuple(frames_to_samples(run, cal))))
    return sequences


def _format_value(v: float) -> str:
    return f"{v:.9g}"


def write_dataset(ds: Dataset, directory) -> Path:
    """Write one CSV per sequence plus manifest.csv; returns the manifest path.

    classes.csv pins the class list (order defines the model output index)
    and metadata.json carries free-form metadata, so read_dataset restores
    the dataset exactly up to float-text round-trip.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest_path = directory / "manifest.csv"
    with open(manifest_path, "w", newline="", encoding="utf-8") as mf:
        writer = csv.writer(mf)
        writer.writerow(MANIFEST_HEADER)
        for i, item in enumerate(ds.items):
            fname = f"seq_{i:05d}.csv"
            with open(directory / fname, "w", newline="", encoding="utf-8") as sf:
                sw = csv.writer(sf)
                sw.writerow(SEQUENCE_HEADER)
                for s in item.sequence.samples:
                    sw.writerow([s.t_ms] + [_format_value(v) for v in s.channels()])
            writer.writerow(
                [
                    item.seq_id,
                    item.writer_id,
                    item.label.alphabet.value,
                    item.label.char_index,
                    item.label.display_glyph,
                    item.origin.value,
                    fname,
                ]
            )
    with open(directory / "classes.csv", "w", newline="", encoding="utf-8") as cf:
        cw = csv.writer(cf)
        cw.writerow(["alphabet", "label_index", "glyph"])
        for c in ds.class_list:
            cw.writerow([c.alphabet.value, c.char_index, c.display_glyph])
    if ds.metadata:
        with open(directory / "metadata.json", "w", encoding="utf-8") as jf:
            json.dump(ds.metadata, jf, indent=2, sort_keys=True, ensure_ascii=False)
    return manifest_path


def _read_sequence_csv(path: Path) -> SensorSequence:
    samples = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != SEQUENCE_HEADER:
            raise DatasetIOError(f"{path.name}: bad header line 1")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 7:
                raise DatasetIOError(f"{path.name}: malformed CSV at line {lineno}")
            try:
                samples.append(SensorSample(int(row[0]), *(float(v) for v in row[1:])))
            except ValueError as exc:
                raise DatasetIOError(f"{path.name}: malformed CSV at line {lineno}") from exc
    if not samples:
        raise DatasetIOError(f"{path.name}: empty sequence file")
    return SensorSequence(tuple(samples))


def read_dataset(manifest_path) -> Dataset:
    """Inverse of write_dataset."""
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.csv"
    if not manifest_path.exists():
        raise DatasetIOError(f"manifest not found: {manifest_path}")
    directory = manifest_path.parent

    items = []
    seen_ids = set()
    appearance_order: list[CharacterLabel] = []
    with open(manifest_path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise DatasetIOError("manifest: bad header line 1")
        for rowno, row in enumerate(reader, start=1):
            if len(row) != len(MANIFEST_HEADER):
                raise DatasetIOError(f"manifest: malformed CSV at line {rowno + 1}")
            seq_id, writer_id, alphabet, label_index, glyph, origin, fname = row
            if seq_id in seen_ids:
                raise DatasetIOError(f"duplicate id {seq_id!r} at row {rowno}")
            seen_ids.add(seq_id)
            seq_path = directory / fname
            if not seq_path.exists():
                raise DatasetIOError(f"missing sequence file row {rowno}")
            try:
                label = CharacterLabel(Alphabet(alphabet), int(label_index), glyph)
                origin_v = Origin(origin)
            except ValueError as exc:
                raise DatasetIOError(f"manifest: malformed CSV at line {rowno + 1}") from exc
            if label not in appearance_order:
                appearance_order.append(label)
            parent = root_id(seq_id) if origin_v is Origin.AUGMENTED else None
            items.append(
                LabeledSequence(
                    seq_id=seq_id,
                    sequence=_read_sequence_csv(seq_path),
                    label=label,
                    writer_id=writer_id,
                    origin=origin_v,
                    parent_id=parent,
                )
            )

    classes_path = directory / "classes.csv"
    if classes_path.exists():
        class_list = []
        with open(classes_path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            next(reader, None)
            for row in reader:
                class_list.append(CharacterLabel(Alphabet(row[0]), int(row[1]), row[2]))
    else:
        class_list = appearance_order

    metadata: dict[str, str] = {}
    meta_path = directory / "metadata.json"
    if meta_path.exists():
        with open(meta_path, encoding="utf-8") as f:
            metadata = json.load(f)

    return Dataset(items=tuple(items), class_list=tuple(class_list), metadata=metadata)
