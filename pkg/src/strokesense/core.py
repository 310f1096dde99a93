"""Core data model: sensor sequences, labels, and dataset containers.

All types here are immutable value objects; numpy arrays handed out by
accessors are copies or marked read-only, so instances can be shared
freely between workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

# Hard physical bounds for the sensor family (full-scale maxima).
ACCEL_LIMIT_G = 16.0
GYRO_LIMIT_DPS = 2000.0

NOMINAL_STEP_MS = 10
STEP_TOLERANCE_MS = 2

CHANNEL_NAMES = ("ax", "ay", "az", "gx", "gy", "gz")

# Glyph inventories used to index characters. char_index is a position in
# one of these strings, independent of any model's output ordering.
LATIN_ALPHABET = "abcdefghijklmnopqrstuvwxyz"
GEORGIAN_ALPHABET = "აბგდევზთიკლმნოპჟრსტუფქღყშჩცძწჭხჯჰ"


class Alphabet(str, Enum):
    LATIN = "latin"
    GEORGIAN = "georgian"

    @property
    def glyphs(self) -> str:
        return LATIN_ALPHABET if self is Alphabet.LATIN else GEORGIAN_ALPHABET


class Origin(str, Enum):
    RECORDED = "recorded"
    SYNTHETIC = "synthetic"
    AUGMENTED = "augmented"


# Augmented item ids are "<parent_id>#<suffix>"; the prefix before the first
# '#' names the root item of the lineage.
LINEAGE_SEP = "#"


def root_id(seq_id: str) -> str:
    """Root of an item's augmentation lineage (its own id for originals)."""
    return seq_id.split(LINEAGE_SEP, 1)[0]


@dataclass(frozen=True)
class SensorSample:
    """One 6-channel reading: acceleration in g, angular velocity in deg/s."""

    t_ms: int
    ax: float
    ay: float
    az: float
    gx: float
    gy: float
    gz: float

    def channels(self) -> tuple[float, ...]:
        return (self.ax, self.ay, self.az, self.gx, self.gy, self.gz)


@dataclass(frozen=True)
class SensorSequence:
    """Ordered samples for one pen session; matrix view is 6 x T."""

    samples: tuple[SensorSample, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def t_ms(self) -> tuple[int, ...]:
        return tuple(s.t_ms for s in self.samples)


@dataclass(frozen=True)
class CharacterLabel:
    alphabet: Alphabet
    char_index: int
    display_glyph: str

    def __post_init__(self):
        glyphs = self.alphabet.glyphs
        if not (0 <= self.char_index < len(glyphs)):
            raise ValueError(
                f"char_index {self.char_index} out of range for {self.alphabet.value}"
            )
        if not self.display_glyph:
            raise ValueError("display_glyph must be nonempty")

    @classmethod
    def from_glyph(cls, glyph: str, alphabet: Alphabet) -> "CharacterLabel":
        idx = alphabet.glyphs.find(glyph)
        if idx < 0:
            raise ValueError(f"glyph {glyph!r} not in {alphabet.value} alphabet")
        return cls(alphabet, idx, glyph)


@dataclass(frozen=True)
class LabeledSequence:
    seq_id: str
    sequence: SensorSequence
    label: CharacterLabel
    writer_id: str
    origin: Origin
    parent_id: str | None = None

    def __post_init__(self):
        if not self.writer_id:
            raise ValueError("writer_id must be nonempty")
        if self.origin is Origin.AUGMENTED and self.parent_id is None:
            raise ValueError(f"augmented item {self.seq_id!r} lacks a parent id")


@dataclass(frozen=True)
class Dataset:
    items: tuple[LabeledSequence, ...]
    class_list: tuple[CharacterLabel, ...]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "class_list", tuple(self.class_list))
        if len(set(self.class_list)) != len(self.class_list):
            raise ValueError("class_list contains duplicates")
        if len(self.class_list) < 2:
            raise ValueError("class_list needs at least 2 classes")
        known = set(self.class_list)
        for it in self.items:
            if it.label not in known:
                raise ValueError(f"item {it.seq_id!r} label not in class_list")

    @property
    def n_classes(self) -> int:
        return len(self.class_list)

    def class_index(self, label: CharacterLabel) -> int:
        return self.class_list.index(label)

    def writers(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for it in self.items:
            seen.setdefault(it.writer_id, None)
        return tuple(seen)

    def with_items(self, items) -> "Dataset":
        return replace(self, items=tuple(items))


def validate_sequence(seq: SensorSequence, strict_timing: bool = False) -> list[str]:
    """Check sequence invariants; returns one message per violation.

    strict_timing demands exact 10 ms steps (synthetic data); otherwise a
    +/-2 ms jitter per step is tolerated (ingested data).
    """
    violations = []
    if len(seq) < 1:
        return ["empty sequence"]
    prev_t = None
    for idx, s in enumerate(seq.samples):
        if s.t_ms < 0:
            violations.append(f"negative timestamp at index {idx}")
        for name, value in zip(CHANNEL_NAMES, s.channels()):
            if not np.isfinite(value):
                violations.append(f"non-finite channel {name} at index {idx}")
            elif name.startswith("a") and abs(value) > ACCEL_LIMIT_G:
                violations.append(f"acceleration bound exceeded in {name} at index {idx}")
            elif name.startswith("g") and abs(value) > GYRO_LIMIT_DPS:
                violations.append(f"angular-rate bound exceeded in {name} at index {idx}")
        if prev_t is not None:
            if s.t_ms <= prev_t:
                violations.append(f"non-increasing timestamp at index {idx}")
            else:
                step = s.t_ms - prev_t
                if strict_timing:
                    if step != NOMINAL_STEP_MS:
                        violations.append(f"non-nominal step of {step} ms at index {idx}")
                elif abs(step - NOMINAL_STEP_MS) > STEP_TOLERANCE_MS:
                    violations.append(f"step of {step} ms outside tolerance at index {idx}")
        prev_t = s.t_ms
    return violations


def to_matrix(seq: SensorSequence) -> np.ndarray:
    """6 x T matrix view; rows fixed as [ax, ay, az, gx, gy, gz]."""
    if len(seq) == 0:
        raise ValueError("empty sequence")
    m = np.array([s.channels() for s in seq.samples], dtype=np.float64).T
    return m


def from_matrix(m: np.ndarray, t_ms=None) -> SensorSequence:
    """Inverse of to_matrix; timestamps default to nominal 10 ms steps."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != 6 or m.shape[1] < 1:
        raise ValueError(f"expected a 6xT matrix, got shape {m.shape}")
    T = m.shape[1]
    if t_ms is None:
        t_ms = [NOMINAL_STEP_MS * j for j in range(T)]
    if len(t_ms) != T:
        raise ValueError("timestamp count does not match column count")
    samples = [
        SensorSample(int(t_ms[j]), *(float(m[i, j]) for i in range(6)))
        for j in range(T)
    ]
    return SensorSequence(tuple(samples))
