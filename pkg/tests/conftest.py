"""Shared builders for test datasets and sequences."""

import numpy as np
import pytest

from strokesense.core import (
    Alphabet,
    CharacterLabel,
    Dataset,
    LabeledSequence,
    Origin,
    SensorSample,
    SensorSequence,
)


def make_sequence(rng, length=30, accel_scale=2.0, gyro_scale=200.0):
    """Random valid sequence at exact 10 ms steps, well inside sensor bounds."""
    samples = []
    for j in range(length):
        a = rng.uniform(-accel_scale, accel_scale, 3)
        g = rng.uniform(-gyro_scale, gyro_scale, 3)
        samples.append(SensorSample(10 * j, *a, *g))
    return SensorSequence(tuple(samples))


def make_dataset(rng, glyphs="abc", writers=("w1", "w2"), per_writer=3, length=30):
    alphabet = Alphabet.LATIN
    class_list = tuple(CharacterLabel.from_glyph(g, alphabet) for g in glyphs)
    items = []
    for w in writers:
        for g in glyphs:
            for r in range(per_writer):
                items.append(
                    LabeledSequence(
                        seq_id=f"{w}_{g}_{r}",
                        sequence=make_sequence(rng, length),
                        label=CharacterLabel.from_glyph(g, alphabet),
                        writer_id=w,
                        origin=Origin.RECORDED,
                    )
                )
    return Dataset(items=tuple(items), class_list=class_list, metadata={"kind": "test"})


@pytest.fixture
def rng():
    return np.random.default_rng(0)
