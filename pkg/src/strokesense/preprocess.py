"""Scaling, augmentation, dataset splits, and batch padding.

Augmented copies go through average -> noise -> scale, so every copy the
model trains on is already in [-1, 1]; originals are left untouched and
get scaled at tensor-build time (scaling is idempotent on scaled rows).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import (
    CharacterLabel,
    Dataset,
    LabeledSequence,
    Origin,
    SensorSequence,
    from_matrix,
    root_id,
    to_matrix,
)
from .prng import BoxMullerGaussian, derive_seed


def scale_sequence(m: np.ndarray) -> np.ndarray:
    """Min-max scale each channel row to [-1, 1]; constant rows map to 0."""
    m = np.asarray(m, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise ValueError("non-finite input")
    lo = m.min(axis=1, keepdims=True)
    hi = m.max(axis=1, keepdims=True)
    span = hi - lo
    out = np.zeros_like(m)
    nonconst = (span > 0).ravel()
    out[nonconst] = 2.0 * (m[nonconst] - lo[nonconst]) / span[nonconst] - 1.0
    return out


def window_average(m: np.ndarray, window: int, stride: int) -> np.ndarray:
    """Slide a 6 x N mean window across columns in steps of M.

    Output column k is the per-channel mean of input columns
    [k*stride, k*stride + window); output length floor((T-N)/M) + 1.
    """
    m = np.asarray(m, dtype=np.float64)
    T = m.shape[1]
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be >= 1")
    if window > T:
        raise ValueError("window larger than sequence")
    n_out = (T - window) // stride + 1
    out = np.empty((m.shape[0], n_out))
    for k in range(n_out):
        out[:, k] = m[:, k * stride : k * stride + window].mean(axis=1)
    return out


def add_gaussian_noise(m: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    """Add i.i.d. N(0, sigma^2) noise, filled row-major from the pinned
    Box-Muller/SplitMix64 stream so results reproduce across platforms."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    m = np.asarray(m, dtype=np.float64)
    if sigma == 0:
        return m.copy()
    gauss = BoxMullerGaussian(seed)
    noise = np.array(gauss.fill(m.size), dtype=np.float64).reshape(m.shape)
    return m + sigma * noise


@dataclass(frozen=True)
class AugmentConfig:
    window_sizes: tuple[int, ...] = (2, 3)
    strides: tuple[int, ...] = (1, 2)
    noise_sigma: float = 0.05
    noise_copies: int = 2
    rng_seed: int = 0
    # Alternative reading of window averaging: smooth originals in place
    # (first window/stride pair) instead of adding averaged copies.
    in_place_smoothing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "window_sizes", tuple(self.window_sizes))
        object.__setattr__(self, "strides", tuple(self.strides))
        if any(n < 1 for n in self.window_sizes) or any(s < 1 for s in self.strides):
            raise ValueError("window sizes and strides must be >= 1")
        if self.noise_sigma < 0 or self.noise_copies < 0:
            raise ValueError("noise_sigma and noise_copies must be >= 0")

    def window_stride_pairs(self) -> list[tuple[int, int]]:
        return [(n, s) for n in self.window_sizes for s in self.strides]


def _scaled_sequence(m: np.ndarray) -> SensorSequence:
    return from_matrix(scale_sequence(m))


def augment(ds: Dataset, cfg: AugmentConfig) -> Dataset:
    """Expand a dataset with window-averaged and noise-perturbed copies.

    Copies carry origin=augmented and an id of "<parent>#<transform>";
    everything is deterministic given cfg.rng_seed.
    """
    out: list[LabeledSequence] = []
    pairs = cfg.window_stride_pairs()
    for item in ds.items:
        m = to_matrix(item.sequence)
        T = m.shape[1]
        if cfg.in_place_smoothing and pairs and pairs[0][0] <= T:
            n, s = pairs[0]
            smoothed = from_matrix(window_average(m, n, s))
            out.append(
                LabeledSequence(
                    seq_id=item.seq_id,
                    sequence=smoothed,
                    label=item.label,
                    writer_id=item.writer_id,
                    origin=item.origin,
                    parent_id=item.parent_id,
                )
            )
        else:
            out.append(item)
            for n, s in pairs:
                if n > T:
                    continue
                out.append(
                    LabeledSequence(
                        seq_id=f"{item.seq_id}#avgN{n}M{s}",
                        sequence=_scaled_sequence(window_average(m, n, s)),
                        label=item.label,
                        writer_id=item.writer_id,
                        origin=Origin.AUGMENTED,
                        parent_id=item.seq_id,
                    )
                )
        for i in range(cfg.noise_copies):
            seed = derive_seed(cfg.rng_seed, item.seq_id, i)
            noisy = add_gaussian_noise(m, cfg.noise_sigma, seed)
            out.append(
                LabeledSequence(
                    seq_id=f"{item.seq_id}#noise{i}",
                    sequence=_scaled_sequence(noisy),
                    label=item.label,
                    writer_id=item.writer_id,
                    origin=Origin.AUGMENTED,
                    parent_id=item.seq_id,
                )
            )
    return ds.with_items(out)


class Protocol(str, Enum):
    WRITER_DISJOINT = "writer-disjoint"
    POOLED = "pooled"
    MIXED = "mixed"


@dataclass(frozen=True)
class SplitSpec:
    protocol: Protocol
    train_writers: frozenset[str] = frozenset()
    test_writers: frozenset[str] = frozenset()
    test_fraction: float = 0.2
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "train_writers", frozenset(self.train_writers))
        object.__setattr__(self, "test_writers", frozenset(self.test_writers))
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must be in (0, 1)")
        if self.protocol is Protocol.WRITER_DISJOINT:
            if not self.train_writers or not self.test_writers:
                raise ValueError("writer-disjoint protocol needs both writer sets")
            if self.train_writers & self.test_writers:
                raise ValueError("writer-disjoint protocol needs disjoint writer sets")
        elif self.protocol is Protocol.MIXED:
            if not self.train_writers:
                raise ValueError("mixed protocol needs train writers")
            if not self.test_writers >= self.train_writers:
                raise ValueError("mixed protocol needs test_writers to cover train_writers")
            if not self.test_writers - self.train_writers:
                raise ValueError("mixed protocol needs at least one unknown writer")


def _family_keys(ds: Dataset) -> dict[str, str]:
    """Map each item id to its lineage-family key.

    Originals key on their own id; augmented items key on their lineage
    root when it is present in the dataset, else stand alone.
    """
    present = {it.seq_id for it in ds.items}
    keys: dict[str, str] = {}
    for it in ds.items:
        if it.origin is Origin.AUGMENTED:
            root = root_id(it.seq_id)
            keys[it.seq_id] = root if root in present else it.seq_id
        else:
            keys[it.seq_id] = it.seq_id
    return keys


def _families(ds: Dataset) -> tuple[dict[str, list[LabeledSequence]], dict[str, str]]:
    """Group items by lineage root so augmented children follow their parent."""
    keys = _family_keys(ds)
    fams: dict[str, list[LabeledSequence]] = {}
    for it in ds.items:
        fams.setdefault(keys[it.seq_id], []).append(it)
    return fams, keys


def _root_of_family(members: list[LabeledSequence]) -> LabeledSequence:
    for it in members:
        if it.origin is not Origin.AUGMENTED:
            return it
    return members[0]


def _stratified_roots(
    fams: dict[str, list[LabeledSequence]],
    class_list,
    fraction: float,
    rng: np.random.Generator,
) -> set[str]:
    """Pick a per-class fraction of family roots for the test side."""
    by_class: dict[CharacterLabel, list[str]] = {c: [] for c in class_list}
    for key, members in fams.items():
        by_class[_root_of_family(members).label].append(key)
    chosen: set[str] = set()
    for c in class_list:
        keys = by_class[c]
        if not keys:
            continue
        n_test = int(len(keys) * fraction + 0.5)
        order = rng.permutation(len(keys))
        chosen.update(keys[i] for i in order[:n_test])
    return chosen


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Partition a dataset per one of the three train/test protocols.

    Train and test item ids are always disjoint, and augmented children
    always land on the same side as their lineage root.
    """
    writers = set(ds.writers())
    if spec.protocol in (Protocol.WRITER_DISJOINT, Protocol.MIXED):
        missing = (spec.train_writers | spec.test_writers) - writers
        if missing:
            raise ValueError(f"writers not in dataset: {sorted(missing)}")

    fams, keys = _families(ds)
    rng = np.random.default_rng(spec.rng_seed)
    train: list[LabeledSequence] = []
    test: list[LabeledSequence] = []

    if spec.protocol is Protocol.POOLED:
        test_keys = _stratified_roots(fams, ds.class_list, spec.test_fraction, rng)
        for it in ds.items:
            (test if keys[it.seq_id] in test_keys else train).append(it)
    elif spec.protocol is Protocol.WRITER_DISJOINT:
        for it in ds.items:
            if it.writer_id in spec.train_writers:
                train.append(it)
            elif it.writer_id in spec.test_writers:
                test.append(it)
    else:  # MIXED
        unknown = spec.test_writers - spec.train_writers
        known_fams = {
            k: v for k, v in fams.items()
            if _root_of_family(v).writer_id in spec.train_writers
        }
        test_keys = _stratified_roots(known_fams, ds.class_list, spec.test_fraction, rng)
        for it in ds.items:
            if it.writer_id in unknown:
                test.append(it)
            elif it.writer_id in spec.train_writers:
                (test if keys[it.seq_id] in test_keys else train).append(it)

    if not train or not test:
        raise ValueError("degenerate split: one side is empty")
    return ds.with_items(train), ds.with_items(test)


def pad_batch(mats: list[np.ndarray]) -> tuple[np.ndarray, list[int]]:
    """Stack 6xT matrices as a (B, T_max, 6) tensor, zero-padded at the end.

    Consumers must read recurrent state at each item's true final step.
    """
    if not mats:
        raise ValueError("empty batch")
    lengths = [m.shape[1] for m in mats]
    t_max = max(lengths)
    batch = np.zeros((len(mats), t_max, 6))
    for i, m in enumerate(mats):
        batch[i, : lengths[i], :] = np.asarray(m, dtype=np.float64).T
    return batch, lengths
