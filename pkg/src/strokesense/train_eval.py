"""Training loops, evaluation reports, the three train/test protocols, and
the two accuracy sweeps (vs class count, vs train-set size)."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import Dataset, root_id, to_matrix
from .nn import (
    DivergedError,
    ModelParams,
    OptState,
    RmsPropHyper,
    TrainSample,
    batch_loss_and_grads,
    clip_gradients,
    init_opt_state,
    init_params,
    model_forward_batch,
    rmsprop_update,
)
from .preprocess import (
    AugmentConfig,
    Protocol,
    SplitSpec,
    augment,
    scale_sequence,
    split,
)
from .prng import derive_seed

EVAL_BATCH = 64


class TrainingFailedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run. Model shape defaults follow the
    two-LSTM (20, 25 units) plus dense (25, C) architecture."""

    learning_rate: float = 0.001
    rho: float = 0.9
    epsilon: float = 1e-8
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 20
    clip_norm: float | None = 5.0
    val_fraction: float = 0.1
    hidden1: int = 20
    hidden2: int = 25
    dense_units: int = 25
    extra_dense: bool = False
    hard_sigmoid_everywhere: bool = False

    def __post_init__(self):
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch_size, max_epochs and patience must be positive")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")

    def rmsprop(self) -> RmsPropHyper:
        return RmsPropHyper(self.learning_rate, self.rho, self.epsilon)


@dataclass(frozen=True)
class TrainHistory:
    losses: tuple[float, ...]
    train_accuracies: tuple[float, ...]
    val_accuracies: tuple[float, ...]
    best_epoch: int
    n_restarts: int = 0

    @property
    def epochs(self) -> int:
        return len(self.losses)


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    per_class_accuracy: np.ndarray
    confusion: np.ndarray  # (C, C) counts, rows are true classes
    n_test: int
    class_list: tuple  # CharacterLabel per model output, in order
    protocol: SplitSpec | None = None
    train_history: TrainHistory | None = None


@dataclass(frozen=True)
class SweepPoint:
    x: int
    accuracies: tuple[float, ...]  # one per repeat
    n_repeats: int

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self) -> float:
        return float(np.std(self.accuracies))


def dataset_to_samples(ds: Dataset) -> list[TrainSample]:
    """Scale each sequence to [-1, 1] per channel and one-hot its label."""
    samples = []
    C = ds.n_classes
    for it in ds.items:
        x = scale_sequence(to_matrix(it.sequence)).T  # (T, 6)
        y = np.zeros(C)
        y[ds.class_index(it.label)] = 1.0
        samples.append(TrainSample(x=x, y=y))
    return samples


def _predict_samples(p: ModelParams, samples: list[TrainSample]) -> np.ndarray:
    preds = np.empty(len(samples), dtype=np.int64)
    for start in range(0, len(samples), EVAL_BATCH):
        chunk = samples[start : start + EVAL_BATCH]
        lengths = [s.x.shape[0] for s in chunk]
        t_max = max(lengths)
        X = np.zeros((len(chunk), t_max, chunk[0].x.shape[1]))
        for i, s in enumerate(chunk):
            X[i, : lengths[i]] = s.x
        probs, _ = model_forward_batch(p, X, lengths)
        preds[start : start + len(chunk)] = probs.argmax(axis=1)
    return preds


def _accuracy(p: ModelParams, samples: list[TrainSample]) -> float:
    preds = _predict_samples(p, samples)
    truth = np.array([int(np.argmax(s.y)) for s in samples])
    return float((preds == truth).mean())


def _fit(samples, ids, val_samples, hyper: TrainConfig, seed: int, attempt: int):
    C = len(samples[0].y)
    p = init_params(
        C,
        derive_seed(seed, "init", attempt),
        hidden1=hyper.hidden1,
        hidden2=hyper.hidden2,
        dense_units=hyper.dense_units,
        extra_dense=hyper.extra_dense,
        hard_sigmoid_everywhere=hyper.hard_sigmoid_everywhere,
    )
    opt = init_opt_state(p, hyper.rmsprop())
    n = len(samples)

    losses, train_accs, val_accs = [], [], []
    best_p, best_acc, best_epoch = p, -1.0, 0
    for epoch in range(hyper.max_epochs):
        order = np.random.default_rng(
            derive_seed(seed, "shuffle", attempt, epoch)
        ).permutation(n)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, hyper.batch_size):
            idx = order[start : start + hyper.batch_size]
            batch = [samples[i] for i in idx]
            Xl = [s.x for s in batch]
            lengths = [x.shape[0] for x in Xl]
            X = np.zeros((len(batch), max(lengths), Xl[0].shape[1]))
            Y = np.zeros((len(batch), C))
            for i, s in enumerate(batch):
                X[i, : lengths[i]] = s.x
                Y[i] = s.y
            loss, grads, probs = batch_loss_and_grads(p, X, Y, lengths)
            if not np.isfinite(loss):
                raise DivergedError([ids[i] for i in idx])
            if hyper.clip_norm is not None:
                grads = clip_gradients(grads, hyper.clip_norm)
            p, opt = rmsprop_update(p, opt, grads)
            loss_sum += loss * len(batch)
            correct += int((probs.argmax(axis=1) == Y.argmax(axis=1)).sum())
        losses.append(loss_sum / n)
        train_accs.append(correct / n)
        val_acc = _accuracy(p, val_samples)
        val_accs.append(val_acc)
        if val_acc > best_acc:  # ties keep the earliest best
            best_p, best_acc, best_epoch = p, val_acc, epoch
        if epoch - best_epoch >= hyper.patience:
            break
    history = TrainHistory(
        losses=tuple(losses),
        train_accuracies=tuple(train_accs),
        val_accuracies=tuple(val_accs),
        best_epoch=best_epoch,
        n_restarts=attempt,
    )
    return best_p, history


def train_model(train: Dataset, val: Dataset, hyper: TrainConfig, seed: int):
    """Train until validation accuracy stops improving; return the best
    checkpoint. A diverged run is restarted with a fresh init up to 3 times."""
    if not train.items:
        raise ValueError("empty training set")
    if tuple(train.class_list) != tuple(val.class_list):
        raise ValueError("class lists differ between train and validation sets")
    samples = dataset_to_samples(train)
    ids = [it.seq_id for it in train.items]
    val_samples = dataset_to_samples(val)
    for attempt in range(4):  # initial run plus 3 re-seeded restarts
        try:
            return _fit(samples, ids, val_samples, hyper, seed, attempt)
        except DivergedError:
            continue
    raise TrainingFailedError("training failed")


def evaluate(p: ModelParams, test: Dataset) -> EvalReport:
    """Argmax-decision accuracy and confusion counts in class_list order."""
    if not test.items:
        raise ValueError("empty test set")
    C = test.n_classes
    if p.n_classes != C:
        raise ValueError(
            f"class-list mismatch: model has {p.n_classes} outputs, dataset {C} classes"
        )
    samples = dataset_to_samples(test)
    preds = _predict_samples(p, samples)
    confusion = np.zeros((C, C), dtype=np.int64)
    for it, pred in zip(test.items, preds):
        confusion[test.class_index(it.label), int(pred)] += 1
    n = len(test.items)
    accuracy = float(np.trace(confusion)) / n
    row_sums = confusion.sum(axis=1)
    per_class = np.divide(
        np.diag(confusion), row_sums,
        out=np.zeros(C, dtype=np.float64), where=row_sums > 0,
    )
    return EvalReport(
        accuracy=accuracy,
        per_class_accuracy=per_class,
        confusion=confusion,
        n_test=n,
        class_list=tuple(test.class_list),
    )


def _audit_lineage(train: Dataset, test: Dataset) -> None:
    train_roots = {root_id(it.seq_id) for it in train.items}
    test_roots = {root_id(it.seq_id) for it in test.items}
    shared = train_roots & test_roots
    if shared:
        raise RuntimeError(f"lineage audit failed: {sorted(shared)[:5]} in both sides")


def _carve_validation(train: Dataset, fraction: float, seed: int):
    """Stratified validation holdout from the train side. Falls back to the
    train set itself when the data is too small to split."""
    spec = SplitSpec(protocol=Protocol.POOLED, test_fraction=fraction, rng_seed=seed)
    try:
        rest, val = split(train, spec)
    except ValueError:
        return train, train
    if not rest.items or not val.items:
        return train, train
    return rest, val


def _train_and_evaluate(
    train_ds: Dataset,
    test_ds: Dataset,
    hyper: TrainConfig,
    seed: int,
    augment_cfg: AugmentConfig | None = None,
    protocol_spec: SplitSpec | None = None,
) -> EvalReport:
    fit_ds, val_ds = _carve_validation(train_ds, hyper.val_fraction, derive_seed(seed, "val"))
    if augment_cfg is not None:
        fit_ds = augment(fit_ds, augment_cfg)
    _audit_lineage(fit_ds, test_ds)
    params, history = train_model(fit_ds, val_ds, hyper, derive_seed(seed, "train"))
    report = evaluate(params, test_ds)
    return replace(report, protocol=protocol_spec, train_history=history)


def run_protocol(
    ds: Dataset,
    spec: SplitSpec,
    hyper: TrainConfig,
    seed: int,
    augment_cfg: AugmentConfig | None = None,
) -> EvalReport:
    """Split under the given protocol, augment the train side only, train,
    and evaluate on the held-out side."""
    train_ds, test_ds = split(ds, spec)
    return _train_and_evaluate(
        train_ds, test_ds, hyper, seed, augment_cfg=augment_cfg, protocol_spec=spec
    )


def _items_by_class(ds: Dataset) -> dict:
    by_class: dict = {c: [] for c in ds.class_list}
    for it in ds.items:
        by_class[it.label].append(it)
    return by_class


def _subsample_per_class(ds: Dataset, n: int, rng) -> Dataset:
    """Keep a seeded random n items of every class (order preserved)."""
    keep: set[str] = set()
    for label, items in _items_by_class(ds).items():
        if len(items) < n:
            raise ValueError(
                f"insufficient data: class {label.display_glyph!r} has "
                f"{len(items)} items, need {n}"
            )
        chosen = rng.permutation(len(items))[:n]
        keep.update(items[i].seq_id for i in chosen)
    return ds.with_items([it for it in ds.items if it.seq_id in keep])


def sweep_classes(
    ds: Dataset,
    samples_per_class: int,
    class_counts: list[int],
    repeats: int = 5,
    seed: int = 0,
    hyper: TrainConfig | None = None,
    test_fraction: float = 0.2,
) -> list[SweepPoint]:
    """Accuracy as a function of the number of classes, at a fixed per-class
    training budget. Each repeat draws a fresh class subset and split."""
    hyper = hyper or TrainConfig()
    C = ds.n_classes
    if max(class_counts) > C:
        raise ValueError(f"insufficient data: {max(class_counts)} classes requested, have {C}")
    if min(class_counts) < 2:
        raise ValueError("class counts must be at least 2")
    points = []
    for k in class_counts:
        accs = []
        for r in range(repeats):
            pick_rng = np.random.default_rng(derive_seed(seed, "classes", k, r))
            chosen_idx = sorted(pick_rng.permutation(C)[:k])
            chosen = [ds.class_list[i] for i in chosen_idx]
            chosen_set = set(chosen)
            sub_items = [it for it in ds.items if it.label in chosen_set]
            sub = Dataset(items=tuple(sub_items), class_list=tuple(chosen),
                          metadata=ds.metadata)
            spec = SplitSpec(
                protocol=Protocol.POOLED,
                test_fraction=test_fraction,
                rng_seed=derive_seed(seed, "split", k, r),
            )
            train_ds, test_ds = split(sub, spec)
            sub_rng = np.random.default_rng(derive_seed(seed, "subsample", k, r))
            train_ds = _subsample_per_class(train_ds, samples_per_class, sub_rng)
            report = _train_and_evaluate(
                train_ds, test_ds, hyper, derive_seed(seed, "fit", k, r),
                protocol_spec=spec,
            )
            accs.append(report.accuracy)
        points.append(SweepPoint(x=k, accuracies=tuple(accs), n_repeats=repeats))
    return points


def sweep_train_size(
    ds: Dataset,
    sizes: list[int],
    repeats: int = 5,
    seed: int = 0,
    hyper: TrainConfig | None = None,
    test_fraction: float = 0.2,
) -> list[SweepPoint]:
    """Accuracy as a function of per-class train-set size. Within a repeat the
    split is fixed, so every size is scored against the same test set, and the
    subsamples are nested (size s is a superset of every smaller size)."""
    hyper = hyper or TrainConfig()
    sizes = list(sizes)
    accs_by_size: dict[int, list[float]] = {s: [] for s in sizes}
    for r in range(repeats):
        spec = SplitSpec(
            protocol=Protocol.POOLED,
            test_fraction=test_fraction,
            rng_seed=derive_seed(seed, "split", r),
        )
        train_ds, test_ds = split(ds, spec)
        by_class = _items_by_class(train_ds)
        perm_rng = np.random.default_rng(derive_seed(seed, "subsample", r))
        perms = {g: perm_rng.permutation(len(items)) for g, items in by_class.items()}
        for s in sizes:
            keep: set[str] = set()
            for label, items in by_class.items():
                if len(items) < s:
                    raise ValueError(
                        f"insufficient data: class {label.display_glyph!r} has "
                        f"{len(items)} train items, need {s}"
                    )
                keep.update(items[i].seq_id for i in perms[label][:s])
            sub_train = train_ds.with_items([it for it in train_ds.items if it.seq_id in keep])
            report = _train_and_evaluate(
                sub_train, test_ds, hyper, derive_seed(seed, "fit", r, s),
                protocol_spec=spec,
            )
            accs_by_size[s].append(report.accuracy)
    return [SweepPoint(x=s, accuracies=tuple(accs_by_size[s]), n_repeats=repeats)
            for s in sizes]


def export_report(r, path) -> Path:
    """Write an evaluation or sweep result as CSV.

    Sweeps produce `x,mean_accuracy,std_accuracy,n_repeats` rows; evaluation
    reports produce the confusion matrix as a (C+1) x (C+1) grid with glyph
    header row and column.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(r, (list, tuple)) and all(isinstance(p, SweepPoint) for p in r) and r:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["x", "mean_accuracy", "std_accuracy", "n_repeats"])
            for pt in r:
                w.writerow([pt.x, f"{pt.mean_accuracy:.6f}", f"{pt.std_accuracy:.6f}",
                            pt.n_repeats])
        return path
    if isinstance(r, EvalReport):
        glyphs = [c.display_glyph for c in r.class_list]
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow([""] + glyphs)
            for i, glyph in enumerate(glyphs):
                w.writerow([glyph] + [int(c) for c in r.confusion[i]])
        return path
    raise TypeError("expected an EvalReport or a non-empty list of SweepPoint")
