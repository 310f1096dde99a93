"""Command-line entry point: one subcommand per pipeline capability.

Exit codes: 0 success, 1 usage error, 2 data error, 3 training failure.
Logs go to standard error; data goes to files or standard output. Every
subcommand takes --seed and is reproducible bit-for-bit for identical inputs.
Relative dataset paths resolve under $STROKESENSE_DATA_DIR when it is set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .core import (
    Alphabet,
    CharacterLabel,
    Dataset,
    LabeledSequence,
    Origin,
    validate_sequence,
)
from .decode import Dictionary, correct_word, word_accuracy
from .ingest import (
    CalibrationScale,
    DatasetIOError,
    read_dataset,
    scan_stream,
    segment_sessions,
    write_dataset,
)
from .nn import TrainSample, grad_check, init_params, load_checkpoint, save_checkpoint
from .preprocess import AugmentConfig, Protocol, SplitSpec, augment
from .prng import derive_seed
from .synth import generate_dataset, load_templates, make_writer_styles, template_glyphs
from .train_eval import (
    TrainConfig,
    TrainingFailedError,
    evaluate,
    export_report,
    run_protocol,
    sweep_classes,
    sweep_train_size,
    train_model,
)
from .train_eval import _carve_validation  # shared validation holdout rule

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRAIN = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; remap to the documented 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _data_path(p) -> Path:
    path = Path(p)
    base = os.environ.get("STROKESENSE_DATA_DIR")
    if base and not path.is_absolute():
        return Path(base) / path
    return path


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _emit(args, summary: dict) -> None:
    if args.json:
        print(json.dumps(summary, sort_keys=True, ensure_ascii=False))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--config", default=None, help="TOML config file")
    p.add_argument("--json", action="store_true", help="print a JSON summary to stdout")


def _pick(cli_value, cfg: RunConfig, key: str, default):
    """Priority: explicit flag, then config file, then built-in default."""
    if cli_value is not None:
        return cli_value
    if key in cfg:
        return cfg.get(key)
    return default


def _seed(args, cfg: RunConfig) -> int:
    # a non-default --seed beats the config file; the flag default is 0
    return args.seed if args.seed != 0 else cfg.get("seed", 0)


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None, help="max training epochs")
    p.add_argument("--patience", type=int, default=None, help="early-stopping patience")
    p.add_argument("--val-fraction", type=float, default=None)
    p.add_argument("--extra-dense", action="store_true", default=None,
                   help="insert a second hidden dense layer")
    p.add_argument("--hard-sigmoid-everywhere", action="store_true", default=None,
                   help="use hard sigmoid for candidate/cell activations too")


def _hyper_from(args, cfg: RunConfig) -> TrainConfig:
    return TrainConfig(
        learning_rate=_pick(args.learning_rate, cfg, "train.learning_rate", 0.001),
        rho=cfg.get("train.rho", 0.9),
        epsilon=cfg.get("train.epsilon", 1e-8),
        batch_size=_pick(args.batch_size, cfg, "train.batch_size", 32),
        max_epochs=_pick(args.epochs, cfg, "train.max_epochs", 200),
        patience=_pick(args.patience, cfg, "train.patience", 20),
        clip_norm=cfg.get("train.clip_norm", 5.0),
        val_fraction=_pick(args.val_fraction, cfg, "train.val_fraction", 0.1),
        extra_dense=_pick(args.extra_dense, cfg, "model.extra_dense", False),
        hard_sigmoid_everywhere=_pick(
            args.hard_sigmoid_everywhere, cfg, "model.hard_sigmoid_everywhere", False
        ),
    )


def _augment_config(args, cfg: RunConfig, seed: int) -> AugmentConfig:
    windows = _pick(getattr(args, "windows", None), cfg, "augment.windows", [2, 3])
    strides = _pick(getattr(args, "strides", None), cfg, "augment.strides", [1, 2])
    in_place = getattr(args, "in_place", None)
    if in_place is None:
        in_place = cfg.get("augment.in_place_smoothing", False)
    return AugmentConfig(
        window_sizes=tuple(windows),
        strides=tuple(strides),
        noise_sigma=_pick(getattr(args, "noise_sigma", None), cfg, "augment.noise_sigma", 0.05),
        noise_copies=_pick(getattr(args, "noise_copies", None), cfg, "augment.noise_copies", 2),
        rng_seed=seed,
        in_place_smoothing=in_place,
    )


def _split_spec(args, cfg: RunConfig, ds: Dataset, seed: int) -> SplitSpec:
    protocol = Protocol(_pick(getattr(args, "protocol", None), cfg, "split.protocol", "pooled"))
    fraction = _pick(args.test_fraction, cfg, "split.test_fraction", 0.2)
    train_writers = _pick(args.train_writers, cfg, "split.train_writers", None)
    test_writers = _pick(args.test_writers, cfg, "split.test_writers", None)
    if protocol is Protocol.POOLED:
        return SplitSpec(protocol=protocol, test_fraction=fraction, rng_seed=seed)
    writers = list(ds.writers())
    if train_writers is None and test_writers is None:
        # derive a seeded writer partition when none is given
        order = np.random.default_rng(derive_seed(seed, "writers")).permutation(len(writers))
        n_test = max(1, int(round(len(writers) * fraction)))
        if n_test >= len(writers):
            raise ValueError("not enough writers to hold some out")
        held_out = {writers[i] for i in order[:n_test]}
        remaining = set(writers) - held_out
        if protocol is Protocol.WRITER_DISJOINT:
            train_writers, test_writers = remaining, held_out
        else:
            train_writers, test_writers = remaining, set(writers)
    elif train_writers is None or (test_writers is None and protocol is Protocol.WRITER_DISJOINT):
        raise UsageError("this protocol needs both --train-writers and --test-writers")
    elif test_writers is None:
        test_writers = set(writers)
    return SplitSpec(
        protocol=protocol,
        train_writers=frozenset(train_writers),
        test_writers=frozenset(test_writers),
        test_fraction=fraction,
        rng_seed=seed,
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_synth(args) -> int:
    cfg = load_config(args.config)
    seed = _seed(args, cfg)
    alphabet = Alphabet(args.alphabet)
    templates = load_templates(args.templates) if args.templates else load_templates()
    available = template_glyphs(alphabet, templates)
    if args.glyphs:
        glyphs = list(args.glyphs)
    else:
        if args.classes > len(available):
            raise ValueError(
                f"insufficient templates: {args.classes} classes requested, "
                f"{len(available)} available"
            )
        glyphs = available[: args.classes]
    styles = make_writer_styles(args.writers, derive_seed(seed, "styles"))
    ds = generate_dataset(alphabet, glyphs, styles, args.per_class, seed=seed,
                          templates=templates)
    out = _data_path(args.out)
    write_dataset(ds, out)
    _log(f"wrote {len(ds.items)} sequences ({len(glyphs)} classes x "
         f"{args.writers} writers) to {out}")
    _emit(args, {
        "out": str(out),
        "items": len(ds.items),
        "classes": [c.display_glyph for c in ds.class_list],
        "writers": args.writers,
        "seed": seed,
    })
    return EXIT_OK


def _cmd_ingest(args) -> int:
    if args.raw == "-":
        data = sys.stdin.buffer.read()
    else:
        data = Path(args.raw).read_bytes()
    cal = CalibrationScale(args.accel_lsb, args.gyro_lsb)
    frames, skipped = scan_stream(data)
    sessions = segment_sessions(frames, cal, min_len=args.min_length)
    if not sessions:
        raise DatasetIOError("no sessions found in stream")
    alphabet = Alphabet(args.alphabet)
    labels = list(args.labels)
    if len(labels) != len(sessions):
        raise DatasetIOError(
            f"label count {len(labels)} does not match session count {len(sessions)}"
        )
    items = []
    for i, (seq, glyph) in enumerate(zip(sessions, labels)):
        problems = validate_sequence(seq)
        if problems:
            raise DatasetIOError(f"session {i} invalid: {problems[0]}")
        items.append(
            LabeledSequence(
                seq_id=f"rec_{args.writer}_{i:04d}",
                sequence=seq,
                label=CharacterLabel.from_glyph(glyph, alphabet),
                writer_id=args.writer,
                origin=Origin.RECORDED,
            )
        )
    seen: dict[str, None] = {}
    for g in labels:
        seen.setdefault(g, None)
    class_list = tuple(
        CharacterLabel.from_glyph(g, alphabet)
        for g in sorted(seen, key=alphabet.glyphs.find)
    )
    ds = Dataset(items=tuple(items), class_list=class_list,
                 metadata={"source": "ingest", "writer": args.writer})
    out = _data_path(args.out)
    write_dataset(ds, out)
    _log(f"parsed {len(frames)} frames ({skipped} bytes skipped), "
         f"{len(sessions)} sessions -> {out}")
    _emit(args, {
        "frames": len(frames),
        "skipped_bytes": skipped,
        "sessions": len(sessions),
        "out": str(out),
    })
    return EXIT_OK


def _cmd_augment(args) -> int:
    cfg = load_config(args.config)
    data = _data_path(args.data)
    out = _data_path(args.out)
    if data.resolve() == out.resolve():
        raise UsageError("--out must differ from --data (input datasets are never modified)")
    ds = read_dataset(data)
    acfg = _augment_config(args, cfg, _seed(args, cfg))
    augmented = augment(ds, acfg)
    write_dataset(augmented, out)
    _log(f"augmented {len(ds.items)} -> {len(augmented.items)} sequences at {out}")
    _emit(args, {
        "in_items": len(ds.items),
        "out_items": len(augmented.items),
        "out": str(out),
    })
    return EXIT_OK


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    ds = read_dataset(_data_path(args.data))
    hyper = _hyper_from(args, cfg)
    seed = _seed(args, cfg)
    train_ds, val_ds = _carve_validation(ds, hyper.val_fraction,
                                         derive_seed(seed, "val"))
    params, history = train_model(train_ds, val_ds, hyper, derive_seed(seed, "train"))
    out = Path(args.model_out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out, params)
    if args.history_csv:
        hp = Path(args.history_csv)
        hp.parent.mkdir(parents=True, exist_ok=True)
        with open(hp, "w", encoding="utf-8") as f:
            f.write("epoch,loss,train_accuracy,val_accuracy\n")
            for e in range(history.epochs):
                f.write(f"{e},{history.losses[e]:.6f},{history.train_accuracies[e]:.6f},"
                        f"{history.val_accuracies[e]:.6f}\n")
    if args.figures:
        from .report import plot_history

        plot_history(history, Path(args.figures) / "history.png")
    best_val = history.val_accuracies[history.best_epoch]
    _log(f"trained {history.epochs} epochs (best epoch {history.best_epoch}, "
         f"val accuracy {best_val:.3f}) -> {out}")
    _emit(args, {
        "model": str(out),
        "epochs": history.epochs,
        "best_epoch": history.best_epoch,
        "best_val_accuracy": round(best_val, 6),
        "restarts": history.n_restarts,
    })
    return EXIT_OK


def _cmd_eval(args) -> int:
    params, _ = load_checkpoint(args.model)
    ds = read_dataset(_data_path(args.data))
    report = evaluate(params, ds)
    if args.confusion_csv:
        export_report(report, args.confusion_csv)
    if args.figures:
        from .report import plot_confusion

        plot_confusion(report, Path(args.figures) / "confusion.png")
    _log(f"accuracy {report.accuracy:.4f} on {report.n_test} items")
    _emit(args, {
        "accuracy": round(report.accuracy, 6),
        "n_test": report.n_test,
        "per_class_accuracy": {
            c.display_glyph: round(float(a), 6)
            for c, a in zip(report.class_list, report.per_class_accuracy)
        },
    })
    return EXIT_OK


def _cmd_protocol(args) -> int:
    cfg = load_config(args.config)
    ds = read_dataset(_data_path(args.data))
    hyper = _hyper_from(args, cfg)
    seed = _seed(args, cfg)
    spec = _split_spec(args, cfg, ds, derive_seed(seed, "split"))
    acfg = None if args.no_augment else _augment_config(args, cfg, derive_seed(seed, "aug"))
    report = run_protocol(ds, spec, hyper, seed, augment_cfg=acfg)
    if args.out_dir:
        out_dir = Path(args.out_dir)
        export_report(report, out_dir / "confusion.csv")
        from .report import plot_confusion, plot_history

        plot_confusion(report, out_dir / "confusion.png")
        if report.train_history is not None:
            plot_history(report.train_history, out_dir / "history.png")
    _log(f"{spec.protocol.value} accuracy {report.accuracy:.4f} on {report.n_test} items")
    _emit(args, {
        "protocol": spec.protocol.value,
        "accuracy": round(report.accuracy, 6),
        "n_test": report.n_test,
        "train_writers": sorted(spec.train_writers),
        "test_writers": sorted(spec.test_writers),
    })
    return EXIT_OK


def _points_json(points) -> list[dict]:
    return [
        {
            "x": p.x,
            "mean_accuracy": round(p.mean_accuracy, 6),
            "std_accuracy": round(p.std_accuracy, 6),
            "n_repeats": p.n_repeats,
        }
        for p in points
    ]


def _cmd_sweep_classes(args) -> int:
    cfg = load_config(args.config)
    ds = read_dataset(_data_path(args.data))
    hyper = _hyper_from(args, cfg)
    points = sweep_classes(
        ds,
        samples_per_class=args.samples_per_class,
        class_counts=args.counts,
        repeats=args.repeats,
        seed=_seed(args, cfg),
        hyper=hyper,
        test_fraction=_pick(args.test_fraction, cfg, "split.test_fraction", 0.2),
    )
    if args.out_csv:
        export_report(points, args.out_csv)
    if args.figures:
        from .report import plot_sweep

        plot_sweep(points, Path(args.figures) / "sweep_classes.png", xlabel="classes")
    for p in points:
        _log(f"classes={p.x}: {p.mean_accuracy:.4f} +/- {p.std_accuracy:.4f}")
    _emit(args, {"points": _points_json(points)})
    return EXIT_OK


def _cmd_sweep_size(args) -> int:
    cfg = load_config(args.config)
    ds = read_dataset(_data_path(args.data))
    hyper = _hyper_from(args, cfg)
    points = sweep_train_size(
        ds,
        sizes=args.sizes,
        repeats=args.repeats,
        seed=_seed(args, cfg),
        hyper=hyper,
        test_fraction=_pick(args.test_fraction, cfg, "split.test_fraction", 0.2),
    )
    if args.out_csv:
        export_report(points, args.out_csv)
    if args.figures:
        from .report import plot_sweep

        plot_sweep(points, Path(args.figures) / "sweep_size.png",
                   xlabel="train samples per class")
    for p in points:
        _log(f"size={p.x}: {p.mean_accuracy:.4f} +/- {p.std_accuracy:.4f}")
    _emit(args, {"points": _points_json(points)})
    return EXIT_OK


def _cmd_decode(args) -> int:
    dictionary = Dictionary.load(args.dictionary, max_edit=args.max_edit)
    if args.words is not None:
        words = args.words
    else:
        words = [line.strip() for line in sys.stdin if line.strip()]
    corrected = []
    distances = []
    for w in words:
        c, d = correct_word(w, dictionary)
        corrected.append(c)
        distances.append(d)
        if not args.json:
            print(c)
    summary = {"words": corrected, "distances": distances}
    if args.truth is not None:
        summary["accuracy"] = round(word_accuracy(corrected, args.truth), 6)
        summary["uncorrected_accuracy"] = round(word_accuracy(words, args.truth), 6)
    _emit(args, summary)
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    params = init_params(
        args.classes,
        derive_seed(args.seed, "params"),
        extra_dense=bool(args.extra_dense),
        hard_sigmoid_everywhere=bool(args.hard_sigmoid_everywhere),
    )
    rng = np.random.default_rng(derive_seed(args.seed, "sample"))
    x = rng.uniform(-1.0, 1.0, size=(args.timesteps, 6))
    y = np.zeros(args.classes)
    y[int(rng.integers(args.classes))] = 1.0
    max_rel, checked, skipped = grad_check(params, TrainSample(x=x, y=y), h=args.h)
    ok = bool(max_rel < args.tolerance)
    _log(f"max relative error {max_rel:.3e} over {checked} coordinates "
         f"({skipped} skipped near kinks); tolerance {args.tolerance:g}")
    _emit(args, {
        "max_rel_error": float(max_rel),
        "checked": int(checked),
        "skipped": int(skipped),
        "h": args.h,
        "tolerance": args.tolerance,
        "ok": ok,
    })
    return EXIT_OK if ok else EXIT_TRAIN


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="strokesense",
                     description="IMU handwriting recognition pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--alphabet", choices=[a.value for a in Alphabet], default="latin")
    p.add_argument("--classes", type=int, default=4,
                   help="number of template glyphs to use (default 4)")
    p.add_argument("--glyphs", default=None, help="explicit glyphs, e.g. 'abco'")
    p.add_argument("--writers", type=int, default=6)
    p.add_argument("--per-class", type=int, default=20,
                   help="samples per class per writer (default 20)")
    p.add_argument("--templates", default=None, help="alternative template file")
    _add_common(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="parse a binary frame stream into a dataset")
    p.add_argument("--raw", required=True, help="frame stream file, or - for stdin")
    p.add_argument("--out", required=True)
    p.add_argument("--labels", required=True,
                   help="one glyph per session, in stream order, e.g. 'abco'")
    p.add_argument("--writer", required=True, help="writer id for all sessions")
    p.add_argument("--alphabet", choices=[a.value for a in Alphabet], default="latin")
    p.add_argument("--accel-lsb", type=float, default=16384.0,
                   help="accelerometer LSB per g (default 16384)")
    p.add_argument("--gyro-lsb", type=float, default=131.0,
                   help="gyroscope LSB per deg/s (default 131)")
    p.add_argument("--min-length", type=int, default=10,
                   help="discard sessions shorter than this many frames")
    _add_common(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("augment", help="expand a dataset with averaged/noisy copies")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--windows", type=_int_list, default=None,
                   help="window sizes, e.g. 2,3")
    p.add_argument("--strides", type=_int_list, default=None, help="strides, e.g. 1,2")
    p.add_argument("--noise-sigma", type=float, default=None)
    p.add_argument("--noise-copies", type=int, default=None)
    p.add_argument("--in-place", action="store_true", default=None,
                   help="smooth originals in place instead of adding copies")
    _add_common(p)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("train", help="train a model on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--model-out", required=True, help="checkpoint file to write")
    p.add_argument("--history-csv", default=None)
    p.add_argument("--figures", default=None, help="directory for figures")
    _add_train_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--confusion-csv", default=None)
    p.add_argument("--figures", default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("protocol", help="run one split protocol end to end")
    p.add_argument("--data", required=True)
    p.add_argument("--protocol", choices=[pr.value for pr in Protocol], default=None)
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--train-writers", type=_str_list, default=None)
    p.add_argument("--test-writers", type=_str_list, default=None)
    p.add_argument("--no-augment", action="store_true",
                   help="skip train-side augmentation")
    p.add_argument("--windows", type=_int_list, default=None)
    p.add_argument("--strides", type=_int_list, default=None)
    p.add_argument("--noise-sigma", type=float, default=None)
    p.add_argument("--noise-copies", type=int, default=None)
    p.add_argument("--out-dir", default=None, help="directory for CSV and figures")
    _add_train_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_protocol)

    p = sub.add_parser("sweep-classes", help="accuracy vs number of classes")
    p.add_argument("--data", required=True)
    p.add_argument("--samples-per-class", type=int, required=True)
    p.add_argument("--counts", type=_int_list, required=True, help="e.g. 2,4,6,8")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--out-csv", default=None)
    p.add_argument("--figures", default=None)
    _add_train_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_sweep_classes)

    p = sub.add_parser("sweep-size", help="accuracy vs per-class train size")
    p.add_argument("--data", required=True)
    p.add_argument("--sizes", type=_int_list, required=True, help="e.g. 4,8,16")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--out-csv", default=None)
    p.add_argument("--figures", default=None)
    _add_train_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_sweep_size)

    p = sub.add_parser("decode", help="dictionary-correct recognized words")
    p.add_argument("--dictionary", required=True, help="one lowercase word per line")
    p.add_argument("--words", type=_str_list, default=None,
                   help="comma-separated words; stdin (one per line) if omitted")
    p.add_argument("--truth", type=_str_list, default=None,
                   help="reference words for accuracy")
    p.add_argument("--max-edit", type=int, default=2)
    _add_common(p)
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--timesteps", type=int, default=12)
    p.add_argument("--h", type=float, default=1e-5, help="finite-difference step")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--extra-dense", action="store_true", default=None)
    p.add_argument("--hard-sigmoid-everywhere", action="store_true", default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingFailedError as e:
        print(str(e), file=sys.stderr)
        return EXIT_TRAIN
    except (DatasetIOError, FileNotFoundError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as e:  # argparse --help
        return int(e.code or 0)


if __name__ == "__main__":
    sys.exit(main())
