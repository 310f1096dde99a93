"""Pen-motion character recognition from a wireless IMU.

Ingests binary sensor frames, builds labeled per-character datasets,
augments and splits them, trains a small recurrent classifier, and
evaluates recognition accuracy under several writer protocols.  A
synthetic data generator and a dictionary-based word corrector round
out the pipeline.  Everything numeric runs on numpy.
"""

from .core import (
    ACCEL_LIMIT_G,
    CHANNEL_NAMES,
    GYRO_LIMIT_DPS,
    NOMINAL_STEP_MS,
    Alphabet,
    CharacterLabel,
    Dataset,
    LabeledSequence,
    Origin,
    SensorSample,
    SensorSequence,
    from_matrix,
    root_id,
    to_matrix,
    validate_sequence,
)
from .decode import UNCORRECTED, Dictionary, correct_word, edit_distance, word_accuracy
from .ingest import (
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
from .nn import (
    DivergedError,
    ModelParams,
    OptState,
    RmsPropHyper,
    TrainSample,
    grad_check,
    init_opt_state,
    init_params,
    load_checkpoint,
    model_forward,
    model_forward_batch,
    save_checkpoint,
    train_step,
)
from .preprocess import (
    AugmentConfig,
    Protocol,
    SplitSpec,
    add_gaussian_noise,
    augment,
    pad_batch,
    scale_sequence,
    split,
    window_average,
)
from .prng import BoxMullerGaussian, SplitMix64, derive_seed
from .synth import (
    GlyphTemplate,
    WriterStyle,
    generate_dataset,
    glyph_trajectory,
    load_templates,
    make_writer_styles,
    parse_templates,
    template_glyphs,
    trajectory_to_imu,
)
from .train_eval import (
    EvalReport,
    SweepPoint,
    TrainConfig,
    TrainHistory,
    TrainingFailedError,
    evaluate,
    export_report,
    run_protocol,
    sweep_classes,
    sweep_train_size,
    train_model,
)

__version__ = "0.1.0"

__all__ = [
    "ACCEL_LIMIT_G",
    "CHANNEL_NAMES",
    "GYRO_LIMIT_DPS",
    "NOMINAL_STEP_MS",
    "UNCORRECTED",
    "Alphabet",
    "AugmentConfig",
    "BoxMullerGaussian",
    "CalibrationScale",
    "CharacterLabel",
    "CorruptFrameError",
    "Dataset",
    "DatasetIOError",
    "DesyncError",
    "Dictionary",
    "DivergedError",
    "EvalReport",
    "Frame",
    "FrameError",
    "GlyphTemplate",
    "LabeledSequence",
    "ModelParams",
    "OptState",
    "Origin",
    "Protocol",
    "RmsPropHyper",
    "SensorSample",
    "SensorSequence",
    "SplitMix64",
    "SplitSpec",
    "SweepPoint",
    "TrainConfig",
    "TrainHistory",
    "TrainSample",
    "TrainingFailedError",
    "TruncatedFrameError",
    "WriterStyle",
    "add_gaussian_noise",
    "augment",
    "correct_word",
    "derive_seed",
    "edit_distance",
    "encode_frame",
    "evaluate",
    "export_report",
    "frames_to_samples",
    "from_matrix",
    "generate_dataset",
    "glyph_trajectory",
    "grad_check",
    "init_opt_state",
    "init_params",
    "load_checkpoint",
    "load_templates",
    "make_writer_styles",
    "model_forward",
    "model_forward_batch",
    "pad_batch",
    "parse_frame",
    "parse_templates",
    "read_dataset",
    "root_id",
    "run_protocol",
    "save_checkpoint",
    "scale_sequence",
    "scan_stream",
    "segment_sessions",
    "split",
    "sweep_classes",
    "sweep_train_size",
    "template_glyphs",
    "to_matrix",
    "train_model",
    "train_step",
    "trajectory_to_imu",
    "validate_sequence",
    "window_average",
    "word_accuracy",
    "write_dataset",
]
