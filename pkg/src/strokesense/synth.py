"""Synthetic pen-motion generator: glyph templates (cubic Bezier strokes in a
unit box) are jittered per writer, sampled at constant speed, and converted to
100 Hz accelerometer/gyroscope channels.

Kinematic model: the pen moves in a horizontal plane with the device held at a
fixed orientation, so gravity is a constant vector (default +1 g on the z
accelerometer row) and rotation happens only about z. Planar acceleration
comes from second-order central differences of the path; yaw rate from the
heading of the path velocity. Channels saturate at the sensor's full-scale
range, like the hardware they stand in for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .core import (
    ACCEL_LIMIT_G,
    GYRO_LIMIT_DPS,
    NOMINAL_STEP_MS,
    Alphabet,
    CharacterLabel,
    Dataset,
    LabeledSequence,
    Origin,
    SensorSequence,
    from_matrix,
)
from .prng import BoxMullerGaussian, derive_seed

GRAVITY_MS2 = 9.81
STEP_S = NOMINAL_STEP_MS / 1000.0
BRIDGE_SAMPLES = 5  # 50 ms pen travel between strokes of one character
GYRO_TREMOR_SCALE = 100.0  # deg/s of gyro tremor per g of accel tremor
_DENSE_PER_SEGMENT = 80


@dataclass(frozen=True)
class WriterStyle:
    """One simulated writer. Speed and slant are the separating traits."""

    speed_scale: float = 1.0
    size_scale: float = 0.02  # glyph height in meters
    slant_rad: float = 0.0
    tremor_sigma: float = 0.0  # additive noise, in g on accel rows
    jitter_sigma: float = 0.0  # control-point displacement, unit-box units
    rng_seed: int = 0

    def __post_init__(self):
        if self.speed_scale <= 0 or self.size_scale <= 0:
            raise ValueError("speed_scale and size_scale must be positive")
        if self.tremor_sigma < 0 or self.jitter_sigma < 0:
            raise ValueError("sigmas must be non-negative")


@dataclass(frozen=True, eq=False)
class GlyphTemplate:
    glyph: CharacterLabel
    strokes: tuple  # each (3k+1, 2) control-point chain in [0,1]^2
    duration_ms: int

    def __post_init__(self):
        if not self.strokes:
            raise ValueError("template needs at least one stroke")
        if self.duration_ms <= 0:
            raise ValueError("duration must be positive")
        for pts in self.strokes:
            if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 4 or (pts.shape[0] - 1) % 3:
                raise ValueError("stroke needs 3k+1 control points, k >= 1")
            if pts.min() < 0.0 or pts.max() > 1.0:
                raise ValueError("control points must lie in the unit box")


def parse_templates(text: str) -> dict[tuple[Alphabet, str], GlyphTemplate]:
    """Parse the template file format: per glyph one `glyph <char> <alphabet>
    <duration_ms>` line followed by `stroke x,y x,y ...` lines."""
    templates: dict[tuple[Alphabet, str], GlyphTemplate] = {}
    current: tuple[str, Alphabet, int] | None = None
    strokes: list[np.ndarray] = []

    def finish():
        nonlocal current, strokes
        if current is None:
            return
        char, alphabet, duration = current
        label = CharacterLabel.from_glyph(char, alphabet)
        key = (alphabet, char)
        if key in templates:
            raise ValueError(f"duplicate template for glyph {char!r}")
        templates[key] = GlyphTemplate(glyph=label, strokes=tuple(strokes),
                                       duration_ms=duration)
        current, strokes = None, []

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] == "glyph":
            finish()
            if len(fields) != 4:
                raise ValueError(f"malformed glyph line {ln}")
            current = (fields[1], Alphabet(fields[2]), int(fields[3]))
        elif fields[0] == "stroke":
            if current is None:
                raise ValueError(f"stroke before any glyph at line {ln}")
            try:
                pts = np.array([[float(v) for v in tok.split(",")] for tok in fields[1:]])
            except ValueError as e:
                raise ValueError(f"malformed stroke at line {ln}: {e}") from None
            strokes.append(pts)
        else:
            raise ValueError(f"unknown directive {fields[0]!r} at line {ln}")
    finish()
    return templates


_BUNDLED: dict | None = None


def load_templates(path: str | Path | None = None) -> dict[tuple[Alphabet, str], GlyphTemplate]:
    """Bundled glyph templates, or the ones in an explicit file."""
    global _BUNDLED
    if path is not None:
        return parse_templates(Path(path).read_text(encoding="utf-8"))
    if _BUNDLED is None:
        text = resources.files("strokesense").joinpath("templates/glyphs.txt").read_text("utf-8")
        _BUNDLED = parse_templates(text)
    return _BUNDLED


def template_glyphs(alphabet: Alphabet, templates=None) -> list[str]:
    templates = templates if templates is not None else load_templates()
    return [g for (a, g) in templates if a is alphabet]


def _bezier_points(chain: np.ndarray, per_segment: int) -> np.ndarray:
    """Densely sample a cubic Bezier chain; exact at the chain endpoints."""
    t = np.linspace(0.0, 1.0, per_segment)
    b0 = (1 - t) ** 3
    b1 = 3 * (1 - t) ** 2 * t
    b2 = 3 * (1 - t) * t**2
    b3 = t**3
    pieces = []
    for s in range(0, len(chain) - 1, 3):
        p0, p1, p2, p3 = chain[s : s + 4]
        seg = np.outer(b0, p0) + np.outer(b1, p1) + np.outer(b2, p2) + np.outer(b3, p3)
        pieces.append(seg if not pieces else seg[1:])  # drop duplicated joins
    return np.concatenate(pieces)


def _resample_uniform(poly: np.ndarray, n: int) -> np.ndarray:
    """n points equally spaced in arc length along a polyline."""
    steps = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(steps)])
    total = cum[-1]
    if total <= 0.0:
        raise ValueError("degenerate template: stroke has zero length")
    s = np.linspace(0.0, total, n)
    return np.column_stack([np.interp(s, cum, poly[:, d]) for d in range(2)])


def glyph_trajectory(tmpl: GlyphTemplate, style: WriterStyle, seed: int) -> np.ndarray:
    """Sampled 2-D pen path in meters, one point per 10 ms.

    Control points are jittered (style.jitter_sigma), sheared by the slant,
    and scaled to size_scale. Each stroke is traversed at constant speed;
    strokes are joined by 50 ms ease-in/ease-out straight bridges. The number
    of samples is round(duration / 10 ms / speed_scale).
    """
    gauss = BoxMullerGaussian(seed)
    strokes = []
    shear = math.tan(style.slant_rad)
    for chain in tmpl.strokes:
        pts = chain.astype(np.float64).copy()
        if style.jitter_sigma > 0:
            jit = np.array([gauss.next() for _ in range(pts.size)]).reshape(pts.shape)
            pts = pts + style.jitter_sigma * jit
        pts[:, 0] = pts[:, 0] + shear * pts[:, 1]
        strokes.append(pts)
    if all(np.allclose(s, s[0]) for s in strokes):
        raise ValueError("degenerate template: all control points equal")

    total = int(round(tmpl.duration_ms / NOMINAL_STEP_MS / style.speed_scale))
    n_bridges = len(strokes) - 1
    budget = total - BRIDGE_SAMPLES * n_bridges
    if budget < 2 * len(strokes) or total < 3:
        raise ValueError("duration too short for this template at this speed")

    dense = [_bezier_points(s, _DENSE_PER_SEGMENT) for s in strokes]
    lengths = np.array([np.linalg.norm(np.diff(d, axis=0), axis=1).sum() for d in dense])
    if lengths.sum() <= 0:
        raise ValueError("degenerate template: zero total arc length")
    # distribute samples across strokes proportionally to arc length
    quota = lengths / lengths.sum() * budget
    counts = np.maximum(np.floor(quota).astype(int), 2)
    while counts.sum() > budget:
        counts[np.argmax(counts)] -= 1
    order = np.argsort(-(quota - counts))
    i = 0
    while counts.sum() < budget:
        counts[order[i % len(counts)]] += 1
        i += 1

    parts = []
    for k, d in enumerate(dense):
        resampled = _resample_uniform(d, counts[k])
        if k > 0:
            a, b = parts[-1][-1], resampled[0]
            s = np.arange(1, BRIDGE_SAMPLES + 1) / (BRIDGE_SAMPLES + 1)
            ease = 3 * s**2 - 2 * s**3  # zero velocity at both junction ends
            parts.append(a + np.outer(ease, b - a))
        parts.append(resampled)
    path = np.concatenate(parts)
    return path * style.size_scale


def trajectory_to_imu(
    path: np.ndarray,
    style: WriterStyle,
    gravity_g=(0.0, 0.0, 1.0),
    seed: int | None = None,
) -> SensorSequence:
    """Convert a planar path (T, 2) in meters to six IMU channels.

    Linear acceleration is the second-order central difference of the path
    (endpoints replicate their neighbors); yaw rate is the derivative of the
    unwrapped velocity heading, held constant through near-zero-speed samples
    where heading is undefined. Tremor is additive white noise on every
    channel. Channels saturate at the sensor full-scale limits.
    """
    path = np.asarray(path, dtype=np.float64)
    if path.ndim != 2 or path.shape[1] != 2 or path.shape[0] < 3:
        raise ValueError("path too short: need at least 3 samples of (x, y)")
    T = path.shape[0]

    acc = np.zeros((T, 2))
    acc[1:-1] = (path[2:] - 2.0 * path[1:-1] + path[:-2]) / STEP_S**2
    acc[0], acc[-1] = acc[1], acc[-2]

    vel = np.gradient(path, STEP_S, axis=0)
    speed = np.linalg.norm(vel, axis=1)
    heading = np.arctan2(vel[:, 1], vel[:, 0])
    still = speed < max(1e-12, 0.01 * speed.max())
    if still.any() and not still.all():
        last = None
        for i in range(T):
            if not still[i]:
                last = heading[i]
            elif last is not None:
                heading[i] = last
        first_moving = int(np.argmin(still))
        heading[:first_moving] = heading[first_moving]
    elif still.all():
        heading[:] = 0.0
    heading = np.unwrap(heading)
    yaw_dps = np.gradient(heading, STEP_S) * (180.0 / math.pi)

    rows = np.zeros((6, T))
    rows[0] = acc[:, 0] / GRAVITY_MS2 + gravity_g[0]
    rows[1] = acc[:, 1] / GRAVITY_MS2 + gravity_g[1]
    rows[2] = gravity_g[2]
    rows[5] = yaw_dps

    if seed is None:
        seed = style.rng_seed
    tremor = np.array(BoxMullerGaussian(seed).fill(6 * T)).reshape(6, T)
    rows[:3] += style.tremor_sigma * tremor[:3]
    rows[3:] += style.tremor_sigma * GYRO_TREMOR_SCALE * tremor[3:]

    np.clip(rows[:3], -ACCEL_LIMIT_G, ACCEL_LIMIT_G, out=rows[:3])
    np.clip(rows[3:], -GYRO_LIMIT_DPS, GYRO_LIMIT_DPS, out=rows[3:])
    return from_matrix(rows)


def make_writer_styles(n: int, seed: int = 0) -> list[WriterStyle]:
    """n styles spread across the speed/slant plane; every pair differs in
    both traits, which is what keeps writer-disjoint evaluation meaningful."""
    if n < 1:
        raise ValueError("need at least one writer")
    rng = np.random.default_rng(derive_seed(seed, "styles"))
    speeds = np.linspace(0.8, 1.3, n) if n > 1 else np.array([1.0])
    slants = np.linspace(-0.20, 0.32, n) if n > 1 else np.array([0.05])
    slants = rng.permutation(slants)
    styles = []
    for i in range(n):
        styles.append(
            WriterStyle(
                speed_scale=float(speeds[i]),
                size_scale=float(0.018 + 0.004 * rng.random()),
                slant_rad=float(slants[i]),
                tremor_sigma=float(0.005 + 0.010 * rng.random()),
                jitter_sigma=float(0.008 + 0.012 * rng.random()),
                rng_seed=derive_seed(seed, "writer", i),
            )
        )
    return styles


def _check_separable(writers: list[WriterStyle]) -> None:
    for i in range(len(writers)):
        for j in range(i + 1, len(writers)):
            a, b = writers[i], writers[j]
            if abs(a.speed_scale - b.speed_scale) < 1e-6 or abs(a.slant_rad - b.slant_rad) < 1e-6:
                raise ValueError(
                    f"writer styles {i} and {j} must differ in speed_scale and slant_rad"
                )


def generate_dataset(
    alphabet: Alphabet,
    glyphs: list[str],
    writers: list[WriterStyle],
    samples_per_class_per_writer: int,
    seed: int = 0,
    templates=None,
) -> Dataset:
    """Deterministic synthetic dataset: every (writer, glyph, repeat) item is
    generated from its own derived seed, so subsets are reproducible."""
    templates = templates if templates is not None else load_templates()
    if samples_per_class_per_writer < 1:
        raise ValueError("samples_per_class_per_writer must be positive")
    if len(glyphs) < 2:
        raise ValueError("need at least 2 classes")
    for g in glyphs:
        if (alphabet, g) not in templates:
            raise ValueError(f"missing template for glyph {g!r}")
    _check_separable(writers)

    items = []
    for wi, style in enumerate(writers):
        writer_id = f"w{wi + 1}"
        for ci, g in enumerate(glyphs):
            tmpl = templates[(alphabet, g)]
            for r in range(samples_per_class_per_writer):
                base = derive_seed(seed, "item", wi, g, r)
                traj = glyph_trajectory(tmpl, style, derive_seed(base, "traj"))
                seq = trajectory_to_imu(traj, style, seed=derive_seed(base, "imu"))
                items.append(
                    LabeledSequence(
                        seq_id=f"syn_w{wi + 1}_c{ci:02d}_r{r:03d}",
                        sequence=seq,
                        label=CharacterLabel.from_glyph(g, alphabet),
                        writer_id=writer_id,
                        origin=Origin.SYNTHETIC,
                    )
                )
    metadata = {
        "generator": "synthetic",
        "alphabet": alphabet.value,
        "samples_per_class_per_writer": str(samples_per_class_per_writer),
        "n_writers": str(len(writers)),
        "seed": str(seed),
    }
    class_list = tuple(CharacterLabel.from_glyph(g, alphabet) for g in glyphs)
    return Dataset(items=tuple(items), class_list=class_list, metadata=metadata)
