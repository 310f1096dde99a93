"""From-scratch numerical core: LSTM and dense layers with exact reverse-mode
gradients, softmax cross-entropy, RMSprop, and a finite-difference checker.

Everything is float64. Convention for LSTM parameters: W has shape (4H, D),
U (4H, H), b (4H,), with gate blocks stacked in the order i, f, g, o. Gates
i/f/o use the hard sigmoid clamp(0.2x + 0.5, 0, 1); the candidate and cell
output use tanh (a model flag can switch those to hard sigmoid as well).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

CHECKPOINT_MAGIC = b"SSNN"
CHECKPOINT_VERSION = 1

HARD_SIGMOID_SLOPE = 0.2
HARD_SIGMOID_KINK = 2.5  # pre-activation magnitude where the clamp saturates


class DivergedError(RuntimeError):
    """Raised when a training step produces a non-finite loss."""

    def __init__(self, batch_ids):
        super().__init__(f"diverged on batch {list(batch_ids)}")
        self.batch_ids = list(batch_ids)


def hard_sigmoid(x):
    """clamp(0.2 x + 0.5, 0, 1)."""
    return np.clip(HARD_SIGMOID_SLOPE * np.asarray(x, dtype=np.float64) + 0.5, 0.0, 1.0)


def hard_sigmoid_grad(z):
    # Subgradient at the kinks is the interior slope.
    return np.where(np.abs(z) <= HARD_SIGMOID_KINK, HARD_SIGMOID_SLOPE, 0.0)


class Activation(str, Enum):
    RELU = "relu"
    SOFTMAX = "softmax"


@dataclass(frozen=True)
class LstmLayerParams:
    W: np.ndarray  # (4H, D)
    U: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)

    def __post_init__(self):
        fourH, D = self.W.shape
        if fourH % 4 != 0 or self.U.shape != (fourH, fourH // 4) or self.b.shape != (fourH,):
            raise ValueError("inconsistent LSTM parameter shapes")

    @property
    def hidden(self) -> int:
        return self.W.shape[0] // 4

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]


@dataclass(frozen=True)
class DenseLayerParams:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: Activation

    def __post_init__(self):
        if self.b.shape != (self.W.shape[0],):
            raise ValueError("inconsistent dense parameter shapes")


@dataclass(frozen=True)
class ModelParams:
    """LSTM(H1) -> LSTM(H2) -> Dense(ReLU) x1..2 -> Dense(C, softmax)."""

    lstm1: LstmLayerParams
    lstm2: LstmLayerParams
    dense1: DenseLayerParams
    dense_out: DenseLayerParams
    dense2: DenseLayerParams | None = None
    hard_sigmoid_everywhere: bool = False

    def __post_init__(self):
        if self.lstm2.input_dim != self.lstm1.hidden:
            raise ValueError("lstm2 input dim must equal lstm1 hidden size")
        if self.dense1.W.shape[1] != self.lstm2.hidden:
            raise ValueError("dense1 input dim must equal lstm2 hidden size")
        last = self.dense1
        if self.dense2 is not None:
            if self.dense2.W.shape[1] != self.dense1.W.shape[0]:
                raise ValueError("dense2 input dim must equal dense1 output size")
            last = self.dense2
        if self.dense_out.W.shape[1] != last.W.shape[0]:
            raise ValueError("output layer input dim mismatch")
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")

    @property
    def n_classes(self) -> int:
        return self.dense_out.W.shape[0]

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        """Parameter arrays in the canonical (checkpoint) order."""
        out = [
            ("lstm1.W", self.lstm1.W), ("lstm1.U", self.lstm1.U), ("lstm1.b", self.lstm1.b),
            ("lstm2.W", self.lstm2.W), ("lstm2.U", self.lstm2.U), ("lstm2.b", self.lstm2.b),
            ("dense1.W", self.dense1.W), ("dense1.b", self.dense1.b),
        ]
        if self.dense2 is not None:
            out += [("dense2.W", self.dense2.W), ("dense2.b", self.dense2.b)]
        out += [("dense_out.W", self.dense_out.W), ("dense_out.b", self.dense_out.b)]
        return out

    def n_params(self) -> int:
        return sum(a.size for _, a in self.named_arrays())

    def rebuild(self, arrays: dict[str, np.ndarray]) -> "ModelParams":
        """New ModelParams with the same structure but replaced arrays."""
        d2 = None
        if self.dense2 is not None:
            d2 = replace(self.dense2, W=arrays["dense2.W"], b=arrays["dense2.b"])
        return ModelParams(
            lstm1=replace(self.lstm1, W=arrays["lstm1.W"], U=arrays["lstm1.U"], b=arrays["lstm1.b"]),
            lstm2=replace(self.lstm2, W=arrays["lstm2.W"], U=arrays["lstm2.U"], b=arrays["lstm2.b"]),
            dense1=replace(self.dense1, W=arrays["dense1.W"], b=arrays["dense1.b"]),
            dense_out=replace(self.dense_out, W=arrays["dense_out.W"], b=arrays["dense_out.b"]),
            dense2=d2,
            hard_sigmoid_everywhere=self.hard_sigmoid_everywhere,
        )


@dataclass(frozen=True)
class RmsPropHyper:
    learning_rate: float = 0.001
    rho: float = 0.9
    epsilon: float = 1e-8


@dataclass(frozen=True)
class OptState:
    v: dict[str, np.ndarray]  # running mean of squared gradients
    hyper: RmsPropHyper = field(default_factory=RmsPropHyper)


def init_opt_state(p: ModelParams, hyper: RmsPropHyper | None = None) -> OptState:
    v = {name: np.zeros_like(a) for name, a in p.named_arrays()}
    return OptState(v=v, hyper=hyper or RmsPropHyper())


@dataclass(frozen=True)
class TrainSample:
    x: np.ndarray  # (T, 6), scaled to [-1, 1]
    y: np.ndarray  # one-hot, length C


def init_params(
    n_classes: int,
    seed: int,
    input_dim: int = 6,
    hidden1: int = 20,
    hidden2: int = 25,
    dense_units: int = 25,
    extra_dense: bool = False,
    hard_sigmoid_everywhere: bool = False,
) -> ModelParams:
    """Glorot-uniform weights, zero biases except LSTM forget gates at 1."""
    rng = np.random.default_rng(seed)

    def glorot(rows, cols):
        s = np.sqrt(6.0 / (rows + cols))
        return rng.uniform(-s, s, size=(rows, cols))

    def lstm(h, d):
        b = np.zeros(4 * h)
        b[h : 2 * h] = 1.0  # forget gate block
        return LstmLayerParams(W=glorot(4 * h, d), U=glorot(4 * h, h), b=b)

    l1 = lstm(hidden1, input_dim)
    l2 = lstm(hidden2, hidden1)
    d1 = DenseLayerParams(glorot(dense_units, hidden2), np.zeros(dense_units), Activation.RELU)
    d2 = None
    if extra_dense:
        d2 = DenseLayerParams(glorot(dense_units, dense_units), np.zeros(dense_units), Activation.RELU)
    out = DenseLayerParams(glorot(n_classes, dense_units), np.zeros(n_classes), Activation.SOFTMAX)
    return ModelParams(
        lstm1=l1, lstm2=l2, dense1=d1, dense_out=out, dense2=d2,
        hard_sigmoid_everywhere=hard_sigmoid_everywhere,
    )


# ---------------------------------------------------------------------------
# LSTM forward/backward (batched core; single-sequence wrappers below)
# ---------------------------------------------------------------------------

@dataclass
class LstmCache:
    p: LstmLayerParams
    X: np.ndarray        # (B, T, D)
    Z: np.ndarray        # (B, T, 4H) gate pre-activations
    G: np.ndarray        # (B, T, 4H) activated gates i, f, g, o
    C: np.ndarray        # (B, T, H) cell states
    TC: np.ndarray       # (B, T, H) cell output activation
    H: np.ndarray        # (B, T, H) hidden states
    h0: np.ndarray
    c0: np.ndarray
    everywhere: bool


def _cell_act(x, everywhere):
    return hard_sigmoid(x) if everywhere else np.tanh(x)


def _cell_act_grad(z, activated, everywhere):
    if everywhere:
        return hard_sigmoid_grad(z)
    return 1.0 - activated * activated


def lstm_forward_batch(p: LstmLayerParams, X: np.ndarray, h0=None, c0=None,
                       everywhere: bool = False) -> tuple[np.ndarray, LstmCache]:
    B, T, D = X.shape
    H = p.hidden
    if D != p.input_dim:
        raise ValueError(f"input dim {D} does not match layer dim {p.input_dim}")
    # alloc in the promoted dtype so extended-precision probes stay extended
    dt = np.result_type(X.dtype, p.W.dtype, np.float64)
    h = np.zeros((B, H), dtype=dt) if h0 is None else np.array(h0, dtype=dt)
    c = np.zeros((B, H), dtype=dt) if c0 is None else np.array(c0, dtype=dt)
    h0_, c0_ = h.copy(), c.copy()

    ZX = (X.reshape(B * T, D) @ p.W.T).reshape(B, T, 4 * H)
    Z = np.empty((B, T, 4 * H), dtype=dt)
    G = np.empty((B, T, 4 * H), dtype=dt)
    C = np.empty((B, T, H), dtype=dt)
    TC = np.empty((B, T, H), dtype=dt)
    Hs = np.empty((B, T, H), dtype=dt)
    Ut = p.U.T
    for t in range(T):
        z = ZX[:, t] + h @ Ut + p.b
        Z[:, t] = z
        i = hard_sigmoid(z[:, :H])
        f = hard_sigmoid(z[:, H : 2 * H])
        g = _cell_act(z[:, 2 * H : 3 * H], everywhere)
        o = hard_sigmoid(z[:, 3 * H :])
        G[:, t, :H], G[:, t, H : 2 * H] = i, f
        G[:, t, 2 * H : 3 * H], G[:, t, 3 * H :] = g, o
        c = f * c + i * g
        tc = _cell_act(c, everywhere)
        h = o * tc
        C[:, t], TC[:, t], Hs[:, t] = c, tc, h
    cache = LstmCache(p=p, X=X, Z=Z, G=G, C=C, TC=TC, H=Hs, h0=h0_, c0=c0_,
                      everywhere=everywhere)
    return Hs, cache


def lstm_backward_batch(cache: LstmCache, dH: np.ndarray) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Reverse-mode BPTT. dH is the upstream gradient on every hidden state;
    returns ({'W','U','b'} gradients, gradient w.r.t. the layer input)."""
    p = cache.p
    B, T, H = cache.H.shape
    D = p.input_dim
    ev = cache.everywhere

    dZ = np.empty((B, T, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        dh = dH[:, t] + dh_next
        i, f = cache.G[:, t, :H], cache.G[:, t, H : 2 * H]
        g, o = cache.G[:, t, 2 * H : 3 * H], cache.G[:, t, 3 * H :]
        tc = cache.TC[:, t]
        c_prev = cache.C[:, t - 1] if t > 0 else cache.c0
        do = dh * tc
        dc = dc_next + dh * o * _cell_act_grad(cache.C[:, t], tc, ev)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_next = dc * f
        z = cache.Z[:, t]
        dZ[:, t, :H] = di * hard_sigmoid_grad(z[:, :H])
        dZ[:, t, H : 2 * H] = df * hard_sigmoid_grad(z[:, H : 2 * H])
        dZ[:, t, 2 * H : 3 * H] = dg * _cell_act_grad(z[:, 2 * H : 3 * H], g, ev)
        dZ[:, t, 3 * H :] = do * hard_sigmoid_grad(z[:, 3 * H :])
        dh_next = dZ[:, t] @ p.U

    Hprev = np.concatenate([cache.h0[:, None, :], cache.H[:, :-1]], axis=1)
    dZ_flat = dZ.reshape(B * T, 4 * H)
    grads = {
        "W": dZ_flat.T @ cache.X.reshape(B * T, D),
        "U": dZ_flat.T @ Hprev.reshape(B * T, H),
        "b": dZ.sum(axis=(0, 1)),
    }
    dX = (dZ_flat @ p.W).reshape(B, T, D)
    return grads, dX


def lstm_forward(p: LstmLayerParams, xs: np.ndarray, h0=None, c0=None,
                 everywhere: bool = False):
    """Single-sequence forward: xs is (T, D); returns (hs, cs, cache)."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2:
        raise ValueError("xs must be a T x D matrix")
    h0b = None if h0 is None else np.asarray(h0)[None, :]
    c0b = None if c0 is None else np.asarray(c0)[None, :]
    Hs, cache = lstm_forward_batch(p, xs[None], h0b, c0b, everywhere)
    return Hs[0], cache.C[0], cache


def lstm_backward(cache: LstmCache, d_h: np.ndarray):
    """Single-sequence backward: d_h is (T, H) upstream hidden gradients."""
    d_h = np.asarray(d_h, dtype=np.float64)
    if d_h.shape != cache.H.shape[1:]:
        raise ValueError("upstream gradient shape does not match cached forward")
    grads, dX = lstm_backward_batch(cache, d_h[None])
    return grads, dX[0]


# ---------------------------------------------------------------------------
# Dense layers and softmax cross-entropy
# ---------------------------------------------------------------------------

@dataclass
class DenseCache:
    p: DenseLayerParams
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits)
    if z.dtype.kind != "f":
        z = z.astype(np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def dense_forward(p: DenseLayerParams, x: np.ndarray) -> tuple[np.ndarray, DenseCache]:
    x = np.asarray(x)
    if x.dtype.kind != "f":
        x = x.astype(np.float64)
    single = x.ndim == 1
    xb = x[None] if single else x
    if xb.shape[1] != p.W.shape[1]:
        raise ValueError(f"dense input dim {xb.shape[1]} != {p.W.shape[1]}")
    z = xb @ p.W.T + p.b
    if p.activation is Activation.RELU:
        y = np.maximum(z, 0.0)
    else:
        y = softmax(z)
    cache = DenseCache(p=p, x=xb, z=z, y=y)
    return (y[0] if single else y), cache


def dense_backward(cache: DenseCache, d_y: np.ndarray) -> tuple[dict[str, np.ndarray], np.ndarray]:
    d_y = np.asarray(d_y, dtype=np.float64)
    single = d_y.ndim == 1
    dyb = d_y[None] if single else d_y
    if cache.p.activation is Activation.RELU:
        dz = dyb * (cache.z > 0.0)  # subgradient at 0 is 0
    else:
        y = cache.y
        dz = y * (dyb - (dyb * y).sum(axis=1, keepdims=True))
    grads = {"W": dz.T @ cache.x, "b": dz.sum(axis=0)}
    dx = dz @ cache.p.W
    return grads, (dx[0] if single else dx)


def softmax_cross_entropy(logits: np.ndarray, y: np.ndarray):
    """Returns (loss, d_logits, probs) for one sample; max-subtracted softmax."""
    probs = softmax(logits)
    y = np.asarray(y, dtype=np.float64)
    true_idx = int(np.argmax(y))
    loss = -np.log(max(probs[true_idx], 1e-300))
    return loss, probs - y, probs


# ---------------------------------------------------------------------------
# Full model
# ---------------------------------------------------------------------------

@dataclass
class ModelCache:
    lstm1: LstmCache
    lstm2: LstmCache
    dense: list[DenseCache]
    out_cache: DenseCache
    lengths: np.ndarray
    h_final: np.ndarray
    probs: np.ndarray


def _gather_final(Hs: np.ndarray, lengths) -> np.ndarray:
    idx = np.asarray(lengths) - 1
    return Hs[np.arange(Hs.shape[0]), idx]


def model_forward_batch(p: ModelParams, X: np.ndarray, lengths=None) -> tuple[np.ndarray, ModelCache]:
    """X is (B, T, 6) zero-padded at the end; state is read at each item's
    true final step so padding never influences the output."""
    B, T, _ = X.shape
    lengths = np.full(B, T) if lengths is None else np.asarray(lengths)
    ev = p.hard_sigmoid_everywhere
    H1, c1 = lstm_forward_batch(p.lstm1, X, everywhere=ev)
    H2, c2 = lstm_forward_batch(p.lstm2, H1, everywhere=ev)
    h_final = _gather_final(H2, lengths)
    dense_caches = []
    a = h_final
    for layer in filter(None, (p.dense1, p.dense2)):
        a, dc = dense_forward(layer, a)
        dense_caches.append(dc)
    logits = a @ p.dense_out.W.T + p.dense_out.b
    probs = softmax(logits)
    out_cache = DenseCache(p=p.dense_out, x=a, z=logits, y=probs)
    cache = ModelCache(lstm1=c1, lstm2=c2, dense=dense_caches, out_cache=out_cache,
                       lengths=lengths, h_final=h_final, probs=probs)
    return probs, cache


def model_forward(p: ModelParams, x: np.ndarray) -> tuple[np.ndarray, ModelCache]:
    """Single sequence (T, 6) -> class probability vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != p.lstm1.input_dim:
        raise ValueError(f"expected a T x {p.lstm1.input_dim} input, got {x.shape}")
    probs, cache = model_forward_batch(p, x[None])
    return probs[0], cache


def model_backward(p: ModelParams, cache: ModelCache, d_logits: np.ndarray) -> dict[str, np.ndarray]:
    """Reverse mode from the gradient on the output logits."""
    grads: dict[str, np.ndarray] = {}
    dz = np.asarray(d_logits, dtype=np.float64)
    grads["dense_out.W"] = dz.T @ cache.out_cache.x
    grads["dense_out.b"] = dz.sum(axis=0)
    da = dz @ p.dense_out.W
    names = ["dense1"] + (["dense2"] if p.dense2 is not None else [])
    for name, dc in zip(reversed(names), reversed(cache.dense)):
        g, da = dense_backward(dc, da)
        grads[f"{name}.W"], grads[f"{name}.b"] = g["W"], g["b"]

    B, T, H2 = cache.lstm2.H.shape
    dH2 = np.zeros((B, T, H2))
    dH2[np.arange(B), cache.lengths - 1] = da
    g2, dH1 = lstm_backward_batch(cache.lstm2, dH2)
    grads["lstm2.W"], grads["lstm2.U"], grads["lstm2.b"] = g2["W"], g2["U"], g2["b"]
    g1, _ = lstm_backward_batch(cache.lstm1, dH1)
    grads["lstm1.W"], grads["lstm1.U"], grads["lstm1.b"] = g1["W"], g1["U"], g1["b"]
    return grads


def batch_loss_and_grads(p: ModelParams, X: np.ndarray, Y: np.ndarray, lengths):
    """Mean cross-entropy over the batch plus averaged parameter gradients."""
    probs, cache = model_forward_batch(p, X, lengths)
    B = X.shape[0]
    picked = np.clip((probs * Y).sum(axis=1), 1e-300, None)
    loss = float(-np.log(picked).mean())
    d_logits = (probs - Y) / B
    grads = model_backward(p, cache, d_logits)
    return loss, grads, probs


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> dict[str, np.ndarray]:
    total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total <= max_norm or total == 0.0:
        return grads
    scale = max_norm / total
    return {k: g * scale for k, g in grads.items()}


def rmsprop_update(p: ModelParams, opt: OptState, grads: dict[str, np.ndarray]):
    hp = opt.hyper
    new_arrays = {}
    new_v = {}
    for name, arr in p.named_arrays():
        g = grads[name]
        v = hp.rho * opt.v[name] + (1.0 - hp.rho) * g * g
        new_arrays[name] = arr - hp.learning_rate * g / (np.sqrt(v) + hp.epsilon)
        new_v[name] = v
    return p.rebuild(new_arrays), OptState(v=new_v, hyper=hp)


def _stack_samples(batch: list[TrainSample]):
    lengths = [s.x.shape[0] for s in batch]
    t_max = max(lengths)
    B = len(batch)
    X = np.zeros((B, t_max, batch[0].x.shape[1]))
    Y = np.zeros((B, len(batch[0].y)))
    for i, s in enumerate(batch):
        X[i, : lengths[i]] = s.x
        Y[i] = s.y
    return X, Y, lengths


def train_step(p: ModelParams, opt: OptState, batch: list[TrainSample],
               clip_norm: float | None = 5.0, batch_ids=None):
    """One RMSprop step on a batch; returns (new params, new state, mean loss)."""
    if not batch:
        raise ValueError("empty batch")
    X, Y, lengths = _stack_samples(batch)
    loss, grads, _ = batch_loss_and_grads(p, X, Y, lengths)
    if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
        raise DivergedError(batch_ids if batch_ids is not None else range(len(batch)))
    if clip_norm is not None:
        grads = clip_gradients(grads, clip_norm)
    p2, opt2 = rmsprop_update(p, opt, grads)
    return p2, opt2, loss


# ---------------------------------------------------------------------------
# Finite-difference gradient verification
# ---------------------------------------------------------------------------

def flatten_params(p: ModelParams) -> tuple[np.ndarray, ModelParams]:
    """Concatenate all parameters into one vector and rebuild the params as
    views into it, so single coordinates can be nudged in place."""
    flat = np.concatenate([a.ravel() for _, a in p.named_arrays()])
    views = {}
    offset = 0
    for name, a in p.named_arrays():
        views[name] = flat[offset : offset + a.size].reshape(a.shape)
        offset += a.size
    return flat, p.rebuild(views)


def _kink_preacts(cache: ModelCache) -> list[tuple[np.ndarray, float]]:
    """(pre-activation array, kink location in |.|) pairs for every
    piecewise-linear activation in the model."""
    out = []
    for lc in (cache.lstm1, cache.lstm2):
        H = lc.p.hidden
        gate_z = np.concatenate([lc.Z[..., : 2 * H], lc.Z[..., 3 * H :]], axis=-1)
        out.append((gate_z, HARD_SIGMOID_KINK))
        if lc.everywhere:
            out.append((lc.Z[..., 2 * H : 3 * H], HARD_SIGMOID_KINK))
            out.append((lc.C, HARD_SIGMOID_KINK))
    for dc in cache.dense:
        out.append((dc.z, 0.0))
    return out


def _kink_crossing(cache_a: ModelCache, cache_b: ModelCache, margin: float) -> bool:
    """True if any pre-activation moved across (or within `margin` of) a kink
    between the two perturbed forward passes."""
    for (za, kink), (zb, _) in zip(_kink_preacts(cache_a), _kink_preacts(cache_b)):
        moved = za != zb
        if not moved.any():
            continue
        da = np.abs(za) - kink if kink else za
        db = np.abs(zb) - kink if kink else zb
        risky = moved & ((da * db <= 0.0) | (np.abs(da) < margin) | (np.abs(db) < margin))
        if risky.any():
            return True
    return False


def sample_loss(p: ModelParams, sample: TrainSample) -> tuple[float, ModelCache]:
    probs, cache = model_forward_batch(p, sample.x[None], [sample.x.shape[0]])
    true_idx = int(np.argmax(sample.y))
    return float(-np.log(max(probs[0, true_idx], 1e-300))), cache


def _probe_loss(p: ModelParams, sample: TrainSample):
    """Like sample_loss but keeps the dtype of the parameters, so probes can
    run in extended precision."""
    probs, cache = model_forward_batch(p, sample.x[None], [sample.x.shape[0]])
    true_idx = int(np.argmax(sample.y))
    picked = np.maximum(probs[0, true_idx], probs.dtype.type(1e-300))
    return -np.log(picked), cache


def grad_check(p: ModelParams, sample: TrainSample, h: float = 1e-6):
    """Compare analytic gradients to central finite differences.

    The two probe losses are evaluated in extended precision (80-bit on
    x86): the relative error floor of 1e-8 sits below the float64
    finite-difference noise for near-zero gradient coordinates, so a
    float64 oracle would report noise instead of backward-pass defects.

    Coordinates whose perturbation lands a pre-activation within 10h of a
    ReLU/hard-sigmoid kink (or across one) are skipped: finite differences
    are invalid there. Returns (max relative error, n checked, n skipped).
    """
    _, cache = sample_loss(p, sample)
    d_logits = (cache.probs - sample.y[None])
    analytic = model_backward(p, cache, d_logits)
    flat_analytic = np.concatenate(
        [analytic[name].ravel() for name, _ in p.named_arrays()]
    )

    p_ld = p.rebuild({k: a.astype(np.longdouble) for k, a in p.named_arrays()})
    s_ld = TrainSample(x=np.asarray(sample.x, dtype=np.longdouble), y=sample.y)
    flat, pv = flatten_params(p_ld)
    h = np.longdouble(h)
    margin = 10.0 * h
    max_rel = 0.0
    n_skipped = 0
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + h
        lp, cp = _probe_loss(pv, s_ld)
        flat[j] = orig - h
        lm, cm = _probe_loss(pv, s_ld)
        flat[j] = orig
        if _kink_crossing(cp, cm, margin):
            n_skipped += 1
            continue
        fd = (lp - lm) / (2.0 * h)
        a = flat_analytic[j]
        rel = abs(a - fd) / max(abs(a), abs(fd), 1e-8)
        if rel > max_rel:
            max_rel = rel
    return float(max_rel), flat.size - n_skipped, n_skipped


# ---------------------------------------------------------------------------
# Checkpoint serialization
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<4sHBHHHHHH")  # magic, version, flags, D, H1, H2, n_hidden_dense, dense_units, C


def save_checkpoint(path, p: ModelParams, opt: OptState | None = None) -> None:
    flags = (1 if p.hard_sigmoid_everywhere else 0) | (2 if p.dense2 is not None else 0)
    header = _HEADER.pack(
        CHECKPOINT_MAGIC, CHECKPOINT_VERSION, flags,
        p.lstm1.input_dim, p.lstm1.hidden, p.lstm2.hidden,
        2 if p.dense2 is not None else 1, p.dense1.W.shape[0], p.n_classes,
    )
    with open(path, "wb") as f:
        f.write(header)
        for _, a in p.named_arrays():
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
        if opt is not None:
            f.write(b"\x01")
            f.write(struct.pack("<3d", opt.hyper.learning_rate, opt.hyper.rho, opt.hyper.epsilon))
            for name, _ in p.named_arrays():
                f.write(np.ascontiguousarray(opt.v[name], dtype="<f8").tobytes())
        else:
            f.write(b"\x00")


def load_checkpoint(path) -> tuple[ModelParams, OptState | None]:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _HEADER.size:
        raise ValueError("checkpoint truncated")
    magic, version, flags, D, H1, H2, n_hidden, dense_units, C = _HEADER.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError("not a model checkpoint (bad magic)")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    everywhere = bool(flags & 1)
    extra_dense = bool(flags & 2)
    if extra_dense != (n_hidden == 2):
        raise ValueError("inconsistent dense layer count")

    shapes = [
        ("lstm1.W", (4 * H1, D)), ("lstm1.U", (4 * H1, H1)), ("lstm1.b", (4 * H1,)),
        ("lstm2.W", (4 * H2, H1)), ("lstm2.U", (4 * H2, H2)), ("lstm2.b", (4 * H2,)),
        ("dense1.W", (dense_units, H2)), ("dense1.b", (dense_units,)),
    ]
    if extra_dense:
        shapes += [("dense2.W", (dense_units, dense_units)), ("dense2.b", (dense_units,))]
    shapes += [("dense_out.W", (C, dense_units)), ("dense_out.b", (C,))]

    offset = _HEADER.size
    n_floats = sum(int(np.prod(s)) for _, s in shapes)
    if len(data) < offset + 8 * n_floats + 1:
        raise ValueError("checkpoint payload does not match declared dimensions")

    def take(shape):
        nonlocal offset
        n = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<f8", count=n, offset=offset).reshape(shape).copy()
        offset += 8 * n
        return arr

    arrays = {name: take(shape) for name, shape in shapes}
    d2 = None
    if extra_dense:
        d2 = DenseLayerParams(arrays["dense2.W"], arrays["dense2.b"], Activation.RELU)
    params = ModelParams(
        lstm1=LstmLayerParams(arrays["lstm1.W"], arrays["lstm1.U"], arrays["lstm1.b"]),
        lstm2=LstmLayerParams(arrays["lstm2.W"], arrays["lstm2.U"], arrays["lstm2.b"]),
        dense1=DenseLayerParams(arrays["dense1.W"], arrays["dense1.b"], Activation.RELU),
        dense_out=DenseLayerParams(arrays["dense_out.W"], arrays["dense_out.b"], Activation.SOFTMAX),
        dense2=d2,
        hard_sigmoid_everywhere=everywhere,
    )
    opt = None
    has_opt = data[offset]
    offset += 1
    if has_opt:
        lr, rho, eps = struct.unpack_from("<3d", data, offset)
        offset += 24
        if len(data) < offset + 8 * n_floats:
            raise ValueError("checkpoint optimizer state truncated")
        v = {name: take(shape) for name, shape in shapes}
        opt = OptState(v=v, hyper=RmsPropHyper(lr, rho, eps))
    return params, opt
