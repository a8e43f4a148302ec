"""Feed-forward network with analytic input derivatives and parameter gradients.

The engine propagates the tuple (value, d/dt, d/ds, d2/ds2) through every
layer, so the network output N(t, s) comes with exact first derivatives in
both inputs and the exact second derivative in s. Parameter gradients of any
scalar functional of (N, dN/dt, dN/ds, d2N/ds2) are computed by reverse
accumulation through the same channel recursion, which needs activation
derivatives up to third order.

ReLU uses the zero convention at the kink: f'(0) = 0 and f'' identically 0,
so second-derivative channels of a ReLU network vanish everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

ACTIVATIONS = ("sigmoid", "tanh", "relu")

WEIGHT_MAGIC = "jdpinn-weights v1"


@dataclass(frozen=True)
class NetworkArchitecture:
    """Layer widths from the (t, s) input pair down to the scalar output."""

    layer_sizes: tuple[int, ...]
    activation: str = "sigmoid"

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise DataError("need at least input and output layers")
        if self.layer_sizes[0] != 2:
            raise DataError("first layer size must be 2 (inputs t, s)")
        if self.layer_sizes[-1] != 1:
            raise DataError("last layer size must be 1")
        if any(n <= 0 for n in self.layer_sizes):
            raise DataError("layer sizes must be positive")
        if self.activation not in ACTIVATIONS:
            raise DataError(f"unknown activation {self.activation!r}")

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1


@dataclass
class NetworkParams:
    """Per-layer weight matrices (next x prev) and bias vectors."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def flat(self) -> np.ndarray:
        return np.concatenate(
            [w.ravel() for w in self.weights] + [b.ravel() for b in self.biases]
        )


@dataclass(frozen=True)
class EvalResult:
    n: float
    dn_dt: float
    dn_ds: float
    d2n_ds2: float


def init_params(arch: NetworkArchitecture, seed: int) -> NetworkParams:
    """Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.

    Deterministic for a given seed (Philox stream, see rngutil).
    """
    from .rngutil import generator

    rng = generator(seed, "neural-init")
    weights, biases = [], []
    for fan_in, fan_out in zip(arch.layer_sizes, arch.layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(weights=weights, biases=biases)


def _check_shapes(arch: NetworkArchitecture, params: NetworkParams):
    if len(params.weights) != arch.n_layers or len(params.biases) != arch.n_layers:
        raise DataError("parameter layer count does not match architecture")
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        expect = (arch.layer_sizes[layer + 1], arch.layer_sizes[layer])
        if w.shape != expect:
            raise DataError(f"layer {layer} weight shape {w.shape}, expected {expect}")
        if b.shape != (expect[0],):
            raise DataError(f"layer {layer} bias shape {b.shape}, expected ({expect[0]},)")


def _act_tables(name):
    """f and its first three derivatives, each mapping an array to an array."""
    if name == "sigmoid":
        def f(z):
            return 1.0 / (1.0 + np.exp(-z))

        def f1(z, a):
            return a * (1.0 - a)

        def f2(z, a):
            return a * (1.0 - a) * (1.0 - 2.0 * a)

        def f3(z, a):
            return a * (1.0 - a) * (1.0 - 6.0 * a + 6.0 * a * a)

    elif name == "tanh":
        def f(z):
            return np.tanh(z)

        def f1(z, a):
            return 1.0 - a * a

        def f2(z, a):
            return -2.0 * a * (1.0 - a * a)

        def f3(z, a):
            return -2.0 * (1.0 - a * a) * (1.0 - 3.0 * a * a)

    else:  # relu, kink derivative taken as 0
        def f(z):
            return np.maximum(z, 0.0)

        def f1(z, a):
            return (z > 0.0).astype(float)

        def f2(z, a):
            return np.zeros_like(z)

        def f3(z, a):
            return np.zeros_like(z)

    return f, f1, f2, f3


def _forward_channels(arch, params, t, s, keep_cache=False):
    """Propagate (value, dt, ds, dss) channels over a batch of points.

    t, s: 1-d arrays of equal length. Returns (N, Nt, Ns, Nss) arrays and,
    when keep_cache, the per-layer intermediates needed for the reverse pass.
    """
    _check_shapes(arch, params)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    f, f1, f2, f3 = _act_tables(arch.activation)

    a = np.stack([t, s], axis=1)
    at = np.zeros_like(a)
    at[:, 0] = 1.0
    a_s = np.zeros_like(a)
    a_s[:, 1] = 1.0
    ass = np.zeros_like(a)

    cache = [] if keep_cache else None
    n_layers = arch.n_layers
    for layer in range(n_layers):
        w, b = params.weights[layer], params.biases[layer]
        z = a @ w.T + b
        zt = at @ w.T
        zs = a_s @ w.T
        zss = ass @ w.T
        if layer < n_layers - 1:
            act = f(z)
            d1 = f1(z, act)
            d2 = f2(z, act)
            if keep_cache:
                cache.append((a, at, a_s, ass, z, zs, zss, zt, act, d1, d2))
            at = d1 * zt
            ass = d2 * zs * zs + d1 * zss
            a_s = d1 * zs
            a = act
        else:
            if keep_cache:
                cache.append((a, at, a_s, ass, z, zs, zss, zt, None, None, None))
            a, at, a_s, ass = z, zt, zs, zss

    n = a[:, 0]
    nt = at[:, 0]
    ns = a_s[:, 0]
    nss = ass[:, 0]
    if keep_cache:
        return n, nt, ns, nss, cache
    return n, nt, ns, nss


def eval_batch(arch: NetworkArchitecture, params: NetworkParams, t, s):
    """Vectorized evaluation; returns arrays (n, dn_dt, dn_ds, d2n_ds2)."""
    return _forward_channels(arch, params, t, s)


def eval(arch: NetworkArchitecture, params: NetworkParams, t: float, s: float) -> EvalResult:
    n, nt, ns, nss = _forward_channels(arch, params, [t], [s])
    return EvalResult(float(n[0]), float(nt[0]), float(ns[0]), float(nss[0]))


def single_layer_analytic(params: NetworkParams, t: float, s: float) -> EvalResult:
    """Closed-form evaluation for a 2-M-1 sigmoid network.

    N = sum_r q_r f(z_r) + b_out with z_r = w_r t + gamma_r s + b_r, and
      dN/dt    = sum_r q_r w_r f(z_r)(1 - f(z_r))
      dN/ds    = sum_r q_r gamma_r f(z_r)(1 - f(z_r))
      d2N/ds2  = sum_r q_r gamma_r^2 f(z_r)(1 - f(z_r))(1 - 2 f(z_r)).

    Serves as an independent oracle for the general engine on this shape.
    """
    if len(params.weights) != 2 or params.weights[0].shape[1] != 2 or params.weights[1].shape[0] != 1:
        raise DataError("single_layer_analytic requires a 2-M-1 network")
    w = params.weights[0][:, 0]
    gamma = params.weights[0][:, 1]
    b = params.biases[0]
    q = params.weights[1][0, :]
    z = w * t + gamma * s + b
    fz = 1.0 / (1.0 + np.exp(-z))
    fp = fz * (1.0 - fz)
    n = float(np.sum(q * fz) + params.biases[1][0])
    dn_dt = float(np.sum(q * w * fp))
    dn_ds = float(np.sum(q * gamma * fp))
    d2n_ds2 = float(np.sum(q * gamma**2 * fp * (1.0 - 2.0 * fz)))
    return EvalResult(n, dn_dt, dn_ds, d2n_ds2)


def zero_gradients(params: NetworkParams):
    return [
        (np.zeros_like(w), np.zeros_like(b))
        for w, b in zip(params.weights, params.biases)
    ]


def param_gradients(arch: NetworkArchitecture, params: NetworkParams, t, s, upstream):
    """Gradient w.r.t. every weight and bias of the batch-summed scalar

        G = sum_points uN*N + uNt*dN/dt + uNs*dN/ds + uNss*d2N/ds2,

    where upstream = (uN, uNt, uNs, uNss) are arrays over the batch. Reverse
    accumulation runs through the forward channel recursion, so the result is
    exact for smooth activations (ReLU inherits the kink zero convention).
    Returns a list of (dW, db) pairs, one per layer.
    """
    uN, uNt, uNs, uNss = (np.atleast_1d(np.asarray(u, dtype=float)) for u in upstream)
    n, nt, ns, nss, cache = _forward_channels(arch, params, t, s, keep_cache=True)
    _, f1, f2, f3 = _act_tables(arch.activation)

    n_layers = arch.n_layers
    out_width = 1
    ga = np.stack([uN], axis=1).reshape(-1, out_width)
    gat = uNt.reshape(-1, out_width)
    gas = uNs.reshape(-1, out_width)
    gass = uNss.reshape(-1, out_width)

    grads = zero_gradients(params)
    for layer in reversed(range(n_layers)):
        a, at, a_s, ass, z, zs, zss, zt, act, d1, d2 = cache[layer]
        w = params.weights[layer]
        if layer == n_layers - 1:
            gz, gzt, gzs, gzss = ga, gat, gas, gass
        else:
            d3 = f3(z, act)
            # Adjoints of the pre-activations from the channel recursion:
            #   a = f(z); at = f1*zt; as = f1*zs; ass = f2*zs^2 + f1*zss
            gz = (
                ga * d1
                + gat * d2 * zt
                + gas * d2 * zs
                + gass * (d3 * zs * zs + d2 * zss)
            )
            gzt = gat * d1
            gzs = gas * d1 + gass * 2.0 * d2 * zs
            gzss = gass * d1
        dw = gz.T @ a + gzt.T @ at + gzs.T @ a_s + gzss.T @ ass
        db = gz.sum(axis=0)
        grads[layer] = (dw, db)
        ga = gz @ w
        gat = gzt @ w
        gas = gzs @ w
        gass = gzss @ w
    return grads


def save_weights(path, arch: NetworkArchitecture, params: NetworkParams):
    """Versioned text format; floats use shortest round-trip encoding."""
    _check_shapes(arch, params)
    lines = [
        WEIGHT_MAGIC,
        "layers: " + " ".join(str(n) for n in arch.layer_sizes),
        f"activation: {arch.activation}",
    ]
    for w, b in zip(params.weights, params.biases):
        lines.append(" ".join(repr(float(x)) for x in w.ravel()))
        lines.append(" ".join(repr(float(x)) for x in b.ravel()))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_weights(path):
    """Inverse of save_weights; returns (architecture, params)."""
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != WEIGHT_MAGIC:
        raise DataError(f"{path}: not a {WEIGHT_MAGIC!r} file")
    if not lines[1].startswith("layers: ") or not lines[2].startswith("activation: "):
        raise DataError(f"{path}: malformed header")
    sizes = tuple(int(x) for x in lines[1][len("layers: "):].split())
    activation = lines[2][len("activation: "):].strip()
    arch = NetworkArchitecture(layer_sizes=sizes, activation=activation)
    weights, biases = [], []
    row = 3
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        try:
            w = np.array([float(x) for x in lines[row].split()]).reshape(fan_out, fan_in)
            b = np.array([float(x) for x in lines[row + 1].split()])
        except (IndexError, ValueError) as exc:
            raise DataError(f"{path}: truncated or malformed weight block") from exc
        if b.shape != (fan_out,):
            raise DataError(f"{path}: bias length mismatch at layer block {row}")
        weights.append(w)
        biases.append(b)
        row += 2
    params = NetworkParams(weights=weights, biases=biases)
    _check_shapes(arch, params)
    return arch, params
