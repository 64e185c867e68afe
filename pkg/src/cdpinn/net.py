"""Dense network mapping time to (schedule, gauge-potential entries, Pauli coefficients).

Hidden layers use ``tanh``; the output layer applies a sigmoid to the schedule
slot and the identity everywhere else.  Besides the outputs, every forward pass
can carry the tangent ``d/dt`` of all activations, which gives the exact
schedule velocity.  The backward pass runs through both the primal and the
tangent streams, so parameter gradients of losses that contain the velocity
include the mixed ``d^2 lambda / dt dTheta`` paths.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FormatError, UnsupportedVersion

CHECKPOINT_SCHEMA = 1


def output_width(n_qubits):
    """Schedule + real/imag parts of every gauge entry + one coefficient per Pauli string."""
    return 1 + 3 * 4**n_qubits


def default_layer_sizes(n_qubits, hidden=(30,) * 6):
    return (1, *hidden, output_width(n_qubits))


def n_qubits_for_width(width):
    n, w = 1, output_width(1)
    while w < width:
        n += 1
        w = output_width(n)
    if w != width:
        raise ConfigError(f"output width {width} does not correspond to any qubit count")
    return n


@dataclass(eq=False)
class MlpParameters:
    layer_sizes: tuple
    weights: list
    biases: list

    def __post_init__(self):
        self.layer_sizes = tuple(int(n) for n in self.layer_sizes)
        check_layer_sizes(self.layer_sizes)
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ConfigError("layer count does not match layer_sizes")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_sizes[k + 1], self.layer_sizes[k])
            if np.shape(w) != shape or np.shape(b) != (shape[0],):
                raise ConfigError(f"layer {k + 1}: got W{np.shape(w)}, b{np.shape(b)}, expected W{shape}")

    @property
    def n_qubits(self):
        return n_qubits_for_width(self.layer_sizes[-1])

    def arrays(self):
        """Weights and biases interleaved: ``[W1, b1, W2, b2, ...]``."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @classmethod
    def from_arrays(cls, layer_sizes, arrays):
        return cls(layer_sizes, list(arrays[0::2]), list(arrays[1::2]))

    def map(self, fn, *others):
        arrays = [fn(*xs) for xs in zip(self.arrays(), *(o.arrays() for o in others))]
        return MlpParameters.from_arrays(self.layer_sizes, arrays)

    def copy(self):
        return self.map(np.array)

    def flatten(self):
        return np.concatenate([a.ravel() for a in self.arrays()])

    @classmethod
    def unflatten(cls, layer_sizes, vector):
        arrays, pos = [], 0
        for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            arrays.append(np.array(vector[pos:pos + n_out * n_in]).reshape(n_out, n_in))
            pos += n_out * n_in
            arrays.append(np.array(vector[pos:pos + n_out]))
            pos += n_out
        return cls.from_arrays(layer_sizes, arrays)

    @property
    def size(self):
        return sum(a.size for a in self.arrays())

    def __eq__(self, other):
        if not isinstance(other, MlpParameters):
            return NotImplemented
        return self.layer_sizes == other.layer_sizes and all(
            np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays())
        )


def check_layer_sizes(layer_sizes):
    if len(layer_sizes) < 2 or any(n < 1 for n in layer_sizes):
        raise ConfigError(f"invalid layer sizes {layer_sizes!r}")
    if layer_sizes[0] != 1:
        raise ConfigError("the network takes a single (time) input")
    n_qubits_for_width(layer_sizes[-1])


def glorot_init(layer_sizes, seed):
    """Glorot-uniform weights, zero biases; deterministic in ``seed``."""
    layer_sizes = tuple(int(n) for n in layer_sizes)
    check_layer_sizes(layer_sizes)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = np.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return MlpParameters(layer_sizes, weights, biases)


@dataclass(eq=False)
class OutputBundle:
    """Physical network outputs at a batch of time points.

    ``lam`` and ``dlam`` have shape ``(N,)``, ``a_cd`` is ``(N, d, d)`` complex
    and ``c`` is ``(N, 4**n_qubits)`` real.  ``dlam`` is ``None`` when the
    tangent was not requested.
    """

    t: np.ndarray
    lam: np.ndarray
    a_cd: np.ndarray
    c: np.ndarray
    dlam: np.ndarray = None

    def __len__(self):
        return self.lam.shape[0]

    def take(self, index):
        if isinstance(index, (int, np.integer)):
            index = slice(index, index + 1)
        return OutputBundle(
            self.t[index], self.lam[index], self.a_cd[index], self.c[index],
            None if self.dlam is None else self.dlam[index],
        )


@dataclass(eq=False)
class BundleGrad:
    """Gradient of a real scalar with respect to every ``OutputBundle`` field.

    For the complex ``a_cd`` the convention is ``dL/dRe + 1j * dL/dIm``.
    """

    lam: np.ndarray
    dlam: np.ndarray
    a_cd: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros_like(cls, bundle):
        n = len(bundle)
        return cls(np.zeros(n), np.zeros(n), np.zeros_like(bundle.a_cd), np.zeros_like(bundle.c))

    def __add__(self, other):
        return BundleGrad(self.lam + other.lam, self.dlam + other.dlam, self.a_cd + other.a_cd, self.c + other.c)

    @classmethod
    def concat(cls, parts):
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in ("lam", "dlam", "a_cd", "c")))


def _sigmoid(x):
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass
class _Trace:
    # Row blocks [primal; tangent] of every layer input, so one matmul serves both.
    inputs: list = field(default_factory=list)
    pre_tans: list = field(default_factory=list)  # dz/dt that produced each hidden input
    n: int = 0
    z_out: np.ndarray = None
    dz_out: np.ndarray = None


def _run(params, t, tangent):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = t.shape[0]
    x = np.concatenate((t, np.ones(n)))[:, None] if tangent else t[:, None]
    trace = _Trace(n=n)
    dz = None
    n_layers = len(params.weights)
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        trace.inputs.append(x)
        trace.pre_tans.append(dz)
        zz = x @ w.T
        z = zz[:n] + b
        dz = zz[n:] if tangent else None
        if k == n_layers - 1:
            trace.z_out, trace.dz_out = z, dz
        else:
            a = np.tanh(z)
            x = np.concatenate((a, (1.0 - a * a) * dz)) if tangent else a
    return t, trace


def _bundle(t, trace, n_qubits, tangent):
    z = trace.z_out
    n = z.shape[0]
    d = 2**n_qubits
    m = d * d
    lam = _sigmoid(z[:, 0])
    pairs = z[:, 1:1 + 2 * m].reshape(n, m, 2)
    a_cd = (pairs[..., 0] + 1j * pairs[..., 1]).reshape(n, d, d)
    c = z[:, 1 + 2 * m:].copy()
    dlam = lam * (1.0 - lam) * trace.dz_out[:, 0] if tangent else None
    return OutputBundle(t, lam, a_cd, c, dlam)


def forward(params, t):
    """Network outputs at time(s) ``t`` without the schedule velocity."""
    t, trace = _run(params, t, tangent=False)
    return _bundle(t, trace, params.n_qubits, tangent=False)


def forward_with_input_derivative(params, t):
    """Network outputs at time(s) ``t`` including the exact ``dlam/dt``."""
    t, trace = _run(params, t, tangent=True)
    return _bundle(t, trace, params.n_qubits, tangent=True)


def loss_gradient(params, t, loss_fn):
    """Value and exact parameter gradient of a loss over network outputs.

    Parameters
    ----------
    params : MlpParameters
    t : array_like
        Time points fed to the network as one batch.
    loss_fn : callable
        ``loss_fn(bundle) -> (value, BundleGrad)`` where the ``BundleGrad``
        holds the derivative of ``value`` with respect to each output field.

    Returns
    -------
    value, extra, MlpParameters
        ``value`` and anything else ``loss_fn`` returned as a third item
        (``None`` otherwise), followed by the gradient.
    """
    t, trace = _run(params, t, tangent=True)
    bundle = _bundle(t, trace, params.n_qubits, tangent=True)
    result = loss_fn(bundle)
    value, g = result[0], result[1]
    extra = result[2] if len(result) > 2 else None

    n = len(bundle)
    m = bundle.a_cd.shape[-1] ** 2
    lam = bundle.lam
    s1 = lam * (1.0 - lam)
    # rows [:n] hold dL/dz, rows [n:] hold dL/d(dz/dt)
    gzz = np.zeros((2 * n, trace.z_out.shape[1]))
    # lam = sig(u), dlam = sig'(u) du; d dlam/du = sig'(u) (1 - 2 lam) du
    gzz[:n, 0] = g.lam * s1 + g.dlam * s1 * (1.0 - 2.0 * lam) * trace.dz_out[:, 0]
    gzz[n:, 0] = g.dlam * s1
    ga = np.asarray(g.a_cd).reshape(n, m)
    gzz[:n, 1:1 + 2 * m] = np.stack([ga.real, ga.imag], axis=-1).reshape(n, 2 * m)
    gzz[:n, 1 + 2 * m:] = g.c

    grads_w = [None] * len(params.weights)
    grads_b = [None] * len(params.weights)
    for k in range(len(params.weights) - 1, -1, -1):
        x = trace.inputs[k]
        grads_w[k] = gzz.T @ x
        grads_b[k] = gzz[:n].sum(axis=0)
        if k == 0:
            break
        gx = gzz @ params.weights[k]
        g_a, g_da = gx[:n], gx[n:]
        # a = tanh(z), da = (1 - a^2) dz
        a = x[:n]
        s = 1.0 - a * a
        gzz = np.concatenate((s * (g_a - 2.0 * a * trace.pre_tans[k] * g_da), g_da * s))
    return value, extra, MlpParameters(params.layer_sizes, grads_w, grads_b)


def params_to_dict(params):
    return {
        "layer_sizes": list(params.layer_sizes),
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
    }


def params_from_dict(doc):
    try:
        sizes = tuple(int(n) for n in doc["layer_sizes"])
        weights = [np.array(w, dtype=float).reshape(sizes[k + 1], sizes[k]) for k, w in enumerate(doc["weights"])]
        biases = [np.array(b, dtype=float).reshape(sizes[k + 1]) for k, b in enumerate(doc["biases"])]
        return MlpParameters(sizes, weights, biases)
    except (KeyError, TypeError, ValueError, IndexError, ConfigError) as exc:
        raise FormatError(f"malformed network parameters: {exc}") from exc


def check_schema(doc, expected=CHECKPOINT_SCHEMA):
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise FormatError("missing schema_version")
    if doc["schema_version"] != expected:
        raise UnsupportedVersion(f"checkpoint schema_version {doc['schema_version']!r} is not supported (expected {expected})")
