"""Full-batch Adam training of the counterdiabatic network."""
import dataclasses
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError, NumericsError
from .linalg import pauli_basis
from .net import (
    CHECKPOINT_SCHEMA, MlpParameters, check_schema, default_layer_sizes, glorot_init, loss_gradient,
    n_qubits_for_width, params_from_dict, params_to_dict,
)
from .physics import LossBreakdown, LossWeights, make_training_loss
from .sampling import sobol_interior

PROFILES = {
    "paper": dict(epochs=500_000, learning_rate=1e-5, log2_interior=11),
    "desk": dict(epochs=50_000, learning_rate=1e-4, log2_interior=9),
}


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500_000
    learning_rate: float = 1e-5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    log2_interior: int = 11
    weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0
    layer_sizes: tuple = None
    log_every: int = 100
    checkpoint_every: int = 10_000
    t_min: float = 0.0
    t_max: float = 1.0

    @classmethod
    def profile(cls, name, **overrides):
        if name not in PROFILES:
            raise ConfigError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
        return cls(**{**PROFILES[name], **overrides})

    def validate(self, n_qubits=None):
        if not isinstance(self.epochs, int) or self.epochs < 1:
            raise ConfigError(f"epochs must be a positive integer, got {self.epochs!r}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ConfigError("Adam betas must lie in (0, 1)")
        if not self.adam_epsilon > 0:
            raise ConfigError("adam_epsilon must be positive")
        if self.log_every < 1 or self.checkpoint_every < 0:
            raise ConfigError("log_every must be >= 1 and checkpoint_every >= 0")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if n_qubits is not None and self.layer_sizes is not None:
            if n_qubits_for_width(self.layer_sizes[-1]) != n_qubits:
                raise ConfigError(f"layer_sizes output width {self.layer_sizes[-1]} does not fit {n_qubits} qubits")
        return self

    def resolved_layer_sizes(self, n_qubits):
        return tuple(self.layer_sizes) if self.layer_sizes is not None else default_layer_sizes(n_qubits)

    def as_dict(self):
        d = dataclasses.asdict(self)
        d["layer_sizes"] = None if self.layer_sizes is None else list(self.layer_sizes)
        return d


@dataclass(eq=False)
class TrainingState:
    params: MlpParameters
    m: MlpParameters
    v: MlpParameters
    epoch: int = 0
    seed: int = 0
    loss_history: list = field(default_factory=list)   # (epoch, LossBreakdown, seconds)
    wall_clock_seconds: float = 0.0
    total_trace: list = field(default_factory=list)    # l_total at every epoch run in this process

    @classmethod
    def fresh(cls, params, seed=0):
        zeros = params.map(np.zeros_like)
        return cls(params, zeros, zeros.copy(), 0, seed)

    def __eq__(self, other):
        if not isinstance(other, TrainingState):
            return NotImplemented
        return (
            self.params == other.params and self.m == other.m and self.v == other.v
            and self.epoch == other.epoch and self.seed == other.seed
            and [(e, b) for e, b, _ in self.loss_history] == [(e, b) for e, b, _ in other.loss_history]
        )


def adam_step(state, gradient, config):
    """One bias-corrected Adam update; returns a new state."""
    for k, arr in enumerate(gradient.arrays()):
        bad = ~np.isfinite(arr)
        if bad.any():
            coord = (k // 2 + 1, "W" if k % 2 == 0 else "b", *map(int, np.argwhere(bad)[0]))
            raise NumericsError(f"non-finite gradient at epoch {state.epoch}, coordinate {coord}",
                                epoch=state.epoch, coordinate=coord)
    b1, b2, eps, lr = config.adam_beta1, config.adam_beta2, config.adam_epsilon, config.learning_rate
    step = state.epoch + 1
    m = state.m.map(lambda m_, g: b1 * m_ + (1.0 - b1) * g, gradient)
    v = state.v.map(lambda v_, g: b2 * v_ + (1.0 - b2) * g * g, gradient)
    c1 = 1.0 - b1**step
    c2 = 1.0 - b2**step
    params = state.params.map(lambda p, m_, v_: p - lr * (m_ / c1) / (np.sqrt(v_ / c2) + eps), m, v)
    return dataclasses.replace(state, params=params, m=m, v=v, epoch=step)


def _state_to_dict(state):
    doc = {"schema_version": CHECKPOINT_SCHEMA, **params_to_dict(state.params), "seed": state.seed,
           "epoch": state.epoch}
    doc["adam"] = {"m": params_to_dict(state.m), "v": params_to_dict(state.v)}
    doc["wall_clock_seconds"] = state.wall_clock_seconds
    doc["loss_history"] = [[e, *b.as_tuple(), s] for e, b, s in state.loss_history]
    return doc


def save_checkpoint(state, path):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(_state_to_dict(state)))
    os.replace(tmp, path)
    return path


def load_checkpoint(path):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable checkpoint ({exc})") from exc
    check_schema(doc)
    params = params_from_dict(doc)
    try:
        adam = doc.get("adam")
        if adam is None:
            zeros = params.map(np.zeros_like)
            m, v = zeros, zeros.copy()
        else:
            m, v = params_from_dict(adam["m"]), params_from_dict(adam["v"])
            if m.layer_sizes != params.layer_sizes or v.layer_sizes != params.layer_sizes:
                raise FormatError("Adam moments do not match the network shape")
        history = [(int(r[0]), LossBreakdown(*map(float, r[1:8])), float(r[8])) for r in doc.get("loss_history", [])]
        return TrainingState(params, m, v, int(doc["epoch"]), int(doc.get("seed", 0)), history,
                             float(doc.get("wall_clock_seconds", 0.0)))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise FormatError(f"{path}: malformed checkpoint ({exc})") from exc


def load_params(path):
    """Network parameters from a training or bare-network checkpoint."""
    return load_checkpoint(path).params


def interior_times(config):
    return sobol_interior(config.log2_interior, config.t_min, config.t_max)


def train(p, config, sink=None, state=None, checkpoint_path=None):
    """Run (or resume) training of ``p`` under ``config``.

    The interior sample is drawn once and reused at every epoch.  ``sink`` is
    called as ``sink(epoch, breakdown, seconds)`` every ``log_every`` epochs and
    once after the last update.  A checkpoint is written to ``checkpoint_path``
    every ``checkpoint_every`` epochs and at the end.
    """
    config.validate(p.n_qubits)
    layer_sizes = config.resolved_layer_sizes(p.n_qubits)
    if state is None:
        state = TrainingState.fresh(glorot_init(layer_sizes, config.seed), config.seed)
    elif state.params.layer_sizes != layer_sizes:
        raise ConfigError(f"checkpoint network {state.params.layer_sizes} does not match config {layer_sizes}")

    batch = interior_times(config)
    times = batch.all_times()
    loss_fn = make_training_loss(p, config.weights, basis=pauli_basis(p.n_qubits))
    last_checkpoint = None
    start_clock = time.perf_counter() - state.wall_clock_seconds

    def record(epoch, breakdown):
        seconds = time.perf_counter() - start_clock
        state.loss_history.append((epoch, breakdown, seconds))
        if sink is not None:
            sink(epoch, breakdown, seconds)

    while True:
        value, breakdown, grad = loss_gradient(state.params, times, loss_fn)
        if not math.isfinite(value):
            raise NumericsError(f"non-finite loss at epoch {state.epoch}", epoch=state.epoch,
                                last_checkpoint=last_checkpoint)
        state.total_trace.append(value)
        done = state.epoch >= config.epochs
        logged = bool(state.loss_history) and state.loss_history[-1][0] == state.epoch   # resumed here
        if (state.epoch % config.log_every == 0 or done) and not logged:
            record(state.epoch, breakdown)
        if done:
            break
        try:
            state = adam_step(state, grad, config)
        except NumericsError as exc:
            exc.last_checkpoint = last_checkpoint
            raise
        state.wall_clock_seconds = time.perf_counter() - start_clock
        if checkpoint_path is not None and config.checkpoint_every and state.epoch % config.checkpoint_every == 0:
            last_checkpoint = save_checkpoint(state, checkpoint_path)
    state.wall_clock_seconds = time.perf_counter() - start_clock
    if checkpoint_path is not None:
        save_checkpoint(state, checkpoint_path)
    return state


def smoothed(values, window=200):
    """Exponential moving average with span ``window``."""
    alpha = 2.0 / (window + 1.0)
    out = np.empty(len(values))
    acc = None
    for i, x in enumerate(values):
        acc = x if acc is None else alpha * x + (1.0 - alpha) * acc
        out[i] = acc
    return out


def monotonicity_violations(totals, start=20_000, span=10_000, window=200, tolerance=0.05):
    """Epochs ``e >= start`` at which the smoothed loss fails to decrease over ``[e, e + span]``.

    A span fails if the smoothed loss ends higher than it started, or if it rises
    transiently by more than ``tolerance`` relative to its starting value.
    """
    s = smoothed(totals, window)
    if len(s) < start + span + 1:
        return []
    from numpy.lib.stride_tricks import sliding_window_view
    heads = s[start:len(s) - span]
    tails = s[start + span:]
    peaks = sliding_window_view(s[start:], span + 1).max(axis=1)
    bad = (tails > heads) | (peaks > (1.0 + tolerance) * heads)
    return (np.flatnonzero(bad) + start).tolist()
