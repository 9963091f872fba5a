"""Adam optimizer and the shared training loop."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergedTrainingError, InvalidConfigError
from .tape import Tape


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = None
    v: np.ndarray = None


def adam_step(state, params, grads):
    """One bias-corrected Adam update; returns the new parameter vector."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape:
        raise InvalidConfigError("params and grads must have matching shapes")
    if not np.all(np.isfinite(grads)):
        raise DivergedTrainingError("non-finite gradient", iteration=state.step)
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass
class TrainConfig:
    max_iters: int = 2000
    lr: float = 1e-3
    seed: int = 0
    convergence_window: int = 200
    convergence_rtol: float = 1e-4
    fixed_iters: bool = False  # disable early stopping (paper's 2000-iter runs)
    tail_average: int = 0      # Polyak-average the last k iterates (0 = off)

    def validate(self):
        if self.max_iters < 1:
            raise InvalidConfigError("max_iters must be >= 1")
        if self.lr <= 0:
            raise InvalidConfigError("lr must be positive")
        return self


@dataclass
class TrainResult:
    loss_history: np.ndarray
    iterations: int
    converged: bool
    seconds: float
    checkpoints: dict = field(default_factory=dict)


def _window_converged(history, window, rtol):
    n = len(history)
    if window <= 0 or n < window:
        return False
    cur = float(np.mean(history[n - window:]))
    if n >= 2 * window:
        prev = float(np.mean(history[n - 2 * window:n - window]))
    else:
        prev = float(np.mean(history[:max(1, n - window)]))
    scale = max(abs(cur), abs(prev), 1e-300)
    return abs(cur - prev) < rtol * scale


def train(loss_builder, params, config, checkpoint_iters=()):
    """Minimize ``loss_builder`` by Adam from the flat vector ``params``.

    ``loss_builder(theta_var, iteration)`` must record a scalar on the active
    tape. Stops early once the relative change of the windowed mean loss
    drops below ``convergence_rtol`` (unless ``fixed_iters``). Snapshots of
    the parameter vector at ``checkpoint_iters`` (iterations already run)
    are kept for warm-start comparisons.

    With ``tail_average = k`` the returned vector is the mean of the last k
    iterates (Polyak averaging), which damps the stochastic-gradient noise
    ball of resampled losses; the raw final iterate stays reachable through
    a checkpoint at the final iteration.
    """
    config.validate()
    params = np.array(params, dtype=float, copy=True)
    state = AdamState(lr=config.lr)
    history = []
    checkpoints = {}
    converged = False
    tail = []
    tail_sum = np.zeros_like(params) if config.tail_average > 0 else None
    t0 = time.perf_counter()
    for it in range(config.max_iters):
        if it in checkpoint_iters:
            checkpoints[it] = params.copy()
        with Tape() as tp:
            theta = tp.leaf(params)
            loss = loss_builder(theta, it)
            tp.backward(loss)
        lval = float(loss.value)
        if not np.isfinite(lval):
            raise DivergedTrainingError("non-finite loss", iteration=it)
        grads = theta.grad if theta.grad is not None else np.zeros_like(params)
        try:
            params = adam_step(state, params, grads)
        except DivergedTrainingError as err:
            raise DivergedTrainingError(str(err), iteration=it) from None
        if tail_sum is not None:
            tail.append(params.copy())
            tail_sum += params
            if len(tail) > config.tail_average:
                tail_sum -= tail.pop(0)
        history.append(lval)
        if not config.fixed_iters and _window_converged(
                history, config.convergence_window, config.convergence_rtol):
            converged = True
            break
    seconds = time.perf_counter() - t0
    if config.max_iters in checkpoint_iters or len(history) in checkpoint_iters:
        checkpoints.setdefault(len(history), params.copy())
    if tail_sum is not None and tail:
        params = tail_sum / len(tail)
    return params, TrainResult(np.asarray(history), len(history), converged,
                               seconds, checkpoints)
