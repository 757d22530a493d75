"""Stochastic gradient training loop for control fields.

One iteration draws a batch from the scheduler, evaluates the exact batch
gradient, and takes a step.  The default update blends the current and
previous gradients,

    u <- u - alpha * (lambda * g_j + (1 - lambda) * g_{j-1}),

so a small lambda lets the previous direction dominate and damps the batch
noise; the first iteration, having no history, takes a plain gradient step.
A conventional accumulated-velocity update is available for comparison.
Amplitude bounds are enforced by clamping after every step.

The loop is deterministic: all randomness (held-out test set, batch draws)
comes from fixed substreams of the run seed, so equal configurations give
bit-identical traces.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dataclass_field, replace

import numpy as np

from .dynamics import ControlField, HamiltonianModel
from .objective import GateTarget, batch_gradient, batch_loss
from .sampling import BatchScheduler, RandomSource, draw_batch

__all__ = [
    "STREAM_INIT",
    "STREAM_TEST",
    "STREAM_BATCH",
    "OptimizerConfig",
    "TraceRow",
    "TrainingTrace",
    "OptimizationResult",
    "sgd_step",
    "momentum_step",
    "random_initial_field",
    "default_learning_rate",
    "run",
]

# Substream layout of a run's seed.  Stream 0 initializes the field, stream 1
# draws the held-out test set, stream 2 feeds the batch scheduler (a frozen
# batch drawn from a fresh stream 2 therefore equals the first fresh batch).
STREAM_INIT = 0
STREAM_TEST = 1
STREAM_BATCH = 2

# Batch loss must exceed this multiple of its initial value ...
_DIVERGENCE_FACTOR = 10.0
# ... for this many consecutive iterations to flag the run as diverged.
_DIVERGENCE_PATIENCE = 100

_INIT_HALF_WIDTH = 0.5

# Base rate of the convention "learning rate proportional to the batch size":
# larger batches average away gradient noise and tolerate bigger steps.
_BASE_LEARNING_RATE = 0.002


def default_learning_rate(batch_size: int) -> float:
    """Conventional learning rate for a batch size: 0.002 * B."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be at least 1, got {batch_size}")
    return _BASE_LEARNING_RATE * batch_size


@dataclass
class OptimizerConfig:
    """Knobs of one training run.

    ``batch_mode`` and ``batch_size`` echo the scheduler for bookkeeping;
    the scheduler object passed to ``run`` is authoritative.
    """

    learning_rate: float
    sample_budget: int
    momentum_lambda: float = 0.1
    use_momentum: bool = True
    momentum_style: str = "blend"  # "blend" (two-gradient mix) or "velocity"
    test_set_size: int = 1000
    test_every: int = 100
    seed: int = 0
    batch_mode: str = "fresh"
    batch_size: int = 1
    decay_factor: float = 1.0
    decay_every: int | None = None
    target_batch_loss: float | None = None
    objective_kind: str = "phase_sensitive"

    def validate(self) -> None:
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 < self.momentum_lambda <= 1:
            raise ValueError(f"momentum_lambda must lie in (0, 1], got {self.momentum_lambda}")
        if self.momentum_style not in ("blend", "velocity"):
            raise ValueError(f"momentum_style must be 'blend' or 'velocity', got {self.momentum_style!r}")
        if self.sample_budget < 1:
            raise ValueError(f"sample_budget must be at least 1, got {self.sample_budget}")
        if self.test_set_size < 1:
            raise ValueError(f"test_set_size must be at least 1, got {self.test_set_size}")
        if self.test_every < 1:
            raise ValueError(f"test_every must be at least 1, got {self.test_every}")
        if not 0 < self.decay_factor <= 1:
            raise ValueError(f"decay_factor must lie in (0, 1], got {self.decay_factor}")
        if self.decay_every is not None and self.decay_every < 1:
            raise ValueError(f"decay_every must be at least 1, got {self.decay_every}")


@dataclass(frozen=True)
class TraceRow:
    """One logged iteration; test_loss is None between held-out evaluations."""

    iteration: int
    samples: int
    batch_loss: float
    test_loss: float | None
    wall_clock: float


@dataclass
class TrainingTrace:
    rows: list[TraceRow] = dataclass_field(default_factory=list)
    best_field: ControlField | None = None
    best_test_loss: float = np.inf
    best_iteration: int = 0

    def record_test(self, test_loss: float, field: ControlField, iteration: int) -> None:
        if test_loss < self.best_test_loss:
            self.best_test_loss = test_loss
            self.best_field = field
            self.best_iteration = iteration


@dataclass
class OptimizationResult:
    final_field: ControlField
    best_field: ControlField
    final_test_loss: float
    best_test_loss: float
    best_iteration: int
    trace: TrainingTrace
    config: OptimizerConfig
    seed: int
    diverged: bool
    iterations: int
    samples_used: int


def _project(amplitudes: np.ndarray, bound: float | None) -> np.ndarray:
    if bound is None:
        return amplitudes
    return np.clip(amplitudes, -bound, bound)


def _check_grad_shape(field: ControlField, grad: np.ndarray) -> np.ndarray:
    grad = np.asarray(grad, dtype=float)
    if grad.shape != field.amplitudes.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match field shape {field.amplitudes.shape}")
    return grad


def sgd_step(field: ControlField, grad: np.ndarray, alpha: float) -> ControlField:
    """One steepest-descent step, clamped to the field's bound."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    grad = _check_grad_shape(field, grad)
    return field.with_amplitudes(_project(field.amplitudes - alpha * grad, field.bound))


def momentum_step(
    field: ControlField,
    grad: np.ndarray,
    grad_prev: np.ndarray | None,
    alpha: float,
    momentum_lambda: float,
) -> ControlField:
    """Blended-gradient step; falls back to sgd_step when no history exists."""
    if not 0 < momentum_lambda <= 1:
        raise ValueError(f"momentum_lambda must lie in (0, 1], got {momentum_lambda}")
    if grad_prev is None:
        return sgd_step(field, grad, alpha)
    grad = _check_grad_shape(field, grad)
    grad_prev = _check_grad_shape(field, grad_prev)
    blended = momentum_lambda * grad + (1.0 - momentum_lambda) * grad_prev
    return field.with_amplitudes(_project(field.amplitudes - alpha * blended, field.bound))


def random_initial_field(
    model: HamiltonianModel,
    num_segments: int,
    duration: float,
    rng: RandomSource,
    bound: float | None = None,
) -> ControlField:
    """Uniform random amplitudes on [-0.5, 0.5], shrunk to a tighter bound."""
    half_width = _INIT_HALF_WIDTH if bound is None else min(_INIT_HALF_WIDTH, bound)
    amplitudes = rng.uniform(-half_width, half_width, size=(num_segments, model.num_controls))
    return ControlField(amplitudes, duration, bound)


def run(
    model: HamiltonianModel,
    target: GateTarget,
    initial_field: ControlField,
    scheduler: BatchScheduler,
    config: OptimizerConfig,
    trace_callback=None,
) -> OptimizationResult:
    """Train a control field until the sample budget is exhausted.

    Per iteration: draw a batch, evaluate loss and gradient at the current
    field, log a trace row (invoking ``trace_callback`` with it when given),
    then step.  The held-out test set is drawn once up front; the field is
    re-evaluated on it every ``test_every`` iterations and at the end, and
    the best checkpoint by test loss is kept.  When ``target_batch_loss``
    is set, the run stops as soon as a batch loss falls below it and
    returns the field that achieved it.

    A run is flagged diverged (but not aborted) when the batch loss stays
    above 10x its initial value for 100 consecutive iterations.
    """
    config.validate()
    if scheduler.batch_size > config.sample_budget:
        raise ValueError(
            f"sample_budget {config.sample_budget} is below the batch size {scheduler.batch_size}"
        )
    if initial_field.num_controls != model.num_controls:
        raise ValueError(
            f"field has {initial_field.num_controls} control channels, model needs {model.num_controls}"
        )

    rng_batch = RandomSource(config.seed, STREAM_BATCH)
    rng_test = RandomSource(config.seed, STREAM_TEST)
    test_set = draw_batch(scheduler.distribution, rng_test, config.test_set_size)

    trace = TrainingTrace()
    field = initial_field
    grad_prev = None
    velocity = None
    alpha = config.learning_rate
    samples_used = 0
    iteration = 0
    first_loss = None
    high_loss_streak = 0
    diverged = False
    target_reached = False
    t_start = time.perf_counter()

    while samples_used < config.sample_budget:
        iteration += 1
        batch = scheduler.next_batch(rng_batch)
        loss, grad = batch_gradient(model, field, target, batch, config.objective_kind)
        samples_used += len(batch)

        test_loss = None
        if (iteration - 1) % config.test_every == 0:
            test_loss = batch_loss(model, field, target, test_set, config.objective_kind)
            trace.record_test(test_loss, field, iteration)

        row = TraceRow(iteration, samples_used, loss, test_loss, time.perf_counter() - t_start)
        trace.rows.append(row)
        if trace_callback is not None:
            trace_callback(row)

        if first_loss is None:
            first_loss = loss
        elif loss > _DIVERGENCE_FACTOR * first_loss:
            high_loss_streak += 1
            if high_loss_streak >= _DIVERGENCE_PATIENCE:
                diverged = True
        else:
            high_loss_streak = 0

        if config.target_batch_loss is not None and loss < config.target_batch_loss:
            target_reached = True
            break

        if config.use_momentum and config.momentum_style == "velocity":
            if velocity is None:
                velocity = grad
            else:
                velocity = (1.0 - config.momentum_lambda) * velocity + grad
            field = sgd_step(field, velocity, alpha)
        elif config.use_momentum:
            field = momentum_step(field, grad, grad_prev, alpha, config.momentum_lambda)
        else:
            field = sgd_step(field, grad, alpha)
        grad_prev = grad

        if config.decay_every is not None and iteration % config.decay_every == 0:
            alpha *= config.decay_factor

    final_test_loss = batch_loss(model, field, target, test_set, config.objective_kind)
    trace.record_test(final_test_loss, field, iteration if target_reached else iteration + 1)

    return OptimizationResult(
        final_field=field,
        best_field=trace.best_field,
        final_test_loss=final_test_loss,
        best_test_loss=trace.best_test_loss,
        best_iteration=trace.best_iteration,
        trace=trace,
        config=replace(config),
        seed=config.seed,
        diverged=diverged,
        iterations=iteration,
        samples_used=samples_used,
    )
