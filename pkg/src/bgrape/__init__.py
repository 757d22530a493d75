"""Mini-batch stochastic GRAPE for robust, high-precision quantum controls.

Piecewise-constant control pulses are trained by stochastic gradient descent
over randomly sampled Hamiltonian uncertainties.  Fresh mini-batches per
iteration give the stochastic algorithm; freezing the batch or training on
the single nominal sample recovers fixed-sample and deterministic GRAPE as
special cases.  The evaluation tools quantify robustness via held-out test
loss, 2-D infidelity landscapes with level-set areas, and Monte-Carlo
gate-error distributions.
"""

__version__ = "0.1.0"

from .dynamics import ControlField, HamiltonianModel, NoisyQubit, ThreeQubitCoupling, decompose, propagate, propagate_many
from .evaluation import (
    ErrorDistribution,
    GridSpec,
    RobustnessLandscape,
    baseline_pulse,
    error_distribution,
    landscape,
    levelset_area,
    test_loss,
)
from .objective import (
    GateTarget,
    batch_gradient,
    batch_loss,
    finite_difference_gradient,
    infidelity,
    rx_pi_target,
    toffoli_target,
)
from .optimizer import (
    OptimizationResult,
    OptimizerConfig,
    default_learning_rate,
    momentum_step,
    random_initial_field,
    run,
    sgd_step,
)
from .sampling import (
    BatchScheduler,
    FourierNoise,
    FixedBatchScheduler,
    FreshBatchScheduler,
    NominalScheduler,
    RandomSource,
    UniformBox,
    draw_batch,
    make_scheduler,
    noise_value,
)

__all__ = [
    "__version__",
    "ControlField",
    "HamiltonianModel",
    "NoisyQubit",
    "ThreeQubitCoupling",
    "decompose",
    "propagate",
    "propagate_many",
    "GateTarget",
    "infidelity",
    "batch_loss",
    "batch_gradient",
    "finite_difference_gradient",
    "toffoli_target",
    "rx_pi_target",
    "OptimizerConfig",
    "OptimizationResult",
    "sgd_step",
    "momentum_step",
    "random_initial_field",
    "default_learning_rate",
    "run",
    "RandomSource",
    "UniformBox",
    "FourierNoise",
    "BatchScheduler",
    "FreshBatchScheduler",
    "FixedBatchScheduler",
    "NominalScheduler",
    "make_scheduler",
    "draw_batch",
    "noise_value",
    "GridSpec",
    "RobustnessLandscape",
    "ErrorDistribution",
    "test_loss",
    "landscape",
    "levelset_area",
    "error_distribution",
    "baseline_pulse",
]
