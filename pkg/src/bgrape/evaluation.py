"""Robustness quantification for trained control fields.

Held-out test loss, 2-D robustness landscapes over the uncertainty box with
level-set areas, Monte-Carlo gate-error distributions, and the standard
rectangular/Gaussian flip-pulse baselines.

Landscape grids are cell centered: an axis with P points over [lo, hi]
places nodes at lo + (i + 1/2) * (hi - lo) / P, so the level-set area by
node counting is exact for a landscape entirely below threshold (it equals
the box area) and an odd point count puts a node exactly at the box center.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ControlField, HamiltonianModel, propagate_many
from .objective import GateTarget, batch_loss, infidelity
from .sampling import RandomSource, draw_batch

__all__ = [
    "GridSpec",
    "RobustnessLandscape",
    "ErrorDistribution",
    "SUMMARY_THRESHOLDS",
    "test_loss",
    "landscape",
    "levelset_area",
    "error_distribution",
    "baseline_pulse",
]

SUMMARY_THRESHOLDS = (1e-2, 1e-3)

_DEFAULT_LEVELSET_THRESHOLD = 1e-3


@dataclass(frozen=True)
class GridSpec:
    """Cell-centered rectangular grid over a 2-D uncertainty box."""

    lo: tuple[float, float]
    hi: tuple[float, float]
    points: tuple[int, int]

    def __post_init__(self):
        if len(self.lo) != 2 or len(self.hi) != 2 or len(self.points) != 2:
            raise ValueError("grid spec needs lo, hi and points for exactly two axes")
        if any(p < 2 for p in self.points):
            raise ValueError(f"need at least 2 grid points per axis, got {self.points}")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError("grid requires lo <= hi per axis")

    @classmethod
    def square(cls, half_width: float, points: int) -> "GridSpec":
        hw = float(half_width)
        return cls((-hw, -hw), (hw, hw), (points, points))

    def axis_nodes(self, axis: int) -> np.ndarray:
        lo, hi, p = self.lo[axis], self.hi[axis], self.points[axis]
        return lo + (np.arange(p) + 0.5) * (hi - lo) / p

    @property
    def cell_area(self) -> float:
        return float(np.prod([(h - l) / p for l, h, p in zip(self.lo, self.hi, self.points)]))

    @property
    def box_area(self) -> float:
        return float(np.prod([h - l for l, h in zip(self.lo, self.hi)]))

    def nodes(self) -> np.ndarray:
        """All (eps1, eps2) nodes, first axis varying slowest; shape (P1*P2, 2)."""
        a1 = self.axis_nodes(0)
        a2 = self.axis_nodes(1)
        g1, g2 = np.meshgrid(a1, a2, indexing="ij")
        return np.column_stack([g1.ravel(), g2.ravel()])


@dataclass(frozen=True)
class RobustnessLandscape:
    """Infidelity over a 2-D uncertainty grid with one reference level set.

    values[i, j] is the infidelity at (axis-0 node i, axis-1 node j);
    ``area`` is the level-set area at ``threshold``.
    """

    grid: GridSpec
    values: np.ndarray
    threshold: float
    area: float

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.points:
            raise ValueError(f"values shape {values.shape} does not match grid points {self.grid.points}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def test_loss(model, field, target, test_set) -> float:
    """Mean infidelity over a held-out sample set (alias of batch_loss)."""
    return batch_loss(model, field, target, test_set)


def landscape(
    model: HamiltonianModel,
    field: ControlField,
    target: GateTarget,
    grid: GridSpec,
    threshold: float = _DEFAULT_LEVELSET_THRESHOLD,
) -> RobustnessLandscape:
    """Infidelity at every grid node of a 2-D parametric uncertainty box."""
    if model.uncertainty_dim != 2:
        raise ValueError(
            f"landscapes need a 2-D uncertainty model, got dimension {model.uncertainty_dim}"
        )
    nodes = grid.nodes()
    finals = propagate_many(model, field, nodes)
    values = np.array([infidelity(u, target) for u in finals]).reshape(grid.points)
    area = _count_area(values, grid, threshold)
    return RobustnessLandscape(grid, values, threshold, area)


def _count_area(values: np.ndarray, grid: GridSpec, threshold: float) -> float:
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    return float(np.count_nonzero(values < threshold) * grid.cell_area)


def levelset_area(ls: RobustnessLandscape, threshold: float) -> float:
    """Area of the region with infidelity below threshold, by node counting."""
    return _count_area(ls.values, ls.grid, threshold)


@dataclass(frozen=True)
class ErrorDistribution:
    """Sorted Monte-Carlo gate errors with empirical summary statistics."""

    errors: np.ndarray

    def __post_init__(self):
        errors = np.sort(np.asarray(self.errors, dtype=float))
        if errors.size == 0:
            raise ValueError("error distribution needs at least one sample")
        errors.setflags(write=False)
        object.__setattr__(self, "errors", errors)

    def probability_below(self, threshold: float) -> float:
        return float(np.searchsorted(self.errors, threshold, side="left") / self.errors.size)

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors))

    @property
    def median(self) -> float:
        return float(np.median(self.errors))

    def summary(self) -> dict:
        out = {f"p_below_{t:g}": self.probability_below(t) for t in SUMMARY_THRESHOLDS}
        out["mean"] = self.mean
        out["median"] = self.median
        out["num_samples"] = int(self.errors.size)
        return out


def error_distribution(
    model: HamiltonianModel,
    field: ControlField,
    target: GateTarget,
    distribution,
    num_samples: int,
    rng: RandomSource,
) -> ErrorDistribution:
    """Per-sample infidelities under random uncertainties, sorted ascending."""
    if num_samples < 1:
        raise ValueError(f"num_samples must be at least 1, got {num_samples}")
    samples = draw_batch(distribution, rng, num_samples)
    finals = propagate_many(model, field, np.asarray(samples))
    errors = np.array([infidelity(u, target) for u in finals])
    return ErrorDistribution(errors)


def baseline_pulse(kind: str, duration: float, num_segments: int, gaussian_width: float | None = None) -> ControlField:
    """Rectangular or Gaussian flip pulse along x with total rotation angle pi.

    Under H = u_x * X the rotation angle is 2 * sum_m u_x(t_m) * dt, so the
    amplitudes are normalized to make that discrete sum exactly pi; the
    noiseless pulse then realizes R_x(pi) exactly.  The Gaussian envelope is
    centered at T/2 with width sigma = T/6 unless overridden.
    """
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration}")
    if num_segments < 1:
        raise ValueError(f"num_segments must be at least 1, got {num_segments}")
    dt = duration / num_segments
    times = (np.arange(num_segments) + 0.5) * dt
    if kind == "rectangular":
        shape = np.ones(num_segments)
    elif kind == "gaussian":
        sigma = duration / 6.0 if gaussian_width is None else float(gaussian_width)
        if not sigma > 0:
            raise ValueError(f"gaussian width must be positive, got {sigma}")
        shape = np.exp(-((times - duration / 2.0) ** 2) / (2.0 * sigma**2))
    else:
        raise ValueError(f"unknown baseline kind {kind!r}; expected 'rectangular' or 'gaussian'")
    scale = np.pi / (2.0 * np.sum(shape) * dt)
    amplitudes = np.zeros((num_segments, 2))
    amplitudes[:, 0] = scale * shape
    return ControlField(amplitudes, duration)
