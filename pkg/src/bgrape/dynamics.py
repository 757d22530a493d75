"""Uncertain Hamiltonian models and piecewise-constant propagation.

A model describes a control-affine family H[u, eps, t] together with its
control derivatives; a control field holds the piecewise-constant amplitudes
on an even grid over [0, T].  Propagation multiplies the per-segment
unitaries exp(-i*H_m*dt) evaluated at the segment midpoints
t_m = (m - 1/2)*dt, which samples a continuous noise without first-order
bias inside the piecewise-constant scheme.

All the heavy paths run on stacked arrays (samples x segments) and share
one code path with the single-sample operations, so cached decompositions,
single propagation and batched propagation agree bit for bit.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from . import qmat
from .sampling import noise_values

__all__ = [
    "ControlField",
    "HamiltonianModel",
    "ThreeQubitCoupling",
    "NoisyQubit",
    "SegmentDecomposition",
    "decompose",
    "propagate",
    "propagate_many",
]

# Samples per block when propagating large sample sets, to bound memory.
_CHUNK = 128


@dataclass(frozen=True)
class ControlField:
    """Piecewise-constant control amplitudes.

    amplitudes[m, k] drives channel k during segment m; the grid divides
    [0, duration] into num_segments equal steps.  Amplitudes are in the
    model's dimensionless angular-frequency units.  When a bound is set,
    every amplitude must satisfy |u| <= bound.
    """

    amplitudes: np.ndarray
    duration: float
    bound: float | None = None

    def __post_init__(self):
        arr = np.array(self.amplitudes, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"amplitudes must be a nonempty (segments, channels) array, got shape {arr.shape}")
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.bound is not None:
            if self.bound < 0:
                raise ValueError(f"bound must be nonnegative, got {self.bound}")
            worst = float(np.max(np.abs(arr)))
            if worst > self.bound:
                raise ValueError(f"amplitude {worst} exceeds bound {self.bound}")
        arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", arr)

    @property
    def num_segments(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def num_controls(self) -> int:
        return self.amplitudes.shape[1]

    @property
    def dt(self) -> float:
        return self.duration / self.num_segments

    @property
    def segment_midpoints(self) -> np.ndarray:
        """Times t_m = (m - 1/2)*dt at which segment Hamiltonians are sampled."""
        m = np.arange(self.num_segments)
        return (m + 0.5) * self.dt

    def with_amplitudes(self, amplitudes: np.ndarray) -> "ControlField":
        """Same grid, duration and bound with replaced amplitudes."""
        return ControlField(amplitudes, self.duration, self.bound)


class HamiltonianModel(ABC):
    """Control-affine uncertain Hamiltonian family.

    The shipped models share the shape

        H[u, eps, t] = drift(eps) + c(eps, t) * sum_k u_k * C_k

    with fixed Hermitian control operators C_k and a scalar control scale
    c(eps, t) (identically 1 for purely parametric uncertainty).  Subclasses
    provide drift, control_scale and control_ops; non-affine families can
    instead override hamiltonian and control_derivative directly.
    """

    dim: int
    num_controls: int
    uncertainty_dim: int

    @property
    @abstractmethod
    def control_ops(self) -> np.ndarray:
        """Stack (K, N, N) of the Hermitian control operators C_k."""

    @abstractmethod
    def drift(self, eps: np.ndarray) -> np.ndarray:
        """Control-independent Hamiltonian part for one uncertainty sample."""

    @abstractmethod
    def control_scale(self, eps: np.ndarray, t: float) -> float:
        """Multiplicative factor on the control part at time t."""

    def check_sample(self, eps) -> np.ndarray:
        eps = np.asarray(eps, dtype=float)
        if eps.shape != (self.uncertainty_dim,):
            raise ValueError(
                f"{type(self).__name__} expects uncertainty samples of length "
                f"{self.uncertainty_dim}, got shape {eps.shape}"
            )
        return eps

    def hamiltonian(self, u: np.ndarray, eps: np.ndarray, t: float) -> np.ndarray:
        """H[u, eps, t] for one segment amplitude vector u of length K."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.num_controls,):
            raise ValueError(f"expected {self.num_controls} control amplitudes, got shape {u.shape}")
        eps = self.check_sample(eps)
        ctrl = np.einsum("k,kij->ij", u, self.control_ops)
        return self.drift(eps) + self.control_scale(eps, t) * ctrl

    def control_derivative(self, k: int, eps: np.ndarray, t: float) -> np.ndarray:
        """dH/du_k, independent of u for control-affine families."""
        if not 0 <= k < self.num_controls:
            raise IndexError(f"control channel {k} out of range [0, {self.num_controls})")
        eps = self.check_sample(eps)
        return self.control_scale(eps, t) * self.control_ops[k]

    # Vectorized hooks used by the propagation/gradient core.  The defaults
    # fall back to the scalar methods; the shipped models override them.

    def drift_stack(self, eps_stack: np.ndarray) -> np.ndarray:
        return np.stack([self.drift(e) for e in eps_stack])

    def control_scales(self, eps_stack: np.ndarray, times: np.ndarray) -> np.ndarray:
        return np.array([[self.control_scale(e, t) for t in times] for e in eps_stack])

    def segment_hamiltonians(self, field: ControlField, eps_stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Stacked segment Hamiltonians (S, M, N, N) and control scales (S, M)."""
        if field.num_controls != self.num_controls:
            raise ValueError(
                f"field has {field.num_controls} control channels, model needs {self.num_controls}"
            )
        scales = self.control_scales(eps_stack, field.segment_midpoints)
        ctrl = np.einsum("mk,kij->mij", field.amplitudes, self.control_ops)
        drift = self.drift_stack(eps_stack)
        return drift[:, None] + scales[..., None, None] * ctrl[None], scales


def _embed_single_qubit(op: np.ndarray, qubit: int, num_qubits: int) -> np.ndarray:
    """Single-qubit operator on the given qubit (qubit 0 = most significant bit)."""
    out = np.array([[1.0 + 0j]])
    for q in range(num_qubits):
        out = qmat.kron(out, op if q == qubit else qmat.identity(2))
    return out


class ThreeQubitCoupling(HamiltonianModel):
    """Three qubits in a line with imprecisely known ZZ couplings.

    H = (1 + eps_1) Z1 Z2 + (1 + eps_2) Z2 Z3
        + sum_{q=1..3} [u_{q,x} X_q + u_{q,y} Y_q]

    Qubit 1 is the most significant bit of the basis index.  The six
    control channels are ordered (q1,x), (q1,y), (q2,x), (q2,y), (q3,x),
    (q3,y).  The uncertainty sample is (eps_1, eps_2), the relative errors
    of the two coupling constants.
    """

    dim = 8
    num_controls = 6
    uncertainty_dim = 2

    def __init__(self):
        sz = qmat.pauli("z")
        z = [_embed_single_qubit(sz, q, 3) for q in range(3)]
        self._zz12 = z[0] @ z[1]
        self._zz23 = z[1] @ z[2]
        ops = []
        for q in range(3):
            for axis in ("x", "y"):
                ops.append(_embed_single_qubit(qmat.pauli(axis), q, 3))
        self._control_ops = np.stack(ops)
        for arr in (self._zz12, self._zz23, self._control_ops):
            arr.setflags(write=False)

    @property
    def control_ops(self) -> np.ndarray:
        return self._control_ops

    def drift(self, eps: np.ndarray) -> np.ndarray:
        eps = self.check_sample(eps)
        return (1.0 + eps[0]) * self._zz12 + (1.0 + eps[1]) * self._zz23

    def control_scale(self, eps: np.ndarray, t: float) -> float:
        return 1.0

    def drift_stack(self, eps_stack: np.ndarray) -> np.ndarray:
        eps_stack = np.asarray(eps_stack, dtype=float)
        return (
            (1.0 + eps_stack[:, 0])[:, None, None] * self._zz12
            + (1.0 + eps_stack[:, 1])[:, None, None] * self._zz23
        )

    def control_scales(self, eps_stack: np.ndarray, times: np.ndarray) -> np.ndarray:
        return np.ones((len(eps_stack), len(times)))


class NoisyQubit(HamiltonianModel):
    """Single qubit driven along x and y with multiplicative amplitude noise.

    H = [1 + n(t)] * (u_x X + u_y Y), where n(t) is the 10-mode Fourier
    series whose coefficients arrive packed in the uncertainty sample as
    [a | b | w] (30 numbers).  Channel 0 drives X, channel 1 drives Y.
    """

    dim = 2
    num_controls = 2

    def __init__(self, num_modes: int = 10):
        self.num_modes = int(num_modes)
        self.uncertainty_dim = 3 * self.num_modes
        self._control_ops = np.stack([qmat.pauli("x"), qmat.pauli("y")])
        self._control_ops.setflags(write=False)

    @property
    def control_ops(self) -> np.ndarray:
        return self._control_ops

    def drift(self, eps: np.ndarray) -> np.ndarray:
        self.check_sample(eps)
        return np.zeros((2, 2), dtype=np.complex128)

    def control_scale(self, eps: np.ndarray, t: float) -> float:
        eps = self.check_sample(eps)
        return 1.0 + float(noise_values(eps[None, :], np.array([t]))[0, 0])

    def drift_stack(self, eps_stack: np.ndarray) -> np.ndarray:
        return np.zeros((len(eps_stack), 2, 2), dtype=np.complex128)

    def control_scales(self, eps_stack: np.ndarray, times: np.ndarray) -> np.ndarray:
        return 1.0 + noise_values(np.asarray(eps_stack, dtype=float), times)


@dataclass(frozen=True)
class SegmentDecomposition:
    """Cached forward pass of one propagation.

    Per segment m (0-based): the Hermitian eigendecomposition of H_m, the
    segment unitary V_m = exp(-i*H_m*dt), and the control scale c_m.
    ``forward[m]`` is the partial product V_m ... V_1 with forward[0] = I,
    so forward[-1] is the final propagator.
    """

    dt: float
    eigenvalues: np.ndarray  # (M, N)
    eigenvectors: np.ndarray  # (M, N, N)
    propagators: np.ndarray  # (M, N, N)
    forward: np.ndarray  # (M + 1, N, N)
    scales: np.ndarray  # (M,)

    @property
    def final(self) -> np.ndarray:
        return self.forward[-1]


def _as_sample_stack(model: HamiltonianModel, samples) -> np.ndarray:
    stack = np.asarray(samples, dtype=float)
    if stack.ndim == 1:
        stack = stack[None, :]
    if stack.ndim != 2 or stack.shape[1] != model.uncertainty_dim:
        raise ValueError(
            f"expected samples of length {model.uncertainty_dim}, got shape {stack.shape}"
        )
    return stack


def _segment_unitaries(model, field, eps_stack):
    """Eigendecompositions and segment unitaries for stacked samples."""
    h, scales = model.segment_hamiltonians(field, eps_stack)
    w, v = qmat.hermitian_eig(h)
    phase = np.exp(-1j * field.dt * w)
    u_seg = (v * phase[..., None, :]) @ qmat.dagger(v)
    return w, v, u_seg, scales


def _forward_products(u_seg: np.ndarray) -> np.ndarray:
    """Partial products P_m = V_m ... V_1 along axis 1; P_0 = I."""
    s, m, n, _ = u_seg.shape
    fwd = np.empty((s, m + 1, n, n), dtype=np.complex128)
    fwd[:, 0] = np.eye(n)
    for i in range(m):
        fwd[:, i + 1] = u_seg[:, i] @ fwd[:, i]
    return fwd


def decompose(model: HamiltonianModel, field: ControlField, eps) -> SegmentDecomposition:
    """Per-segment eigendecompositions and forward products for one sample."""
    stack = _as_sample_stack(model, eps)
    if stack.shape[0] != 1:
        raise ValueError("decompose takes a single uncertainty sample")
    w, v, u_seg, scales = _segment_unitaries(model, field, stack)
    fwd = _forward_products(u_seg)
    return SegmentDecomposition(
        dt=field.dt,
        eigenvalues=w[0],
        eigenvectors=v[0],
        propagators=u_seg[0],
        forward=fwd[0],
        scales=scales[0],
    )


def propagate(model: HamiltonianModel, field: ControlField, eps) -> np.ndarray:
    """Final propagator U(T, eps) = V_M ... V_1 for one uncertainty sample."""
    return decompose(model, field, eps).final


def propagate_many(model: HamiltonianModel, field: ControlField, samples) -> np.ndarray:
    """Final propagators for a stack of samples, (S, N, N).

    Processes samples in blocks; per-sample results are identical to
    ``propagate`` on each sample alone.
    """
    stack = _as_sample_stack(model, samples)
    outs = []
    for start in range(0, stack.shape[0], _CHUNK):
        block = stack[start : start + _CHUNK]
        _, _, u_seg, _ = _segment_unitaries(model, field, block)
        fwd = _forward_products(u_seg)
        outs.append(fwd[:, -1])
    return np.concatenate(outs, axis=0)
