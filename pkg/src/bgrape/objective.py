"""Gate infidelity, batch empirical risk, and its exact gradient.

The loss for one uncertainty sample is the normalized squared Frobenius
distance between the achieved propagator and the target gate,

    infidelity(U) = ||U - U_f||_F^2 / (2N) = 1 - Re tr(U_f^dag U) / N,

which lies in [0, 2] and is phase sensitive: a global phase on U costs
1 - cos(phase).  The batch loss is the mean over a sample batch, and the
batch gradient differentiates that mean exactly through the propagator
chain: one spectral decomposition per segment supplies both the segment
unitary and all control derivatives.

A central-difference gradient is provided as an independent check; it only
ever calls ``batch_loss``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qmat
from .dynamics import ControlField, HamiltonianModel, _as_sample_stack, _forward_products, _segment_unitaries

__all__ = [
    "GateTarget",
    "toffoli_target",
    "rx_pi_target",
    "infidelity",
    "batch_loss",
    "batch_gradient",
    "finite_difference_gradient",
]

_UNITARITY_TOL = 1e-10

# Gradient-pass block size; smaller than the propagation block because the
# backward products roughly double the per-sample memory.
_GRAD_CHUNK = 64


@dataclass(frozen=True)
class GateTarget:
    """A unitary target gate with a human-readable label."""

    matrix: np.ndarray
    label: str

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"target must be a square matrix, got shape {m.shape}")
        if not qmat.is_unitary(m, _UNITARITY_TOL):
            raise ValueError(f"target {self.label!r} is not unitary within {_UNITARITY_TOL}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def toffoli_target() -> GateTarget:
    """The controlled-controlled-NOT gate on three qubits (target = qubit 3)."""
    m = np.eye(8, dtype=np.complex128)
    m[6, 6] = m[7, 7] = 0.0
    m[6, 7] = m[7, 6] = 1.0
    return GateTarget(m, "toffoli")


def rx_pi_target() -> GateTarget:
    """The qubit flip R_x(pi) = exp(-i*pi*X/2) = -i*X."""
    return GateTarget(-1j * qmat.pauli("x"), "rx_pi")


def infidelity(u_final: np.ndarray, target: GateTarget, kind: str = "phase_sensitive") -> float:
    """Distance of an achieved propagator from the target gate, in [0, 2].

    ``kind`` selects the phase-sensitive default or the phase-invariant
    variant 1 - |tr(U_f^dag U)|^2 / N^2.
    """
    u_final = np.asarray(u_final, dtype=np.complex128)
    if u_final.shape != target.matrix.shape:
        raise ValueError(f"propagator shape {u_final.shape} does not match target {target.matrix.shape}")
    tr = np.einsum("ij,ij->", target.matrix.conj(), u_final)
    return float(_loss_from_trace(np.asarray(tr), target.dim, kind))


def _loss_from_trace(tr: np.ndarray, dim: int, kind: str) -> np.ndarray:
    # Clipping only trims float noise at the boundaries: |tr| <= dim for
    # exactly unitary arguments.
    if kind == "phase_sensitive":
        return np.clip(1.0 - tr.real / dim, 0.0, 2.0)
    if kind == "phase_invariant":
        return np.clip(1.0 - (tr.real**2 + tr.imag**2) / dim**2, 0.0, 1.0)
    raise ValueError(f"unknown objective kind {kind!r}")


def _check_batch(model: HamiltonianModel, field: ControlField, target: GateTarget, batch) -> np.ndarray:
    if target.dim != model.dim:
        raise ValueError(f"target dimension {target.dim} does not match model dimension {model.dim}")
    stack = _as_sample_stack(model, batch)
    if stack.shape[0] == 0:
        raise ValueError("batch must contain at least one uncertainty sample")
    return stack


def _sample_losses(model, field, target, eps_stack, kind) -> np.ndarray:
    """Per-sample losses via the shared propagation core."""
    target_conj = target.matrix.conj()
    out = np.empty(eps_stack.shape[0])
    for start in range(0, eps_stack.shape[0], _GRAD_CHUNK):
        block = eps_stack[start : start + _GRAD_CHUNK]
        _, _, u_seg, _ = _segment_unitaries(model, field, block)
        fwd = _forward_products(u_seg)
        tr = np.einsum("ij,sij->s", target_conj, fwd[:, -1])
        out[start : start + block.shape[0]] = _loss_from_trace(tr, model.dim, kind)
    return out


def batch_loss(model, field, target, batch, kind: str = "phase_sensitive") -> float:
    """Mean infidelity of the field over a batch of uncertainty samples."""
    stack = _check_batch(model, field, target, batch)
    return float(np.mean(_sample_losses(model, field, target, stack, kind)))


def batch_gradient(model, field, target, batch, kind: str = "phase_sensitive"):
    """Batch loss and its exact gradient with respect to every amplitude.

    Returns ``(loss, grad)`` where grad has the field's (segments, channels)
    shape and equals the derivative of ``batch_loss`` entry by entry.  The
    loss comes from the same forward pass, so it matches ``batch_loss`` on
    identical inputs bit for bit.
    """
    stack = _check_batch(model, field, target, batch)
    num = stack.shape[0]
    m_seg, k_ctrl = field.amplitudes.shape
    losses = np.empty(num)
    grads = np.empty((num, m_seg, k_ctrl))
    for start in range(0, num, _GRAD_CHUNK):
        block = stack[start : start + _GRAD_CHUNK]
        stop = start + block.shape[0]
        losses[start:stop], grads[start:stop] = _gradient_block(model, field, target, block, kind)
    return float(np.mean(losses)), np.mean(grads, axis=0)


def _gradient_block(model, field, target, eps_block, kind):
    """Losses (S,) and per-sample gradients (S, M, K) for one sample block."""
    dim = model.dim
    dt = field.dt
    w, v, u_seg, scales = _segment_unitaries(model, field, eps_block)
    fwd = _forward_products(u_seg)
    num, m_seg = w.shape[0], w.shape[1]

    target_dag = target.matrix.conj().T
    tr = np.einsum("ij,sij->s", target.matrix.conj(), fwd[:, -1])
    losses = _loss_from_trace(tr, dim, kind)

    # Backward partial products Q_m = U_f^dag V_M ... V_{m+1} (0-based: Q[m]
    # multiplies the segments after m), so d tr / du_{mk} = tr(Q_m W_mk P_{m-1}).
    back = np.empty_like(u_seg)
    back[:, m_seg - 1] = target_dag
    for i in range(m_seg - 2, -1, -1):
        back[:, i] = back[:, i + 1] @ u_seg[:, i + 1]

    # With W = V (Phi o (V^dag C V)) V^dag the trace collapses to a weighted
    # overlap of the fixed control operators with Z = conj(V) (S^T o Phi) V^T,
    # where S = V^dag P_{m-1} Q_m V.  One pass covers all channels at once.
    v_dag = qmat.dagger(v)
    pq = fwd[:, :m_seg] @ back
    s_eig = v_dag @ pq @ v
    phi = qmat.phase_divided_difference(w, dt)
    z = v.conj() @ (np.swapaxes(s_eig, -1, -2) * phi) @ np.swapaxes(v, -1, -2)
    tr_derivs = np.einsum("kij,smij->smk", model.control_ops, z)
    tr_derivs *= scales[..., None]

    if kind == "phase_sensitive":
        grads = -tr_derivs.real / dim
    else:
        weight = 2.0 * tr.conj() / dim**2
        grads = -(weight[:, None, None] * tr_derivs).real
    return losses, grads


def finite_difference_gradient(model, field, target, batch, step: float, kind: str = "phase_sensitive") -> np.ndarray:
    """Central differences of ``batch_loss`` per amplitude entry.

    Independent of the exact gradient path; the perturbed fields drop the
    amplitude bound so probing near a bound stays well defined.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    _check_batch(model, field, target, batch)
    base = field.amplitudes
    grad = np.empty_like(base)
    for m in range(base.shape[0]):
        for k in range(base.shape[1]):
            plus = base.copy()
            minus = base.copy()
            plus[m, k] += step
            minus[m, k] -= step
            loss_plus = batch_loss(model, ControlField(plus, field.duration), target, batch, kind)
            loss_minus = batch_loss(model, ControlField(minus, field.duration), target, batch, kind)
            grad[m, k] = (loss_plus - loss_minus) / (2.0 * step)
    return grad
