import numpy as np
import pytest

from bgrape import qmat
from bgrape.dynamics import ControlField, NoisyQubit, ThreeQubitCoupling, decompose
from bgrape.objective import (
    GateTarget,
    batch_gradient,
    batch_loss,
    finite_difference_gradient,
    infidelity,
    rx_pi_target,
    toffoli_target,
)

from conftest import random_unitary


class TestTargets:
    def test_toffoli_swaps_last_pair(self):
        t = toffoli_target()
        assert np.array_equal(t.matrix @ t.matrix, np.eye(8))
        state = np.zeros(8)
        state[6] = 1.0
        assert np.argmax(np.abs(t.matrix @ state)) == 7

    def test_rx_pi_is_minus_i_x(self):
        assert np.array_equal(rx_pi_target().matrix, -1j * qmat.pauli("x"))

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError, match="unitary"):
            GateTarget(np.ones((2, 2)), "bad")


class TestInfidelity:
    def test_exact_match(self):
        t = toffoli_target()
        assert infidelity(t.matrix, t) == 0.0

    def test_antipodal(self):
        t = toffoli_target()
        assert infidelity(-t.matrix, t) == 2.0

    def test_global_phase(self):
        t = rx_pi_target()
        for phi in (0.3, 1.2, np.pi):
            val = infidelity(np.exp(1j * phi) * t.matrix, t)
            assert abs(val - (1 - np.cos(phi))) < 1e-14

    def test_right_multiplication_invariance(self, np_rng):
        u = random_unitary(np_rng, 8)
        w = random_unitary(np_rng, 8)
        t = toffoli_target()
        t_w = GateTarget(t.matrix @ w, "rotated")
        assert abs(infidelity(u @ w, t_w) - infidelity(u, t)) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="match"):
            infidelity(np.eye(2), toffoli_target())

    def test_phase_invariant_ignores_phase(self, np_rng):
        u = random_unitary(np_rng, 8)
        t = toffoli_target()
        a = infidelity(u, t, kind="phase_invariant")
        b = infidelity(np.exp(0.7j) * u, t, kind="phase_invariant")
        assert abs(a - b) < 1e-12


@pytest.fixture
def three_qubit_setup(np_rng):
    model = ThreeQubitCoupling()
    field = ControlField(np_rng.normal(scale=0.4, size=(3, 6)), 1.5)
    batch = [np_rng.uniform(-0.2, 0.2, 2) for _ in range(4)]
    return model, field, toffoli_target(), batch


class TestBatchLoss:
    def test_duplicates(self, three_qubit_setup):
        model, field, target, batch = three_qubit_setup
        eps = batch[0]
        assert batch_loss(model, field, target, [eps, eps]) == batch_loss(model, field, target, [eps])

    def test_mean_of_singles(self, three_qubit_setup):
        model, field, target, batch = three_qubit_setup
        singles = np.array([batch_loss(model, field, target, [eps]) for eps in batch])
        assert batch_loss(model, field, target, batch) == np.mean(singles)

    def test_union_decomposition(self, three_qubit_setup):
        model, field, target, batch = three_qubit_setup
        a, b = batch[:3], batch[3:]
        loss_a = batch_loss(model, field, target, a)
        loss_b = batch_loss(model, field, target, b)
        total = batch_loss(model, field, target, batch)
        assert abs(total - (3 * loss_a + 1 * loss_b) / 4) < 1e-15

    def test_empty_batch(self, three_qubit_setup):
        model, field, target, _ = three_qubit_setup
        with pytest.raises(ValueError):
            batch_loss(model, field, target, [])

    def test_perfect_field_zero_loss(self):
        # A single-segment flip pulse nails the target on the nominal sample.
        model = NoisyQubit()
        field = ControlField([[np.pi / 4, 0.0]], 2.0)
        assert batch_loss(model, field, rx_pi_target(), [np.zeros(30)]) < 1e-12


def reference_gradient(model, field, target, batch, kind="phase_sensitive"):
    """Direct transcription of the derivative chain, one matrix at a time.

    Builds every segment derivative with expm_directional_derivative and the
    explicit back/forward products; quadratic cost, used only as an oracle.
    """
    dim = model.dim
    dt = field.dt
    grads = []
    for eps in batch:
        d = decompose(model, field, eps)
        m_seg = field.num_segments
        back = np.empty((m_seg, dim, dim), dtype=complex)
        back[m_seg - 1] = target.matrix.conj().T
        for i in range(m_seg - 2, -1, -1):
            back[i] = back[i + 1] @ d.propagators[i + 1]
        tr = np.trace(target.matrix.conj().T @ d.final)
        grad = np.empty((m_seg, field.num_controls))
        for m in range(m_seg):
            h_m = model.hamiltonian(field.amplitudes[m], eps, field.segment_midpoints[m])
            for k in range(field.num_controls):
                c_k = model.control_derivative(k, eps, field.segment_midpoints[m])
                w_mk = qmat.expm_directional_derivative(h_m, c_k, dt)
                tr_deriv = np.trace(back[m] @ w_mk @ d.forward[m])
                if kind == "phase_sensitive":
                    grad[m, k] = -tr_deriv.real / dim
                else:
                    grad[m, k] = -(2.0 * np.conj(tr) * tr_deriv).real / dim**2
        grads.append(grad)
    return np.mean(grads, axis=0)


class TestBatchGradient:
    def test_single_segment_analytic(self):
        # M=1, u = (c, 0), target I: loss = 1 - cos(c*T), d/du_x = T*sin(c*T).
        model = NoisyQubit()
        c, t_total = 0.4, 1.7
        field = ControlField([[c, 0.0]], t_total)
        target = GateTarget(np.eye(2), "identity")
        loss, grad = batch_gradient(model, field, target, [np.zeros(30)])
        assert abs(loss - (1 - np.cos(c * t_total))) < 1e-12
        assert abs(grad[0, 0] - t_total * np.sin(c * t_total)) < 1e-10
        assert abs(grad[0, 1]) < 1e-10

    def test_loss_matches_batch_loss_bitwise(self, three_qubit_setup):
        model, field, target, batch = three_qubit_setup
        loss, _ = batch_gradient(model, field, target, batch)
        assert loss == batch_loss(model, field, target, batch)

    def test_duplicate_batch_equals_single(self, three_qubit_setup):
        model, field, target, batch = three_qubit_setup
        eps = batch[0]
        _, g_single = batch_gradient(model, field, target, [eps])
        _, g_dupes = batch_gradient(model, field, target, [eps] * 3)
        assert np.allclose(g_single, g_dupes, rtol=1e-13, atol=1e-16)

    def test_matches_reference_implementation(self, three_qubit_setup):
        model, field, target, batch = three_qubit_setup
        _, grad = batch_gradient(model, field, target, batch)
        ref = reference_gradient(model, field, target, batch)
        assert np.allclose(grad, ref, rtol=1e-11, atol=1e-14)

    def test_matches_reference_noisy(self, np_rng):
        model = NoisyQubit()
        field = ControlField(np_rng.normal(size=(5, 2)), 2.0)
        batch = [np_rng.normal(scale=0.05, size=30) for _ in range(3)]
        target = rx_pi_target()
        _, grad = batch_gradient(model, field, target, batch)
        ref = reference_gradient(model, field, target, batch)
        assert np.allclose(grad, ref, rtol=1e-11, atol=1e-14)

    @pytest.mark.parametrize("kind", ["phase_sensitive", "phase_invariant"])
    def test_finite_difference_oracle(self, np_rng, kind):
        model = ThreeQubitCoupling()
        field = ControlField(np_rng.normal(scale=0.5, size=(3, 6)), 1.2)
        batch = [np_rng.uniform(-0.2, 0.2, 2) for _ in range(2)]
        target = toffoli_target()
        _, grad = batch_gradient(model, field, target, batch, kind)
        fd = finite_difference_gradient(model, field, target, batch, 1e-6, kind)
        mask = np.abs(fd) > 1e-8
        assert mask.any()
        assert np.max(np.abs(grad - fd)[mask] / np.abs(fd)[mask]) < 1e-6

    def test_empty_batch(self, three_qubit_setup):
        model, field, target, _ = three_qubit_setup
        with pytest.raises(ValueError):
            batch_gradient(model, field, target, [])


class TestFiniteDifference:
    def test_zero_at_global_optimum(self):
        model = NoisyQubit()
        field = ControlField([[np.pi / 4, 0.0]], 2.0)
        fd = finite_difference_gradient(model, field, rx_pi_target(), [np.zeros(30)], 1e-5)
        assert np.max(np.abs(fd)) < 1e-8

    def test_richardson_halving(self, np_rng):
        # Central differences are second order: halving the step shrinks the
        # deviation from the exact gradient by about 4x.
        model = NoisyQubit()
        field = ControlField(np_rng.normal(size=(2, 2)), 1.0)
        batch = [np_rng.normal(scale=0.05, size=30)]
        target = rx_pi_target()
        _, exact = batch_gradient(model, field, target, batch)
        err = {
            step: np.max(np.abs(finite_difference_gradient(model, field, target, batch, step) - exact))
            for step in (2e-3, 1e-3)
        }
        ratio = err[2e-3] / err[1e-3]
        assert 2.5 < ratio < 6.0

    def test_bad_step(self, three_qubit_setup):
        model, field, target, batch = three_qubit_setup
        with pytest.raises(ValueError, match="step"):
            finite_difference_gradient(model, field, target, batch, 0.0)
