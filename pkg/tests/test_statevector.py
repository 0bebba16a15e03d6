import unittest
from math import cos, pi, sin, sqrt
from unittest import mock

import numpy as np
from scipy.stats import unitary_group

from controlled_qdc import statevector as _statevector
from controlled_qdc.statevector import BellOutcome, Outcome, RotatedBasis, make_state

PHI_PLUS = _statevector.BELL_STATES[BellOutcome.PHI_PLUS]
PSI_PLUS = _statevector.BELL_STATES[BellOutcome.PSI_PLUS]
PSI_MINUS = _statevector.BELL_STATES[BellOutcome.PSI_MINUS]

# cnot with qubit a as control, in the (|00>, |10>, |01>, |11>) ordering
CNOT_AB = np.array([
    [1, 0, 0, 0],
    [0, 0, 0, 1],
    [0, 0, 1, 0],
    [0, 1, 0, 0],
], dtype=complex)


def filter_matrix(t):
    s = sqrt(1 - t * t)
    return np.array([
        [t, 0, s, 0],
        [0, 1, 0, 0],
        [s, 0, -t, 0],
        [0, 0, 0, -1],
    ], dtype=complex)


def random_state(rng, num_qubits):
    amps = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
    return _statevector.StateVector(amps / np.linalg.norm(amps))


class TestStateVector(unittest.TestCase):
    def test_init(self):
        state = _statevector.StateVector([1, 0, 0, 0])
        self.assertEqual(state.num_qubits, 2)
        self.assertEqual(state.norm_sq, 1.0)
        self.assertEqual(len(state), 4)

    def test_init_bad_size(self):
        with self.assertRaises(_statevector.StateError):
            _statevector.StateVector([1, 0, 0])
        with self.assertRaises(_statevector.StateError):
            _statevector.StateVector([1])

    def test_amplitudes_readonly(self):
        state = _statevector.StateVector([1, 0])
        with self.assertRaises(ValueError):
            state.amplitudes[0] = 0

    def test_terms(self):
        state = make_state(2, {'01': 0.6, '10': 0.8})
        self.assertEqual(list(state.terms()), [('01', 0.6 + 0j), ('10', 0.8 + 0j)])

    def test_normalized(self):
        state = make_state(1, {'0': 3, '1': 4}).normalized()
        np.testing.assert_allclose(state.amplitudes, [0.6, 0.8])

        with self.assertRaises(_statevector.StateError):
            _statevector.StateVector([0, 0]).normalized()


class TestMakeState(unittest.TestCase):
    def test_single_ket(self):
        state = make_state(4, {'0000': 1})
        self.assertEqual(state.amplitudes[0], 1)
        self.assertEqual(state.norm_sq, 1.0)
        self.assertEqual(np.count_nonzero(state.amplitudes), 1)

    def test_first_qubit_is_most_significant(self):
        state = make_state(3, {'100': 1})
        self.assertEqual(state.amplitudes[4], 1)
        self.assertEqual(state.tensor()[1, 0, 0], 1)

    def test_four_particle_channel(self):
        state = make_state(4, {'0000': 0.5, '1001': 0.5, '0110': 0.5, '1111': 0.5})
        self.assertAlmostEqual(state.norm_sq, 1.0, places=15)

    def test_not_normalized(self):
        state = make_state(2, {'00': 0.6, '11': 0.6})
        self.assertAlmostEqual(state.norm_sq, 0.72)

    def test_bad_labels(self):
        with self.assertRaises(_statevector.StateError):
            make_state(4, {'000': 1})
        with self.assertRaises(_statevector.StateError):
            make_state(2, {'0a': 1})
        with self.assertRaises(_statevector.StateError):
            make_state(2, [('00', 1), ('00', 1)])
        with self.assertRaises(_statevector.StateError):
            make_state(0, {})


class TestRotatedBasis(unittest.TestCase):
    def test_vectors(self):
        basis = RotatedBasis(pi / 3)
        np.testing.assert_allclose(basis.vector('+'), [0.5, sqrt(3) / 2])
        np.testing.assert_allclose(basis.vector(Outcome.MINUS), [sqrt(3) / 2, -0.5])

    def test_orthonormal(self):
        rng = np.random.default_rng(0)
        for theta in rng.uniform(0, 2 * pi, 1000):
            m = RotatedBasis(theta).matrix()
            np.testing.assert_allclose(m.conj().T @ m, np.eye(2), atol=1e-12)

    def test_bad_outcome(self):
        with self.assertRaises(_statevector.StateError):
            RotatedBasis(0).vector('x')


class TestApplyOneQubit(unittest.TestCase):
    def test_pauli_x(self):
        result = _statevector.apply_one_qubit(PHI_PLUS, 1, _statevector.PAULI_X)
        self.assertTrue(result.allclose(PSI_PLUS))

    def test_identity(self):
        state = make_state(2, {'01': 0.6, '10': 0.8})
        result = _statevector.apply_one_qubit(state, 2, _statevector.PAULI_I)
        self.assertTrue(result.allclose(state))

    def test_pauli_y(self):
        result = _statevector.apply_one_qubit(PHI_PLUS, 1, _statevector.PAULI_Y)
        self.assertAlmostEqual(abs(_statevector.overlap(PSI_MINUS, result)), 1.0, places=12)

    def test_acts_on_given_qubit(self):
        state = make_state(3, {'000': 1})
        result = _statevector.apply_one_qubit(state, 2, _statevector.PAULI_X)
        self.assertTrue(result.allclose(make_state(3, {'010': 1})))

    def test_bad_qubit(self):
        with self.assertRaises(_statevector.StateError):
            _statevector.apply_one_qubit(PHI_PLUS, 3, _statevector.PAULI_X)
        with self.assertRaises(_statevector.StateError):
            _statevector.apply_one_qubit(PHI_PLUS, 0, _statevector.PAULI_X)

    def test_not_unitary(self):
        with self.assertRaises(_statevector.StateError):
            _statevector.apply_one_qubit(PHI_PLUS, 1, [[1, 1], [0, 1]])
        with self.assertRaises(_statevector.StateError):
            _statevector.apply_one_qubit(PHI_PLUS, 1, np.eye(4))

    def test_random_unitaries(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            state = random_state(rng, 3)
            u = unitary_group.rvs(2, random_state=rng)
            v = unitary_group.rvs(2, random_state=rng)
            uv = _statevector.apply_one_qubit(_statevector.apply_one_qubit(state, 1, u), 3, v)
            vu = _statevector.apply_one_qubit(_statevector.apply_one_qubit(state, 3, v), 1, u)
            self.assertTrue(uv.allclose(vu, atol=1e-12))
            self.assertAlmostEqual(uv.norm_sq, 1.0, places=12)

    @mock.patch.object(_statevector, 'log')
    def test_no_drift_warning(self, m_log):
        _statevector.apply_one_qubit(PHI_PLUS, 1, _statevector.PAULI_Z)
        m_log.warning.assert_not_called()


class TestApplyTwoQubit(unittest.TestCase):
    def test_filter_pass_through(self):
        state = make_state(2, {'00': 1})
        result = _statevector.apply_two_qubit(state, 1, 2, filter_matrix(1.0))
        self.assertTrue(result.allclose(state))

    def test_filter_full_transfer(self):
        state = make_state(2, {'00': 1})
        result = _statevector.apply_two_qubit(state, 1, 2, filter_matrix(0.0))
        self.assertTrue(result.allclose(make_state(2, {'01': 1})))

    def test_ordering(self):
        state = make_state(2, {'10': 1})
        result = _statevector.apply_two_qubit(state, 1, 2, CNOT_AB)
        self.assertTrue(result.allclose(make_state(2, {'11': 1})))

        # qubit 1 is now the target
        result = _statevector.apply_two_qubit(state, 2, 1, CNOT_AB)
        self.assertTrue(result.allclose(state))

    def test_non_adjacent(self):
        state = make_state(3, {'100': 1})
        result = _statevector.apply_two_qubit(state, 1, 3, CNOT_AB)
        self.assertTrue(result.allclose(make_state(3, {'101': 1})))

    def test_same_qubit(self):
        with self.assertRaises(_statevector.StateError):
            _statevector.apply_two_qubit(PHI_PLUS, 1, 1, CNOT_AB)

    def test_not_unitary(self):
        with self.assertRaises(_statevector.StateError):
            _statevector.apply_two_qubit(PHI_PLUS, 1, 2, np.ones((4, 4)))

    def test_random_unitaries_preserve_norm(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            state = random_state(rng, 3)
            u = unitary_group.rvs(4, random_state=rng)
            result = _statevector.apply_two_qubit(state, 3, 1, u)
            self.assertAlmostEqual(result.norm_sq, 1.0, places=12)


class TestAncillaAndReorder(unittest.TestCase):
    def test_attach_ancilla(self):
        result = _statevector.attach_ancilla(PHI_PLUS)
        expected = make_state(3, {'000': 1 / sqrt(2), '110': 1 / sqrt(2)})
        self.assertTrue(result.allclose(expected))

    def test_reorder(self):
        state = make_state(3, {'100': 0.6, '001': 0.8})
        result = _statevector.reorder_qubits(state, [3, 2, 1])
        self.assertTrue(result.allclose(make_state(3, {'001': 0.6, '100': 0.8})))

    def test_reorder_bad(self):
        with self.assertRaises(_statevector.StateError):
            _statevector.reorder_qubits(PHI_PLUS, [1, 1])


class TestProjectRotated(unittest.TestCase):
    def test_four_particle_channel(self):
        state = make_state(4, {'0000': 0.5, '1001': 0.5, '0110': 0.5, '1111': 0.5})
        p, collapsed = _statevector.project_rotated(state, 4, RotatedBasis(pi / 4), '+')
        self.assertAlmostEqual(p, 0.5, places=12)
        expected = make_state(3, {'000': 0.5, '100': 0.5, '011': 0.5, '111': 0.5})
        self.assertTrue(collapsed.allclose(expected, atol=1e-12))

    def test_keep_measured_qubit(self):
        state = make_state(2, {'00': 1})
        p, collapsed = _statevector.project_rotated(state, 1, RotatedBasis(0), Outcome.PLUS, discard=False)
        self.assertEqual(p, 1.0)
        self.assertTrue(collapsed.allclose(state))

    def test_impossible(self):
        state = make_state(2, {'00': 1})
        with self.assertRaises(_statevector.ImpossibleBranchError) as cm:
            _statevector.project_rotated(state, 1, RotatedBasis(0), Outcome.MINUS, discard=False)
        self.assertEqual(cm.exception.probability, 0.0)
        self.assertIs(cm.exception.outcome, Outcome.MINUS)

    def test_impossible_from_rounding(self):
        state = make_state(1, {'0': 1})
        with self.assertRaises(_statevector.ImpossibleBranchError):
            _statevector.project_rotated(make_state(2, {'00': 1}), 1, RotatedBasis(pi / 2), '+')
        with self.assertRaises(_statevector.StateError):
            _statevector.project_rotated(state, 1, RotatedBasis(0), '+')

    def test_unnormalized_input(self):
        state = make_state(2, {'00': 0.3, '10': 0.4})
        p, collapsed = _statevector.project_rotated(state, 1, RotatedBasis(0), '+')
        self.assertAlmostEqual(p, 0.36, places=12)
        self.assertAlmostEqual(collapsed.norm_sq, 1.0, places=12)

    def test_completeness(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            state = random_state(rng, 3)
            basis = RotatedBasis(rng.uniform(0, 2 * pi))
            qubit = int(rng.integers(1, 4))
            total = 0.0
            for outcome in Outcome:
                try:
                    p, collapsed = _statevector.project_rotated(state, qubit, basis, outcome)
                except _statevector.ImpossibleBranchError:
                    continue
                self.assertAlmostEqual(collapsed.norm_sq, 1.0, places=12)
                total += p
            self.assertAlmostEqual(total, 1.0, places=12)

    def test_matches_marginal(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            state = random_state(rng, 2)
            theta = rng.uniform(0, 2 * pi)
            psi = state.tensor()
            rho = np.einsum('ij,kj->ik', psi, psi.conj())
            m = RotatedBasis(theta).matrix()
            diag = np.real(np.diag(m.conj().T @ rho @ m))
            p_plus, _ = _statevector.project_rotated(state, 1, RotatedBasis(theta), '+')
            self.assertAlmostEqual(p_plus, diag[0], places=12)


class TestBellMeasure(unittest.TestCase):
    def test_phi_plus(self):
        probs = _statevector.bell_measure(PHI_PLUS)
        self.assertAlmostEqual(probs[BellOutcome.PHI_PLUS], 1.0, places=15)
        self.assertAlmostEqual(probs[BellOutcome.PSI_MINUS], 0.0, places=15)

    def test_global_phase(self):
        probs = _statevector.bell_measure(_statevector.StateVector(1j * PSI_MINUS.amplitudes))
        self.assertAlmostEqual(probs[BellOutcome.PSI_MINUS], 1.0, places=15)

    def test_partially_entangled(self):
        probs = _statevector.bell_measure(make_state(2, {'00': 0.6, '11': 0.8}))
        self.assertAlmostEqual(probs[BellOutcome.PHI_PLUS], 0.98, places=12)
        self.assertAlmostEqual(probs[BellOutcome.PHI_MINUS], 0.02, places=12)
        self.assertAlmostEqual(sum(probs.values()), 1.0, places=12)

    def test_bad_input(self):
        with self.assertRaises(_statevector.StateError):
            _statevector.bell_measure(make_state(3, {'000': 1}))
        with self.assertRaises(_statevector.StateError):
            _statevector.bell_measure(make_state(2, {'00': 0.5}))


class TestOverlap(unittest.TestCase):
    def test_overlap(self):
        self.assertAlmostEqual(_statevector.overlap(PHI_PLUS, PHI_PLUS), 1.0, places=15)
        self.assertAlmostEqual(_statevector.overlap(PHI_PLUS, PSI_PLUS), 0.0, places=15)

    def test_fidelity_ignores_phase(self):
        state = _statevector.StateVector(-1j * PHI_PLUS.amplitudes)
        self.assertAlmostEqual(_statevector.fidelity(state, PHI_PLUS), 1.0, places=15)

    def test_fidelity_value(self):
        state = make_state(2, {'00': cos(0.3), '11': sin(0.3)})
        expected = (cos(0.3) + sin(0.3)) ** 2 / 2
        self.assertAlmostEqual(_statevector.fidelity(state, PHI_PLUS), expected, places=12)

    def test_mismatch(self):
        with self.assertRaises(_statevector.StateError):
            _statevector.overlap(PHI_PLUS, make_state(1, {'0': 1}))
