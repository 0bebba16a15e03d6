import logging
from dataclasses import dataclass
from enum import Enum
from math import cos, sin

import numpy as np

logging.basicConfig(level=logging.INFO, format='%(levelname)s - %(message)s')
log = logging.getLogger(__name__)

# tolerance for validating user supplied matrices and normalized inputs
UNITARY_TOL = 1e-9
NORM_TOL = 1e-9

# tolerance of internal bookkeeping (norm drift, completeness)
DRIFT_TOL = 1e-12

# probabilities below this are treated as an exact zero (cos(pi/2) noise)
IMPOSSIBLE_TOL = 1e-20

MAX_QUBITS = 20


class StateError(ValueError):
    pass


class ImpossibleBranchError(StateError):
    def __init__(self, message, outcome=None, probability=0.0):
        super().__init__(message)
        self.outcome = outcome
        self.probability = probability


class Outcome(str, Enum):
    PLUS = '+'
    MINUS = '-'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return {'+': cls.PLUS, 'plus': cls.PLUS, '-': cls.MINUS, 'minus': cls.MINUS}[value]
        except (KeyError, TypeError):
            raise StateError(f'無效的測量結果: {value!r}') from None


class BellOutcome(str, Enum):
    PHI_PLUS = 'phi_plus'
    PHI_MINUS = 'phi_minus'
    PSI_PLUS = 'psi_plus'
    PSI_MINUS = 'psi_minus'


class StateVector:
    """n 個量子位元的稠密態向量

    振幅索引的最高位元為第 1 個量子位元，即 |q1 q2 ... qn> 對應索引
    q1 * 2^(n-1) + ... + qn，與 |0000>...|1111> 的書寫順序一致。

    態向量不會自動歸一化，norm_sq 記錄振幅平方和，以表示未歸一化的分支態。
    """
    __slots__ = ('num_qubits', 'amplitudes', 'norm_sq')

    def __init__(self, amplitudes):
        amplitudes = np.array(amplitudes, dtype=complex).ravel()
        size = amplitudes.size
        num_qubits = size.bit_length() - 1
        if num_qubits < 1 or size != 1 << num_qubits:
            raise StateError(f'振幅數必須為 2 的正整數次方: {size}')
        if num_qubits > MAX_QUBITS:
            raise StateError(f'量子位元數超過上限 {MAX_QUBITS}: {num_qubits}')
        amplitudes.flags.writeable = False
        self.num_qubits = num_qubits
        self.amplitudes = amplitudes
        self.norm_sq = float(np.vdot(amplitudes, amplitudes).real)

    def __repr__(self):
        terms = ' + '.join(f'({amp:.6g})|{label}>' for label, amp in self.terms())
        return f'{self.__class__.__name__}({terms or 0}; norm_sq={self.norm_sq:.6g})'

    def __len__(self):
        return self.amplitudes.size

    def terms(self, tol=0.0):
        """依索引順序產生 (基底標籤, 振幅)，略過絕對值不大於 tol 的振幅"""
        for index, amp in enumerate(self.amplitudes):
            if abs(amp) > tol:
                yield format(index, f'0{self.num_qubits}b'), complex(amp)

    def tensor(self):
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def normalized(self):
        if self.norm_sq == 0:
            raise StateError('零向量無法歸一化')
        return StateVector(self.amplitudes / np.sqrt(self.norm_sq))

    def allclose(self, other, atol=DRIFT_TOL):
        return self.num_qubits == other.num_qubits and np.allclose(self.amplitudes, other.amplitudes, rtol=0, atol=atol)


@dataclass(frozen=True)
class RotatedBasis:
    """{cosθ|0> + sinθ|1>, sinθ|0> - cosθ|1>} 測量基底"""
    theta: float

    def vector(self, outcome):
        outcome = Outcome.parse(outcome)
        c, s = cos(self.theta), sin(self.theta)
        if outcome is Outcome.PLUS:
            return np.array([c, s], dtype=complex)
        return np.array([s, -c], dtype=complex)

    def matrix(self):
        """以二個基底向量為行向量的 2x2 矩陣"""
        return np.column_stack([self.vector(Outcome.PLUS), self.vector(Outcome.MINUS)])


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def make_state(num_qubits, assignments):
    """以 (基底標籤, 振幅) 建立態向量，未列出的振幅為 0，不做歸一化"""
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise StateError(f'量子位元數必須介於 1 到 {MAX_QUBITS}: {num_qubits}')

    if isinstance(assignments, dict):
        assignments = assignments.items()

    amplitudes = np.zeros(1 << num_qubits, dtype=complex)
    seen = set()
    for label, amp in assignments:
        if len(label) != num_qubits:
            raise StateError(f'基底標籤 {label!r} 長度與量子位元數 {num_qubits} 不符')
        if set(label) - {'0', '1'}:
            raise StateError(f'基底標籤 {label!r} 只能包含 0 與 1')
        if label in seen:
            raise StateError(f'重複的基底標籤: {label!r}')
        seen.add(label)
        amplitudes[int(label, 2)] = amp

    return StateVector(amplitudes)


def check_unitary(u, dim, tol=UNITARY_TOL):
    u = np.asarray(u, dtype=complex)
    if u.shape != (dim, dim):
        raise StateError(f'矩陣維度必須為 {dim}x{dim}: {u.shape}')
    deviation = np.max(np.abs(u.conj().T @ u - np.eye(dim)))
    if deviation > tol:
        raise StateError(f'矩陣不是么正矩陣 (|U†U - I| = {deviation:.3e})')
    return u


def _axis(state, qubit):
    if not 1 <= qubit <= state.num_qubits:
        raise StateError(f'量子位元索引 {qubit} 超出範圍 1..{state.num_qubits}')
    return qubit - 1


def _check_drift(before, after):
    drift = abs(after.norm_sq - before.norm_sq)
    if drift > DRIFT_TOL * max(1.0, before.norm_sq):
        log.warning('範數漂移過大: %.3e', drift)


def apply_one_qubit(state, qubit, u):
    axis = _axis(state, qubit)
    u = check_unitary(u, 2)
    psi = np.tensordot(u, state.tensor(), axes=([1], [axis]))
    result = StateVector(np.moveaxis(psi, 0, axis))
    _check_drift(state, result)
    return result


def apply_two_qubit(state, qubit_a, qubit_b, u):
    """對 (qubit_a, qubit_b) 作用 4x4 么正矩陣

    矩陣的行列順序為 |00>, |10>, |01>, |11>（左位元為 qubit_a），
    即索引 = a + 2b，與 {|0>_2|0>_a, |1>_2|0>_a, |0>_2|1>_a, |1>_2|1>_a} 的寫法相同。
    """
    axis_a = _axis(state, qubit_a)
    axis_b = _axis(state, qubit_b)
    if axis_a == axis_b:
        raise StateError(f'二個量子位元索引不可相同: {qubit_a}')
    u = check_unitary(u, 4)

    # index a + 2b means a row-major tensor with axes (b_out, a_out, b_in, a_in)
    t = u.reshape(2, 2, 2, 2)
    psi = np.tensordot(t, state.tensor(), axes=([2, 3], [axis_b, axis_a]))
    result = StateVector(np.moveaxis(psi, [0, 1], [axis_b, axis_a]))
    _check_drift(state, result)
    return result


def attach_ancilla(state):
    """附加 |0> 輔助位元作為最低位元"""
    return StateVector(np.kron(state.amplitudes, [1, 0]))


def reorder_qubits(state, order):
    """依 order (原始量子位元索引序列) 重新排列量子位元"""
    if sorted(order) != list(range(1, state.num_qubits + 1)):
        raise StateError(f'無效的量子位元排列: {order}')
    return StateVector(np.transpose(state.tensor(), [q - 1 for q in order]))


def project_rotated(state, qubit, basis, outcome, discard=True):
    """以旋轉基底測量單一量子位元，回傳 (機率, 塌縮態)

    塌縮態為歸一化的態向量；discard 時移除被測量的量子位元，
    否則該位元保留為對應的基底向量。
    """
    axis = _axis(state, qubit)
    outcome = Outcome.parse(outcome)
    if state.norm_sq <= 0:
        raise StateError('無法測量零向量')
    if discard and state.num_qubits == 1:
        raise StateError('無法移除唯一的量子位元')

    vector = basis.vector(outcome)
    component = np.tensordot(vector.conj(), state.tensor(), axes=([0], [axis]))
    weight = float(np.vdot(component, component).real)
    probability = weight / state.norm_sq

    log.debug('測量量子位元 %i (θ=%.6g) 結果 %s: 機率 %.12g', qubit, basis.theta, outcome.value, probability)

    if probability <= IMPOSSIBLE_TOL:
        raise ImpossibleBranchError(
            f'量子位元 {qubit} 不可能測得 {outcome.value} (θ={basis.theta:.6g})',
            outcome=outcome,
        )

    component = component / np.sqrt(weight)
    if discard:
        return probability, StateVector(component)
    return probability, StateVector(np.moveaxis(np.multiply.outer(vector, component), 0, axis))


BELL_STATES = {
    BellOutcome.PHI_PLUS: make_state(2, {'00': 1 / np.sqrt(2), '11': 1 / np.sqrt(2)}),
    BellOutcome.PHI_MINUS: make_state(2, {'00': 1 / np.sqrt(2), '11': -1 / np.sqrt(2)}),
    BellOutcome.PSI_PLUS: make_state(2, {'01': 1 / np.sqrt(2), '10': 1 / np.sqrt(2)}),
    BellOutcome.PSI_MINUS: make_state(2, {'01': 1 / np.sqrt(2), '10': -1 / np.sqrt(2)}),
}


def bell_measure(state):
    if state.num_qubits != 2:
        raise StateError(f'Bell 測量需要 2 個量子位元: {state.num_qubits}')
    if abs(state.norm_sq - 1) > NORM_TOL:
        raise StateError(f'Bell 測量需要歸一化的態 (norm_sq={state.norm_sq:.12g})')

    probabilities = {
        outcome: abs(np.vdot(bell.amplitudes, state.amplitudes)) ** 2 / state.norm_sq
        for outcome, bell in BELL_STATES.items()
    }
    return probabilities


def overlap(s1, s2):
    """<s1|s2>"""
    if s1.num_qubits != s2.num_qubits:
        raise StateError(f'量子位元數不符: {s1.num_qubits} != {s2.num_qubits}')
    return complex(np.vdot(s1.amplitudes, s2.amplitudes))


def fidelity(s1, s2):
    """與全域相位無關的保真度 |<s1|s2>|^2 / (|s1|^2 |s2|^2)"""
    return abs(overlap(s1, s2)) ** 2 / (s1.norm_sq * s2.norm_sq)
