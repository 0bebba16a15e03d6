import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from math import atan, cos, isfinite, sin, sqrt

import numpy as np
from scipy.stats import binomtest

from .statevector import (
    BELL_STATES,
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    BellOutcome,
    ImpossibleBranchError,
    Outcome,
    RotatedBasis,
    StateVector,
    apply_one_qubit,
    apply_two_qubit,
    attach_ancilla,
    bell_measure,
    fidelity,
    make_state,
    project_rotated,
    reorder_qubits,
)

logging.basicConfig(level=logging.INFO, format='%(levelname)s - %(message)s')
log = logging.getLogger(__name__)

COEFF_TOL = 1e-9
SUPPORT_TOL = 1e-9
CLOSED_FORM_TOL = 1e-12
BELL_INPUT_TOL = 1e-9
DECODE_TOL = 1e-6

# trials sharing one random substream in monte_carlo
BLOCK_SIZE = 4096

MESSAGES = ('00', '01', '10', '11')

ENCODINGS = {
    '00': PAULI_I,
    '01': PAULI_X,
    '10': PAULI_Y,
    '11': PAULI_Z,
}

DECODINGS = {
    BellOutcome.PHI_PLUS: '00',
    BellOutcome.PSI_PLUS: '01',
    BellOutcome.PSI_MINUS: '10',
    BellOutcome.PHI_MINUS: '11',
}


class ProtocolError(ValueError):
    pass


class AmbiguousDecodeError(ProtocolError):
    pass


class Support(str, Enum):
    DIAG = 'diag'
    ANTI = 'anti'
    OTHER = 'other'


@dataclass(frozen=True)
class ChannelSpec:
    """a|0000> + b|1001> + c|0110> + d|1111> 的實係數"""
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for value in self.coefficients:
            if not isfinite(value):
                raise ProtocolError(f'通道係數必須為有限實數: {value!r}')
        deficit = 1.0 - sum(x * x for x in self.coefficients)
        if abs(deficit) > COEFF_TOL:
            raise ProtocolError(f'通道係數未歸一化: 1 - (a² + b² + c² + d²) = {deficit:.6g}')

    @property
    def coefficients(self):
        return (self.a, self.b, self.c, self.d)

    @property
    def num_qubits(self):
        return 4

    @property
    def is_generic(self):
        return all(x != 0 for x in self.coefficients)


@dataclass(frozen=True)
class GhzChannelSpec:
    """(N+2) 粒子 GHZ 通道，第 1..N 個量子位元為控制者"""
    n_controllers: int

    def __post_init__(self):
        if not isinstance(self.n_controllers, int) or self.n_controllers < 1:
            raise ProtocolError(f'控制者數目 N 必須 >= 1: {self.n_controllers!r}')

    @property
    def num_qubits(self):
        return self.n_controllers + 2


@dataclass(frozen=True)
class PairAssignment:
    """發送者、接收者與控制者（依測量順序）的量子位元分配"""
    sender: int
    receiver: int
    controllers: tuple

    def __post_init__(self):
        object.__setattr__(self, 'controllers', tuple(self.controllers))
        if self.sender == self.receiver:
            raise ProtocolError(f'發送者與接收者不可為同一量子位元: {self.sender}')

    @property
    def pair(self):
        return (self.sender, self.receiver)

    def validate(self, num_qubits):
        indices = sorted((self.sender, self.receiver, *self.controllers))
        if indices != list(range(1, num_qubits + 1)):
            raise ProtocolError(f'量子位元分配 {self} 不是 1..{num_qubits} 的分割')

    @classmethod
    def for_pair(cls, sender, receiver, num_qubits, controllers=None):
        if controllers is None:
            controllers = tuple(q for q in range(1, num_qubits + 1) if q not in (sender, receiver))
        rv = cls(sender, receiver, controllers)
        rv.validate(num_qubits)
        return rv


# party 2 sends to party 3; party 4 measures before party 1
STANDARD_ASSIGNMENT = PairAssignment(2, 3, (4, 1))


def default_assignment(spec):
    if isinstance(spec, GhzChannelSpec):
        n = spec.n_controllers
        return PairAssignment(n + 1, n + 2, tuple(range(1, n + 1)))
    return STANDARD_ASSIGNMENT


@dataclass(frozen=True)
class MeasurementPlan:
    """控制者的測量角度（弧度），依測量順序排列"""
    angles: tuple

    def __post_init__(self):
        angles = tuple(float(x) for x in self.angles)
        if not angles:
            raise ProtocolError('測量角度不可為空')
        for theta in angles:
            if not isfinite(theta):
                raise ProtocolError(f'測量角度必須為有限實數: {theta!r}')
        object.__setattr__(self, 'angles', angles)

    @property
    def theta1(self):
        return self.angles[0]

    @property
    def theta2(self):
        return self.angles[1]


@dataclass(frozen=True)
class Branch:
    outcomes: tuple
    probability: float
    pair_state: StateVector = None

    @property
    def pattern(self):
        return ''.join(o.value for o in self.outcomes)

    @property
    def impossible(self):
        return self.pair_state is None


@dataclass(frozen=True)
class PairCoefficients:
    alpha: complex
    beta: complex
    support: Support


@dataclass(frozen=True)
class FilterParams:
    """局部過濾參數

    tan_gamma 恆為較小振幅與較大振幅的絕對值比 (<= 1)；reflected 表示 |beta| > |alpha|，
    過濾器改為衰減 |1> 分量。signs 為 (alpha, beta) 的單位相位，實係數時即 ±1。
    """
    gamma: float
    tan_gamma: float
    e: float
    reflected: bool
    signs: tuple = (1, 1)

    @property
    def success_probability(self):
        return 2 * sin(self.gamma) ** 2

    @property
    def relative_phase(self):
        """衰減分量相對於另一分量的相位"""
        phase_alpha, phase_beta = self.signs
        if self.reflected:
            return phase_alpha * np.conj(phase_beta)
        return phase_beta * np.conj(phase_alpha)

    @property
    def signed_sin(self):
        """帶相位的 sinγ，對應較小的係數"""
        return (self.signs[0] if self.reflected else self.signs[1]) * sin(self.gamma)

    @property
    def signed_cos(self):
        """帶相位的 cosγ，對應較大的係數"""
        return (self.signs[1] if self.reflected else self.signs[0]) * cos(self.gamma)


@dataclass(frozen=True)
class CapacityReport:
    capacity_bits: float
    success_probability: float


@dataclass(frozen=True)
class ConcentrationResult:
    success_probability: float
    success_state: StateVector
    failure_probability: float
    failure_state: StateVector
    params: FilterParams
    support: Support


@dataclass(frozen=True)
class ClosedForm:
    """(+,+) 分支的解析式：|00> 係數 A、|11> 係數 C、e = A² + C²"""
    A: float
    C: float
    e: float
    tan_gamma: float
    sin_gamma: float
    cos_gamma: float


@dataclass(frozen=True)
class BranchRecord:
    branch: Branch
    coefficients: PairCoefficients = None
    params: FilterParams = None
    concentration: ConcentrationResult = None
    capacity: CapacityReport = None
    fidelity: float = None

    @property
    def codable(self):
        return self.coefficients is not None and self.coefficients.support is not Support.OTHER

    @property
    def capacity_bits(self):
        """不可編碼的分支只能直接傳送 1 bit"""
        if self.branch.impossible:
            return None
        return self.capacity.capacity_bits if self.capacity is not None else 1.0


@dataclass(frozen=True)
class ProtocolReport:
    spec: object
    plan: MeasurementPlan
    assignment: PairAssignment
    policy: str
    records: tuple
    expected_capacity: float = None
    expected_success_probability: float = None
    closed_form: ClosedForm = None

    @property
    def total_probability(self):
        return sum(r.branch.probability for r in self.records)


@dataclass(frozen=True)
class EmpiricalReport:
    trials: int
    seed: int
    branch_counts: dict
    success_counts: dict
    concentration_attempts: dict
    decode_correct: int
    mean_bits: float
    mean_bits_stderr: float
    analytic_success: dict = field(default_factory=dict)

    @property
    def success_count(self):
        return sum(self.success_counts.values())

    @property
    def branch_frequencies(self):
        return {k: v / self.trials for k, v in self.branch_counts.items()}

    @property
    def success_frequency(self):
        return self.success_count / self.trials

    @property
    def success_stderr(self):
        return _stderr(self.success_frequency, self.trials)

    def conditional_success(self, pattern):
        """回傳 (頻率, 標準誤)，該分支未出現時為 (None, None)"""
        n = self.branch_counts.get(pattern, 0)
        if not n:
            return None, None
        p = self.success_counts.get(pattern, 0) / n
        return p, _stderr(p, n)

    def success_interval(self, confidence_level=0.95):
        return binomtest(self.success_count, self.trials).proportion_ci(confidence_level)

    @property
    def decode_accuracy(self):
        if not self.success_count:
            return None
        return self.decode_correct / self.success_count


def _stderr(p, n):
    return sqrt(p * (1 - p) / n)


def build_channel(spec):
    a, b, c, d = spec.coefficients
    return make_state(4, {'0000': a, '1001': b, '0110': c, '1111': d})


def ghz_channel(spec):
    if not isinstance(spec, GhzChannelSpec):
        spec = GhzChannelSpec(spec)
    n = spec.num_qubits
    return make_state(n, {'0' * n: 1 / sqrt(2), '1' * n: 1 / sqrt(2)})


def channel_state(spec):
    if isinstance(spec, GhzChannelSpec):
        return ghz_channel(spec)
    return build_channel(spec)


def controller_round(state, qubit, theta, outcome):
    """控制者以 θ 角旋轉基底測量其量子位元，回傳 (機率, 剩餘量子位元的塌縮態)"""
    return project_rotated(state, qubit, RotatedBasis(theta), outcome)


def walk_branches(channel, assignment, angles, patterns=None):
    """依序執行所有控制者測量，對每個結果路徑產生 Branch

    patterns 未指定時產生全部 2^N 個路徑。不可能的路徑以機率 0、pair_state None 表示。
    最終雙粒子態的量子位元順序為 (發送者, 接收者)。
    """
    controllers = assignment.controllers
    if len(angles) != len(controllers):
        raise ProtocolError(f'測量角度數 {len(angles)} 與控制者數 {len(controllers)} 不符')
    assignment.validate(channel.num_qubits)

    if patterns is None:
        patterns = product((Outcome.PLUS, Outcome.MINUS), repeat=len(controllers))

    for pattern in patterns:
        outcomes = tuple(Outcome.parse(o) for o in pattern)
        if len(outcomes) != len(controllers):
            raise ProtocolError(f'分支 {pattern!r} 長度與控制者數 {len(controllers)} 不符')

        state = channel
        labels = list(range(1, channel.num_qubits + 1))
        probability = 1.0
        try:
            for qubit, theta, outcome in zip(controllers, angles, outcomes):
                p, state = controller_round(state, labels.index(qubit) + 1, theta, outcome)
                probability *= p
                labels.remove(qubit)
        except ImpossibleBranchError as exc:
            log.debug('不可能的分支 %s: %s', ''.join(o.value for o in outcomes), exc)
            yield Branch(outcomes, 0.0)
            continue

        order = [labels.index(assignment.sender) + 1, labels.index(assignment.receiver) + 1]
        yield Branch(outcomes, probability, reorder_qubits(state, order))


def pair_coefficients(pair_state):
    if pair_state.num_qubits != 2:
        raise ProtocolError(f'需要雙粒子態: {pair_state.num_qubits} 個量子位元')

    amps = np.where(np.abs(pair_state.amplitudes) > SUPPORT_TOL, pair_state.amplitudes, 0)
    support = {i for i, amp in enumerate(amps) if amp != 0}
    if support and support <= {0, 3}:
        return PairCoefficients(complex(amps[0]), complex(amps[3]), Support.DIAG)
    if support and support <= {1, 2}:
        return PairCoefficients(complex(amps[1]), complex(amps[2]), Support.ANTI)
    return PairCoefficients(0j, 0j, Support.OTHER)


def _phase(z):
    return z / abs(z) if z != 0 else 1


def filter_params(alpha, beta, e=1.0):
    """由塌縮態的二個係數計算過濾參數

    e 為未歸一化係數的平方和（歸一化前的分支機率），僅作記錄用。
    """
    ma, mb = abs(alpha), abs(beta)
    if ma == 0 and mb == 0:
        raise ProtocolError('alpha 與 beta 不可同時為 0')
    if abs(ma * ma + mb * mb - 1) > COEFF_TOL:
        raise ProtocolError(f'係數未歸一化: |alpha|² + |beta|² = {ma * ma + mb * mb:.12g}')

    reflected = mb > ma
    tan_gamma = ma / mb if reflected else mb / ma
    params = FilterParams(
        gamma=atan(tan_gamma),
        tan_gamma=tan_gamma,
        e=e,
        reflected=reflected,
        signs=(_phase(alpha), _phase(beta)),
    )
    log.debug('過濾參數: γ=%.12g tanγ=%.12g reflected=%s', params.gamma, tan_gamma, reflected)
    return params


def filter_unitary(params):
    """局部過濾么正矩陣，順序為 (系統位元, 輔助位元) 的 |00>, |10>, |01>, |11>

    未反射時與 tanγ 取帶號值的過濾矩陣相同；相位項 p 使成功分量成為 |φ+> (或 |ψ+>)。
    反射時交換系統位元 |0> 與 |1> 的角色。
    """
    t = params.tan_gamma
    if not 0 <= t <= 1:
        raise ProtocolError(f'tanγ 必須介於 0 到 1: {t!r}')
    s = sqrt(1 - t * t)
    p = complex(params.relative_phase)

    u = np.zeros((4, 4), dtype=complex)
    if params.reflected:
        attenuated, passed = (1, 3), (0, 2)
    else:
        attenuated, passed = (0, 2), (1, 3)

    i, j = attenuated
    u[i, i] = t * p
    u[i, j] = s
    u[j, i] = s
    u[j, j] = -t * np.conj(p)

    i, j = passed
    u[i, i] = 1
    u[j, j] = -1
    return u


def apply_filter(pair_state, params):
    """附加輔助位元並對 (第 1 個量子位元, 輔助位元) 作用過濾矩陣，回傳三粒子態"""
    return apply_two_qubit(attach_ancilla(pair_state), 1, 3, filter_unitary(params))


def concentrate(pair_state, e=1.0):
    coefficients = pair_coefficients(pair_state)
    if coefficients.support is Support.OTHER:
        raise ProtocolError('雙粒子態不在 {|00>,|11>} 或 {|01>,|10>} 上，無法濃縮')

    params = filter_params(coefficients.alpha, coefficients.beta, e)
    filtered = apply_filter(pair_state, params)

    # ancilla measured in the computational basis: |+> = |0>, |-> = -|1> at θ = 0
    basis = RotatedBasis(0.0)
    try:
        success_probability, success_state = project_rotated(filtered, 3, basis, Outcome.PLUS)
    except ImpossibleBranchError:
        success_probability, success_state = 0.0, None
    try:
        failure_probability, failure_state = project_rotated(filtered, 3, basis, Outcome.MINUS)
    except ImpossibleBranchError:
        failure_probability, failure_state = 0.0, None

    log.debug('濃縮成功機率: %.12g', success_probability)
    return ConcentrationResult(
        success_probability, success_state, failure_probability, failure_state, params, coefficients.support,
    )


def capacity(params):
    p = params.success_probability
    return CapacityReport(capacity_bits=1 + p, success_probability=p)


def capacity_from_cot(cot_gamma):
    return 1 + 2 / (1 + cot_gamma ** 2)


def closed_form(spec, theta1, theta2):
    """(+,+) 分支的解析式"""
    A, C = closed_form_pair(spec, theta1, theta2, '++')
    e = A * A + C * C
    if e == 0:
        raise ProtocolError('(+,+) 分支機率為 0')
    return ClosedForm(
        A=A, C=C, e=e,
        tan_gamma=C / A if A != 0 else float('inf'),
        sin_gamma=C / sqrt(e),
        cos_gamma=A / sqrt(e),
    )


def closed_form_pair(spec, theta1, theta2, outcomes):
    """四粒子通道經第 4、第 1 方測量後，(2, 3) 的未歸一化 |00>、|11> 係數"""
    a, b, c, d = spec.coefficients
    o4, o1 = (Outcome.parse(o) for o in outcomes)
    c1, s1 = cos(theta1), sin(theta1)
    c2, s2 = cos(theta2), sin(theta2)

    # party 4: |+> -> (cos, sin), |-> -> (sin, -cos) on (a,c | b,d)
    w0, w1 = (c1, s1) if o4 is Outcome.PLUS else (s1, -c1)
    # party 1: same pattern on (a,c | b,d) with its own angle
    v0, v1 = (c2, s2) if o1 is Outcome.PLUS else (s2, -c2)

    return (a * w0 * v0 + b * w1 * v1, c * w0 * v0 + d * w1 * v1)


def align_to_phi_plus(success_state, support):
    """反對角支撐的 |ψ+> 由發送者作用 σx 轉為 |φ+>"""
    if support is Support.ANTI:
        return apply_one_qubit(success_state, 1, PAULI_X)
    return success_state


def evaluate_branch(branch):
    if branch.impossible:
        return BranchRecord(branch)

    coefficients = pair_coefficients(branch.pair_state)
    if coefficients.support is Support.OTHER:
        log.debug('分支 %s 無法編碼', branch.pattern)
        return BranchRecord(branch, coefficients)

    concentration = concentrate(branch.pair_state, e=branch.probability)
    report = capacity(concentration.params)
    fid = None
    if concentration.success_state is not None:
        target = BELL_STATES[BellOutcome.PHI_PLUS if coefficients.support is Support.DIAG else BellOutcome.PSI_PLUS]
        fid = fidelity(concentration.success_state, target)
    return BranchRecord(branch, coefficients, concentration.params, concentration, report, fid)


def resolve_patterns(policy, n_controllers):
    """將分支策略轉為結果路徑序列：'all'、'single' (全部 +) 或明確的 +/- 字串"""
    if policy == 'all':
        return None
    if policy == 'single':
        return ['+' * n_controllers]
    if isinstance(policy, str) and set(policy) <= {'+', '-'} and len(policy) == n_controllers:
        return [policy]
    raise ProtocolError(f'無效的分支策略: {policy!r}')


def run_protocol(spec, plan, policy='all', assignment=None):
    if assignment is None:
        assignment = default_assignment(spec)
    channel = channel_state(spec)
    if len(plan.angles) != len(assignment.controllers):
        raise ProtocolError(f'測量角度數 {len(plan.angles)} 與控制者數 {len(assignment.controllers)} 不符')

    patterns = resolve_patterns(policy, len(assignment.controllers))
    records = tuple(evaluate_branch(b) for b in walk_branches(channel, assignment, plan.angles, patterns))

    cf = None
    if isinstance(spec, ChannelSpec) and assignment == STANDARD_ASSIGNMENT:
        try:
            cf = closed_form(spec, plan.theta1, plan.theta2)
        except ProtocolError:
            cf = None
        else:
            _check_closed_form(records, cf)

    possible = [r for r in records if not r.branch.impossible]
    for r in records:
        if r.branch.impossible:
            log.warning('分支 %s 不可能發生，已排除於期望值之外', r.branch.pattern)

    expected_capacity = expected_success = None
    weight = sum(r.branch.probability for r in possible)
    if weight > 0:
        expected_capacity = sum(r.branch.probability * r.capacity_bits for r in possible) / weight
        expected_success = sum(
            r.branch.probability * r.capacity.success_probability for r in possible if r.capacity is not None
        ) / weight

    return ProtocolReport(
        spec=spec,
        plan=plan,
        assignment=assignment,
        policy=policy,
        records=records,
        expected_capacity=expected_capacity,
        expected_success_probability=expected_success,
        closed_form=cf,
    )


def _check_closed_form(records, cf):
    for r in records:
        if r.branch.pattern != '++' or r.params is None or abs(cf.tan_gamma) > 1:
            continue
        deviation = max(
            abs(r.params.signed_sin - cf.sin_gamma),
            abs(r.params.signed_cos - cf.cos_gamma),
            abs(r.params.e - cf.e),
        )
        if deviation > CLOSED_FORM_TOL:
            log.warning('(+,+) 分支與解析式不符: 差異 %.3e', deviation)


def encode(bell_state, message):
    """發送者依 2 bit 訊息對其量子位元作用 I / σx / σy / σz"""
    message = parse_message(message)
    if bell_state.num_qubits != 2 or 1 - fidelity(bell_state, BELL_STATES[BellOutcome.PHI_PLUS]) > BELL_INPUT_TOL:
        raise ProtocolError('編碼需要 |φ+> 態')
    return apply_one_qubit(bell_state, 1, ENCODINGS[message])


def decode(state):
    probabilities = bell_measure(state)
    outcome, p = max(probabilities.items(), key=lambda item: item[1])
    if p < 1 - DECODE_TOL:
        raise AmbiguousDecodeError(f'Bell 測量結果不確定 (最大機率 {p:.6g})')
    return DECODINGS[outcome]


def parse_message(message):
    if isinstance(message, (tuple, list)):
        message = ''.join(str(int(bit)) for bit in message)
    if message not in ENCODINGS:
        raise ProtocolError(f'訊息必須為 2 個位元 (00, 01, 10, 11): {message!r}')
    return message


class _SamplingTree:
    """monte_carlo 共用的確定性計算結果：分支機率、濃縮機率與各訊息的 Bell 測量分佈"""

    def __init__(self, spec, plan, assignment):
        report = run_protocol(spec, plan, 'all', assignment)
        self.n = len(assignment.controllers)
        self.records = {r.branch.pattern: r for r in report.records}
        self.leaf_probability = {k: r.branch.probability for k, r in self.records.items()}

        # conditional probability of '+' after each outcome prefix
        self.plus_probability = {}
        for depth in range(self.n):
            for prefix in map(''.join, product('+-', repeat=depth)):
                total = sum(p for k, p in self.leaf_probability.items() if k.startswith(prefix))
                plus = sum(p for k, p in self.leaf_probability.items() if k.startswith(prefix + '+'))
                self.plus_probability[prefix] = plus / total if total > 0 else 0.0

        self.success_probability = {}
        self.bell_distribution = {}
        outcomes = list(BellOutcome)
        for pattern, record in self.records.items():
            c = record.concentration
            if c is None or c.success_state is None:
                self.success_probability[pattern] = 0.0
                continue
            self.success_probability[pattern] = c.success_probability
            delivered = align_to_phi_plus(c.success_state, c.support)
            for m in MESSAGES:
                probs = bell_measure(encode(delivered, m))
                self.bell_distribution[pattern, m] = np.array([probs[o] for o in outcomes])
        self.outcomes = outcomes

    def sample_block(self, rng, size):
        patterns = [''] * size
        u = rng.random((size, self.n))
        for k in range(self.n):
            for i in range(size):
                prefix = patterns[i]
                patterns[i] = prefix + ('+' if u[i, k] < self.plus_probability[prefix] else '-')

        ancilla = rng.random(size)
        messages = rng.integers(0, 4, size)
        bell = rng.random(size)

        branch_counts = {}
        success_counts = {}
        attempts = {}
        decode_correct = 0
        bits = np.zeros(size)
        for i, pattern in enumerate(patterns):
            branch_counts[pattern] = branch_counts.get(pattern, 0) + 1
            record = self.records[pattern]
            bits[i] = 1.0
            if record.concentration is None:
                continue
            attempts[pattern] = attempts.get(pattern, 0) + 1
            if ancilla[i] >= self.success_probability[pattern]:
                continue
            success_counts[pattern] = success_counts.get(pattern, 0) + 1
            bits[i] = 2.0
            message = MESSAGES[messages[i]]
            cdf = np.cumsum(self.bell_distribution[pattern, message])
            index = min(int(np.searchsorted(cdf, bell[i] * cdf[-1], side='right')), 3)
            if DECODINGS[self.outcomes[index]] == message:
                decode_correct += 1

        return branch_counts, success_counts, attempts, decode_correct, bits


def _merge_counts(target, source):
    for k, v in source.items():
        target[k] = target.get(k, 0) + v


def monte_carlo(spec, plan, trials, seed, assignment=None, workers=None):
    """以固定種子抽樣完整流程：控制者結果、輔助位元結果、隨機訊息、編碼、Bell 測量與解碼

    每 BLOCK_SIZE 次試驗使用由 (seed, 區塊索引) 衍生的獨立亂數子序列，
    因此結果與 workers 數目無關。
    """
    if not isinstance(trials, int) or trials < 1:
        raise ProtocolError(f'試驗次數必須 >= 1: {trials!r}')
    if assignment is None:
        assignment = default_assignment(spec)

    tree = _SamplingTree(spec, plan, assignment)
    root = np.random.SeedSequence(seed)
    blocks = [
        (np.random.default_rng(child), min(BLOCK_SIZE, trials - start))
        for child, start in zip(root.spawn((trials + BLOCK_SIZE - 1) // BLOCK_SIZE), range(0, trials, BLOCK_SIZE))
    ]
    log.debug('蒙地卡羅: %i 次試驗, %i 個區塊, seed=%i', trials, len(blocks), seed)

    with ThreadPoolExecutor(max_workers=workers) as executor:
        results = list(executor.map(lambda args: tree.sample_block(*args), blocks))

    branch_counts, success_counts, attempts = {}, {}, {}
    decode_correct = 0
    bits = []
    for bc, sc, at, dc, b in results:
        _merge_counts(branch_counts, bc)
        _merge_counts(success_counts, sc)
        _merge_counts(attempts, at)
        decode_correct += dc
        bits.append(b)
    bits = np.concatenate(bits)

    return EmpiricalReport(
        trials=trials,
        seed=seed,
        branch_counts=dict(sorted(branch_counts.items())),
        success_counts=dict(sorted(success_counts.items())),
        concentration_attempts=dict(sorted(attempts.items())),
        decode_correct=decode_correct,
        mean_bits=float(bits.mean()),
        mean_bits_stderr=float(bits.std() / sqrt(trials)),
        analytic_success=dict(sorted(tree.success_probability.items())),
    )
