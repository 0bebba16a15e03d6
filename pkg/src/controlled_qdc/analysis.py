import logging
from dataclasses import dataclass
from itertools import combinations, product
from math import pi

import numpy as np

from .protocol import (
    SUPPORT_TOL,
    ChannelSpec,
    PairAssignment,
    ProtocolError,
    Support,
    channel_state,
    default_assignment,
    evaluate_branch,
    pair_coefficients,
    walk_branches,
)
from .statevector import DRIFT_TOL, RotatedBasis

logging.basicConfig(level=logging.INFO, format='%(levelname)s - %(message)s')
log = logging.getLogger(__name__)

DEFAULT_ANGLE_SAMPLES = 16

# sampled angles closer than this to a multiple of pi/2 are redrawn
ANGLE_GUARD = 1e-6


@dataclass(frozen=True)
class CodabilityVerdict:
    codable: bool
    support_class: Support
    witness_angles: tuple = ()


@dataclass(frozen=True)
class SweepCell:
    theta1: float
    theta2: float
    gamma: float = None
    success_probability: float = None
    capacity: float = None

    @property
    def degenerate(self):
        return self.capacity is None


def enumerate_branches(channel, assignment, angles):
    """列舉所有 2^N 個控制者測量結果路徑"""
    if len(angles) != len(assignment.controllers):
        raise ProtocolError(f'測量角度數 {len(angles)} 與控制者數 {len(assignment.controllers)} 不符')

    branches = list(walk_branches(channel, assignment, tuple(angles)))
    total = sum(b.probability for b in branches)
    if abs(total - 1) > DRIFT_TOL:
        log.warning('分支機率總和偏離 1: %.16g', total)
    return branches


def dense_codable(pair_state, witness_angles=()):
    support = pair_coefficients(pair_state).support
    return CodabilityVerdict(support is not Support.OTHER, support, tuple(witness_angles))


def sample_angles(rng, count):
    """在 [0, 2π) 均勻取樣 count 個角度，避開 π/2 的整數倍附近"""
    angles = []
    while len(angles) < count:
        theta = rng.uniform(0, 2 * pi)
        if abs(theta - round(theta / (pi / 2)) * (pi / 2)) < ANGLE_GUARD:
            log.debug('捨棄過於接近 π/2 整數倍的角度: %.12g', theta)
            continue
        angles.append(theta)
    return tuple(angles)


def _pair_support(channel, assignment, angle_tuples):
    """所有取樣角度與分支下的支撐類別；任一分支不可編碼即回傳 OTHER，混合時回傳最先出現者"""
    first = None
    for angles in angle_tuples:
        for branch in walk_branches(channel, assignment, angles):
            if branch.impossible:
                continue
            support = pair_coefficients(branch.pair_state).support
            if support is Support.OTHER:
                return Support.OTHER
            first = first or support
    return first or Support.OTHER


def recheck_pair(channel, assignment, angle_tuples):
    """直接收縮通道張量與控制者基底向量，獨立確認該分配在每個分支都可編碼"""
    tensor = channel.tensor()
    keep = [assignment.sender - 1, assignment.receiver - 1]

    for angles in angle_tuples:
        for outcomes in product('+-', repeat=len(assignment.controllers)):
            pair = tensor
            # contract from the highest axis so lower axis numbers stay valid
            order = sorted(zip(assignment.controllers, angles, outcomes), reverse=True)
            for qubit, theta, outcome in order:
                vector = RotatedBasis(theta).vector(outcome)
                pair = np.tensordot(pair, vector.conj(), axes=([qubit - 1], [0]))
            if keep[0] > keep[1]:
                pair = pair.T
            amps = pair.reshape(4)
            norm = np.sqrt(np.vdot(amps, amps).real)
            if norm <= SUPPORT_TOL:
                continue
            support = {i for i, amp in enumerate(amps / norm) if abs(amp) > SUPPORT_TOL}
            if not (support <= {0, 3} or support <= {1, 2}):
                return False
    return True


def distribution_verdicts(spec, angle_samples=DEFAULT_ANGLE_SAMPLES, seed=0):
    """對每一組 (發送者, 接收者) 判定能否實現密集編碼"""
    if angle_samples < 1:
        raise ProtocolError(f'角度取樣數必須 >= 1: {angle_samples!r}')

    channel = channel_state(spec)
    n = channel.num_qubits
    rng = np.random.default_rng(seed)
    angle_tuples = [sample_angles(rng, n - 2) for _ in range(angle_samples)]
    log.debug('取樣角度: %s', angle_tuples)

    if isinstance(spec, ChannelSpec) and not spec.is_generic:
        log.warning('通道係數含 0，分配判定可能退化: %s', spec.coefficients)

    verdicts = {}
    for sender, receiver in combinations(range(1, n + 1), 2):
        assignment = PairAssignment.for_pair(sender, receiver, n)
        support = _pair_support(channel, assignment, angle_tuples)
        codable = support is not Support.OTHER
        if codable and not recheck_pair(channel, assignment, angle_tuples):
            log.error('分配 (%i,%i) 未通過獨立複驗，視為不可編碼', sender, receiver)
            codable, support = False, Support.OTHER
        log.debug('分配 (%i,%i): %s', sender, receiver, support.value)
        verdicts[sender, receiver] = CodabilityVerdict(codable, support, tuple(angle_tuples))
    return verdicts


def check_distributions(spec, angle_samples=DEFAULT_ANGLE_SAMPLES, seed=0):
    verdicts = distribution_verdicts(spec, angle_samples, seed)
    return {pair for pair, verdict in verdicts.items() if verdict.codable}


def sweep_capacity(spec, grid_size):
    """在 [0, π/2]² 均勻網格上計算 (+,+) 分支的過濾參數與容量，依 θ1 為外層的列優先順序"""
    if grid_size < 2:
        raise ProtocolError(f'網格大小必須 >= 2: {grid_size!r}')

    assignment = default_assignment(spec)
    if len(assignment.controllers) != 2:
        raise ProtocolError('容量掃描只支援 2 個控制者的通道')

    channel = channel_state(spec)
    thetas = np.linspace(0, pi / 2, grid_size)
    cells = []
    for theta1, theta2 in product(thetas, thetas):
        theta1, theta2 = float(theta1), float(theta2)
        branch, = walk_branches(channel, assignment, (theta1, theta2), ['++'])
        record = evaluate_branch(branch)
        if record.capacity is None:
            log.debug('退化網格點 (%.6g, %.6g)', theta1, theta2)
            cells.append(SweepCell(theta1, theta2))
            continue
        cells.append(SweepCell(
            theta1, theta2,
            gamma=record.params.gamma,
            success_probability=record.capacity.success_probability,
            capacity=record.capacity.capacity_bits,
        ))
    return cells
