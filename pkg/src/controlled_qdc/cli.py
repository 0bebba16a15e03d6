import argparse
import logging
import re
import sys
from math import pi

from wcwidth import wcwidth

from . import __version__, analysis, protocol, report, statevector

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IMPOSSIBLE = 3

ANGLE_PATTERN = re.compile(r'^([+-]?)(\d+(?:\.\d*)?)?\*?pi(?:/(\d+))?$')


class CJKRawDescriptionHelpFormatter(argparse.RawDescriptionHelpFormatter):
    def _split_lines(self, text, width):
        lines = []
        buf = ''
        cur_width = 0

        for ch in text:
            w = wcwidth(ch)
            if w < 0:
                w = 1
            if ch == '\n':
                lines.append(buf)
                buf = ''
                cur_width = 0
                continue
            if cur_width + w > width:
                lines.append(buf)
                buf = ch
                cur_width = w
            else:
                buf += ch
                cur_width += w
        if buf:
            lines.append(buf)
        return lines


def _bound_str(lower=None, upper=None, lower_open=False, upper_open=False):
    lb = '∞' if lower is None else lower
    ub = '∞' if upper is None else upper
    lm = '(' if lower_open or lower is None else '['
    um = ')' if upper_open or upper is None else ']'
    return f'{lm}{lb}, {ub}{um}'


def _check_bounds(value, lower, upper, lower_open, upper_open):
    if lower is not None:
        if lower_open:
            if not value > lower:
                raise argparse.ArgumentTypeError(f'value must > {lower}')
        else:
            if not value >= lower:
                raise argparse.ArgumentTypeError(f'value must >= {lower}')

    if upper is not None:
        if upper_open:
            if not value < upper:
                raise argparse.ArgumentTypeError(f'value must < {upper}')
        else:
            if not value <= upper:
                raise argparse.ArgumentTypeError(f'value must <= {upper}')


def bounded_int(lower=None, upper=None, lower_open=False, upper_open=False):
    def validator(value):
        try:
            value = int(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"'{value}' is not a valid integer")

        _check_bounds(value, lower, upper, lower_open, upper_open)
        return value

    validator.__name__ = f'int{_bound_str(lower, upper, lower_open, upper_open)}'
    return validator


def parse_angle(text):
    """解析弧度角：小數，或 pi、pi/k、n*pi/k、npi/k 形式的分數"""
    compact = text.strip().lower().replace('π', 'pi').replace(' ', '')
    m = ANGLE_PATTERN.match(compact)
    if m:
        sign, factor, divisor = m.groups()
        value = (float(factor) if factor else 1.0) * pi
        if divisor is not None:
            if int(divisor) == 0:
                raise ValueError(f'分母不可為 0: {text!r}')
            value /= int(divisor)
        return -value if sign == '-' else value
    return float(compact)


def angle(value):
    try:
        return parse_angle(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{value}' is not a valid angle")


def angle_list(value):
    return tuple(angle(item) for item in value.split(','))


def coefficients(value):
    items = value.split(',')
    if len(items) != 4:
        raise argparse.ArgumentTypeError('須提供 4 個係數 a,b,c,d')
    try:
        return tuple(float(item) for item in items)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f'invalid value: {exc}')


def pair_value(value):
    try:
        sender, receiver = (int(item) for item in value.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{value}' 應為 S,R 形式的二個量子位元索引")
    return sender, receiver


def branch_pattern(value):
    """'all' 或由 +/- (亦可寫作 p/m) 組成的結果路徑"""
    if value == 'all':
        return value
    pattern = value.replace('p', '+').replace('m', '-')
    if not pattern or set(pattern) - {'+', '-'}:
        raise argparse.ArgumentTypeError(f"'{value}' 應為 all 或由 + - 組成的字串")
    return pattern


def message_bits(value):
    if value == 'all' or value in protocol.MESSAGES:
        return value
    raise argparse.ArgumentTypeError(f"'{value}' 應為 00、01、10、11 或 all")


def load_config(file):
    """讀取 key=value 設定檔，# 開頭為註解"""
    values = {}
    with open(file, encoding='utf-8') as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            key, sep, value = line.partition('=')
            if not sep:
                raise ValueError(f'設定檔第 {lineno} 行缺少 "=": {line!r}')
            values[key.strip().lstrip('-').replace('-', '_')] = value.strip()
    return values


def build_spec(args):
    if args.coeffs is not None and args.ghz is not None:
        raise protocol.ProtocolError('只能指定 --coeffs 或 --ghz 其中之一')
    if args.ghz is not None:
        return protocol.GhzChannelSpec(args.ghz)
    if args.coeffs is not None:
        return protocol.ChannelSpec(*args.coeffs)
    # the maximal case: a = b = c = d = 1/2
    return protocol.ChannelSpec(0.5, 0.5, 0.5, 0.5)


def build_assignment(args, spec):
    default = protocol.default_assignment(spec)
    pair = getattr(args, 'pair', None)
    if pair is None or tuple(pair) == default.pair:
        return default
    return protocol.PairAssignment.for_pair(*pair, spec.num_qubits)


def build_plan(args, assignment):
    angles = getattr(args, 'angles', None)
    if angles is None:
        angles = (pi / 4,) * len(assignment.controllers)
    return protocol.MeasurementPlan(angles)


def write(document, fmt):
    print(report.dump(document, fmt), end='')


def cmd_run(args):
    spec = build_spec(args)
    assignment = build_assignment(args, spec)
    plan = build_plan(args, assignment)
    result = protocol.run_protocol(spec, plan, args.branch, assignment)

    if args.branch != 'all' and all(r.branch.impossible for r in result.records):
        print(f'錯誤: 分支 {args.branch} 不可能發生', file=sys.stderr)
        return EXIT_IMPOSSIBLE

    write(report.run_document(result), args.out)
    return EXIT_OK


def cmd_sweep(args):
    spec = build_spec(args)
    cells = analysis.sweep_capacity(spec, args.grid)
    write(report.sweep_document(spec, args.grid, cells), args.out)
    return EXIT_OK


def cmd_distributions(args):
    spec = build_spec(args)
    verdicts = analysis.distribution_verdicts(spec, args.samples, args.seed)
    degenerate = isinstance(spec, protocol.ChannelSpec) and not spec.is_generic
    write(report.distributions_document(spec, args.samples, args.seed, verdicts, degenerate), args.out)
    return EXIT_OK


def cmd_montecarlo(args):
    spec = build_spec(args)
    assignment = build_assignment(args, spec)
    plan = build_plan(args, assignment)
    result = protocol.monte_carlo(spec, plan, args.trials, args.seed, assignment, workers=args.workers)
    write(report.montecarlo_document(spec, plan, result), args.out)
    return EXIT_OK


def cmd_code(args):
    spec = build_spec(args)
    assignment = build_assignment(args, spec)
    plan = build_plan(args, assignment)
    pattern = '+' * len(assignment.controllers) if args.branch == 'all' else args.branch

    record, = protocol.run_protocol(spec, plan, pattern, assignment).records
    if record.branch.impossible:
        print(f'錯誤: 分支 {pattern} 不可能發生', file=sys.stderr)
        return EXIT_IMPOSSIBLE

    concentration = record.concentration
    delivered = None
    if concentration is not None and concentration.success_state is not None:
        delivered = protocol.align_to_phi_plus(concentration.success_state, concentration.support)

    messages = protocol.MESSAGES if args.message == 'all' else (args.message,)
    results = []
    for message in messages:
        if delivered is not None:
            decoded = protocol.decode(protocol.encode(delivered, message))
            results.append({'message': message, 'decoded': decoded, 'path': 'dense', 'bits': 2})
        else:
            # without a Bell pair only the bare qubit, i.e. one bit, gets through
            results.append({'message': message, 'decoded': message[0], 'path': 'fallback', 'bits': 1})

    success_probability = concentration.success_probability if concentration is not None else 0.0
    write(report.code_document(spec, plan, pattern, record.branch.probability, success_probability, results), args.out)
    return EXIT_OK


def _add_channel_arguments(parser):
    parser.add_argument(
        '--coeffs', metavar='A,B,C,D', type=coefficients, action='store',
        help="""四粒子通道 a|0000> + b|1001> + c|0110> + d|1111> 的實係數，須滿足歸一化 \
(預設: 0.5,0.5,0.5,0.5)""",
    )
    parser.add_argument(
        '--ghz', metavar='N', type=bounded_int(1), action='store',
        help="""改用 (N+2) 粒子 GHZ 通道，第 1..N 個粒子為控制者""",
    )
    parser.add_argument(
        '-o', '--out', default='pretty', choices=report.FORMATS, action='store',
        help="""輸出格式 (預設: %(default)s)""",
    )
    parser.add_argument(
        '-c', '--config', metavar='FILE', action='store',
        help="""由 key=value 設定檔讀取參數，命令列參數優先""",
    )


def _add_plan_arguments(parser):
    parser.add_argument(
        '-a', '--angles', metavar='LIST', type=angle_list, action='store',
        help="""依測量順序列出控制者的測量角度（弧度），可用 pi/4、3pi/8 等形式。\
四粒子通道的順序為第 4 方、第 1 方 (預設: 皆為 pi/4)""",
    )
    parser.add_argument(
        '-p', '--pair', metavar='S,R', type=pair_value, action='store',
        help="""發送者與接收者的粒子編號，例如 1,4 為相反的分配方式 (預設: 2,3)""",
    )


def parse_args(argv=None):
    parser = argparse.ArgumentParser(
        description="""模擬四粒子非最大糾纏通道上的受控量子密集編碼。""",
        formatter_class=CJKRawDescriptionHelpFormatter,
    )
    parser.add_argument(
        '--version', action='version', version=f'{__package__} {__version__}',
        help="""顯示版本資訊並離開""",
    )
    parser.add_argument(
        '-v', '--verbose', dest='verbosity', const=logging.DEBUG, default=logging.INFO, action='store_const',
        help="""顯示除錯及細節資訊""",
    )
    subparsers = parser.add_subparsers(
        metavar='COMMAND',
        help="""執行子命令，可用如 %(prog)s run -h 取得相關說明""",
    )
    commands = {}

    parser_run = subparsers.add_parser(
        'run', aliases=['r'],
        formatter_class=CJKRawDescriptionHelpFormatter,
        help="""執行控制者測量、局部過濾濃縮及容量計算""",
        description="""執行控制者測量、局部過濾濃縮及容量計算，列出各分支的機率與容量。""",
        epilog="""分支以 + - 字串表示，依控制者測量順序排列，例如 --branch=++ 或 --branch pm。""",
    )
    parser_run.set_defaults(func=cmd_run, command='run')
    _add_channel_arguments(parser_run)
    _add_plan_arguments(parser_run)
    parser_run.add_argument(
        '-b', '--branch', metavar='PATTERN', default='all', type=branch_pattern, action='store',
        help="""要計算的分支，all 表示全部分支 (預設: %(default)s)""",
    )
    commands['run'] = parser_run

    parser_sweep = subparsers.add_parser(
        'sweep', aliases=['s'],
        formatter_class=CJKRawDescriptionHelpFormatter,
        help="""掃描測量角度網格上的容量""",
        description="""在 [0, pi/2]² 的均勻網格上計算 (+,+) 分支的 γ、濃縮成功機率及容量。""",
    )
    parser_sweep.set_defaults(func=cmd_sweep, command='sweep')
    _add_channel_arguments(parser_sweep)
    parser_sweep.add_argument(
        '-g', '--grid', metavar='N', default=9, type=bounded_int(2), action='store',
        help="""每個角度的網格點數 (預設: %(default)s)""",
    )
    commands['sweep'] = parser_sweep

    parser_distributions = subparsers.add_parser(
        'distributions', aliases=['d'],
        formatter_class=CJKRawDescriptionHelpFormatter,
        help="""列出可實現密集編碼的粒子分配方式""",
        description="""對每一組發送者/接收者取樣控制者角度並列舉所有分支，列出每個分支皆可編碼的分配方式。""",
    )
    parser_distributions.set_defaults(func=cmd_distributions, command='distributions')
    _add_channel_arguments(parser_distributions)
    parser_distributions.add_argument(
        '-n', '--samples', metavar='N', default=analysis.DEFAULT_ANGLE_SAMPLES, type=bounded_int(1), action='store',
        help="""角度取樣組數 (預設: %(default)s)""",
    )
    parser_distributions.add_argument(
        '-s', '--seed', metavar='N', default=0, type=bounded_int(0), action='store',
        help="""亂數種子 (預設: %(default)s)""",
    )
    commands['distributions'] = parser_distributions

    parser_montecarlo = subparsers.add_parser(
        'montecarlo', aliases=['m'],
        formatter_class=CJKRawDescriptionHelpFormatter,
        help="""以蒙地卡羅抽樣驗證濃縮成功機率與解碼""",
        description="""以固定種子抽樣完整流程，回報各分支頻率、濃縮成功頻率及其標準誤。""",
    )
    parser_montecarlo.set_defaults(func=cmd_montecarlo, command='montecarlo')
    _add_channel_arguments(parser_montecarlo)
    _add_plan_arguments(parser_montecarlo)
    parser_montecarlo.add_argument(
        '-t', '--trials', metavar='N', default=100000, type=bounded_int(1), action='store',
        help="""試驗次數 (預設: %(default)s)""",
    )
    parser_montecarlo.add_argument(
        '-s', '--seed', metavar='N', default=0, type=bounded_int(0), action='store',
        help="""亂數種子 (預設: %(default)s)""",
    )
    parser_montecarlo.add_argument(
        '-w', '--workers', metavar='N', type=bounded_int(1), action='store',
        help="""平行抽樣的執行緒數，不影響結果 (預設: 自動)""",
    )
    commands['montecarlo'] = parser_montecarlo

    parser_code = subparsers.add_parser(
        'code', aliases=['c'],
        formatter_class=CJKRawDescriptionHelpFormatter,
        help="""在濃縮後的通道上編碼並解碼訊息""",
        description="""在指定分支濃縮後的 Bell 態上以 Pauli 運算編碼訊息，並以 Bell 測量解碼。\
濃縮失敗時改以 1 bit 傳送。""",
    )
    parser_code.set_defaults(func=cmd_code, command='code')
    _add_channel_arguments(parser_code)
    _add_plan_arguments(parser_code)
    parser_code.add_argument(
        '-m', '--message', metavar='BITS', default='all', type=message_bits, action='store',
        help="""要傳送的 2 bit 訊息，all 表示全部 4 種 (預設: %(default)s)""",
    )
    parser_code.add_argument(
        '-b', '--branch', metavar='PATTERN', default='all', type=branch_pattern, action='store',
        help="""使用的分支，all 表示全部為 + 的分支 (預設: %(default)s)""",
    )
    commands['code'] = parser_code

    args = parser.parse_args(argv)

    config = getattr(args, 'config', None)
    if config is not None:
        subparser = commands[args.command]
        try:
            values = load_config(config)
        except (OSError, ValueError) as exc:
            subparser.error(f'無法載入設定檔 {config}: {exc}')
        dests = {action.dest for action in subparser._actions}
        unknown = sorted(set(values) - dests - {'config'})
        if unknown:
            subparser.error(f'設定檔含有未知的參數: {", ".join(unknown)}')
        values.pop('config', None)
        subparser.set_defaults(**values)
        args = parser.parse_args(argv)
        if args.out not in report.FORMATS:
            subparser.error(f'未支援此輸出格式: {args.out}')

    return args


def main(argv=None):
    args = parse_args(argv)

    if not hasattr(args, 'func'):
        parse_args(['-h'])
        return EXIT_OK

    for log in (statevector.log, protocol.log, analysis.log, report.log):
        log.setLevel(args.verbosity)

    try:
        return args.func(args)
    except statevector.ImpossibleBranchError as exc:
        print(f'錯誤: {exc}', file=sys.stderr)
        return EXIT_IMPOSSIBLE
    except (protocol.ProtocolError, statevector.StateError) as exc:
        print(f'錯誤: {exc}', file=sys.stderr)
        return EXIT_VALIDATION
