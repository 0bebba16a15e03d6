import csv
import json
import logging
from io import StringIO
from math import isfinite

import yaml

from . import __version__
from .protocol import ChannelSpec, GhzChannelSpec

logging.basicConfig(level=logging.INFO, format='%(levelname)s - %(message)s')
log = logging.getLogger(__name__)

FORMATS = ('pretty', 'json', 'yaml', 'csv')

# command -> (document field holding the primary table, csv columns)
TABLES = {
    'run': ('branches', ('branch', 'probability', 'support', 'gamma', 'p_success', 'capacity', 'fidelity')),
    'sweep': ('cells', ('theta1', 'theta2', 'gamma', 'p_success', 'capacity')),
    'distributions': ('pairs', ('sender', 'receiver', 'codable', 'support')),
    'montecarlo': ('branches', ('branch', 'count', 'frequency', 'successes', 'p_success', 'stderr', 'analytic')),
    'code': ('messages', ('message', 'decoded', 'path', 'bits')),
}

TEXT_COLUMNS = {'branch', 'support', 'message', 'decoded', 'path'}
INT_COLUMNS = {'sender', 'receiver', 'count', 'successes', 'bits'}
BOOL_COLUMNS = {'codable'}


def format_float(value):
    """17 位有效數字，保證可精確還原且為 YAML/JSON 可辨識的浮點數格式"""
    s = f'{value:.17g}'
    if 'e' in s:
        mantissa, _, exponent = s.partition('e')
        if '.' not in mantissa:
            mantissa += '.0'
        return f'{mantissa}e{exponent}'
    if '.' not in s:
        s += '.0'
    return s


def float_representer(dumper, value):
    if not isfinite(value):
        return dumper.represent_scalar('tag:yaml.org,2002:null', '~')
    return dumper.represent_scalar('tag:yaml.org,2002:float', format_float(value))


class ReportDumper(yaml.SafeDumper):
    pass


ReportDumper.add_representer(float, float_representer)


def num(value):
    """轉為報告用的數值；None 與非有限值以 None 表示，複數以 [實部, 虛部] 表示"""
    if value is None:
        return None
    if isinstance(value, complex):
        return [num(value.real), num(value.imag)]
    value = float(value)
    return value if isfinite(value) else None


def spec_inputs(spec):
    if isinstance(spec, GhzChannelSpec):
        return {'ghz': spec.n_controllers}
    if isinstance(spec, ChannelSpec):
        return {'coeffs': [num(x) for x in spec.coefficients]}
    raise TypeError(f'unsupported channel spec: {spec!r}')


def _document(command, inputs, **results):
    return {'command': command, 'version': __version__, 'inputs': inputs, **results}


def run_document(report):
    branches = []
    for record in report.records:
        branch = record.branch
        row = {
            'branch': branch.pattern,
            'probability': num(branch.probability),
            'support': record.coefficients.support.value if record.coefficients else None,
            'alpha': num(record.coefficients.alpha) if record.codable else None,
            'beta': num(record.coefficients.beta) if record.codable else None,
            'gamma': num(record.params.gamma) if record.params else None,
            'tan_gamma': num(record.params.tan_gamma) if record.params else None,
            'reflected': record.params.reflected if record.params else None,
            'p_success': num(record.capacity.success_probability) if record.capacity else None,
            'capacity': num(record.capacity_bits),
            'fidelity': num(record.fidelity),
        }
        branches.append(row)

    inputs = {
        **spec_inputs(report.spec),
        'angles': [num(x) for x in report.plan.angles],
        'pair': [report.assignment.sender, report.assignment.receiver],
        'controllers': list(report.assignment.controllers),
        'branch': report.policy,
    }
    cf = report.closed_form
    closed = None if cf is None else {
        'A': num(cf.A), 'C': num(cf.C), 'e': num(cf.e),
        'tan_gamma': num(cf.tan_gamma), 'sin_gamma': num(cf.sin_gamma), 'cos_gamma': num(cf.cos_gamma),
    }
    return _document(
        'run', inputs,
        branches=branches,
        total_probability=num(report.total_probability),
        expected_capacity=num(report.expected_capacity),
        expected_success_probability=num(report.expected_success_probability),
        closed_form=closed,
    )


def sweep_document(spec, grid_size, cells):
    rows = [{
        'theta1': num(c.theta1),
        'theta2': num(c.theta2),
        'gamma': num(c.gamma),
        'p_success': num(c.success_probability),
        'capacity': num(c.capacity),
    } for c in cells]
    best = max((c for c in cells if not c.degenerate), key=lambda c: c.capacity, default=None)
    return _document(
        'sweep', {**spec_inputs(spec), 'grid': grid_size},
        cells=rows,
        degenerate=sum(1 for c in cells if c.degenerate),
        max_capacity=None if best is None else {
            'theta1': num(best.theta1), 'theta2': num(best.theta2), 'capacity': num(best.capacity),
        },
    )


def distributions_document(spec, samples, seed, verdicts, degenerate=False):
    rows = [{
        'sender': sender,
        'receiver': receiver,
        'codable': verdict.codable,
        'support': verdict.support_class.value,
    } for (sender, receiver), verdict in verdicts.items()]
    return _document(
        'distributions', {**spec_inputs(spec), 'samples': samples, 'seed': seed},
        pairs=rows,
        valid=[[s, r] for (s, r), verdict in verdicts.items() if verdict.codable],
        degenerate=degenerate,
    )


def montecarlo_document(spec, plan, report):
    rows = []
    for pattern, count in report.branch_counts.items():
        p, err = report.conditional_success(pattern)
        rows.append({
            'branch': pattern,
            'count': count,
            'frequency': num(count / report.trials),
            'successes': report.success_counts.get(pattern, 0),
            'p_success': num(p),
            'stderr': num(err),
            'analytic': num(report.analytic_success.get(pattern)),
        })
    low, high = report.success_interval()
    return _document(
        'montecarlo', {
            **spec_inputs(spec),
            'angles': [num(x) for x in plan.angles],
            'trials': report.trials,
            'seed': report.seed,
        },
        branches=rows,
        success_frequency=num(report.success_frequency),
        success_stderr=num(report.success_stderr),
        success_interval=[num(low), num(high)],
        decode_accuracy=num(report.decode_accuracy),
        mean_bits=num(report.mean_bits),
        mean_bits_stderr=num(report.mean_bits_stderr),
    )


def code_document(spec, plan, pattern, branch_probability, success_probability, results):
    return _document(
        'code', {**spec_inputs(spec), 'angles': [num(x) for x in plan.angles], 'branch': pattern},
        branch_probability=num(branch_probability),
        success_probability=num(success_probability),
        messages=results,
    )


def _json(value, indent, level):
    pad = ' ' * (indent * (level + 1))
    end = ' ' * (indent * level)
    if value is None:
        return 'null'
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value) if isfinite(value) else 'null'
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, (list, tuple)):
        if not value:
            return '[]'
        items = (_json(v, indent, level + 1) for v in value)
        return '[\n' + ',\n'.join(pad + item for item in items) + f'\n{end}]'
    if isinstance(value, dict):
        if not value:
            return '{}'
        items = (f'{json.dumps(str(k), ensure_ascii=False)}: {_json(v, indent, level + 1)}' for k, v in value.items())
        return '{\n' + ',\n'.join(pad + item for item in items) + f'\n{end}}}'
    raise TypeError(f'unsupported value in report: {value!r}')


def dump_json(document, indent=2):
    return _json(document, indent, 0) + '\n'


def dump_yaml(document, indent=2):
    return yaml.dump(document, Dumper=ReportDumper, allow_unicode=True, indent=indent, sort_keys=False)


def _csv_value(value):
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def dump_csv(document):
    field, columns = TABLES[document['command']]
    fh = StringIO()
    writer = csv.writer(fh, lineterminator='\n')
    writer.writerow(columns)
    for row in document[field]:
        writer.writerow([_csv_value(row.get(col)) for col in columns])
    return fh.getvalue()


def _parse_csv_value(column, text):
    if text == '':
        return None
    if column in TEXT_COLUMNS:
        return text
    if column in BOOL_COLUMNS:
        return text == 'true'
    if column in INT_COLUMNS:
        return int(text)
    return float(text)


def load_csv(text):
    reader = csv.DictReader(StringIO(text))
    return [{k: _parse_csv_value(k, v) for k, v in row.items()} for row in reader]


def dump_pretty(document):
    return '\n'.join(generate_pretty(document)) + '\n'


def _f(value, spec='.6f'):
    if value is None:
        return '-'
    if isinstance(value, list):
        return f'{value[0]:{spec}}{value[1]:+{spec}}i'
    return f'{value:{spec}}'


def _channel_str(inputs):
    if 'ghz' in inputs:
        return f'GHZ (N={inputs["ghz"]})'
    return 'a, b, c, d = ' + ', '.join(f'{x:g}' for x in inputs['coeffs'])


def generate_pretty(document):
    command = document['command']
    inputs = document['inputs']
    yield f'通道: {_channel_str(inputs)}'
    if 'angles' in inputs:
        yield '測量角度: ' + ', '.join(f'{x:.6f}' for x in inputs['angles'])

    if command == 'run':
        yield f'發送者/接收者: {inputs["pair"][0]}, {inputs["pair"][1]}; 控制者測量順序: {inputs["controllers"]}'
        yield ''
        for row in document['branches']:
            if row['support'] is None:
                yield f'分支 {row["branch"]}: 不可能發生'
                continue
            yield (f'分支 {row["branch"]}: 機率 {_f(row["probability"])}，支撐 {row["support"]}，'
                   f'γ {_f(row["gamma"])}，濃縮成功機率 {_f(row["p_success"])}，容量 {_f(row["capacity"])} bits')
            if row['fidelity'] is not None:
                yield f'    alpha: {_f(row["alpha"])}  beta: {_f(row["beta"])}  Bell 保真度: {_f(row["fidelity"], ".12f")}'
        yield ''
        yield f'機率總和: {_f(document["total_probability"], ".12f")}'
        yield f'平均容量: {_f(document["expected_capacity"])} bits'
        cf = document['closed_form']
        if cf is not None:
            yield f'解析式 (+,+): sinγ {_f(cf["sin_gamma"])}，cosγ {_f(cf["cos_gamma"])}，e {_f(cf["e"])}'

    elif command == 'sweep':
        yield f'網格: {inputs["grid"]} x {inputs["grid"]}'
        yield ''
        yield f'{"theta1":>10} {"theta2":>10} {"gamma":>10} {"p_success":>10} {"capacity":>10}'
        for row in document['cells']:
            yield ' '.join(f'{_f(row[k]):>10}' for k in ('theta1', 'theta2', 'gamma', 'p_success', 'capacity'))
        best = document['max_capacity']
        if best is not None:
            yield ''
            yield f'最大容量: {_f(best["capacity"])} bits 於 ({_f(best["theta1"])}, {_f(best["theta2"])})'

    elif command == 'distributions':
        yield f'角度取樣數: {inputs["samples"]}，種子: {inputs["seed"]}'
        yield ''
        for s, r in document['valid']:
            yield f'({s},{r})'
        if document['degenerate']:
            yield ''
            yield '警告: 通道係數含 0，判定結果可能退化'

    elif command == 'montecarlo':
        yield f'試驗次數: {inputs["trials"]}，種子: {inputs["seed"]}'
        yield ''
        for row in document['branches']:
            yield (f'分支 {row["branch"]}: 次數 {row["count"]}，濃縮成功 {row["successes"]}，'
                   f'條件成功頻率 {_f(row["p_success"])} ± {_f(row["stderr"])} (解析值 {_f(row["analytic"])})')
        yield ''
        yield f'整體成功頻率: {_f(document["success_frequency"])} ± {_f(document["success_stderr"])}'
        yield f'解碼正確率: {_f(document["decode_accuracy"])}'
        yield f'平均傳輸量: {_f(document["mean_bits"])} ± {_f(document["mean_bits_stderr"])} bits'

    elif command == 'code':
        yield f'分支 {inputs["branch"]}: 機率 {_f(document["branch_probability"])}，濃縮成功機率 {_f(document["success_probability"])}'
        yield ''
        for row in document['messages']:
            if row['path'] == 'dense':
                yield f'訊息 {row["message"]} -> 解碼 {row["decoded"]}'
            else:
                yield f'訊息 {row["message"]} -> 濃縮失敗，改以 1 bit 傳送 ({row["decoded"]})'

    yield ''
    yield f'controlled_qdc {document["version"]}'


def dump(document, fmt):
    log.debug('輸出格式: %s', fmt)
    if fmt == 'json':
        return dump_json(document)
    if fmt == 'yaml':
        return dump_yaml(document)
    if fmt == 'csv':
        return dump_csv(document)
    if fmt == 'pretty':
        return dump_pretty(document)
    raise ValueError(f'未支援此輸出格式: {fmt}')


def load_document(text, fmt):
    """重新解析 json / yaml 報告或 csv 表格"""
    if fmt == 'json':
        return json.loads(text)
    if fmt == 'yaml':
        return yaml.safe_load(text)
    if fmt == 'csv':
        return load_csv(text)
    raise ValueError(f'無法解析此格式: {fmt}')
