import json
import logging

import pandas as pd
import pytest

from orchestration.pipeline_controller import AnalysisPipelineController, build_parser, main
from src.settings import LOG_FORMAT, Settings

TOY = {
    'name': 'toy',
    'letters': ['a', 'b', 'c'],
    'independence': [['a', 'b']],
    'states': ['0', '1', '2'],
    'action': {'0': {'a': '1', 'b': '2'}, '1': {'a': '0', 'b': '2'}, '2': {'a': '2', 'b': '2', 'c': '0'}},
}


def write_model(tmp_path, document, name='model.json'):
    path = tmp_path / name
    path.write_text(json.dumps(document), encoding='utf-8')
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


class TestExitCodes:
    def test_validate_ok(self, tmp_path, capsys):
        code, out = run(capsys, 'validate', write_model(tmp_path, TOY))
        assert code == 0
        payload = json.loads(out)
        assert payload['status'] == 'ok'
        assert payload['irreducibility']['live']

    def test_shape_error(self, tmp_path, capsys):
        document = dict(TOY, independence=[['a', 'a']])
        code, out = run(capsys, 'validate', write_model(tmp_path, document))
        assert code == 2
        assert json.loads(out)['error_type'] == 'ReflexivePair'

    def test_semantic_error(self, tmp_path, capsys):
        action = {state: dict(row) for state, row in TOY['action'].items()}
        action['0']['b'] = '1'
        code, out = run(capsys, 'validate', write_model(tmp_path, dict(TOY, action=action)))
        assert code == 3
        payload = json.loads(out)
        assert payload['error_type'] == 'CommutationViolation'
        assert payload['context']['state'] == '0'

    def test_irreducibility_error(self, tmp_path, capsys):
        action = {state: dict(row) for state, row in TOY['action'].items()}
        del action['2']['c']
        code, out = run(capsys, 'analyze', write_model(tmp_path, dict(TOY, action=action)))
        assert code == 4
        assert 'live' in json.loads(out)['context']['failed']

    def test_unknown_preset(self, capsys):
        code, out = run(capsys, 'validate', 'preset:nope')
        assert code == 2
        assert json.loads(out)['error_type'] == 'UnknownPreset'

    def test_unknown_start_state(self, capsys):
        code, out = run(capsys, 'simulate', 'preset:toy', '--state', 'nope', '--steps', '100')
        assert code == 2
        payload = json.loads(out)
        assert payload['error_type'] == 'UnknownState'
        assert payload['context']['state'] == 'nope'

    def test_steps_must_be_positive(self, capsys):
        code, out = run(capsys, 'simulate', 'preset:toy', '--steps', '0')
        assert code == 2
        payload = json.loads(out)
        assert payload['error_type'] == 'ParseError'
        assert payload['context']['location'] == '--steps'


class TestAnalyze:
    def test_toy_json(self, tmp_path, capsys):
        code, out = run(capsys, 'analyze', write_model(tmp_path, TOY), '--json')
        assert code == 0
        report = json.loads(out)
        assert report['rho'] == 0.5
        assert report['speedup']['value'] == 1.2

    def test_summary(self, capsys):
        code, out = run(capsys, 'analyze', 'preset:dimer')
        assert code == 0
        assert set(json.loads(out)) == {'model', 'rho', 'kernel', 'speedup', 'unstable'}

    def test_output_is_repeatable(self, capsys):
        _, first = run(capsys, 'analyze', 'preset:toy', '--json')
        _, second = run(capsys, 'analyze', 'preset:toy', '--json')
        assert first == second


class TestCommands:
    def test_dsc_with_dot(self, tmp_path, capsys):
        dot = tmp_path / 'toy.dot'
        code, out = run(capsys, 'dsc', 'preset:toy', '--dot', str(dot))
        assert code == 0
        payload = json.loads(out)
        assert len(payload['vertices']) == 10
        assert payload['unstable'] == ['0-a', '1-a']
        assert dot.read_text(encoding='utf-8').startswith('digraph dsc {')

    def test_speedup(self, capsys):
        code, out = run(capsys, 'speedup', 'preset:cyc6')
        assert code == 0
        payload = json.loads(out)
        assert payload['speedup'] == 2.0
        assert sorted(row['size'] for row in payload['components']) == [3, 6]

    def test_simulate_csv_is_deterministic(self, tmp_path, capsys):
        first, second = tmp_path / 'first.csv', tmp_path / 'second.csv'
        run(capsys, '--seed', '5', 'simulate', 'preset:toy', '--steps', '300', '--csv', str(first))
        run(capsys, '--seed', '5', 'simulate', 'preset:toy', '--steps', '300', '--csv', str(second))
        assert first.read_bytes() == second.read_bytes()
        frame = pd.read_csv(first)
        assert len(frame) == 300
        assert frame['step'].tolist() == list(range(1, 301))

    def test_simulate_payload(self, capsys):
        code, out = run(capsys, 'simulate', 'preset:toy', '--steps', '2000')
        assert code == 0
        payload = json.loads(out)
        assert payload['start'] == '0'
        assert payload['hitting']['c']['closed_classes'] == [['0']]
        assert sum(payload['letter_counts'].values()) > 2000

    def test_boltzmann(self, capsys):
        code, out = run(capsys, 'boltzmann', 'preset:toy', '--grid', '3', '--max-len', '3')
        assert code == 0
        payload = json.loads(out)
        assert [row['k'] for row in payload['rows']] == [1, 2, 3]
        assert payload['monotone']

    def test_oracle(self, capsys):
        code, out = run(capsys, 'oracle', 'preset:dimer', '--max-len', '4')
        assert code == 0
        payload = json.loads(out)
        assert payload['series_check'] == 'PASS'
        assert payload['traces_by_length'] == [1, 4, 13, 40, 121]
        assert payload['census_agreement']
        assert payload['mobius_roundtrip']
        assert payload['stability']['passed']

    def test_preset_emit_then_validate(self, tmp_path, capsys):
        path = tmp_path / 'phil.json'
        code, _ = run(capsys, 'preset', 'philosophers', '--n', '4', '--emit', str(path))
        assert code == 0
        code, out = run(capsys, 'validate', str(path))
        assert code == 0
        assert json.loads(out)['states'] == 7

    def test_preset_to_stdout(self, capsys):
        code, out = run(capsys, 'preset', 'toy')
        assert code == 0
        assert json.loads(out)['states'] == ['0', '1', '2']


class TestController:
    def test_tolerance_flag(self):
        args = build_parser().parse_args(['--tol', '1e-7', 'analyze', 'preset:toy'])
        assert args.tol == 1e-7
        assert Settings().override(tol=args.tol).tol == 1e-7

    def test_oracle_reports_stability(self):
        controller = AnalysisPipelineController(Settings())
        result = controller.cmd_oracle('preset:toy', max_len=5, depth=8)
        assert result['stability']['unstable'] == ['0-a', '1-a']
        assert '0-b' in result['stability']['certified']

    def test_missing_subcommand(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


class TestSettings:
    def test_environment_overrides(self, monkeypatch):
        monkeypatch.setenv('CSERGO_TOL', '1e-6')
        monkeypatch.setenv('CSERGO_SEED', '9')
        settings = Settings.from_env()
        assert settings.tol == 1e-6
        assert settings.seed == 9
        assert settings.override(seed=3).seed == 3

    def test_log_format(self):
        record = logging.LogRecord('csergo', logging.INFO, __file__, 1, 'rho found', None, None)
        line = logging.Formatter(LOG_FORMAT).format(record)
        assert line.endswith(' - INFO - rho found')
        assert 'csergo' not in line
