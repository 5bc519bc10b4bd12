"""
End-to-end tests of the command line through main.run.
"""

import numpy as np
import pandas as pd
import pytest

from main import run

SUBCOMMANDS = ['gen', 'train', 'eval', 'sweep', 'monitor']


def gen_args(out, *extra):
    return ['gen', '--train-per-class', '50', '--test-per-class', '10', '--image-size', '16',
            '--seed', '5', '--out', str(out), *extra]


@pytest.fixture(scope='module')
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp('cli_data')
    assert run(gen_args(out)) == 0
    return out


@pytest.fixture(scope='module')
def grade_model(data_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp('cli_grade_model')
    assert run(['train', '--data', str(data_dir), '--epochs', '1', '--seed', '2', '--out', str(out)]) == 0
    return out / 'model.amqm'


class TestUsage:
    def test_help(self, capsys):
        assert run(['--help']) == 0
        for name in SUBCOMMANDS:
            assert run([name, '--help']) == 0
        out = capsys.readouterr().out
        assert '--checkpoint' in out and '--axis' in out

    def test_unknown_flag(self):
        assert run(['gen', '--no-such-flag']) == 1

    def test_unknown_command(self):
        assert run(['fly']) == 1

    def test_missing_required_option(self):
        assert run(['train']) == 1


class TestGen:
    def test_manifest(self, data_dir):
        manifest = pd.read_csv(data_dir / 'manifest.csv')
        assert len(manifest) == 300
        assert manifest.groupby(['grade', 'split']).size().unstack()[['train', 'test']].values.tolist() == \
            [[50, 10]] * 5

    def test_rerun_is_byte_identical(self, data_dir, tmp_path):
        assert run(gen_args(tmp_path)) == 0
        assert (tmp_path / 'manifest.csv').read_bytes() == (data_dir / 'manifest.csv').read_bytes()
        for name in pd.read_csv(tmp_path / 'manifest.csv')['filename'][:20]:
            assert (tmp_path / name).read_bytes() == (data_dir / name).read_bytes()

    def test_config_file_defaults(self, tmp_path):
        config = tmp_path / 'gen.env'
        config.write_text('train_per_class=50\ntest_per_class=10\nimage_size=16\nseed=5\n')
        assert run(['--config', str(config), 'gen', '--out', str(tmp_path / 'data')]) == 0
        assert len(pd.read_csv(tmp_path / 'data' / 'manifest.csv')) == 300

    def test_config_file_unknown_key(self, tmp_path):
        config = tmp_path / 'gen.env'
        config.write_text('bogus=1\n')
        assert run(['--config', str(config), 'gen', '--out', str(tmp_path)]) == 1
        assert not (tmp_path / 'manifest.csv').exists()

    def test_impossible_counts(self, tmp_path):
        assert run(['gen', '--train-per-class', '5', '--test-per-class', '1', '--out', str(tmp_path)]) == 1

    def test_failed_cell_override_rejected(self, tmp_path):
        assert run(gen_args(tmp_path, '--grade-override', '1000,185=A')) == 1

    def test_stream(self, tmp_path):
        assert run(['gen', '--stream-at', '50', '260', '--frames', '4', '--image-size', '16',
                    '--out', str(tmp_path)]) == 0
        assert sorted(p.name for p in tmp_path.glob('*.pgm')) == [f"frame_{i:05d}.pgm" for i in range(4)]


class TestTrainEval:
    def test_train_outputs(self, grade_model):
        trace = pd.read_csv(grade_model.parent / 'trace.csv')
        assert list(trace.columns) == ['epoch', 'train_acc', 'test_acc', 'mean_loss', 'wall_seconds']
        assert trace['epoch'].tolist() == [1]

    def test_train_rerun_is_byte_identical(self, data_dir, grade_model, tmp_path):
        assert run(['train', '--data', str(data_dir), '--epochs', '1', '--seed', '2', '--out', str(tmp_path)]) == 0
        assert (tmp_path / 'model.amqm').read_bytes() == grade_model.read_bytes()

    def test_eval_five_classes(self, data_dir, grade_model, tmp_path):
        assert run(['eval', '--data', str(data_dir), '--checkpoint', str(grade_model), '--out', str(tmp_path)]) == 0
        cm = pd.read_csv(tmp_path / 'confusion_5.csv', index_col=0)
        assert list(cm.columns) == ['A', 'B', 'C', 'D', 'E']
        assert cm.values.sum() == 50
        assert cm.sum(axis=1).tolist() == [10] * 5
        metrics = pd.read_csv(tmp_path / 'metrics_5.csv')
        assert metrics['class'].tolist() == ['A', 'B', 'C', 'D', 'E', 'macro']
        assert len(pd.read_csv(tmp_path / 'predictions.csv')) == 50

    def test_eval_rerun_is_byte_identical(self, data_dir, grade_model, tmp_path):
        for name in ('first', 'second'):
            assert run(['eval', '--data', str(data_dir), '--checkpoint', str(grade_model),
                        '--out', str(tmp_path / name)]) == 0
        for name in ('confusion_5.csv', 'metrics_5.csv', 'predictions.csv'):
            assert (tmp_path / 'first' / name).read_bytes() == (tmp_path / 'second' / name).read_bytes()

    def test_eval_rejects_mismatched_classes(self, data_dir, grade_model, tmp_path):
        args = ['eval', '--data', str(data_dir), '--checkpoint', str(grade_model), '--out', str(tmp_path)]
        assert run(args + ['--classes', '21']) == 1
        assert run(args + ['--collapse']) == 1

    def test_set_point_model_collapse(self, data_dir, tmp_path):
        assert run(['train', '--data', str(data_dir), '--labels', 'setpoint', '--epochs', '1',
                    '--out', str(tmp_path)]) == 0
        assert run(['eval', '--data', str(data_dir), '--checkpoint', str(tmp_path / 'model.amqm'),
                    '--classes', '21', '--collapse', '--grid-report', '--out', str(tmp_path)]) == 0
        fine = pd.read_csv(tmp_path / 'confusion_21.csv', index_col=0)
        coarse = pd.read_csv(tmp_path / 'confusion_5_collapsed.csv', index_col=0)
        assert fine.shape == (21, 21)
        assert coarse.values.sum() == fine.values.sum()
        assert np.trace(coarse.values) >= np.trace(fine.values)
        grid = pd.read_csv(tmp_path / 'predicted_grades.csv', index_col=0, keep_default_na=False)
        assert grid.shape == (6, 4)
        assert (tmp_path / 'grid_report.csv').exists()


class TestSweep:
    def test_batch_sweep_csv(self, data_dir, tmp_path):
        assert run(['sweep', '--data', str(data_dir), '--axis', 'batch_size', '--values', '64,128',
                    '--repetitions', '1', '--epochs', '1', '--out', str(tmp_path)]) == 0
        frame = pd.read_csv(tmp_path / 'sweep_batch_size.csv')
        assert frame['value'].tolist() == [64, 128]

    def test_bad_values(self, data_dir, tmp_path):
        assert run(['sweep', '--data', str(data_dir), '--axis', 'learning_rate', '--values', '0.1,0.01',
                    '--out', str(tmp_path)]) == 1
        assert run(['sweep', '--data', str(data_dir), '--axis', 'learning_rate', '--values', 'fast',
                    '--out', str(tmp_path)]) == 1


class TestMonitor:
    @pytest.fixture
    def frames(self, tmp_path):
        out = tmp_path / 'frames'
        assert run(['gen', '--stream-at', '1000', '200', '--frames', '6', '--image-size', '16',
                    '--out', str(out)]) == 0
        return out

    def test_signal_log(self, grade_model, frames, tmp_path):
        code = run(['monitor', '--checkpoint', str(grade_model), '--frames', str(frames), '--window', '3',
                    '--set-point', '1000', '200', '--out', str(tmp_path)])
        assert code in (0, 2)
        lines = (tmp_path / 'signals.tsv').read_text().splitlines()
        assert [line.split('\t')[0] for line in lines] == ['2', '3', '4', '5']

    def test_no_go_exit_code(self, grade_model, frames, tmp_path, mocker):
        mocker.patch('monitor.session.predict', return_value=np.array([0.0, 0.0, 0.1, 0.1, 0.8]))
        code = run(['monitor', '--checkpoint', str(grade_model), '--frames', str(frames), '--window', '1',
                    '--stop-after', '3', '--out', str(tmp_path)])
        assert code == 2

    def test_missing_checkpoint(self, frames, tmp_path):
        assert run(['monitor', '--checkpoint', str(tmp_path / 'none.amqm'), '--frames', str(frames),
                    '--out', str(tmp_path / 'out')]) == 1
        assert not (tmp_path / 'out' / 'signals.tsv').exists()
