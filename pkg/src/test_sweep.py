"""
Tests for the hyperparameter sweep harness.
"""

import pytest
from pydantic import ValidationError

from nn import Hyperparams, ModelConfig, accuracy, init_weights
from sweep import (
    SweepRecord,
    SweepResult,
    SweepSpec,
    batch_sweep,
    compare_epoch_traces,
    emit_csv,
    epoch_sweep,
    lr_sweep,
    read_csv,
    write_epoch_csv,
)
from utils import ConfigurationError


@pytest.fixture(scope='module')
def model():
    return ModelConfig.default(n_classes=5, image_size=16, channels=(2, 4, 4), hidden=8)


def spec(axis, values, **kwargs):
    hp = kwargs.pop('hyperparams', Hyperparams(epochs=1, batch_size=32, seed=4))
    return SweepSpec(axis=axis, values=values, hyperparams=hp, **kwargs)


class TestSpec:
    @pytest.mark.parametrize('values', [[], [0.1, 0.1], [0.2, 0.1]])
    def test_values_strictly_increasing(self, values):
        with pytest.raises(ValidationError):
            spec('learning_rate', values)

    def test_integer_axes(self):
        with pytest.raises(ValidationError):
            spec('batch_size', [0, 8])
        with pytest.raises(ValidationError):
            spec('epoch', [1.5])

    def test_seeds_depend_on_value_index_and_repetition(self):
        s = spec('learning_rate', [0.01, 0.1])
        seeds = {s.run_hyperparams(v, i, r).seed for i, v in enumerate(s.values) for r in range(3)}
        assert len(seeds) == 6
        assert s.run_hyperparams(0.1, 1, 2) == s.run_hyperparams(0.1, 1, 2)


class TestSweeps:
    def test_lr_sweep_records(self, model, small_dataset):
        s = spec('learning_rate', [0.0, 0.05], repetitions=2)
        result = lr_sweep(s, small_dataset, model)
        assert [(r.value, r.repetition) for r in result.records] == [(0.0, 0), (0.0, 1), (0.05, 0), (0.05, 1)]
        assert not any(r.diverged for r in result.records)

    def test_zero_lr_point_equals_untrained_accuracy(self, model, small_dataset):
        s = spec('learning_rate', [0.0], repetitions=1)
        record = lr_sweep(s, small_dataset, model).records[0]
        params = init_weights(model, s.run_hyperparams(0.0, 0, 0).seed)
        assert record.test_acc == accuracy(model, params, small_dataset.x_test, small_dataset.y_test)

    def test_points_are_isolated(self, model, small_dataset):
        both = lr_sweep(spec('learning_rate', [0.01, 0.05], repetitions=1), small_dataset, model)
        alone = lr_sweep(spec('learning_rate', [0.01], repetitions=1), small_dataset, model)
        assert both.records[0].test_acc == alone.records[0].test_acc

    def test_parallel_points_match_sequential(self, model, small_dataset):
        s = spec('learning_rate', [0.01, 0.05], repetitions=1)
        seq = lr_sweep(s, small_dataset, model)
        par = lr_sweep(s, small_dataset, model, n_jobs=2)
        assert [r.test_acc for r in seq.records] == [r.test_acc for r in par.records]

    def test_batch_sweep(self, model, small_dataset):
        n = len(small_dataset.x_train)
        result = batch_sweep(spec('batch_size', [8, n], repetitions=1), small_dataset, model)
        assert [r.value for r in result.records] == [8, n]
        assert not any(r.diverged for r in result.records)

    def test_batch_larger_than_split(self, model, small_dataset):
        with pytest.raises(ConfigurationError):
            batch_sweep(spec('batch_size', [len(small_dataset.x_train) + 1]), small_dataset, model)

    def test_wrong_axis(self, model, small_dataset):
        with pytest.raises(ConfigurationError):
            lr_sweep(spec('batch_size', [8]), small_dataset, model)

    def test_epoch_sweep(self, model, small_dataset):
        trace = epoch_sweep(spec('epoch', [1, 3]), small_dataset, model)
        assert len(trace.records) == 3

    def test_epoch_comparison(self, model, small_dataset, tmp_path):
        s = spec('epoch', [2], compare_learning_rates=[0.05])
        traces = compare_epoch_traces(s, small_dataset, model)
        assert list(traces) == [0.01, 0.05]
        path = write_epoch_csv(traces, tmp_path / 'epochs.csv')
        lines = path.read_text().splitlines()
        assert lines[0] == 'learning_rate,epoch,train_acc,test_acc,mean_loss,wall_seconds'
        assert len(lines) == 5

    def test_needs_a_dataset(self):
        with pytest.raises(ConfigurationError):
            lr_sweep(spec('learning_rate', [0.01]))


class TestCsv:
    def test_empty_result_is_header_only(self, tmp_path):
        path = emit_csv(SweepResult('learning_rate'), tmp_path / 'sweep.csv')
        assert path.read_text() == 'axis,value,repetition,test_acc,train_acc,wall_seconds,diverged\n'

    def test_round_trip(self, tmp_path):
        records = [SweepRecord('batch_size', 8, r, 0.5 + r / 10, 0.6, 1.25 * (r + 1), r == 1) for r in range(3)]
        path = emit_csv(SweepResult('batch_size', records), tmp_path / 'sweep.csv')
        lines = path.read_text().splitlines()
        assert len(lines) == 4
        assert lines[1].startswith('batch_size,8,0,')
        assert read_csv(path).records == records
