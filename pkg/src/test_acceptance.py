"""
Full-size runs on the default synthetic dataset. Minutes of CPU each;
run with `pytest -m slow`.
"""

import pytest

from imagegen import (
    GRADE_NAMES,
    GRADES,
    GenerationConfig,
    ProcessState,
    generate_dataset,
    load_dataset,
    render_stream,
    set_point_to_grade_mapping,
    valid_set_points,
)
from metrics import collapse_classes, confusion_matrix, macro_report
from monitor import EXIT_GO, EXIT_NO_GO, GO, NO_GO, MonitorConfig, MonitorSession, run_stream, suggest_remedy
from nn import Hyperparams, ModelConfig, accuracy, evaluate, init_weights, save_checkpoint, train
from sweep import SweepSpec, batch_sweep, lr_sweep

pytestmark = pytest.mark.slow

HYPERPARAMS = Hyperparams(epochs=50, learning_rate=0.01, batch_size=32, seed=0)


@pytest.fixture(scope='module')
def dataset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp('default_dataset')
    generate_dataset(GenerationConfig(out_dir=out))
    return out


@pytest.fixture(scope='module')
def grade_run(dataset_dir):
    dataset = load_dataset(dataset_dir, 'grade')
    model = ModelConfig.default()
    params, trace = train(model, dataset, HYPERPARAMS)
    return dataset, model, params, trace


@pytest.fixture(scope='module')
def checkpoint(grade_run, tmp_path_factory):
    _, model, params, _ = grade_run
    return save_checkpoint(model, params, tmp_path_factory.mktemp('ckpt') / 'model.amqm')


def test_grades_are_learnable(grade_run):
    _, _, _, trace = grade_run
    assert not trace.diverged
    assert max(r.test_accuracy for r in trace.records) >= 0.85


def test_set_points_are_harder_than_grades(dataset_dir, grade_run):
    dataset, model, params, _ = grade_run
    predicted = evaluate(model, params, dataset.x_test).argmax(axis=1)
    grade_f = macro_report(confusion_matrix(dataset.y_test, predicted, 5)).macro['f_score']

    fine = load_dataset(dataset_dir, 'setpoint')
    fine_model = ModelConfig.default(n_classes=21)
    fine_params, _ = train(fine_model, fine, HYPERPARAMS)
    fine_predicted = evaluate(fine_model, fine_params, fine.x_test).argmax(axis=1)
    cm = confusion_matrix(fine.y_test, fine_predicted, 21)
    assert macro_report(cm).macro['f_score'] < grade_f
    merged = collapse_classes(cm, set_point_to_grade_mapping(), list(GRADE_NAMES))
    assert merged.total_accuracy() > cm.total_accuracy()


def test_learning_rate_sweep_peaks_inside(grade_run):
    dataset, model, _, _ = grade_run
    spec = SweepSpec(axis='learning_rate', values=[0.0, 1e-3, 1e-2, 1e-1, 1.0],
                     hyperparams=HYPERPARAMS.model_copy(update={'epochs': 20}))
    frame = lr_sweep(spec, dataset, model).to_frame()
    means = frame.groupby('value')['test_acc'].mean().fillna(0.0)
    assert means.drop(0.0).idxmax() not in (1e-3, 1.0)

    baseline = frame[frame['value'] == 0.0]
    for row in baseline.itertuples():
        params = init_weights(model, spec.run_hyperparams(0.0, 0, row.repetition).seed)
        assert row.test_acc == accuracy(model, params, dataset.x_test, dataset.y_test)


def test_batch_sweep_completes(grade_run):
    dataset, model, _, _ = grade_run
    spec = SweepSpec(axis='batch_size', values=[8, 32], repetitions=1,
                     hyperparams=HYPERPARAMS.model_copy(update={'epochs': 10}))
    result = batch_sweep(spec, dataset, model)
    assert len(result.records) == 2
    assert not any(r.diverged for r in result.records)


@pytest.mark.parametrize('state,expected', [((50, 260), EXIT_GO), ((1000, 200), EXIT_NO_GO)])
def test_monitor_end_to_end(checkpoint, tmp_path, state, expected):
    frames = tmp_path / 'frames'
    render_stream(ProcessState(*state), 100, seed=21, out_dir=frames)
    config = MonitorConfig(checkpoint=checkpoint)
    session = MonitorSession.from_checkpoint(config)
    with open(tmp_path / 'signals.tsv', 'w', encoding='utf-8') as log:
        assert run_stream(config, frames, log, session=session) == expected
    decisions = [s.decision for s in session.signals]
    if expected == EXIT_GO:
        assert set(decisions) == {GO}
    else:
        assert NO_GO in decisions[:40]


def test_remedies_stay_on_valid_cells():
    for cell in valid_set_points():
        for grade in GRADES[2:]:
            remedy = suggest_remedy(cell, grade)
            assert remedy is None or not remedy.suggested.is_failure
