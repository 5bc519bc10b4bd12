"""
Tests for dataset planning, generation, manifests and loading.
"""

import numpy as np
import numpy.testing as npt
import pandas as pd
import pytest

from imagegen import GenerationConfig, ProcessState, generate_dataset, load_dataset, read_manifest, render_stream
from imagegen.dataset import MANIFEST_COLUMNS, MANIFEST_NAME, plan_runs
from utils import ConfigurationError


class TestPlanRuns:
    def test_every_run_has_enough_layers(self, tmp_path):
        plans = plan_runs(GenerationConfig(out_dir=tmp_path, train_per_class=50, test_per_class=10))
        assert all(p.n_layers >= 10 for p in plans)
        per_class = pd.Series([p.n_layers for p in plans]).groupby([p.class_index for p in plans]).sum()
        assert per_class.tolist() == [60] * 5

    def test_too_few_images_per_cell(self, tmp_path):
        # grade D spreads over six cells, so 30 images cannot fill 10-layer runs
        with pytest.raises(ConfigurationError):
            plan_runs(GenerationConfig(out_dir=tmp_path, train_per_class=20, test_per_class=10))

    def test_setpoint_labels_plan_one_cell_per_class(self, tmp_path):
        plans = plan_runs(GenerationConfig(out_dir=tmp_path, train_per_class=8, test_per_class=2, labels='setpoint'))
        assert sorted({p.class_index for p in plans}) == list(range(21))


class TestGenerate:
    def test_manifest_rows_and_splits(self, small_dataset_dir):
        frame = read_manifest(small_dataset_dir)
        assert list(frame.columns) == MANIFEST_COLUMNS
        assert len(frame) == 300
        counts = frame.groupby(['grade', 'split']).size().unstack()
        assert counts['train'].tolist() == [48] * 5
        assert counts['test'].tolist() == [12] * 5
        order = np.lexsort((frame['layer'], frame['run_id']))
        npt.assert_array_equal(order, np.arange(len(frame)))

    def test_no_failure_cells_in_manifest(self, small_dataset_dir):
        frame = read_manifest(small_dataset_dir)
        assert not ((frame['temp_c'] == 185) & (frame['speed_mms'] > 200)).any()

    def test_rerun_is_byte_identical(self, tmp_path):
        config = dict(train_per_class=48, test_per_class=12, image_size=12, seed=5)
        generate_dataset(GenerationConfig(out_dir=tmp_path / 'a', **config))
        generate_dataset(GenerationConfig(out_dir=tmp_path / 'b', n_jobs=2, **config))
        a = (tmp_path / 'a' / MANIFEST_NAME).read_bytes()
        assert a == (tmp_path / 'b' / MANIFEST_NAME).read_bytes()
        frame = read_manifest(tmp_path / 'a')
        for name in frame['filename'][::37]:
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()

    def test_missing_image_detected(self, tmp_path):
        generate_dataset(GenerationConfig(out_dir=tmp_path, train_per_class=50, test_per_class=10, image_size=8))
        frame = read_manifest(tmp_path)
        (tmp_path / frame['filename'].iloc[0]).unlink()
        with pytest.raises(FileNotFoundError):
            read_manifest(tmp_path)


class TestLoad:
    def test_arrays(self, small_dataset):
        assert small_dataset.x_train.shape == (240, 1, 16, 16)
        assert small_dataset.x_test.shape == (60, 1, 16, 16)
        assert small_dataset.x_train.dtype == np.float32
        assert small_dataset.n_classes == 5
        assert np.bincount(small_dataset.y_test).tolist() == [12] * 5

    def test_images_are_normalized(self, small_dataset):
        x = small_dataset.x_train.reshape(len(small_dataset.x_train), -1)
        npt.assert_allclose(x.min(axis=1), 0.0)
        npt.assert_allclose(x.max(axis=1), 1.0)

    def test_setpoint_labeling_of_same_images(self, small_dataset_dir, small_dataset):
        fine = load_dataset(small_dataset_dir, 'setpoint')
        npt.assert_array_equal(fine.x_test, small_dataset.x_test)
        assert fine.n_classes == 21
        assert fine.y_test.max() < 21

    def test_empty_test_split(self, tmp_path):
        generate_dataset(GenerationConfig(out_dir=tmp_path, train_per_class=60, test_per_class=0, image_size=8))
        with pytest.raises(ConfigurationError):
            load_dataset(tmp_path)


def test_render_stream(tmp_path):
    paths = render_stream(ProcessState(100, 260), 12, seed=3, out_dir=tmp_path, image_size=16)
    assert [p.name for p in paths] == sorted(p.name for p in tmp_path.iterdir())
    assert len(paths) == 12
