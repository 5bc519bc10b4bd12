"""Synthetic AM layer images, label tables and dataset assembly."""

from .process import (
    GRID_SPEEDS,
    GRID_TEMPERATURES,
    GRADES,
    GRADE_NAMES,
    ProcessState,
    QualityGrade,
    SetPointClass,
    badness,
    true_grade,
    is_failure,
    grade_table,
    valid_set_points,
    set_point_index,
    set_point_to_grade_mapping,
)
from .defects import DefectField, defect_field, expected_counts
from .render import render_layer, normalize_intensity
from .pgm import read_pgm, write_pgm
from .dataset import (
    GenerationConfig,
    Dataset,
    generate_dataset,
    load_dataset,
    load_image,
    read_manifest,
    render_stream,
)

__all__ = [
    'GRID_SPEEDS',
    'GRID_TEMPERATURES',
    'GRADES',
    'GRADE_NAMES',
    'ProcessState',
    'QualityGrade',
    'SetPointClass',
    'badness',
    'true_grade',
    'is_failure',
    'grade_table',
    'valid_set_points',
    'set_point_index',
    'set_point_to_grade_mapping',
    'DefectField',
    'defect_field',
    'expected_counts',
    'render_layer',
    'normalize_intensity',
    'read_pgm',
    'write_pgm',
    'GenerationConfig',
    'Dataset',
    'generate_dataset',
    'load_dataset',
    'load_image',
    'read_manifest',
    'render_stream',
]
