"""Dense tensor ops, a small sequential CNN, SGD training and checkpoints."""

from .functional import (
    conv2d,
    conv2d_backward,
    cross_entropy,
    dropout,
    fully_connected,
    im2col,
    maxpool2x2,
    maxpool2x2_backward,
    relu,
    softmax,
)
from .model import (
    LayerSpec,
    ModelConfig,
    Parameters,
    init_weights,
    model_backward,
    model_forward,
    predict,
    sgd_step,
)
from .training import (
    Hyperparams,
    TrainingRecord,
    TrainingTrace,
    accuracy,
    evaluate,
    read_trace_csv,
    train,
    write_trace_csv,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import check_gradients

__all__ = [
    'conv2d',
    'conv2d_backward',
    'cross_entropy',
    'dropout',
    'fully_connected',
    'im2col',
    'maxpool2x2',
    'maxpool2x2_backward',
    'relu',
    'softmax',
    'LayerSpec',
    'ModelConfig',
    'Parameters',
    'init_weights',
    'model_backward',
    'model_forward',
    'predict',
    'sgd_step',
    'Hyperparams',
    'TrainingRecord',
    'TrainingTrace',
    'accuracy',
    'evaluate',
    'read_trace_csv',
    'train',
    'write_trace_csv',
    'load_checkpoint',
    'save_checkpoint',
    'check_gradients',
]
