from .adam import AdamState, adam_step
from .model import (
    ARCHS,
    BLSTM,
    DROP_GRID,
    GRU_ARCH,
    HIDDEN_GRID,
    LSTM_ARCH,
    RECURRENT_ARCHS,
    SIMPLERNN,
    SMALLCONV,
    Model,
    ModelSpec,
    init_model,
    load_model,
    save_model,
)

__all__ = [
    "AdamState",
    "adam_step",
    "ARCHS",
    "BLSTM",
    "DROP_GRID",
    "GRU_ARCH",
    "HIDDEN_GRID",
    "LSTM_ARCH",
    "RECURRENT_ARCHS",
    "SIMPLERNN",
    "SMALLCONV",
    "Model",
    "ModelSpec",
    "init_model",
    "load_model",
    "save_model",
]
