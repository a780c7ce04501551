from .train_funcs import (
    METRIC_COLUMNS,
    TrainConfig,
    TrainResult,
    TrainState,
    lr_schedule_step,
    perplexity,
    sequence_nll,
    should_stop,
    train,
)
from .training import app
