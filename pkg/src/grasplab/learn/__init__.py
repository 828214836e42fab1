"""From-scratch convolutional grasp classifier."""

from .io import load_model, model_hash, save_model
from .net import (
    MODEL_VERSION,
    N_BINS,
    Conv,
    MaxPool,
    ModelParams,
    NetSpec,
    backward,
    desk_net,
    forward,
    init_params,
    paper_net,
    zero_params,
)
from .objective import (
    angle_to_bin,
    bin_probs,
    bin_to_angle,
    dense_predict,
    gradient_check,
    loss_and_grads,
    masked_loss,
    predict_q,
    success_prob,
)
from .train import EpochStats, TrainConfig, accuracy, predict_all, train, write_loss_csv
