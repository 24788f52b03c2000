from .augment import OPS, augment, flip_h, flip_v, random_augment, rot90, scale
from .layers import (
    conv2d,
    conv2d_backward,
    conv2d_forward,
    conv_output_size,
    maxpool2x2,
    maxpool2x2_backward,
    softmax,
)
from .net import TrafficNet, TrainConfig, forward, grad_check, one_hot, train

__all__ = [
    "OPS", "TrafficNet", "TrainConfig", "augment", "conv2d", "conv2d_backward", "conv2d_forward",
    "conv_output_size", "flip_h", "flip_v", "forward", "grad_check", "maxpool2x2", "maxpool2x2_backward",
    "one_hot", "random_augment", "rot90", "scale", "softmax", "train",
]
