from .tensor import Tensor, as_tensor, no_grad, parameter
from .layers import Module, Linear, LeakyReLU, ReLU, Dropout, Sequential, SelfAttention, SwiGLU, TransformerLayer
from .networks import (EncoderConfig, PredictorConfig, DiscriminatorConfig,
                       Encoder, Predictor, Discriminator, encoder_forward)
from .optim import AdamW, AdamState, NonFiniteGradientError, adamw_step, warmup_lr
from .checkpoint import save_checkpoint, load_checkpoint
from .gradcheck import gradcheck, numerical_gradient, relative_error
