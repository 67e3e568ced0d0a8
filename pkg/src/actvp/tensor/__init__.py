from .core import (
    ShapeError,
    Tape,
    TapeError,
    Tensor,
    add,
    as_tensor,
    backward,
    clip,
    concat,
    conv2d,
    exp,
    expand_rows,
    gelu,
    layer_norm,
    linear,
    matmul,
    mean,
    mul,
    parameter,
    relu,
    reshape,
    slice_,
    softmax,
    sub,
    sum_of_squares,
    transpose,
    tsum,
)
from .adam import AdamState, NonFiniteGradError, adam_step, clip_grad_norm, global_grad_norm
from .checkpoint import (
    BadMagicError,
    CheckpointError,
    TruncatedError,
    VersionMismatchError,
    load_checkpoint,
    save_checkpoint,
)
