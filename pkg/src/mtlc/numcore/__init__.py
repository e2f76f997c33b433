"""Numeric core: tensors, autodiff, optimizer, norms, deterministic RNG."""

from .gradcheck import grad_check
from .linalg import (
    frobenius_norm,
    frobenius_sq_distance,
    jacobi_svd,
    trace_norm,
    trace_norm_penalty,
)
from .optim import (
    AdamWState,
    OptimHyper,
    adamw_step,
    clip_by_global_norm,
    global_grad_norm,
    init_states,
    zero_grads,
)
from .rng import child_seed, stream, truncated_normal
from .tensor import (
    GradTape,
    Tensor,
    add,
    backward,
    concat_cols,
    concat_rows,
    dropout,
    exp,
    gather_rows,
    layer_norm_rows,
    log,
    log_sum_exp,
    matmul,
    mean_all,
    mul,
    neg,
    pow_const,
    relu,
    reshape,
    scale,
    sigmoid,
    slice_cols,
    slice_rows,
    softmax_rows,
    stack_rows,
    sub,
    sum_all,
    take,
    tanh,
    transpose,
)

__all__ = [
    "AdamWState",
    "GradTape",
    "OptimHyper",
    "Tensor",
    "adamw_step",
    "add",
    "backward",
    "child_seed",
    "clip_by_global_norm",
    "concat_cols",
    "concat_rows",
    "dropout",
    "exp",
    "frobenius_norm",
    "frobenius_sq_distance",
    "gather_rows",
    "global_grad_norm",
    "grad_check",
    "init_states",
    "jacobi_svd",
    "layer_norm_rows",
    "log",
    "log_sum_exp",
    "matmul",
    "mean_all",
    "mul",
    "neg",
    "pow_const",
    "relu",
    "reshape",
    "scale",
    "sigmoid",
    "slice_cols",
    "slice_rows",
    "softmax_rows",
    "stack_rows",
    "stream",
    "sub",
    "sum_all",
    "take",
    "tanh",
    "trace_norm",
    "trace_norm_penalty",
    "transpose",
    "truncated_normal",
    "zero_grads",
]
