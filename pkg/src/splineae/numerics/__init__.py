from .linalg import cholesky_solve, finite_difference_jacobian, matmul
from .rng import make_rng
from .tape import (
    Node,
    Tape,
    absolute,
    add,
    backward,
    dot,
    leaky_relu,
    matmul_t,
    mul,
    norm2,
    relu,
    sub,
    sumsq,
    transpose,
    vsum,
)

__all__ = [
    "Node",
    "Tape",
    "absolute",
    "add",
    "backward",
    "cholesky_solve",
    "dot",
    "finite_difference_jacobian",
    "leaky_relu",
    "make_rng",
    "matmul",
    "matmul_t",
    "mul",
    "norm2",
    "relu",
    "sub",
    "sumsq",
    "transpose",
    "vsum",
]
