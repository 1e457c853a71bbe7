from . import init, ops
from .adam import Adam, adam_step
from .gradcheck import GradCheckResult, grad_check
from .tensor import Parameter, Tensor, grad_enabled, make_result, no_grad, set_finite_checks

__all__ = [
    "Adam",
    "GradCheckResult",
    "Parameter",
    "Tensor",
    "adam_step",
    "grad_check",
    "grad_enabled",
    "init",
    "make_result",
    "no_grad",
    "ops",
    "set_finite_checks",
]
