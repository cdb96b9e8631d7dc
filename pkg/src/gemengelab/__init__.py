"""Finite-dimensional simulation of premeasurement couplings, gemenge states and Rule 2."""

from gemengelab.config import Tolerances, default_tolerances
from gemengelab.errors import GemengeLabError
from gemengelab.hilbert import (
    HilbertSpace,
    Operator,
    SchmidtForm,
    StateOperator,
    StateVector,
    antisymmetrize,
    complete_unitary,
    partial_trace,
    schmidt_decompose,
    symmetrize,
    tensor,
)

__version__ = "0.1.0"

__all__ = [
    "GemengeLabError",
    "HilbertSpace",
    "Operator",
    "SchmidtForm",
    "StateOperator",
    "StateVector",
    "Tolerances",
    "antisymmetrize",
    "complete_unitary",
    "default_tolerances",
    "partial_trace",
    "schmidt_decompose",
    "symmetrize",
    "tensor",
]
