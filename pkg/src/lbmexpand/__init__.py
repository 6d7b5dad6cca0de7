"""Equivalent-equation derivation and numerical checks for MRT lattice Boltzmann schemes."""

from .algebra import (
    AlgebraError,
    DiffOp,
    DimensionError,
    OperatorMatrix,
    Scalar,
    SingularMatrixError,
    block_join,
    block_split,
    matrix_inverse,
    opmatrix_mul,
    scalar_arith,
)
from .jet import JetExpr, JetVar, frechet, second_directional, total_derivative

__version__ = "0.1.0"
