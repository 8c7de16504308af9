"""Exact cohomology of truncated Hamiltonian and Poisson Lie p-algebras."""

from hamcoh.gfp import PrimeField, binomial_mod_p
from hamcoh.monomials import AlgebraElement, Monomial
from hamcoh.algebra import AlgebraSpec, LiePAlgebra, structure_constants
from hamcoh.linalg import SparseMatrixFp, kernel_basis, rank_mod_p
from hamcoh.complex import boundary_matrix, enumerate_chain_basis
from hamcoh.cohomology import CohomologyTable, compute_box, full_table

__all__ = [
    "AlgebraElement",
    "AlgebraSpec",
    "CohomologyTable",
    "LiePAlgebra",
    "Monomial",
    "PrimeField",
    "SparseMatrixFp",
    "binomial_mod_p",
    "boundary_matrix",
    "compute_box",
    "enumerate_chain_basis",
    "full_table",
    "kernel_basis",
    "rank_mod_p",
    "structure_constants",
]

__version__ = "0.1.0"
